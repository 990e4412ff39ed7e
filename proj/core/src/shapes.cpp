#include "cedr/shapes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "cedr/error.hpp"

namespace cedr {

using nn::Matrix;

const char* to_string(Primitive p) {
  switch (p) {
    case Primitive::box: return "box";
    case Primitive::open_box: return "open_box";
    case Primitive::flat_slab_on_legs: return "flat_slab_on_legs";
    case Primitive::slab_on_legs_with_drawer: return "slab_on_legs_with_drawer";
    case Primitive::cylinder: return "cylinder";
    case Primitive::cone_frustum: return "cone_frustum";
    case Primitive::sphere: return "sphere";
    case Primitive::hemisphere_bowl: return "hemisphere_bowl";
  }
  return "?";
}

std::vector<ShapeSpec> default_shape_specs(std::size_t num_classes) {
  if (num_classes < 2 || num_classes > 8) {
    throw ConfigError("synthetic data supports 2..8 classes, got " + std::to_string(num_classes));
  }
  const Range stretch{0.9, 1.1};
  std::vector<ShapeSpec> all = {
      {0, "table", Primitive::flat_slab_on_legs, {0.9, 1.1}, {0.55, 0.75}, {0.6, 0.8}, {1.0, 1.0}, stretch},
      {1, "desk", Primitive::slab_on_legs_with_drawer, {0.9, 1.1}, {0.55, 0.75}, {0.6, 0.8}, {0.3, 0.45}, stretch},
      {2, "cylinder", Primitive::cylinder, {0.6, 0.8}, {0.6, 0.8}, {0.8, 1.0}, {1.0, 1.0}, stretch},
      {3, "cone_frustum", Primitive::cone_frustum, {0.6, 0.8}, {0.6, 0.8}, {0.8, 1.0}, {0.55, 0.75}, stretch},
      {4, "box", Primitive::box, {0.6, 0.9}, {0.6, 0.9}, {0.6, 0.9}, {1.0, 1.0}, stretch},
      {5, "open_box", Primitive::open_box, {0.6, 0.9}, {0.6, 0.9}, {0.5, 0.7}, {1.0, 1.0}, stretch},
      {6, "sphere", Primitive::sphere, {0.8, 1.0}, {0.8, 1.0}, {0.8, 1.0}, {1.0, 1.0}, stretch},
      {7, "bowl", Primitive::hemisphere_bowl, {0.8, 1.0}, {0.8, 1.0}, {0.4, 0.5}, {1.0, 1.0}, stretch},
  };
  all.resize(num_classes);
  return all;
}

PerturbationConfig PerturbationConfig::none() {
  PerturbationConfig p;
  p.translate_frac = 0.0;
  p.rotate = false;
  p.max_tilt_deg = 0.0;
  p.scale_lo = p.scale_hi = 1.0;
  p.clutter_frac = 0.0;
  p.occlusion_radius_frac = 0.0;
  return p;
}

namespace {

using Vec3 = std::array<double, 3>;

// Surface patches. Each knows its area and how to draw a uniform point.
struct Patch {
  enum class Kind { rect, disk, frustum_wall, sphere_zone } kind;
  Vec3 origin{};   // rect corner / disk or axis centre
  Vec3 u{}, v{};   // rect edges
  double r0 = 0, r1 = 0;  // disk radius / wall bottom & top radius / sphere radius
  double z0 = 0, z1 = 0;  // wall heights / sphere zone in units of radius

  double area() const {
    switch (kind) {
      case Kind::rect: {
        const Vec3 c{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
        return std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
      }
      case Kind::disk: return std::numbers::pi * r0 * r0;
      case Kind::frustum_wall: {
        const double h = z1 - z0;
        return std::numbers::pi * (r0 + r1) * std::sqrt((r1 - r0) * (r1 - r0) + h * h);
      }
      case Kind::sphere_zone: return 2.0 * std::numbers::pi * r0 * r0 * (z1 - z0);
    }
    return 0.0;
  }

  Vec3 draw(Rng& rng) const {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    switch (kind) {
      case Kind::rect: {
        const double s = rng.uniform();
        const double t = rng.uniform();
        return {origin[0] + s * u[0] + t * v[0], origin[1] + s * u[1] + t * v[1],
                origin[2] + s * u[2] + t * v[2]};
      }
      case Kind::disk: {
        const double r = r0 * std::sqrt(rng.uniform());
        const double th = two_pi * rng.uniform();
        return {origin[0] + r * std::cos(th), origin[1] + r * std::sin(th), origin[2]};
      }
      case Kind::frustum_wall: {
        // Height fraction with density proportional to the local radius.
        const double q = rng.uniform();
        double t = q;
        if (r1 != r0) t = (-r0 + std::sqrt(r0 * r0 + q * (r1 * r1 - r0 * r0))) / (r1 - r0);
        const double r = r0 + (r1 - r0) * t;
        const double th = two_pi * rng.uniform();
        return {origin[0] + r * std::cos(th), origin[1] + r * std::sin(th), z0 + t * (z1 - z0)};
      }
      case Kind::sphere_zone: {
        // Archimedes: z uniform on the zone gives uniform area density.
        const double z = z0 + (z1 - z0) * rng.uniform();
        const double th = two_pi * rng.uniform();
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        return {origin[0] + r0 * rho * std::cos(th), origin[1] + r0 * rho * std::sin(th),
                origin[2] + r0 * z};
      }
    }
    return {};
  }
};

Patch rect(Vec3 o, Vec3 u, Vec3 v) { return Patch{Patch::Kind::rect, o, u, v}; }

// Axis-aligned box [x0,x1]×[y0,y1]×[z0,z1]; `top` toggles the +z face.
void add_box(std::vector<Patch>& ps, double x0, double x1, double y0, double y1, double z0,
             double z1, bool top = true) {
  const double w = x1 - x0, d = y1 - y0, h = z1 - z0;
  ps.push_back(rect({x0, y0, z0}, {w, 0, 0}, {0, d, 0}));  // bottom
  if (top) ps.push_back(rect({x0, y0, z1}, {w, 0, 0}, {0, d, 0}));
  ps.push_back(rect({x0, y0, z0}, {w, 0, 0}, {0, 0, h}));  // -y
  ps.push_back(rect({x0, y1, z0}, {w, 0, 0}, {0, 0, h}));  // +y
  ps.push_back(rect({x0, y0, z0}, {0, d, 0}, {0, 0, h}));  // -x
  ps.push_back(rect({x1, y0, z0}, {0, d, 0}, {0, 0, h}));  // +x
}

void add_slab_on_legs(std::vector<Patch>& ps, double w, double d, double h, double drawer_frac) {
  const double slab = 0.05;
  const double leg = 0.06;
  const double z_top = h / 2.0;
  const double z_under = z_top - slab;
  const double z_floor = -h / 2.0;
  add_box(ps, -w / 2, w / 2, -d / 2, d / 2, z_under, z_top);
  const double inset = 0.03;
  for (double sx : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) {
      const double cx = sx * (w / 2 - inset - leg / 2);
      const double cy = sy * (d / 2 - inset - leg / 2);
      add_box(ps, cx - leg / 2, cx + leg / 2, cy - leg / 2, cy + leg / 2, z_floor, z_under, false);
    }
  }
  if (drawer_frac > 0.0) {
    const double dw = drawer_frac * w;
    const double dh = 0.25 * h;
    const double x1 = w / 2 - inset - leg;
    add_box(ps, x1 - dw, x1, -d / 2 + inset, d / 2 - inset, z_under - dh, z_under, false);
  }
}

std::vector<Patch> build_patches(const ShapeSpec& spec, double w, double d, double h, double aux) {
  std::vector<Patch> ps;
  switch (spec.primitive) {
    case Primitive::box:
      add_box(ps, -w / 2, w / 2, -d / 2, d / 2, -h / 2, h / 2, true);
      break;
    case Primitive::open_box:
      add_box(ps, -w / 2, w / 2, -d / 2, d / 2, -h / 2, h / 2, false);
      break;
    case Primitive::flat_slab_on_legs:
      add_slab_on_legs(ps, w, d, h, 0.0);
      break;
    case Primitive::slab_on_legs_with_drawer:
      add_slab_on_legs(ps, w, d, h, aux);
      break;
    case Primitive::cylinder:
    case Primitive::cone_frustum: {
      const double r0 = w / 2;
      const double r1 = spec.primitive == Primitive::cylinder ? r0 : r0 * aux;
      ps.push_back(Patch{Patch::Kind::frustum_wall, {0, 0, 0}, {}, {}, r0, r1, -h / 2, h / 2});
      ps.push_back(Patch{Patch::Kind::disk, {0, 0, -h / 2}, {}, {}, r0});
      ps.push_back(Patch{Patch::Kind::disk, {0, 0, h / 2}, {}, {}, r1});
      break;
    }
    case Primitive::sphere:
      ps.push_back(Patch{Patch::Kind::sphere_zone, {0, 0, 0}, {}, {}, w / 2, 0, -1.0, 1.0});
      break;
    case Primitive::hemisphere_bowl:
      // Lower half of a sphere whose rim sits at z = h/2.
      ps.push_back(Patch{Patch::Kind::sphere_zone, {0, 0, h / 2}, {}, {}, w / 2, 0, -1.0, 0.0});
      break;
  }
  return ps;
}

struct Bounds {
  Vec3 lo{}, hi{};
  Vec3 extent() const { return {hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]}; }
  Vec3 centre() const {
    return {(hi[0] + lo[0]) / 2, (hi[1] + lo[1]) / 2, (hi[2] + lo[2]) / 2};
  }
  double diagonal() const {
    const Vec3 e = extent();
    return std::sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
  }
};

Bounds bounds_of(const Matrix& pts) {
  Bounds b;
  for (int a = 0; a < 3; ++a) b.lo[a] = b.hi[a] = pts(0, a);
  for (std::size_t i = 1; i < pts.rows(); ++i) {
    for (int a = 0; a < 3; ++a) {
      b.lo[a] = std::min(b.lo[a], pts(i, a));
      b.hi[a] = std::max(b.hi[a], pts(i, a));
    }
  }
  return b;
}

}  // namespace

PointCloudSample generate_sample(const ShapeSpec& spec, const PerturbationConfig& perturb,
                                 std::size_t num_points, Rng& rng) {
  if (num_points < 32) {
    throw InvalidInput("generate_sample needs at least 32 points, got " + std::to_string(num_points));
  }
  const double sx = rng.uniform(spec.stretch.lo, spec.stretch.hi);
  const double sy = rng.uniform(spec.stretch.lo, spec.stretch.hi);
  const double sz = rng.uniform(spec.stretch.lo, spec.stretch.hi);
  const double w = rng.uniform(spec.width.lo, spec.width.hi);
  // Round primitives keep a circular cross-section; stretch makes them elliptic.
  const bool round = spec.primitive == Primitive::cylinder ||
                     spec.primitive == Primitive::cone_frustum ||
                     spec.primitive == Primitive::sphere ||
                     spec.primitive == Primitive::hemisphere_bowl;
  const double d = round ? w : rng.uniform(spec.depth.lo, spec.depth.hi);
  const double h = spec.primitive == Primitive::sphere ? w : rng.uniform(spec.height.lo, spec.height.hi);
  const double aux = rng.uniform(spec.aux.lo, spec.aux.hi);

  const std::vector<Patch> patches = build_patches(spec, w, d, h, aux);
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& p : patches) cumulative.push_back(total += p.area());

  PointCloudSample s;
  s.label = spec.class_id;
  Matrix pts(num_points, 3);
  for (std::size_t i = 0; i < num_points; ++i) {
    const double pick = rng.uniform() * total;
    const std::size_t k = std::min<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin(),
        patches.size() - 1);
    const Vec3 q = patches[k].draw(rng);
    pts(i, 0) = q[0] * sx;
    pts(i, 1) = q[1] * sy;
    pts(i, 2) = q[2] * sz;
  }

  // Occlusion: a spherical hole centred on a surface point.
  if (perturb.occlusion_radius_frac > 0.0) {
    const Bounds b = bounds_of(pts);
    const double radius = perturb.occlusion_radius_frac * b.diagonal();
    bool done = false;
    for (int attempt = 0; attempt < perturb.max_occlusion_retries && !done; ++attempt) {
      const std::size_t c = rng.below(num_points);
      const Vec3 centre{pts(c, 0), pts(c, 1), pts(c, 2)};
      std::vector<std::size_t> keep;
      for (std::size_t i = 0; i < num_points; ++i) {
        double dd = 0.0;
        for (int a = 0; a < 3; ++a) dd += (pts(i, a) - centre[a]) * (pts(i, a) - centre[a]);
        if (dd > radius * radius) keep.push_back(i);
      }
      if (keep.empty()) continue;
      s.meta.occlusion_fraction = static_cast<float>(num_points - keep.size()) / num_points;
      Matrix filled(num_points, 3);
      for (std::size_t i = 0; i < num_points; ++i) {
        const std::size_t src = i < keep.size() ? keep[i] : keep[rng.below(keep.size())];
        for (int a = 0; a < 3; ++a) filled(i, a) = pts(src, a);
      }
      pts = std::move(filled);
      done = true;
    }
    if (!done) {
      throw Error("occlusion removed every point in " +
                  std::to_string(perturb.max_occlusion_retries) + " attempts");
    }
  }

  // Clutter: replace a fixed count of points with background samples.
  if (perturb.clutter_frac > 0.0) {
    const auto count = std::min<std::size_t>(
        num_points, static_cast<std::size_t>(std::llround(perturb.clutter_frac * num_points)));
    const Bounds b = bounds_of(pts);
    const Vec3 c = b.centre();
    const Vec3 e = b.extent();
    std::vector<std::size_t> idx(num_points);
    for (std::size_t i = 0; i < num_points; ++i) idx[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(idx[i], idx[i + rng.below(num_points - i)]);
      for (int a = 0; a < 3; ++a) {
        pts(idx[i], a) = c[a] + perturb.clutter_inflate * e[a] * (rng.uniform() - 0.5);
      }
    }
    s.meta.clutter_fraction = static_cast<float>(count) / num_points;
  }

  const double scale = rng.uniform(perturb.scale_lo, perturb.scale_hi);
  const double yaw = perturb.rotate ? 2.0 * std::numbers::pi * rng.uniform() : 0.0;
  const double tilt = perturb.max_tilt_deg * std::numbers::pi / 180.0;
  const double ax = tilt > 0.0 ? rng.uniform(-tilt, tilt) : 0.0;
  const double ay = tilt > 0.0 ? rng.uniform(-tilt, tilt) : 0.0;
  if (scale != 1.0 || yaw != 0.0 || ax != 0.0 || ay != 0.0) {
    // R = Rz(yaw) · Ry(ay) · Rx(ax)
    const double cz = std::cos(yaw), sz_ = std::sin(yaw);
    const double cy = std::cos(ay), sy_ = std::sin(ay);
    const double cx = std::cos(ax), sx_ = std::sin(ax);
    const double r[3][3] = {
        {cz * cy, cz * sy_ * sx_ - sz_ * cx, cz * sy_ * cx + sz_ * sx_},
        {sz_ * cy, sz_ * sy_ * sx_ + cz * cx, sz_ * sy_ * cx - cz * sx_},
        {-sy_, cy * sx_, cy * cx},
    };
    for (std::size_t i = 0; i < num_points; ++i) {
      const Vec3 p{pts(i, 0) * scale, pts(i, 1) * scale, pts(i, 2) * scale};
      for (int a = 0; a < 3; ++a) pts(i, a) = r[a][0] * p[0] + r[a][1] * p[1] + r[a][2] * p[2];
    }
  }
  s.meta.scale = static_cast<float>(scale);
  s.meta.rotation = static_cast<float>(yaw);

  if (perturb.translate_frac > 0.0) {
    const Vec3 e = bounds_of(pts).extent();
    double shift = 0.0;
    Vec3 t{};
    for (int a = 0; a < 3; ++a) {
      t[a] = perturb.translate_frac * e[a] * rng.uniform(-1.0, 1.0);
      if (e[a] > 0.0) shift = std::max(shift, std::abs(t[a]) / e[a]);
    }
    for (std::size_t i = 0; i < num_points; ++i) {
      for (int a = 0; a < 3; ++a) pts(i, a) += t[a];
    }
    s.meta.shift = static_cast<float>(shift);
  }

  // Files store float32; keep memory identical to what a round trip yields.
  for (double& v : pts.values()) v = static_cast<double>(static_cast<float>(v));
  s.points = std::move(pts);
  return s;
}

}  // namespace cedr
