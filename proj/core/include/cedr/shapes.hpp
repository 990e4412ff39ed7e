#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cedr/matrix.hpp"
#include "cedr/rng.hpp"

namespace cedr {

enum class Primitive {
  box,
  open_box,
  flat_slab_on_legs,         // "table"
  slab_on_legs_with_drawer,  // "desk"
  cylinder,
  cone_frustum,
  sphere,
  hemisphere_bowl,
};

const char* to_string(Primitive p);

struct Range {
  double lo = 1.0;
  double hi = 1.0;
};

/// One object category. Sizes are the unperturbed bounding box; `aux` is a
/// primitive-specific ratio (frustum top/bottom radius, drawer width
/// fraction); `stretch` is an independent per-axis deformation factor.
struct ShapeSpec {
  int class_id = 0;
  std::string name;
  Primitive primitive = Primitive::box;
  Range width{1.0, 1.0};
  Range depth{1.0, 1.0};
  Range height{1.0, 1.0};
  Range aux{1.0, 1.0};
  Range stretch{1.0, 1.0};
};

/// The built-in categories, ordered so that the two designed confusable
/// pairs come first: (table, desk) and (cylinder, cone_frustum).
/// `num_classes` ∈ [2, 8] keeps a prefix.
std::vector<ShapeSpec> default_shape_specs(std::size_t num_classes = 8);

/// Class ids of the primary confusable pair (table vs. desk).
inline constexpr int kConfusableA = 0;
inline constexpr int kConfusableB = 1;

struct PerturbationConfig {
  double translate_frac = 0.75;   // per-axis shift bound, fraction of bbox extent
  bool rotate = true;             // full-circle yaw about the vertical axis
  double max_tilt_deg = 15.0;     // tilt about each horizontal axis
  double scale_lo = 0.8;
  double scale_hi = 1.2;
  double clutter_frac = 0.1;      // points replaced by background
  double clutter_inflate = 1.25;  // background box relative to the object bbox
  double occlusion_radius_frac = 0.2;  // hole radius, fraction of bbox diagonal
  int max_occlusion_retries = 16;

  /// Pure primitive surface: no pose change, clutter, or holes.
  static PerturbationConfig none();
};

/// What was applied to a sample. `shift` is max over axes of |t_a| / extent_a.
struct PerturbationRecord {
  float shift = 0.0f;
  float rotation = 0.0f;  // yaw in radians
  float scale = 1.0f;
  float clutter_fraction = 0.0f;
  float occlusion_fraction = 0.0f;

  friend bool operator==(const PerturbationRecord&, const PerturbationRecord&) = default;
};

struct PointCloudSample {
  nn::Matrix points;  // N×3, values exactly representable as float32
  int label = 0;
  PerturbationRecord meta;

  friend bool operator==(const PointCloudSample&, const PointCloudSample&) = default;
};

/// Samples the primitive surface uniformly by area, then applies occlusion,
/// clutter, scale, rotation, and translation in that order. Throws
/// InvalidInput for fewer than 32 points and Error when every occlusion
/// attempt removes all points.
PointCloudSample generate_sample(const ShapeSpec& spec, const PerturbationConfig& perturb,
                                 std::size_t num_points, Rng& rng);

}  // namespace cedr
