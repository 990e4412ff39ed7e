#include "cedr/ops.hpp"

#include <algorithm>
#include <cmath>

#include "cedr/error.hpp"

namespace cedr::nn {

namespace {

void check_dense_shapes(const Matrix& input, const Matrix& weight, const Matrix& bias) {
  if (input.cols() != weight.rows()) {
    throw ShapeError("dense: input " + input.shape_string() + " does not match weight " +
                     weight.shape_string());
  }
  if (bias.rows() != 1 || bias.cols() != weight.cols()) {
    throw ShapeError("dense: bias " + bias.shape_string() + " does not match weight " +
                     weight.shape_string());
  }
}

}  // namespace

Matrix dense_forward(const Matrix& input, const Matrix& weight, const Matrix& bias) {
  check_dense_shapes(input, weight, bias);
  const std::size_t n = weight.cols();
  Matrix out(input.rows(), n);
  for (std::size_t r = 0; r < input.rows(); ++r) {
    double* o = out.data() + r * n;
    for (std::size_t c = 0; c < n; ++c) o[c] = bias(0, c);
    for (std::size_t k = 0; k < input.cols(); ++k) {
      const double s = input(r, k);
      if (s == 0.0) continue;
      const double* w = weight.data() + k * n;
      for (std::size_t c = 0; c < n; ++c) o[c] += s * w[c];
    }
  }
  return out;
}

Matrix relu(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Matrix l2_normalize(const Matrix& x) {
  Matrix y = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double ss = 0.0;
    for (double v : x.row(r)) ss += v * v;
    if (!(ss > 0.0)) {
      throw InvalidInput("l2_normalize: row " + std::to_string(r) + " has zero norm");
    }
    const double inv = 1.0 / std::sqrt(ss);
    for (double& v : y.row(r)) v *= inv;
  }
  return y;
}

Matrix softmax(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    auto out = y.row(r);
    const double m = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      out[c] = std::exp(in[c] - m);
      z += out[c];
    }
    for (double& v : out) v /= z;
  }
  return y;
}

Matrix max_pool_groups(const Matrix& x, std::size_t group) {
  if (group == 0 || x.rows() % group != 0) {
    throw ShapeError("max_pool: " + x.shape_string() + " rows not divisible into groups of " +
                     std::to_string(group));
  }
  const std::size_t n = x.cols();
  Matrix y(x.rows() / group, n);
  for (std::size_t g = 0; g < y.rows(); ++g) {
    auto out = y.row(g);
    const auto first = x.row(g * group);
    std::copy(first.begin(), first.end(), out.begin());
    for (std::size_t p = 1; p < group; ++p) {
      const auto in = x.row(g * group + p);
      for (std::size_t c = 0; c < n; ++c) out[c] = std::max(out[c], in[c]);
    }
  }
  return y;
}

Var dense(Tape& tape, Var input, Var weight, Var bias) {
  Matrix out = dense_forward(tape.value(input), tape.value(weight), tape.value(bias));
  return tape.record("dense", std::move(out), [input, weight, bias](Tape& t, const Matrix& dy) {
    const Matrix& x = t.value(input);
    const Matrix& w = t.value(weight);
    const std::size_t d_in = w.rows();
    const std::size_t d_out = w.cols();
    const Matrix wt = w.transposed();
    Matrix dx(x.rows(), d_in);
    Matrix dwt(d_out, d_in);
    Matrix db(1, d_out);
    // dy is usually sparse (relu + max pool upstream), so walk its nonzeros.
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double* g = dy.data() + r * d_out;
      const double* xr = x.data() + r * d_in;
      double* dxr = dx.data() + r * d_in;
      for (std::size_t c = 0; c < d_out; ++c) {
        const double gc = g[c];
        if (gc == 0.0) continue;
        db(0, c) += gc;
        const double* wc = wt.data() + c * d_in;
        double* dwc = dwt.data() + c * d_in;
        for (std::size_t k = 0; k < d_in; ++k) {
          dxr[k] += gc * wc[k];
          dwc[k] += gc * xr[k];
        }
      }
    }
    t.accumulate(input, dx);
    t.accumulate(weight, dwt.transposed());
    t.accumulate(bias, db);
  });
}

Var relu(Tape& tape, Var x) {
  return tape.record("relu", relu(tape.value(x)), [x](Tape& t, const Matrix& dy) {
    const Matrix& in = t.value(x);
    Matrix dx = dy;
    auto d = dx.values();
    const auto v = in.values();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!(v[i] > 0.0)) d[i] = 0.0;
    }
    t.accumulate(x, dx);
  });
}

Var l2_normalize(Tape& tape, Var x) {
  Matrix y = l2_normalize(tape.value(x));
  Matrix z = y;
  return tape.record("l2_normalize", std::move(y), [x, z = std::move(z)](Tape& t, const Matrix& dz) {
    const Matrix& in = t.value(x);
    Matrix dx(in.rows(), in.cols());
    for (std::size_t r = 0; r < in.rows(); ++r) {
      double ss = 0.0;
      double zdz = 0.0;
      for (std::size_t c = 0; c < in.cols(); ++c) {
        ss += in(r, c) * in(r, c);
        zdz += z(r, c) * dz(r, c);
      }
      const double inv = 1.0 / std::sqrt(ss);
      for (std::size_t c = 0; c < in.cols(); ++c) dx(r, c) = (dz(r, c) - z(r, c) * zdz) * inv;
    }
    t.accumulate(x, dx);
  });
}

Var softmax(Tape& tape, Var x) {
  Matrix y = softmax(tape.value(x));
  Matrix saved = y;
  return tape.record("softmax", std::move(y), [x, saved = std::move(saved)](Tape& t, const Matrix& dy) {
    Matrix dx(saved.rows(), saved.cols());
    for (std::size_t r = 0; r < saved.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < saved.cols(); ++c) dot += dy(r, c) * saved(r, c);
      for (std::size_t c = 0; c < saved.cols(); ++c) dx(r, c) = saved(r, c) * (dy(r, c) - dot);
    }
    t.accumulate(x, dx);
  });
}

Var max_pool_groups(Tape& tape, Var x, std::size_t group) {
  const Matrix& in = tape.value(x);
  Matrix y = max_pool_groups(in, group);
  // First row attaining the maximum receives the whole gradient.
  std::vector<std::size_t> argmax(y.size());
  for (std::size_t g = 0; g < y.rows(); ++g) {
    for (std::size_t c = 0; c < y.cols(); ++c) {
      std::size_t best = g * group;
      for (std::size_t p = 1; p < group; ++p) {
        if (in(g * group + p, c) > in(best, c)) best = g * group + p;
      }
      argmax[g * y.cols() + c] = best;
    }
  }
  return tape.record("max_pool", std::move(y),
                     [x, argmax = std::move(argmax)](Tape& t, const Matrix& dy) {
                       Matrix& dx = t.grad_buffer(x);
                       for (std::size_t g = 0; g < dy.rows(); ++g) {
                         for (std::size_t c = 0; c < dy.cols(); ++c) {
                           dx(argmax[g * dy.cols() + c], c) += dy(g, c);
                         }
                       }
                     });
}

Var sum(Tape& tape, Var x) {
  double s = 0.0;
  for (double v : tape.value(x).values()) s += v;
  return tape.record("sum", Matrix(1, 1, s), [x](Tape& t, const Matrix& dy) {
    const Matrix& in = t.value(x);
    t.accumulate(x, Matrix(in.rows(), in.cols(), dy(0, 0)));
  });
}

Var half_squared_norm(Tape& tape, Var x) {
  double s = 0.0;
  for (double v : tape.value(x).values()) s += v * v;
  return tape.record("half_squared_norm", Matrix(1, 1, 0.5 * s), [x](Tape& t, const Matrix& dy) {
    Matrix dx = t.value(x);
    for (double& v : dx.values()) v *= dy(0, 0);
    t.accumulate(x, dx);
  });
}

Var add(Tape& tape, Var a, Var b) {
  Matrix out = tape.value(a);
  out += tape.value(b);
  return tape.record("add", std::move(out), [a, b](Tape& t, const Matrix& dy) {
    t.accumulate(a, dy);
    t.accumulate(b, dy);
  });
}

Var scale(Tape& tape, Var x, double factor) {
  Matrix out = tape.value(x);
  for (double& v : out.values()) v *= factor;
  return tape.record("scale", std::move(out), [x, factor](Tape& t, const Matrix& dy) {
    Matrix dx = dy;
    for (double& v : dx.values()) v *= factor;
    t.accumulate(x, dx);
  });
}

}  // namespace cedr::nn
