#pragma once

#include <cstddef>

#include "cedr/matrix.hpp"
#include "cedr/tape.hpp"

namespace cedr::nn {

// Value-only kernels. The tape-recording overloads below reuse them.

/// input·W + b, with b a 1×d_out row broadcast over rows.
Matrix dense_forward(const Matrix& input, const Matrix& weight, const Matrix& bias);
Matrix relu(const Matrix& x);
/// Rows scaled to unit Euclidean norm; throws InvalidInput naming the first zero row.
Matrix l2_normalize(const Matrix& x);
/// Row-wise softmax, max-shifted.
Matrix softmax(const Matrix& x);
/// Splits the rows into consecutive blocks of `group` rows and takes the
/// per-column maximum of each block (one output row per block).
Matrix max_pool_groups(const Matrix& x, std::size_t group);

// Differentiable versions.

Var dense(Tape& tape, Var input, Var weight, Var bias);
Var relu(Tape& tape, Var x);
Var l2_normalize(Tape& tape, Var x);
Var softmax(Tape& tape, Var x);
Var max_pool_groups(Tape& tape, Var x, std::size_t group);

/// Sum of every entry, as a 1×1 node.
Var sum(Tape& tape, Var x);
/// 0.5·Σ x², as a 1×1 node.
Var half_squared_norm(Tape& tape, Var x);
/// Elementwise a + b (same shape).
Var add(Tape& tape, Var a, Var b);
/// factor·x with a constant factor.
Var scale(Tape& tape, Var x, double factor);

}  // namespace cedr::nn
