#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cedr/checkpoint.hpp"
#include "cedr/error.hpp"
#include "cedr/ops.hpp"
#include "cedr/optimizer.hpp"
#include "test_support.hpp"

using namespace cedr;
using namespace cedr::nn;
using cedr::testing::max_relative_error;
using cedr::testing::numeric_gradient;
using cedr::testing::random_matrix;

namespace {

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

}  // namespace

TEST(Dense, IdentityInputAndWeight) {
  const Matrix eye = Matrix::identity(2);
  EXPECT_EQ(dense_forward(eye, eye, Matrix(1, 2)), eye);
}

TEST(Dense, ZeroInputGivesBiasRows) {
  Rng rng(1);
  const Matrix w = random_matrix(rng, 3, 4);
  const Matrix b{{0.5, -1.0, 2.0, 3.25}};
  const Matrix out = dense_forward(Matrix(5, 3), w, b);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out(r, c), b(0, c));
}

TEST(Dense, MatchesNaiveTripleLoop) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = random_matrix(rng, 3, 4);
    const Matrix w = random_matrix(rng, 4, 2);
    const Matrix out = dense_forward(x, w, Matrix(1, 2));
    const Matrix ref = naive_matmul(x, w);
    for (std::size_t i = 0; i < out.size(); ++i)
      EXPECT_NEAR(out.values()[i], ref.values()[i], 1e-14);
  }
}

TEST(Dense, ShapeMismatchReportsShapes) {
  try {
    dense_forward(Matrix(2, 3), Matrix(4, 2), Matrix(1, 2));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("2x3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("4x2"), std::string::npos);
  }
  EXPECT_THROW(dense_forward(Matrix(2, 4), Matrix(4, 2), Matrix(1, 3)), ShapeError);
}

TEST(Ops, ReluClampsNegatives) {
  const Matrix out = relu(Matrix{{-1.0, 0.0, 2.5}});
  EXPECT_EQ(out, (Matrix{{0.0, 0.0, 2.5}}));
}

TEST(Ops, L2NormalizeThreeFourFive) {
  const Matrix out = l2_normalize(Matrix{{3.0, 4.0}});
  EXPECT_DOUBLE_EQ(out(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(out(0, 1), 0.8);
}

TEST(Ops, L2NormalizeZeroRowNamesRow) {
  try {
    l2_normalize(Matrix{{1.0, 0.0}, {0.0, 0.0}});
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
}

TEST(Ops, SoftmaxOfZerosIsUniform) {
  const Matrix out = softmax(Matrix(1, 4));
  for (double v : out.values()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Ops, SoftmaxRowsSumToOneForLargeLogits) {
  const Matrix out = softmax(Matrix{{1000.0, 999.0, -1000.0}, {-5.0, 3.0, 0.0}});
  for (std::size_t r = 0; r < 2; ++r) {
    double s = 0.0;
    for (double v : out.row(r)) {
      EXPECT_TRUE(std::isfinite(v));
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Ops, MaxPoolSingletonReturnsRow) {
  const Matrix x{{1.0, -2.0, 3.0}, {4.0, 5.0, -6.0}};
  EXPECT_EQ(max_pool_groups(x, 1), x);
}

TEST(Ops, MaxPoolTakesColumnMaximumPerGroup) {
  const Matrix x{{1.0, 9.0}, {3.0, -2.0}, {0.0, 0.0}, {-1.0, 7.0}};
  EXPECT_EQ(max_pool_groups(x, 2), (Matrix{{3.0, 9.0}, {0.0, 7.0}}));
  EXPECT_THROW(max_pool_groups(x, 3), ShapeError);
}

TEST(Backward, SumGivesOnes) {
  ParamTensor p("p", Matrix{{1.0, -2.0}, {3.0, 4.0}});
  Tape tape;
  tape.backward(sum(tape, tape.param(p)));
  EXPECT_EQ(p.grad, Matrix(2, 2, 1.0));
}

TEST(Backward, HalfSquaredNormGivesValue) {
  Rng rng(3);
  ParamTensor p("w", random_matrix(rng, 3, 5));
  Tape tape;
  tape.backward(half_squared_norm(tape, tape.param(p)));
  EXPECT_EQ(p.grad, p.value);
}

TEST(Backward, UnreachableParameterGetsZeroGrad) {
  ParamTensor used("used", Matrix{{1.0, 2.0}});
  ParamTensor unused("unused", Matrix{{5.0}});
  unused.grad = Matrix{{42.0}};
  Tape tape;
  const Var a = tape.param(used);
  tape.param(unused);
  tape.backward(sum(tape, a));
  EXPECT_EQ(unused.grad, Matrix(1, 1));
}

TEST(Backward, ParameterUsedTwiceAccumulates) {
  ParamTensor p("p", Matrix{{2.0}});
  Tape tape;
  const Var a = tape.param(p);
  const Var b = tape.param(p);
  tape.backward(add(tape, sum(tape, a), half_squared_norm(tape, b)));
  EXPECT_DOUBLE_EQ(p.grad(0, 0), 1.0 + 2.0);
}

TEST(Backward, NonFiniteGradientNamesNode) {
  Tape tape;
  const Var x = tape.input(Matrix{{1.0}});
  const Var bad = tape.record("explode", tape.value(x), [x](Tape& t, const Matrix& g) {
    Matrix out = g;
    out(0, 0) = std::numeric_limits<double>::infinity();
    t.accumulate(x, out);
  });
  try {
    tape.backward(sum(tape, bad));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("input"), std::string::npos) << msg;
    EXPECT_NE(msg.find("#0"), std::string::npos) << msg;
  }
}

TEST(Backward, RejectsNonScalarOrNonFiniteLoss) {
  Tape tape;
  const Var x = tape.input(Matrix(2, 2));
  EXPECT_THROW(tape.backward(x), ShapeError);
  const Var nan = tape.input(Matrix{{std::nan("")}});
  EXPECT_THROW(tape.backward(nan), NumericError);
}

// Composite of every op: dense → relu → max pool → dense → {softmax, l2}.
TEST(Backward, CompositeMatchesFiniteDifferences) {
  Rng rng(4);
  ParamTensor w1("w1", random_matrix(rng, 3, 6));
  ParamTensor b1("b1", random_matrix(rng, 1, 6, -0.1, 0.1));
  ParamTensor w2("w2", random_matrix(rng, 6, 4));
  ParamTensor b2("b2", random_matrix(rng, 1, 4, -0.1, 0.1));
  Matrix x = random_matrix(rng, 10, 3);
  const Matrix target = random_matrix(rng, 2, 4);

  Matrix x_grad;
  auto run = [&](bool grad) {
    Tape tape;
    const Var in = tape.input(x);
    const Var h = relu(tape, dense(tape, in, tape.param(w1), tape.param(b1)));
    const Var pooled = max_pool_groups(tape, h, 5);
    const Var logits = dense(tape, pooled, tape.param(w2), tape.param(b2));
    const Var p = softmax(tape, logits);
    const Var z = l2_normalize(tape, logits);
    const Var diff = add(tape, p, tape.constant(target));
    const Var loss = add(tape, half_squared_norm(tape, diff), scale(tape, sum(tape, z), 0.7));
    if (grad) {
      tape.backward(loss);
      x_grad = tape.grad(in);
    }
    return tape.value(loss)(0, 0);
  };
  run(true);
  for (ParamTensor* p : {&w1, &b1, &w2, &b2}) {
    const Matrix analytic = p->grad;
    const Matrix numeric = numeric_gradient(p->value, [&] { return run(false); });
    EXPECT_LT(max_relative_error(analytic, numeric), 1e-4) << p->name;
  }
  const Matrix numeric_x = numeric_gradient(x, [&] { return run(false); });
  EXPECT_LT(max_relative_error(x_grad, numeric_x), 1e-4);
}

TEST(Backward, RandomCompositesMatchFiniteDifferences) {
  Rng rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t rows = 1 + rng.below(6);
    const std::size_t din = 1 + rng.below(4);
    const std::size_t dout = 2 + rng.below(4);
    ParamTensor w("w", random_matrix(rng, din, dout));
    ParamTensor b("b", random_matrix(rng, 1, dout));
    Matrix x = random_matrix(rng, rows, din);
    const double k = rng.uniform(-2.0, 2.0);
    auto run = [&](bool grad) {
      Tape tape;
      const Var y = dense(tape, tape.input(x), tape.param(w), tape.param(b));
      const Var loss = add(tape, scale(tape, sum(tape, softmax(tape, y)), 0.0),
                           add(tape, half_squared_norm(tape, l2_normalize(tape, y)),
                               scale(tape, sum(tape, relu(tape, y)), k)));
      if (grad) tape.backward(loss);
      return tape.value(loss)(0, 0);
    };
    run(true);
    const Matrix analytic = w.grad;
    EXPECT_LT(max_relative_error(analytic, numeric_gradient(w.value, [&] { return run(false); })),
              1e-4);
  }
}

TEST(Optimizer, CosineEndpointsAndMidpoint) {
  OptimizerState s;
  s.total_epochs = 60;
  EXPECT_DOUBLE_EQ(s.learning_rate(0), 0.1);
  EXPECT_NEAR(s.learning_rate(60), 0.001, 1e-15);
  EXPECT_NEAR(s.learning_rate(30), 0.0505, 1e-15);
  EXPECT_THROW(s.learning_rate(61), InvalidInput);
  EXPECT_THROW(s.learning_rate(-1), InvalidInput);
}

TEST(Optimizer, LearningRateNonIncreasingAndBounded) {
  for (int total : {1, 2, 7, 60, 300}) {
    OptimizerState s;
    s.total_epochs = total;
    double prev = s.learning_rate(0);
    for (int e = 0; e <= total; ++e) {
      const double lr = s.learning_rate(e);
      EXPECT_LE(lr, prev);
      EXPECT_GE(lr, s.lr_min - 1e-15);
      EXPECT_LE(lr, s.lr_max);
      prev = lr;
    }
  }
}

TEST(Optimizer, StepFollowsMomentumAndDecayFormula) {
  ParamTensor p("p", Matrix{{1.0, -2.0}});
  OptimizerState s;
  s.total_epochs = 10;
  s.epoch = 0;
  ParamTensor* params[] = {&p};
  p.grad = Matrix{{0.5, 0.25}};
  sgd_step(s, params);
  const double v0 = 0.5 + 1e-4 * 1.0, v1 = 0.25 + 1e-4 * -2.0;
  EXPECT_DOUBLE_EQ(p.value(0, 0), 1.0 - 0.1 * v0);
  EXPECT_DOUBLE_EQ(p.value(0, 1), -2.0 - 0.1 * v1);
  const double p0 = p.value(0, 0);
  p.grad = Matrix{{0.0, 0.0}};
  sgd_step(s, params);
  const double v0b = 0.9 * v0 + 1e-4 * p0;
  EXPECT_DOUBLE_EQ(p.value(0, 0), p0 - 0.1 * v0b);
}

TEST(Optimizer, PlainGradientDescentDecreasesConvexQuadratic) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(5);
    Matrix diag(1, n);
    for (double& d : diag.values()) d = rng.uniform(0.1, 5.0);
    ParamTensor p("p", random_matrix(rng, 1, n, -3.0, 3.0));
    OptimizerState s;
    s.momentum = 0.0;
    s.weight_decay = 0.0;
    s.lr_max = s.lr_min = 0.9 * 2.0 / 5.0;  // below 2 / max curvature
    auto loss = [&] {
      double l = 0.0;
      for (std::size_t i = 0; i < n; ++i) l += 0.5 * diag(0, i) * p.value(0, i) * p.value(0, i);
      return l;
    };
    ParamTensor* params[] = {&p};
    double prev = loss();
    for (int step = 0; step < 10; ++step) {
      for (std::size_t i = 0; i < n; ++i) p.grad(0, i) = diag(0, i) * p.value(0, i);
      sgd_step(s, params);
      const double now = loss();
      EXPECT_LE(now, prev);
      prev = now;
    }
  }
}

TEST(Checkpoint, RoundTripsBitExact) {
  Rng rng(7);
  const std::vector<NamedTensor> tensors = {{"a", random_matrix(rng, 3, 2)},
                                            {"bias", Matrix{{1.0 / 3.0, -0.0, 1e-300}}}};
  std::stringstream buf;
  write_checkpoint(buf, tensors);
  EXPECT_EQ(buf.str().size(), 6u + (2 + 1 + 2 + 8 + 48) + (2 + 4 + 2 + 8 + 24));
  EXPECT_EQ(buf.str().substr(0, 4), "CEDR");
  const auto back = read_checkpoint(buf);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].name, tensors[i].name);
    EXPECT_EQ(back[i].value, tensors[i].value);
  }
}

TEST(Checkpoint, RejectsBadMagicAndTruncation) {
  std::stringstream bad("XXXX\x01\x00", std::ios::in | std::ios::binary);
  EXPECT_THROW(read_checkpoint(bad), FormatError);
  std::stringstream buf;
  write_checkpoint(buf, {{"w", Matrix(2, 2, 1.0)}});
  const std::string full = buf.str();
  std::stringstream cut(full.substr(0, full.size() - 3));
  EXPECT_THROW(read_checkpoint(cut), FormatError);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a = Rng::derive(9, 1, 3), b = Rng::derive(9, 1, 3), c = Rng::derive(9, 1, 4);
  bool differs = false;
  for (int i = 0; i < 8; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformAndBelowStayInRange) {
  Rng rng(11);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const auto k = rng.below(7);
    ASSERT_LT(k, 7u);
    ++hist[k];
  }
  for (int h : hist) EXPECT_GT(h, 800);
}

TEST(Rng, SplitMixReferenceOutput) {
  // First outputs for seed 0 of the reference SplitMix64.
  SplitMix64 sm(0);
  EXPECT_EQ(sm.next(), 0xE220A8397B1DCDAFull);
  EXPECT_EQ(sm.next(), 0x6E789E6AA1B965F4ull);
}
