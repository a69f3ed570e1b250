#include <Eigen/Dense>

#include "doctest.h"
#include "mzen/tape.hpp"
#include "oracles.hpp"

using namespace mzen;
using ad::Tape;
using ad::Var;
using Mat = Eigen::MatrixXd;

namespace {

Mat random_mat(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

// Checks d(root)/d(leaf) against central differences for every leaf.
void check_gradients(Tape& tape, Var root, const std::vector<Var>& leaves, double rel = 1e-4) {
  tape.backward(root);
  std::vector<Mat> analytic;
  for (Var leaf : leaves) analytic.push_back(tape.grad(leaf));
  for (size_t i = 0; i < leaves.size(); ++i) {
    const Mat fd = oracle::fd_gradient(tape, root, leaves[i]);
    CHECK(oracle::grad_max_error(analytic[i], fd, rel) <= 1.0);
  }
}

// Random positive-weight scalarization so every output entry matters.
Var scalarize(Tape& tape, Var out, Rng& rng) {
  const auto& v = tape.value(out);
  return tape.sum_all(
      tape.mul(out, tape.constant(random_mat(static_cast<int>(v.rows()),
                                             static_cast<int>(v.cols()), rng, 0.25, 1.0))));
}

}  // namespace

TEST_SUITE("tape") {

TEST_CASE("forward: square and sigmoid") {
  Tape tape;
  Mat x(1, 1);
  x << 3.0;
  const Var xv = tape.leaf(x);
  const Var y = tape.mul(xv, xv);
  CHECK(tape.value(y)(0, 0) == doctest::Approx(9.0));

  const Var s = tape.sigmoid(tape.constant(0.0));
  CHECK(tape.value(s)(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("backward: square and product") {
  Tape tape;
  Mat x(1, 1);
  x << 3.0;
  const Var xv = tape.leaf(x);
  const Var y = tape.mul(xv, xv);
  tape.backward(y);
  CHECK(tape.grad(xv)(0, 0) == doctest::Approx(6.0));

  Tape tape2;
  Mat a(1, 1), b(1, 1);
  a << 2.0;
  b << 5.0;
  const Var av = tape2.leaf(a);
  const Var bv = tape2.leaf(b);
  const Var p = tape2.mul(av, bv);
  tape2.backward(p);
  CHECK(tape2.grad(av)(0, 0) == doctest::Approx(5.0));
  CHECK(tape2.grad(bv)(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("two-sample emission-absorption forward matches hand evaluation") {
  // sigma = (1, 1), delta = (0.5, 0.5), colors c0, c1:
  // w0 = 1 - e^{-1/2}, w1 = e^{-1/2} (1 - e^{-1/2}).
  Tape tape;
  Mat sigma(2, 1);
  sigma << 1.0, 1.0;
  Mat delta(2, 1);
  delta << 0.5, 0.5;
  Mat colors(2, 3);
  colors << 1.0, 0.2, 0.1, 0.3, 0.6, 0.9;

  const Var sd = tape.mul(tape.leaf(sigma), tape.constant(delta));
  const Var trans = tape.exp(tape.scale(tape.seg_cumsum_exclusive(sd, 2), -1.0));
  const Var alpha = tape.offset(tape.scale(tape.exp(tape.scale(sd, -1.0)), -1.0), 1.0);
  const Var w = tape.mul(trans, alpha);
  const Var rgb = tape.seg_sum(tape.mul_col(tape.constant(colors), w), 2);

  const double w0 = 1.0 - std::exp(-0.5);
  const double w1 = std::exp(-0.5) * (1.0 - std::exp(-0.5));
  for (int c = 0; c < 3; ++c)
    CHECK(tape.value(rgb)(0, c) == doctest::Approx(w0 * colors(0, c) + w1 * colors(1, c)));
}

TEST_CASE("gradient check: every differentiable op kind") {
  Rng rng(42);

  SUBCASE("add/sub/mul") {
    Tape tape;
    const Var a = tape.leaf(random_mat(3, 4, rng));
    const Var b = tape.leaf(random_mat(3, 4, rng));
    const Var out = tape.mul(tape.add(a, b), tape.sub(a, b));
    check_gradients(tape, scalarize(tape, out, rng), {a, b});
  }
  SUBCASE("row/col/scalar broadcasts") {
    Tape tape;
    const Var m = tape.leaf(random_mat(4, 3, rng));
    const Var row = tape.leaf(random_mat(1, 3, rng));
    const Var col = tape.leaf(random_mat(4, 1, rng));
    const Var s = tape.leaf(random_mat(1, 1, rng));
    const Var out = tape.mul_scalar(tape.mul_col(tape.mul_row(tape.add_row(m, row), row), col), s);
    check_gradients(tape, scalarize(tape, out, rng), {m, row, col, s});
  }
  SUBCASE("scale/offset") {
    Tape tape;
    const Var a = tape.leaf(random_mat(2, 5, rng));
    const Var out = tape.offset(tape.scale(a, -1.7), 0.3);
    check_gradients(tape, scalarize(tape, out, rng), {a});
  }
  SUBCASE("matmul/transpose") {
    Tape tape;
    const Var a = tape.leaf(random_mat(3, 4, rng));
    const Var b = tape.leaf(random_mat(4, 2, rng));
    const Var out = tape.matmul(tape.transpose(tape.matmul(a, b)), a);
    check_gradients(tape, scalarize(tape, out, rng), {a, b});
  }
  SUBCASE("relu away from the kink") {
    Tape tape;
    Mat m = random_mat(3, 3, rng);
    for (Eigen::Index i = 0; i < m.size(); ++i)
      if (std::fabs(m.data()[i]) < 0.05) m.data()[i] = 0.2;
    const Var a = tape.leaf(m);
    check_gradients(tape, scalarize(tape, tape.relu(a), rng), {a});
  }
  SUBCASE("sigmoid/exp/sin/cos") {
    Tape tape;
    const Var a = tape.leaf(random_mat(3, 3, rng));
    const Var out = tape.sin(tape.cos(tape.exp(tape.sigmoid(a))));
    check_gradients(tape, scalarize(tape, out, rng), {a});
  }
  SUBCASE("sqrt/reciprocal on positive inputs") {
    Tape tape;
    const Var a = tape.leaf(random_mat(3, 3, rng, 0.5, 2.0));
    const Var out = tape.reciprocal(tape.sqrt(a));
    check_gradients(tape, scalarize(tape, out, rng), {a});
  }
  SUBCASE("reductions and segments") {
    Tape tape;
    const Var a = tape.leaf(random_mat(6, 3, rng));
    const Var segs = tape.seg_sum(tape.seg_cumsum_exclusive(a, 3), 3);  // 2x3
    const Var rep = tape.repeat_rows(segs, 2);                          // 4x3
    const Var rows = tape.row_sum(rep);                                 // 4x1
    check_gradients(tape, scalarize(tape, rows, rng), {a});
  }
  SUBCASE("hcat and slices") {
    Tape tape;
    const Var a = tape.leaf(random_mat(3, 2, rng));
    const Var b = tape.leaf(random_mat(3, 3, rng));
    const Var parts[] = {a, b};
    const Var cat = tape.hcat(parts);
    const Var out = tape.mul(tape.slice_cols(cat, 1, 3), tape.slice_cols(cat, 2, 3));
    const Var sliced_rows = tape.slice_rows(out, 1, 2);
    check_gradients(tape, scalarize(tape, sliced_rows, rng), {a, b});
  }
  SUBCASE("axis_angle_to_matrix at random v") {
    Tape tape;
    Mat v = random_mat(3, 1, rng, -0.8, 0.8);
    const Var vv = tape.leaf(v);
    const Var r = tape.axis_angle_to_matrix(vv);
    check_gradients(tape, scalarize(tape, r, rng), {vv});
  }
  SUBCASE("axis_angle_to_matrix at v = 0") {
    Tape tape;
    const Var vv = tape.leaf(Mat::Zero(3, 1));
    const Var r = tape.axis_angle_to_matrix(vv);
    check_gradients(tape, scalarize(tape, r, rng), {vv});
  }
  SUBCASE("abs away from the kink") {
    Tape tape;
    Mat m = random_mat(3, 3, rng);
    for (Eigen::Index i = 0; i < m.size(); ++i)
      if (std::fabs(m.data()[i]) < 0.05) m.data()[i] = -0.3;
    const Var a = tape.leaf(m);
    check_gradients(tape, scalarize(tape, tape.abs(a), rng), {a});
  }
}

TEST_CASE("linearity of backward") {
  Rng rng(7);
  Mat x0 = random_mat(3, 3, rng);

  auto grad_of = [&](double wa, double wb) {
    Tape tape;
    const Var x = tape.leaf(x0);
    const Var f = tape.sum_all(tape.mul(x, x));
    const Var g = tape.sum_all(tape.sin(x));
    const Var combo = tape.add(tape.scale(f, wa), tape.scale(g, wb));
    tape.backward(combo);
    return tape.grad(x);
  };

  const Mat gf = grad_of(1.0, 0.0);
  const Mat gg = grad_of(0.0, 1.0);
  const Mat combo = grad_of(2.5, -1.25);
  CHECK((combo - (2.5 * gf - 1.25 * gg)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("determinism: identical graphs give bit-identical values and gradients") {
  auto run = [] {
    Rng rng(99);
    Tape tape;
    const Var a = tape.leaf(random_mat(8, 8, rng));
    const Var b = tape.leaf(random_mat(8, 8, rng));
    const Var out = tape.sum_all(tape.sigmoid(tape.matmul(a, tape.sin(b))));
    tape.backward(out);
    return std::make_tuple(tape.value(out)(0, 0), tape.grad(a), tape.grad(b));
  };
  const auto [v1, ga1, gb1] = run();
  const auto [v2, ga2, gb2] = run();
  CHECK(v1 == v2);
  CHECK(ga1 == ga2);
  CHECK(gb1 == gb2);
}

TEST_CASE("structured errors") {
  Tape tape;
  const Var a = tape.leaf(Mat::Zero(2, 3));
  const Var b = tape.leaf(Mat::Zero(3, 2));
  CHECK_THROWS_AS(tape.add(a, b), Error);
  CHECK_THROWS_AS(tape.matmul(a, a), Error);

  const Var loss = tape.sum_all(a);
  tape.set_leaf(a, Mat::Ones(2, 3));
  CHECK_THROWS_AS(tape.backward(loss), Error);  // backward before forward
  tape.recompute();
  CHECK_NOTHROW(tape.backward(loss));

  // backward root must be scalar
  CHECK_THROWS_AS(tape.backward(a), Error);
}

TEST_CASE("grad of constants is zero and leaves are reachable") {
  Tape tape;
  const Var c = tape.constant(Mat::Ones(2, 2));
  const Var x = tape.leaf(Mat::Ones(2, 2) * 2.0);
  const Var out = tape.sum_all(tape.mul(c, x));
  tape.backward(out);
  CHECK(tape.grad(c).cwiseAbs().maxCoeff() == 0.0);
  CHECK(tape.grad(x).cwiseAbs().minCoeff() == 1.0);
}

}  // TEST_SUITE
