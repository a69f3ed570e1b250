#include "mzen/tape.hpp"

#include <cmath>

namespace mzen::ad {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d k;
  k << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return k;
}

}  // namespace

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& v) {
  const double theta2 = v.squaredNorm();
  const Eigen::Matrix3d k = skew(v);
  double s, c2;  // sin(t)/t and (1-cos(t))/t^2
  if (theta2 < 1e-16) {
    // Taylor branch keeps the map and its derivative smooth through v = 0.
    s = 1.0 - theta2 / 6.0;
    c2 = 0.5 - theta2 / 24.0;
  } else {
    const double theta = std::sqrt(theta2);
    s = std::sin(theta) / theta;
    c2 = (1.0 - std::cos(theta)) / theta2;
  }
  return Eigen::Matrix3d::Identity() + s * k + c2 * (k * k);
}

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kConst: return "const";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kAddRow: return "add_row";
    case Op::kMulRow: return "mul_row";
    case Op::kMulCol: return "mul_col";
    case Op::kMulScalarV: return "mul_scalar";
    case Op::kScale: return "scale";
    case Op::kOffset: return "offset";
    case Op::kMatMul: return "matmul";
    case Op::kTranspose: return "transpose";
    case Op::kRelu: return "relu";
    case Op::kSigmoid: return "sigmoid";
    case Op::kExp: return "exp";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kSqrt: return "sqrt";
    case Op::kRecip: return "reciprocal";
    case Op::kSumAll: return "sum_all";
    case Op::kRowSum: return "row_sum";
    case Op::kSegSum: return "seg_sum";
    case Op::kSegCumsumEx: return "seg_cumsum_exclusive";
    case Op::kRepeatRows: return "repeat_rows";
    case Op::kHCat: return "hcat";
    case Op::kSliceRows: return "slice_rows";
    case Op::kSliceCols: return "slice_cols";
    case Op::kAxisAngleToMatrix: return "axis_angle_to_matrix";
  }
  return "?";
}

const Node& Tape::at(Var v) const {
  if (!v.valid() || static_cast<size_t>(v.id) >= nodes_.size())
    throw usage_error("tape: invalid node handle");
  return nodes_[v.id];
}

Node& Tape::at(Var v) { return const_cast<Node&>(static_cast<const Tape*>(this)->at(v)); }

void Tape::check_same_shape(const char* what, const Mat& x, const Mat& y) const {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw usage_error(std::string("tape: ") + what + ": shape mismatch " +
                      std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + " vs " +
                      std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
}

Var Tape::push(Node n) {
  eval(n);
  nodes_.push_back(std::move(n));
  grads_ready_ = false;
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(Mat v, std::string name) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(v);
  n.needs_grad = true;
  n.name = std::move(name);
  nodes_.push_back(std::move(n));
  grads_ready_ = false;
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Mat v) {
  Node n;
  n.op = Op::kConst;
  n.value = std::move(v);
  nodes_.push_back(std::move(n));
  grads_ready_ = false;
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

Var Tape::constant(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

#define MZEN_BINARY(fn, opk)            \
  Var Tape::fn(Var a, Var b) {          \
    Node n;                             \
    n.op = opk;                         \
    n.a = a.id;                         \
    n.b = b.id;                         \
    n.needs_grad = at(a).needs_grad || at(b).needs_grad; \
    return push(std::move(n));          \
  }

MZEN_BINARY(add, Op::kAdd)
MZEN_BINARY(sub, Op::kSub)
MZEN_BINARY(mul, Op::kMul)
MZEN_BINARY(add_row, Op::kAddRow)
MZEN_BINARY(mul_row, Op::kMulRow)
MZEN_BINARY(mul_col, Op::kMulCol)
MZEN_BINARY(mul_scalar, Op::kMulScalarV)
MZEN_BINARY(matmul, Op::kMatMul)
#undef MZEN_BINARY

#define MZEN_UNARY(fn, opk)             \
  Var Tape::fn(Var a) {                 \
    Node n;                             \
    n.op = opk;                         \
    n.a = a.id;                         \
    n.needs_grad = at(a).needs_grad;    \
    return push(std::move(n));          \
  }

MZEN_UNARY(transpose, Op::kTranspose)
MZEN_UNARY(relu, Op::kRelu)
MZEN_UNARY(sigmoid, Op::kSigmoid)
MZEN_UNARY(exp, Op::kExp)
MZEN_UNARY(sin, Op::kSin)
MZEN_UNARY(cos, Op::kCos)
MZEN_UNARY(sqrt, Op::kSqrt)
MZEN_UNARY(reciprocal, Op::kRecip)
MZEN_UNARY(sum_all, Op::kSumAll)
MZEN_UNARY(row_sum, Op::kRowSum)
#undef MZEN_UNARY

Var Tape::scale(Var a, double c) {
  Node n;
  n.op = Op::kScale;
  n.a = a.id;
  n.c = c;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

Var Tape::offset(Var a, double c) {
  Node n;
  n.op = Op::kOffset;
  n.a = a.id;
  n.c = c;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

Var Tape::seg_sum(Var a, int n) {
  Node node;
  node.op = Op::kSegSum;
  node.a = a.id;
  node.n = n;
  node.needs_grad = at(a).needs_grad;
  return push(std::move(node));
}

Var Tape::seg_cumsum_exclusive(Var a, int n) {
  Node node;
  node.op = Op::kSegCumsumEx;
  node.a = a.id;
  node.n = n;
  node.needs_grad = at(a).needs_grad;
  return push(std::move(node));
}

Var Tape::repeat_rows(Var a, int n) {
  Node node;
  node.op = Op::kRepeatRows;
  node.a = a.id;
  node.n = n;
  node.needs_grad = at(a).needs_grad;
  return push(std::move(node));
}

Var Tape::hcat(std::span<const Var> parts) {
  if (parts.empty()) throw usage_error("tape: hcat of zero parts");
  Node node;
  node.op = Op::kHCat;
  node.many.reserve(parts.size());
  for (Var p : parts) {
    node.many.push_back(p.id);
    node.needs_grad = node.needs_grad || at(p).needs_grad;
  }
  return push(std::move(node));
}

Var Tape::slice_rows(Var a, int start, int count) {
  Node node;
  node.op = Op::kSliceRows;
  node.a = a.id;
  node.n = start;
  node.n2 = count;
  node.needs_grad = at(a).needs_grad;
  return push(std::move(node));
}

Var Tape::slice_cols(Var a, int start, int count) {
  Node node;
  node.op = Op::kSliceCols;
  node.a = a.id;
  node.n = start;
  node.n2 = count;
  node.needs_grad = at(a).needs_grad;
  return push(std::move(node));
}

Var Tape::axis_angle_to_matrix(Var v) {
  Node node;
  node.op = Op::kAxisAngleToMatrix;
  node.a = v.id;
  node.needs_grad = at(v).needs_grad;
  return push(std::move(node));
}

void Tape::eval(Node& node) {
  auto val = [&](int32_t id) -> const Mat& { return nodes_[id].value; };
  switch (node.op) {
    case Op::kLeaf:
    case Op::kConst:
      return;
    case Op::kAdd:
      check_same_shape("add", val(node.a), val(node.b));
      node.value = val(node.a) + val(node.b);
      return;
    case Op::kSub:
      check_same_shape("sub", val(node.a), val(node.b));
      node.value = val(node.a) - val(node.b);
      return;
    case Op::kMul:
      check_same_shape("mul", val(node.a), val(node.b));
      node.value = val(node.a).cwiseProduct(val(node.b));
      return;
    case Op::kAddRow: {
      const Mat& m = val(node.a);
      const Mat& r = val(node.b);
      if (r.rows() != 1 || r.cols() != m.cols())
        throw usage_error("tape: add_row: broadcast operand must be 1x" +
                          std::to_string(m.cols()));
      node.value = m.rowwise() + r.row(0);
      return;
    }
    case Op::kMulRow: {
      const Mat& m = val(node.a);
      const Mat& r = val(node.b);
      if (r.rows() != 1 || r.cols() != m.cols())
        throw usage_error("tape: mul_row: broadcast operand must be 1x" +
                          std::to_string(m.cols()));
      node.value = m.array().rowwise() * r.row(0).array();
      return;
    }
    case Op::kMulCol: {
      const Mat& m = val(node.a);
      const Mat& c = val(node.b);
      if (c.cols() != 1 || c.rows() != m.rows())
        throw usage_error("tape: mul_col: broadcast operand must be " +
                          std::to_string(m.rows()) + "x1");
      node.value = m.array().colwise() * c.col(0).array();
      return;
    }
    case Op::kMulScalarV: {
      const Mat& s = val(node.b);
      if (s.rows() != 1 || s.cols() != 1)
        throw usage_error("tape: mul_scalar: scalar operand must be 1x1");
      node.value = val(node.a) * s(0, 0);
      return;
    }
    case Op::kScale:
      node.value = val(node.a) * node.c;
      return;
    case Op::kOffset:
      node.value = val(node.a).array() + node.c;
      return;
    case Op::kMatMul: {
      const Mat& a = val(node.a);
      const Mat& b = val(node.b);
      if (a.cols() != b.rows())
        throw usage_error("tape: matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                          " vs " + std::to_string(b.rows()) + ")");
      node.value = a * b;
      return;
    }
    case Op::kTranspose:
      node.value = val(node.a).transpose();
      return;
    case Op::kRelu:
      node.value = val(node.a).cwiseMax(0.0);
      return;
    case Op::kSigmoid:
      node.value = (1.0 / (1.0 + (-val(node.a).array()).exp())).matrix();
      return;
    case Op::kExp:
      node.value = val(node.a).array().exp().matrix();
      return;
    case Op::kSin:
      node.value = val(node.a).array().sin().matrix();
      return;
    case Op::kCos:
      node.value = val(node.a).array().cos().matrix();
      return;
    case Op::kSqrt:
      node.value = val(node.a).array().sqrt().matrix();
      return;
    case Op::kRecip:
      node.value = val(node.a).array().inverse().matrix();
      return;
    case Op::kSumAll: {
      Mat out(1, 1);
      out(0, 0) = val(node.a).sum();
      node.value = std::move(out);
      return;
    }
    case Op::kRowSum:
      node.value = val(node.a).rowwise().sum();
      return;
    case Op::kSegSum: {
      const Mat& a = val(node.a);
      if (node.n <= 0 || a.rows() % node.n != 0)
        throw usage_error("tape: seg_sum: rows not divisible by block length");
      const int groups = static_cast<int>(a.rows()) / node.n;
      Mat out = Mat::Zero(groups, a.cols());
      for (int g = 0; g < groups; ++g)
        out.row(g) = a.middleRows(static_cast<Eigen::Index>(g) * node.n, node.n).colwise().sum();
      node.value = std::move(out);
      return;
    }
    case Op::kSegCumsumEx: {
      const Mat& a = val(node.a);
      if (node.n <= 0 || a.rows() % node.n != 0)
        throw usage_error("tape: seg_cumsum_exclusive: rows not divisible by block length");
      Mat out(a.rows(), a.cols());
      const int groups = static_cast<int>(a.rows()) / node.n;
      for (int g = 0; g < groups; ++g) {
        Eigen::RowVectorXd run = Eigen::RowVectorXd::Zero(a.cols());
        for (int k = 0; k < node.n; ++k) {
          const Eigen::Index r = static_cast<Eigen::Index>(g) * node.n + k;
          out.row(r) = run;
          run += a.row(r);
        }
      }
      node.value = std::move(out);
      return;
    }
    case Op::kRepeatRows: {
      const Mat& a = val(node.a);
      if (node.n <= 0) throw usage_error("tape: repeat_rows: repeat count must be positive");
      Mat out(a.rows() * node.n, a.cols());
      for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (int k = 0; k < node.n; ++k) out.row(r * node.n + k) = a.row(r);
      node.value = std::move(out);
      return;
    }
    case Op::kHCat: {
      Eigen::Index rows = nodes_[node.many[0]].value.rows();
      Eigen::Index cols = 0;
      for (int32_t id : node.many) {
        if (nodes_[id].value.rows() != rows)
          throw usage_error("tape: hcat: operand row counts differ");
        cols += nodes_[id].value.cols();
      }
      Mat out(rows, cols);
      Eigen::Index off = 0;
      for (int32_t id : node.many) {
        const Mat& p = nodes_[id].value;
        out.middleCols(off, p.cols()) = p;
        off += p.cols();
      }
      node.value = std::move(out);
      return;
    }
    case Op::kSliceRows: {
      const Mat& a = val(node.a);
      if (node.n < 0 || node.n2 <= 0 || node.n + node.n2 > a.rows())
        throw usage_error("tape: slice_rows: range out of bounds");
      node.value = a.middleRows(node.n, node.n2);
      return;
    }
    case Op::kSliceCols: {
      const Mat& a = val(node.a);
      if (node.n < 0 || node.n2 <= 0 || node.n + node.n2 > a.cols())
        throw usage_error("tape: slice_cols: range out of bounds");
      node.value = a.middleCols(node.n, node.n2);
      return;
    }
    case Op::kAxisAngleToMatrix: {
      const Mat& a = val(node.a);
      if (a.rows() != 3 || a.cols() != 1)
        throw usage_error("tape: axis_angle_to_matrix: input must be 3x1");
      node.value = rodrigues(Eigen::Vector3d(a(0, 0), a(1, 0), a(2, 0)));
      return;
    }
  }
}

const Mat& Tape::value(Var v) const {
  if (stale_) throw usage_error("tape: values are stale; call recompute() first");
  return at(v).value;
}

Mat Tape::grad(Var v) const {
  const Node& n = at(v);
  if (!grads_ready_) throw usage_error("tape: backward() has not been run");
  if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

const std::string& Tape::name(Var v) const { return at(v).name; }

void Tape::set_leaf(Var v, Mat value) {
  Node& n = at(v);
  if (n.op != Op::kLeaf && n.op != Op::kConst)
    throw usage_error("tape: set_leaf on a derived node");
  check_same_shape("set_leaf", n.value, value);
  n.value = std::move(value);
  stale_ = true;
  grads_ready_ = false;
}

void Tape::recompute() {
  for (Node& n : nodes_) eval(n);
  stale_ = false;
}

void Tape::backward(Var root) {
  if (stale_)
    throw usage_error("tape: backward before forward; call recompute() after set_leaf");
  Node& r = at(root);
  if (r.value.rows() != 1 || r.value.cols() != 1)
    throw usage_error("tape: backward root must be a 1x1 scalar");

  for (Node& n : nodes_) n.grad.resize(0, 0);
  if (!r.needs_grad) {
    grads_ready_ = true;
    return;
  }

  auto ensure = [&](int32_t id) -> Mat& {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  };

  ensure(root.id)(0, 0) = 1.0;

  for (int32_t i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    const Mat& g = n.grad;
    auto wants = [&](int32_t id) { return id >= 0 && nodes_[id].needs_grad; };

    switch (n.op) {
      case Op::kLeaf:
      case Op::kConst:
        break;
      case Op::kAdd:
        if (wants(n.a)) ensure(n.a) += g;
        if (wants(n.b)) ensure(n.b) += g;
        break;
      case Op::kSub:
        if (wants(n.a)) ensure(n.a) += g;
        if (wants(n.b)) ensure(n.b) -= g;
        break;
      case Op::kMul:
        if (wants(n.a)) ensure(n.a) += g.cwiseProduct(nodes_[n.b].value);
        if (wants(n.b)) ensure(n.b) += g.cwiseProduct(nodes_[n.a].value);
        break;
      case Op::kAddRow:
        if (wants(n.a)) ensure(n.a) += g;
        if (wants(n.b)) ensure(n.b) += g.colwise().sum();
        break;
      case Op::kMulRow: {
        const Mat& m = nodes_[n.a].value;
        const Mat& r2 = nodes_[n.b].value;
        if (wants(n.a)) ensure(n.a) += (g.array().rowwise() * r2.row(0).array()).matrix();
        if (wants(n.b)) ensure(n.b) += g.cwiseProduct(m).colwise().sum();
        break;
      }
      case Op::kMulCol: {
        const Mat& m = nodes_[n.a].value;
        const Mat& c = nodes_[n.b].value;
        if (wants(n.a)) ensure(n.a) += (g.array().colwise() * c.col(0).array()).matrix();
        if (wants(n.b)) ensure(n.b) += g.cwiseProduct(m).rowwise().sum();
        break;
      }
      case Op::kMulScalarV: {
        const double s = nodes_[n.b].value(0, 0);
        if (wants(n.a)) ensure(n.a) += g * s;
        if (wants(n.b)) ensure(n.b)(0, 0) += g.cwiseProduct(nodes_[n.a].value).sum();
        break;
      }
      case Op::kScale:
        if (wants(n.a)) ensure(n.a) += g * n.c;
        break;
      case Op::kOffset:
        if (wants(n.a)) ensure(n.a) += g;
        break;
      case Op::kMatMul:
        if (wants(n.a)) ensure(n.a) += g * nodes_[n.b].value.transpose();
        if (wants(n.b)) ensure(n.b) += nodes_[n.a].value.transpose() * g;
        break;
      case Op::kTranspose:
        if (wants(n.a)) ensure(n.a) += g.transpose();
        break;
      case Op::kRelu:
        if (wants(n.a))
          ensure(n.a) +=
              (g.array() * (nodes_[n.a].value.array() > 0.0).cast<double>()).matrix();
        break;
      case Op::kSigmoid:
        if (wants(n.a))
          ensure(n.a) += (g.array() * n.value.array() * (1.0 - n.value.array())).matrix();
        break;
      case Op::kExp:
        if (wants(n.a)) ensure(n.a) += g.cwiseProduct(n.value);
        break;
      case Op::kSin:
        if (wants(n.a))
          ensure(n.a) += (g.array() * nodes_[n.a].value.array().cos()).matrix();
        break;
      case Op::kCos:
        if (wants(n.a))
          ensure(n.a) -= (g.array() * nodes_[n.a].value.array().sin()).matrix();
        break;
      case Op::kSqrt:
        if (wants(n.a)) ensure(n.a) += (g.array() * 0.5 / n.value.array()).matrix();
        break;
      case Op::kRecip:
        if (wants(n.a)) ensure(n.a) -= (g.array() * n.value.array().square()).matrix();
        break;
      case Op::kSumAll:
        if (wants(n.a)) ensure(n.a).array() += g(0, 0);
        break;
      case Op::kRowSum:
        if (wants(n.a)) ensure(n.a).colwise() += g.col(0);
        break;
      case Op::kSegSum:
        if (wants(n.a)) {
          Mat& ga = ensure(n.a);
          for (Eigen::Index r = 0; r < ga.rows(); ++r) ga.row(r) += g.row(r / n.n);
        }
        break;
      case Op::kSegCumsumEx:
        if (wants(n.a)) {
          // d out_i / d in_j = 1 for j < i within a block: back-propagate
          // with an exclusive suffix sum.
          Mat& ga = ensure(n.a);
          const int groups = static_cast<int>(g.rows()) / n.n;
          for (int grp = 0; grp < groups; ++grp) {
            Eigen::RowVectorXd run = Eigen::RowVectorXd::Zero(g.cols());
            for (int k = n.n - 1; k >= 0; --k) {
              const Eigen::Index r = static_cast<Eigen::Index>(grp) * n.n + k;
              ga.row(r) += run;
              run += g.row(r);
            }
          }
        }
        break;
      case Op::kRepeatRows:
        if (wants(n.a)) {
          Mat& ga = ensure(n.a);
          for (Eigen::Index r = 0; r < ga.rows(); ++r)
            ga.row(r) += g.middleRows(r * n.n, n.n).colwise().sum();
        }
        break;
      case Op::kHCat: {
        Eigen::Index off = 0;
        for (int32_t id : n.many) {
          const Eigen::Index w = nodes_[id].value.cols();
          if (wants(id)) ensure(id) += g.middleCols(off, w);
          off += w;
        }
        break;
      }
      case Op::kSliceRows:
        if (wants(n.a)) ensure(n.a).middleRows(n.n, n.n2) += g;
        break;
      case Op::kSliceCols:
        if (wants(n.a)) ensure(n.a).middleCols(n.n, n.n2) += g;
        break;
      case Op::kAxisAngleToMatrix: {
        if (!wants(n.a)) break;
        // Gallego & Yezzi closed form for dR/dv_i, with a small-angle limit.
        const Eigen::Vector3d v(nodes_[n.a].value(0, 0), nodes_[n.a].value(1, 0),
                                nodes_[n.a].value(2, 0));
        const Eigen::Matrix3d& R = n.value;
        const double theta2 = v.squaredNorm();
        Mat& ga = ensure(n.a);
        for (int i = 0; i < 3; ++i) {
          Eigen::Vector3d e = Eigen::Vector3d::Zero();
          e(i) = 1.0;
          Eigen::Matrix3d dR;
          if (theta2 < 1e-14) {
            dR = skew(e);
          } else {
            const Eigen::Vector3d w = v.cross((Eigen::Matrix3d::Identity() - R) * e);
            dR = ((v(i) * skew(v) + skew(w)) / theta2) * R;
          }
          ga(i, 0) += g.cwiseProduct(dR).sum();
        }
        break;
      }
    }
  }
  grads_ready_ = true;
}

}  // namespace mzen::ad
