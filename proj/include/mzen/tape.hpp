#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mzen/common.hpp"

namespace mzen::ad {

using Mat = Eigen::MatrixXd;

struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

enum class Op : uint8_t {
  kLeaf,
  kConst,
  kAdd,
  kSub,
  kMul,
  kAddRow,        // matrix + broadcast 1xC row
  kMulRow,        // matrix * broadcast 1xC row
  kMulCol,        // matrix * broadcast Rx1 column
  kMulScalarV,    // matrix * broadcast 1x1 node
  kScale,         // matrix * compile-time double
  kOffset,        // matrix + compile-time double
  kMatMul,
  kTranspose,
  kRelu,
  kSigmoid,
  kExp,
  kSin,
  kCos,
  kSqrt,
  kRecip,
  kSumAll,        // -> 1x1
  kRowSum,        // RxC -> Rx1
  kSegSum,        // (G*n)xC -> GxC, sums each block of n consecutive rows
  kSegCumsumEx,   // (G*n)xC -> (G*n)xC, exclusive prefix sum within blocks
  kRepeatRows,    // GxC -> (G*n)xC, each row repeated n times
  kHCat,          // column concatenation, variadic
  kSliceRows,
  kSliceCols,
  kAxisAngleToMatrix,  // 3x1 -> 3x3 (Rodrigues)
};

const char* op_name(Op op);

struct Node {
  Op op = Op::kConst;
  int32_t a = -1;
  int32_t b = -1;
  double c = 0.0;               // scalar for kScale / kOffset
  int32_t n = 0;                // block length / repeat count / slice start
  int32_t n2 = 0;               // slice count
  std::vector<int32_t> many;    // kHCat parents
  Mat value;
  Mat grad;
  bool needs_grad = false;
  std::string name;             // optional, for leaves
};

// Reverse-mode tape over dense matrices. Values are computed eagerly as the
// graph is built; set_leaf() invalidates them until recompute(). Gradient
// accumulation walks the nodes in fixed reverse creation order, so repeated
// runs on identical inputs are bit-identical.
class Tape {
 public:
  Var leaf(Mat v, std::string name = {});
  Var constant(Mat v);
  Var constant(double v);  // 1x1

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var add_row(Var m, Var row);
  Var mul_row(Var m, Var row);
  Var mul_col(Var m, Var col);
  Var mul_scalar(Var m, Var s);
  Var scale(Var a, double c);
  Var offset(Var a, double c);
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var exp(Var a);
  Var sin(Var a);
  Var cos(Var a);
  Var sqrt(Var a);
  Var reciprocal(Var a);
  Var sum_all(Var a);
  Var row_sum(Var a);
  Var seg_sum(Var a, int n);
  Var seg_cumsum_exclusive(Var a, int n);
  Var repeat_rows(Var a, int n);
  Var hcat(std::span<const Var> parts);
  Var slice_rows(Var a, int start, int count);
  Var slice_cols(Var a, int start, int count);
  Var axis_angle_to_matrix(Var v);

  // |x| built from the primitive set; subgradient 0 at the kink.
  Var abs(Var a) { return add(relu(a), relu(scale(a, -1.0))); }

  const Mat& value(Var v) const;
  // Gradient of the last backward() root. Zero-filled for nodes the root
  // does not depend on (constants included).
  Mat grad(Var v) const;

  void set_leaf(Var v, Mat value);
  void recompute();           // forward pass over the whole tape
  void backward(Var root);    // root must be 1x1; requires fresh values

  bool values_fresh() const { return !stale_; }
  bool grads_ready() const { return grads_ready_; }
  size_t size() const { return nodes_.size(); }
  const std::string& name(Var v) const;

 private:
  Var push(Node n);
  void eval(Node& node);
  const Node& at(Var v) const;
  Node& at(Var v);
  void check_same_shape(const char* what, const Mat& x, const Mat& y) const;

  std::vector<Node> nodes_;
  bool stale_ = false;
  bool grads_ready_ = false;
};

// Rodrigues forward map, shared with camera code and test oracles.
Eigen::Matrix3d rodrigues(const Eigen::Vector3d& v);

}  // namespace mzen::ad
