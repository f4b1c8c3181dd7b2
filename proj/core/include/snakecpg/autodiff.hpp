#pragma once

// Minimal reverse-mode differentiation over dense row-batched matrices.
// Rows are samples, columns are features.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace snakecpg::ad {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& grad)>;

  Var constant(Matrix value);
  /// Leaf whose gradient is added to `p.grad` by backward().
  Var param(Parameter& p);
  /// Node with a custom backward rule; used by the op library.
  Var record(Matrix value, Backward backward);

  const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id_)].value; }
  /// Adds `g` to the gradient of `v`.
  void accumulate(Var v, const Matrix& g);

  /// Seeds d(root)/d(root) = 1 for a 1x1 root and propagates.
  void backward(Var root);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
};

Var matmul(Var x, Var w);             // (B x n) (n x m)
Var add_row(Var x, Var bias);         // bias is 1 x m, broadcast over rows
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);                // elementwise
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var mul_col(Var a, Var col);          // (B x m) times a (B x 1) column, broadcast
Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var clamp(Var a, double lo, double hi);
Var minimum(Var a, Var b);
Var sum(Var a);                       // 1 x 1
Var mean(Var a);                      // 1 x 1
Var row_sum(Var a);                   // B x 1
/// out(r, 0) = a(r, index[r]).
Var gather(Var a, const std::vector<int>& index);
/// out(r, :) = a(index[r], :).
Var gather_rows(Var a, const std::vector<int>& index);
/// Columns [first, first + count).
Var slice_cols(Var a, Index first, Index count);
Var log_softmax(Var a);               // row-wise
Var concat_cols(const std::vector<Var>& parts);

}  // namespace snakecpg::ad
