#include "snakecpg/autodiff.hpp"

#include <cmath>

#include "snakecpg/error.hpp"

namespace snakecpg::ad {

const Matrix& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Matrix value) { return record(std::move(value), nullptr); }

Var Tape::param(Parameter& p) {
  Var v = record(p.value, nullptr);
  nodes_.back().param = &p;
  return v;
}

Var Tape::record(Matrix value, Backward backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(backward), nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(v.id_)];
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var root) {
  if (root.tape_ != this || root.rows() != 1 || root.cols() != 1) {
    throw ContractViolation("backward() needs a 1x1 node of this tape");
  }
  accumulate(root, Matrix::Ones(1, 1));
  for (int i = root.id_; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.size() == 0) continue;
    if (n.param != nullptr) n.param->grad += n.grad;
    if (n.backward) {
      // The closure may append to nodes_' grads only, never to nodes_ itself.
      const Matrix g = n.grad;
      n.backward(*this, g);
    }
  }
}

namespace {

void same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractViolation(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Var matmul(Var x, Var w) {
  if (x.cols() != w.rows()) throw ContractViolation("matmul: inner dimension mismatch");
  Tape& t = *x.tape();
  return t.record(x.value() * w.value(), [x, w](Tape& tp, const Matrix& g) {
    tp.accumulate(x, g * w.value().transpose());
    tp.accumulate(w, x.value().transpose() * g);
  });
}

Var add_row(Var x, Var bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw ContractViolation("add_row: bias must be 1 x cols");
  }
  Tape& t = *x.tape();
  Matrix out = x.value();
  out.rowwise() += bias.value().row(0);
  return t.record(std::move(out), [x, bias](Tape& tp, const Matrix& g) {
    tp.accumulate(x, g);
    tp.accumulate(bias, g.colwise().sum());
  });
}

Var add(Var a, Var b) {
  same_shape(a, b, "add");
  return a.tape()->record(a.value() + b.value(), [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  same_shape(a, b, "sub");
  return a.tape()->record(a.value() - b.value(), [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, -g);
  });
}

Var mul(Var a, Var b) {
  same_shape(a, b, "mul");
  return a.tape()->record(a.value().cwiseProduct(b.value()), [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g.cwiseProduct(b.value()));
    tp.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var scale(Var a, double s) {
  return a.tape()->record(a.value() * s,
                          [a, s](Tape& tp, const Matrix& g) { tp.accumulate(a, g * s); });
}

Var add_scalar(Var a, double s) {
  return a.tape()->record(a.value().array() + s,
                          [a](Tape& tp, const Matrix& g) { tp.accumulate(a, g); });
}

Var mul_col(Var a, Var col) {
  if (col.cols() != 1 || col.rows() != a.rows()) {
    throw ContractViolation("mul_col: column must be rows x 1");
  }
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return a.tape()->record(std::move(out), [a, col](Tape& tp, const Matrix& g) {
    tp.accumulate(a, (g.array().colwise() * col.value().col(0).array()).matrix());
    tp.accumulate(col, g.cwiseProduct(a.value()).rowwise().sum());
  });
}

Var tanh(Var a) {
  Matrix y = a.value().array().tanh();
  return a.tape()->record(y, [a, y](Tape& tp, const Matrix& g) {
    tp.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

Var sigmoid(Var a) {
  Matrix y = a.value().unaryExpr([](double v) {
    // Split by sign so neither branch overflows.
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  return a.tape()->record(y, [a, y](Tape& tp, const Matrix& g) {
    tp.accumulate(a, (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Var exp(Var a) {
  Matrix y = a.value().array().exp();
  return a.tape()->record(
      y, [a, y](Tape& tp, const Matrix& g) { tp.accumulate(a, g.cwiseProduct(y)); });
}

Var log(Var a) {
  return a.tape()->record(a.value().array().log(), [a](Tape& tp, const Matrix& g) {
    tp.accumulate(a, (g.array() / a.value().array()).matrix());
  });
}

Var square(Var a) {
  return a.tape()->record(a.value().array().square(), [a](Tape& tp, const Matrix& g) {
    tp.accumulate(a, (2.0 * g.array() * a.value().array()).matrix());
  });
}

Var clamp(Var a, double lo, double hi) {
  Matrix y = a.value().cwiseMax(lo).cwiseMin(hi);
  return a.tape()->record(y, [a, lo, hi](Tape& tp, const Matrix& g) {
    const Matrix& x = a.value();
    Matrix ga = g;
    for (Index i = 0; i < x.size(); ++i) {
      if (x(i) < lo || x(i) > hi) ga(i) = 0.0;
    }
    tp.accumulate(a, ga);
  });
}

Var minimum(Var a, Var b) {
  same_shape(a, b, "minimum");
  Matrix y = a.value().cwiseMin(b.value());
  return a.tape()->record(y, [a, b](Tape& tp, const Matrix& g) {
    Matrix ga = Matrix::Zero(g.rows(), g.cols());
    Matrix gb = Matrix::Zero(g.rows(), g.cols());
    for (Index i = 0; i < g.size(); ++i) {
      // Ties go to the first argument.
      if (a.value()(i) <= b.value()(i)) {
        ga(i) = g(i);
      } else {
        gb(i) = g(i);
      }
    }
    tp.accumulate(a, ga);
    tp.accumulate(b, gb);
  });
}

Var sum(Var a) {
  Matrix y(1, 1);
  y(0, 0) = a.value().sum();
  return a.tape()->record(y, [a](Tape& tp, const Matrix& g) {
    tp.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0.0) throw ContractViolation("mean of an empty matrix");
  return scale(sum(a), 1.0 / n);
}

Var row_sum(Var a) {
  return a.tape()->record(a.value().rowwise().sum(), [a](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g.col(0).replicate(1, a.cols()));
  });
}

Var gather(Var a, const std::vector<int>& index) {
  if (static_cast<Index>(index.size()) != a.rows()) {
    throw ContractViolation("gather: one index per row is required");
  }
  Matrix y(a.rows(), 1);
  for (Index r = 0; r < a.rows(); ++r) {
    const int c = index[static_cast<std::size_t>(r)];
    if (c < 0 || c >= a.cols()) throw ContractViolation("gather: index out of range");
    y(r, 0) = a.value()(r, c);
  }
  return a.tape()->record(y, [a, index](Tape& tp, const Matrix& g) {
    Matrix ga = Matrix::Zero(a.rows(), a.cols());
    for (Index r = 0; r < a.rows(); ++r) ga(r, index[static_cast<std::size_t>(r)]) = g(r, 0);
    tp.accumulate(a, ga);
  });
}

Var gather_rows(Var a, const std::vector<int>& index) {
  Matrix y(static_cast<Index>(index.size()), a.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= a.rows()) {
      throw ContractViolation("gather_rows: index out of range");
    }
    y.row(static_cast<Index>(r)) = a.value().row(index[r]);
  }
  return a.tape()->record(y, [a, index](Tape& tp, const Matrix& g) {
    Matrix ga = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t r = 0; r < index.size(); ++r) {
      ga.row(index[r]) += g.row(static_cast<Index>(r));
    }
    tp.accumulate(a, ga);
  });
}

Var slice_cols(Var a, Index first, Index count) {
  if (first < 0 || count < 0 || first + count > a.cols()) {
    throw ContractViolation("slice_cols: range out of bounds");
  }
  return a.tape()->record(a.value().middleCols(first, count),
                          [a, first, count](Tape& tp, const Matrix& g) {
                            Matrix ga = Matrix::Zero(a.rows(), a.cols());
                            ga.middleCols(first, count) = g;
                            tp.accumulate(a, ga);
                          });
}

Var log_softmax(Var a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    const double lse = m + std::log((x.row(r).array() - m).exp().sum());
    y.row(r) = x.row(r).array() - lse;
  }
  return a.tape()->record(y, [a, y](Tape& tp, const Matrix& g) {
    const Matrix p = y.array().exp();
    const Eigen::VectorXd gs = g.rowwise().sum();
    tp.accumulate(a, g - (p.array().colwise() * gs.array()).matrix());
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractViolation("concat_cols: nothing to concatenate");
  Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != parts.front().rows()) throw ContractViolation("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix y(parts.front().rows(), cols);
  Index at = 0;
  for (const Var& p : parts) {
    y.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return parts.front().tape()->record(std::move(y), [parts](Tape& tp, const Matrix& g) {
    Index at = 0;
    for (const Var& p : parts) {
      tp.accumulate(p, g.middleCols(at, p.cols()));
      at += p.cols();
    }
  });
}

}  // namespace snakecpg::ad
