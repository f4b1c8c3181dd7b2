#include <doctest.h>

#include <cmath>
#include <functional>

#include "snakecpg/autodiff.hpp"
#include "snakecpg/error.hpp"
#include "snakecpg/rng.hpp"

using namespace snakecpg;
using namespace snakecpg::ad;

namespace {

using Graph = std::function<Var(Tape&, std::vector<Var>&)>;

Matrix random_matrix(Rng& rng, Index r, Index c, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m(i) = uniform(rng, lo, hi);
  return m;
}

// Largest |analytic - central difference| relative to the largest magnitude.
double gradient_error(std::vector<Parameter>& params, const Graph& f) {
  for (auto& p : params) p.zero_grad();
  {
    Tape tape;
    std::vector<Var> vars;
    for (auto& p : params) vars.push_back(tape.param(p));
    tape.backward(f(tape, vars));
  }
  auto eval = [&] {
    Tape tape;
    std::vector<Var> vars;
    for (auto& p : params) vars.push_back(tape.param(p));
    return f(tape, vars).value()(0, 0);
  };
  double num = 0.0, den = 1e-12;
  const double h = 1e-6;
  for (auto& p : params) {
    for (Index i = 0; i < p.value.size(); ++i) {
      const double orig = p.value(i);
      p.value(i) = orig + h;
      const double up = eval();
      p.value(i) = orig - h;
      const double down = eval();
      p.value(i) = orig;
      const double fd = (up - down) / (2 * h);
      num = std::max(num, std::abs(fd - p.grad(i)));
      den = std::max({den, std::abs(fd), std::abs(p.grad(i))});
    }
  }
  return num / den;
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("every op matches central differences") {
  Rng rng = make_stream(51, "ad");
  struct Case {
    const char* name;
    std::vector<std::pair<Index, Index>> shapes;
    Graph graph;
    double lo = -1.0;
    double hi = 1.0;
  };
  const std::vector<int> pick{2, 0, 1};
  const std::vector<Case> cases{
      {"matmul", {{3, 4}, {4, 2}}, [](Tape&, auto& v) { return sum(matmul(v[0], v[1])); }},
      {"add_row", {{3, 2}, {1, 2}}, [](Tape&, auto& v) { return sum(square(add_row(v[0], v[1]))); }},
      {"add/sub", {{3, 2}, {3, 2}}, [](Tape&, auto& v) { return sum(mul(add(v[0], v[1]), sub(v[0], v[1]))); }},
      {"scale/add_scalar", {{2, 3}}, [](Tape&, auto& v) { return sum(square(add_scalar(scale(v[0], -1.7), 0.3))); }},
      {"mul_col", {{3, 2}, {3, 1}}, [](Tape&, auto& v) { return sum(square(mul_col(v[0], v[1]))); }},
      {"tanh", {{2, 3}}, [](Tape&, auto& v) { return sum(tanh(scale(v[0], 2.0))); }},
      {"sigmoid", {{2, 3}}, [](Tape&, auto& v) { return sum(square(sigmoid(v[0]))); }},
      {"exp", {{2, 2}}, [](Tape&, auto& v) { return mean(exp(v[0])); }},
      {"log", {{2, 2}}, [](Tape&, auto& v) { return sum(log(v[0])); }, 0.5, 2.0},
      {"clamp interior", {{3, 3}}, [](Tape&, auto& v) { return sum(square(clamp(v[0], -5.0, 5.0))); }},
      {"clamp edges", {{3, 3}}, [](Tape&, auto& v) { return sum(clamp(v[0], -0.5, 0.5)); }, 0.6, 1.0},
      {"minimum", {{2, 3}, {2, 3}}, [](Tape&, auto& v) { return sum(minimum(v[0], scale(v[1], 3.0))); }},
      {"row_sum", {{3, 4}}, [](Tape&, auto& v) { return sum(square(row_sum(v[0]))); }},
      {"gather", {{3, 3}}, [&](Tape&, auto& v) { return sum(square(gather(v[0], pick))); }},
      {"gather_rows", {{3, 2}}, [&](Tape&, auto& v) { return sum(square(gather_rows(v[0], {2, 2, 0}))); }},
      {"slice_cols", {{2, 5}}, [](Tape&, auto& v) { return sum(square(slice_cols(v[0], 1, 3))); }},
      {"log_softmax", {{3, 4}}, [&](Tape&, auto& v) { return sum(gather(log_softmax(v[0]), pick)); }},
      {"concat_cols", {{2, 1}, {2, 3}}, [](Tape&, auto& v) { return sum(square(concat_cols({v[0], v[1], v[0]}))); }},
      {"two-layer net", {{4, 3}, {3, 5}, {1, 5}, {5, 1}},
       [](Tape& t, auto& v) {
         const Var h = tanh(add_row(matmul(v[0], v[1]), v[2]));
         const Var y = matmul(h, v[3]);
         return mean(square(sub(y, t.constant(Matrix::Ones(4, 1)))));
       }},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    std::vector<Parameter> params;
    for (auto [r, col] : c.shapes) params.emplace_back("p", random_matrix(rng, r, col, c.lo, c.hi));
    CHECK(gradient_error(params, c.graph) < 1e-6);
  }
}

TEST_CASE("reused nodes accumulate gradients") {
  Parameter p("p", Matrix::Constant(1, 1, 3.0));
  Tape tape;
  const Var x = tape.param(p);
  tape.backward(add(mul(x, x), x));  // d/dx (x^2 + x) = 2x + 1
  CHECK(p.grad(0, 0) == doctest::Approx(7.0));
}

TEST_CASE("gradients add up across tapes until zeroed") {
  Parameter p("p", Matrix::Constant(1, 1, 2.0));
  for (int i = 0; i < 2; ++i) {
    Tape tape;
    tape.backward(scale(tape.param(p), 5.0));
  }
  CHECK(p.grad(0, 0) == doctest::Approx(10.0));
  p.zero_grad();
  CHECK(p.grad(0, 0) == 0.0);
}

TEST_CASE("log_softmax rows normalise") {
  Tape tape;
  const Var x = tape.constant((Matrix(2, 3) << 1, 2, 3, -4, 0, 9).finished());
  const Matrix lp = log_softmax(x).value();
  for (Index r = 0; r < 2; ++r) CHECK(lp.row(r).array().exp().sum() == doctest::Approx(1.0));
}

TEST_CASE("shape contracts") {
  Tape tape;
  const Var a = tape.constant(Matrix::Zero(2, 3));
  const Var b = tape.constant(Matrix::Zero(3, 2));
  CHECK_THROWS_AS(add(a, b), ContractViolation);
  CHECK_THROWS_AS(matmul(a, a), ContractViolation);
  CHECK_THROWS_AS(add_row(a, b), ContractViolation);
  CHECK_THROWS_AS(gather(a, {0}), ContractViolation);
  CHECK_THROWS_AS(gather(a, {0, 3}), ContractViolation);
  CHECK_THROWS_AS(slice_cols(a, 2, 2), ContractViolation);
  CHECK_THROWS_AS(tape.backward(a), ContractViolation);
}

}  // TEST_SUITE
