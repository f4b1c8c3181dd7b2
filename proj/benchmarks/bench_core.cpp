#include <benchmark/benchmark.h>

#include "snakecpg/cpg_analysis.hpp"
#include "snakecpg/ppoc.hpp"
#include "snakecpg/snake.hpp"

using namespace snakecpg;

namespace {

void BM_CpgSubstep(benchmark::State& state) {
  const cpg::MatsuokaParams params;
  cpg::Network net(params);
  const auto u = cpg::TonicVector::uniform(1.0);
  for (auto _ : state) {
    net.advance(u, 1.0, cpg::kSubstepDt);
    benchmark::DoNotOptimize(net.state());
  }
}
BENCHMARK(BM_CpgSubstep);

void BM_SnakeSubstep(benchmark::State& state) {
  const snake::SnakeParams body;
  cpg::Network net(cpg::MatsuokaParams{});
  const auto u = cpg::TonicVector::uniform(1.0);
  for (int k = 0; k < 2000; ++k) net.advance(u, 1.0, cpg::kSubstepDt);
  const auto psi = net.output();
  auto s = snake::SnakeState::at_rest(body);
  for (auto _ : state) {
    s = snake::substep(s, psi, body, cpg::kSubstepDt);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_SnakeSubstep);

// One 60 Hz control period: 17 coupled CPG and body substeps.
void BM_ControlPeriod(benchmark::State& state) {
  const snake::SnakeParams body;
  cpg::Network net(cpg::MatsuokaParams{});
  const auto u = cpg::TonicVector::uniform(1.0);
  auto s = snake::SnakeState::at_rest(body);
  for (auto _ : state) {
    for (int k = 0; k < cpg::kSubsteps; ++k) {
      s = snake::substep(s, net.output(), body, cpg::kSubstepDt);
      net.advance(u, 1.0, cpg::kSubstepDt);
    }
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_ControlPeriod);

void BM_PolicyForward(benchmark::State& state) {
  Rng rng = make_stream(1, "bench");
  ppoc::PolicySpec spec;
  spec.hidden = static_cast<std::size_t>(state.range(0));
  const ppoc::PolicyNet net(spec, rng);
  const ad::Matrix input = ad::Matrix::Random(1, ppoc::kInputDim);
  for (auto _ : state) benchmark::DoNotOptimize(net.evaluate(input));
}
BENCHMARK(BM_PolicyForward)->Arg(64)->Arg(128);

void BM_PpoMinibatch(benchmark::State& state) {
  Rng rng = make_stream(2, "bench");
  ppoc::PolicyNet net(ppoc::PolicySpec{}, rng);
  ppoc::Adam adam(net.parameters(), 5e-4);
  const Eigen::Index rows = state.range(0);
  ppoc::Batch b;
  b.input = ad::Matrix::Random(rows, ppoc::kInputDim);
  b.action = ad::Matrix::Random(rows, ppoc::kActionDim);
  b.log_prob_old = ppoc::Vector::Constant(rows, -4.0);
  b.advantages = ppoc::Vector::Random(rows);
  b.returns = ppoc::Vector::Random(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    b.option.push_back(static_cast<int>(r % 3));
    b.prev_option.push_back(static_cast<int>((r + 1) % 3));
  }
  ppoc::UpdateConfig uc;
  uc.epochs = 1;
  uc.minibatch = static_cast<std::size_t>(rows);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ppoc::update(net, adam, b, uc, rng));
  }
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_PpoMinibatch)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
