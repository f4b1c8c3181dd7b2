#include <doctest.h>

#include <cmath>

#include "snakecpg/error.hpp"
#include "snakecpg/locomotion.hpp"

using namespace snakecpg;
using namespace snakecpg::locomotion;

TEST_SUITE("locomotion") {

TEST_CASE("duty-cycle schedule switches at the duty fraction") {
  const auto on = cpg::TonicVector::uniform(1.0);
  const auto off = cpg::TonicVector::uniform(0.0);
  const Schedule s = duty_cycle(on, off, 1.2, 1.0 / 12.0);
  CHECK(s(0.0) == on);
  CHECK(s(0.099) == on);
  CHECK(s(0.101) == off);
  CHECK(s(1.19) == off);
  CHECK(s(1.2 + 0.05) == on);
  CHECK_THROWS_AS(duty_cycle(on, off, 0.0, 0.5), ParameterDomainError);
  CHECK_THROWS_AS(duty_cycle(on, off, 1.0, 1.5), ParameterDomainError);
  CHECK(constant(on)(123.0) == on);
}

TEST_CASE("open-loop run samples every control period including t = 0") {
  OpenLoopOptions o;
  o.duration = 2.0;
  const auto run = run_open_loop({}, {}, constant(cpg::TonicVector::uniform(1.0)), o);
  REQUIRE(run.samples.size() == 121);
  CHECK(run.samples.front().t == 0.0);
  CHECK(run.samples.back().t == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(run.samples.front().com_velocity == snake::Vec2{});
  CHECK(run.final_state.t == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("open-loop runs are deterministic") {
  OpenLoopOptions o;
  o.duration = 3.0;
  const auto u = cpg::TonicVector::from({0.3, 0.7, 0.5, 0.5, 0.6, 0.4, 0.5, 0.5});
  const auto a = run_open_loop({}, {}, constant(u), o);
  const auto b = run_open_loop({}, {}, constant(u), o);
  CHECK(a.final_state == b.final_state);
  CHECK(a.final_cpg == b.final_cpg);
}

TEST_CASE("the calibrated gain gives a 30 degree mean joint amplitude") {
  const double gain = calibrate_curvature_gain({}, {}, M_PI / 6.0);
  // Frozen from the calibration sweep; the default body uses this value.
  CHECK(gain == doctest::Approx(9.729568).epsilon(1e-6));
  CHECK(snake::SnakeParams{}.curvature_gain == doctest::Approx(gain).epsilon(1e-6));
}

TEST_CASE("uniform drive gives straight forward locomotion") {
  OpenLoopOptions o;
  o.duration = 6.4;
  const auto run = run_open_loop({}, {}, constant(cpg::TonicVector::uniform(1.0)), o);
  const snake::Vec2 d = run.final_state.com - run.samples.front().com;
  CHECK(d.x > 0.0);
  const double dheading = run.samples.back().heading - run.samples.front().heading;
  CHECK(std::abs(dheading) < 15.0 * M_PI / 180.0);
}

TEST_CASE("amplitude bias curls the path with a consistent turning sign") {
  OpenLoopOptions o;
  o.duration = 30.0;
  o.warmup = 20.0;
  const auto u = cpg::TonicVector::from({0.4, 0.6, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  const auto run = run_open_loop({}, {}, constant(u), o);
  const double h0 = run.samples.front().heading;
  double prev = 0.0;
  std::size_t reversals = 0;
  for (std::size_t k = 60; k < run.samples.size(); k += 60) {
    const double d = run.samples[k].heading - h0;
    reversals += d > prev ? 1 : 0;
    prev = d;
  }
  CHECK(prev < 0.0);
  CHECK(reversals == 0);
}

}  // TEST_SUITE
