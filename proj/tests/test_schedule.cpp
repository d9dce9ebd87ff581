#include "rkz/schedule.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "rkz/rng.hpp"
#include "oracles.hpp"

using namespace rkz;

TEST_CASE("schedule_step exact rational values") {
  const ScheduleParams p{0.5, 1.0, 1.0};
  auto s = initial_state(p);
  CHECK(s.alpha == Catch::Approx(1.0 / 3.0).margin(1e-15));
  s = schedule_step(s, p);
  CHECK(s.k == 1);
  CHECK(s.beta == Catch::Approx(5.0 / 6.0).margin(1e-15));
}

TEST_CASE("schedule_step at zero initial error") {
  const ScheduleParams p{0.5, 1.0, 0.0};
  auto s = initial_state(p);
  CHECK(s.alpha == 0.0);
  s = schedule_step(s, p);
  CHECK(s.beta == 0.0);
  CHECK(s.alpha == 0.0);
}

TEST_CASE("schedule_step at the large signal-to-noise of the sparse benchmark") {
  // n/sigma^2 = 100/0.0025 with eta = 1/n
  const ScheduleParams p{0.01, 0.0025, 40000.0};
  const auto s = initial_state(p);
  CHECK(s.alpha == Catch::Approx(400.0 / 401.0).margin(1e-15));
  CHECK(s.alpha == Catch::Approx(0.997506).margin(5e-7));
}

TEST_CASE("noise-free schedule pins the rate at one") {
  const ScheduleParams p{0.25, 0.0, 123.0};
  auto s = initial_state(p);
  for (int k = 0; k < 50; ++k) {
    CHECK(s.alpha == 1.0);
    s = schedule_step(s, p);
  }
}

TEST_CASE("schedule params validation") {
  CHECK_THROWS_AS(initial_state(ScheduleParams{0.0, 1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(initial_state(ScheduleParams{1.5, 1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(initial_state(ScheduleParams{0.5, -1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(initial_state(ScheduleParams{0.5, 1.0, -1.0}), std::invalid_argument);
}

TEST_CASE("bound constant and values match the bisection oracle") {
  const auto bp = BoundParams::from_initial_error(0.01, 0.0025, 100.0);
  CHECK(bp.c == Catch::Approx(-5.988964547107982).margin(1e-12));

  // f(0) equals the initial squared error: W(e^c) = 1/(eta*beta0) identically.
  CHECK(bound_f(0.0, bp) == Catch::Approx(100.0).epsilon(1e-10));
  CHECK(bound_f(0.0, bp) >= 0.0025 * 40000.0 * (1.0 - 1e-12));

  const double xi = 0.01 * 2000 + bp.c;
  CHECK(xi == Catch::Approx(14.011035452892018).margin(1e-11));
  const double f2000 = bound_f(2000.0, bp);
  CHECK(f2000 == Catch::Approx(0.0025 / (0.01 * oracle::lambert_w_exp_bisect(xi))).epsilon(1e-12));
  CHECK(f2000 == Catch::Approx(0.021620299273479117).epsilon(1e-10));
  CHECK(std::sqrt(f2000) / 10.0 == Catch::Approx(0.0147038).margin(1e-6));
}

TEST_CASE("bound is strictly decreasing and rejects the degenerate case") {
  const auto bp = BoundParams::from_initial_error(0.01, 0.0025, 100.0);
  double prev = bound_f(0.0, bp);
  for (double k = 1.0; k <= 4096.0; k *= 2.0) {
    const double fk = bound_f(k, bp);
    CHECK(fk < prev);
    prev = fk;
  }
  BoundParams degenerate = bp;
  degenerate.sigma2 = 0.0;
  CHECK_THROWS_AS(bound_f(1.0, degenerate), std::domain_error);
  CHECK_THROWS_AS(bound_f(-1.0, bp), std::invalid_argument);
  CHECK_THROWS_AS(BoundParams::from_initial_error(0.01, 0.0, 100.0), std::invalid_argument);
}

TEST_CASE("continuous rate matches the discrete rate at the start") {
  const auto bp = BoundParams::from_initial_error(0.01, 0.0025, 100.0);
  const double a0 = continuous_alpha(0.0, bp);
  CHECK(a0 == Catch::Approx(400.0 / 401.0).margin(1e-9));

  double prev = a0;
  for (double t = 100.0; t <= 10000.0; t += 100.0) {
    const double a = continuous_alpha(t, bp);
    CHECK(a > 0.0);
    CHECK(a < 1.0);
    CHECK(a < prev);
    prev = a;
  }
  CHECK(continuous_alpha(1e8, bp) < 1e-3);  // t -> inf drives the rate to zero

  // overwhelming noise drives the rate to zero as well
  const auto noisy = BoundParams::from_initial_error(0.5, 1e6, 1e-3);
  CHECK(continuous_alpha(0.0, noisy) < 1e-9);
}

TEST_CASE("small-sigma asymptote") {
  CHECK(asymptote_small_sigma(0.0, 0.3, 7.5) == 7.5);
  CHECK(asymptote_small_sigma(100.0, 0.01, 100.0) ==
        Catch::Approx(36.78794411714423).epsilon(1e-12));
  // matches the (1 - eta)^k decay shape for small eta
  const double eta = 1e-3;
  const double ratio = asymptote_small_sigma(1000.0, eta, 1.0) / std::pow(1.0 - eta, 1000.0);
  CHECK(ratio == Catch::Approx(1.0).margin(0.01));
}

TEST_CASE("large-k asymptote") {
  CHECK(asymptote_large_k(1000.0, 0.01, 0.0025) == Catch::Approx(0.025).epsilon(1e-15));
  CHECK(asymptote_large_k(1e6, 0.01, 0.0025) == Catch::Approx(2.5e-5).epsilon(1e-15));
  CHECK(asymptote_large_k(2000.0, 0.01, 0.0025) ==
        Catch::Approx(0.5 * asymptote_large_k(1000.0, 0.01, 0.0025)).epsilon(1e-15));

  const auto bp = BoundParams::from_initial_error(0.01, 0.0025, 100.0);
  double prev_dev = 1e300;
  for (double k = 1e6; k <= 1e10; k *= 100.0) {
    const double dev = std::abs(bound_f(k, bp) / asymptote_large_k(k, 0.01, 0.0025) - 1.0);
    CHECK(dev < prev_dev);
    prev_dev = dev;
  }
  CHECK(prev_dev < 1e-6);
}

TEST_CASE("needell horizon") {
  CHECK(needell_horizon(0.0, 0.5) == 0.0);
  CHECK(needell_horizon(0.05, 0.01) == Catch::Approx(0.25).epsilon(1e-15));
  // the scheduled bound at k = 2000 undercuts the horizon by an order of magnitude
  const auto bp = BoundParams::from_initial_error(0.01, 0.0025, 100.0);
  const double breakthrough = needell_horizon(0.05, 0.01) / bound_f(2000.0, bp);
  CHECK(breakthrough > 11.0);
  CHECK(breakthrough < 12.0);
}

TEST_CASE("unsimplified optimality recursion agrees with the production one") {
  CHECK(optimality_recursion_check(ScheduleParams{0.5, 1.0, 1.0}, 1000) <= 1e-12);
  CHECK(optimality_recursion_check(ScheduleParams{0.01, 0.0025, 40000.0}, 1000) <= 1e-12);
  CHECK(optimality_recursion_check(ScheduleParams{0.5, 1.0, 0.0}, 100) == 0.0);

  // one step by hand: (1 - (2a - a^2)*eta)*beta + a^2 with a = 1/3 gives 5/6
  const double a = 1.0 / 3.0;
  const double unsimplified = (1.0 - (2.0 * a - a * a) * 0.5) * 1.0 + a * a;
  CHECK(unsimplified == Catch::Approx(5.0 / 6.0).margin(1e-15));
}

TEST_CASE("schedule stays below the closed-form bound") {
  CounterRng rng(20240801);
  for (int pair = 0; pair < 40; ++pair) {
    const double eta = std::pow(10.0, -4.0 + 3.7 * rng.next_unit());    // [1e-4, 0.5]
    const double beta0 = std::pow(10.0, -3.0 + 9.0 * rng.next_unit());  // [1e-3, 1e6]
    const ScheduleParams p{eta, 1.0, beta0};
    const auto bp = BoundParams::from_beta0(eta, beta0);
    auto s = initial_state(p);
    double prev_beta = s.beta;
    double prev_alpha = s.alpha;
    for (std::size_t k = 1; k <= 2000; ++k) {
      s = schedule_step(s, p);
      REQUIRE(s.beta <= bound_f(static_cast<double>(k), bp) * (1.0 + 1e-9));
      REQUIRE(s.beta < prev_beta);
      REQUIRE(s.alpha < prev_alpha);
      REQUIRE(s.alpha > 0.0);
      REQUIRE(s.alpha < 1.0);
      prev_beta = s.beta;
      prev_alpha = s.alpha;
    }
  }
}

TEST_CASE("bound tightness at small eta") {
  // measured worst relative gap for these parameters is ~1.1e-3
  const ScheduleParams p{1e-3, 0.0025, 40000.0};
  const auto bp = BoundParams::from_beta0(1e-3, 40000.0, 0.0025);
  auto s = initial_state(p);
  double worst = 0.0;
  for (std::size_t k = 0; k <= 10000; ++k) {
    const double fk = bound_f(static_cast<double>(k), bp);
    worst = std::max(worst, std::abs(p.sigma2 * s.beta - fk) / fk);
    s = schedule_step(s, p);
  }
  CHECK(worst <= 1e-2);
}

TEST_CASE("noise-to-zero scaling of the bound") {
  // deviation from e^(-eta*k)*err2 shrinks like sigma^2: ~100x per sigma decade
  const double eta = 0.01, k = 200.0, err2 = 100.0;
  const double asym = asymptote_small_sigma(k, eta, err2);
  const double dev3 =
      std::abs(bound_f(k, BoundParams::from_initial_error(eta, 1e-6, err2)) / asym - 1.0);
  const double dev4 =
      std::abs(bound_f(k, BoundParams::from_initial_error(eta, 1e-8, err2)) / asym - 1.0);
  const double shrink = dev3 / dev4;
  CHECK(shrink >= 50.0);
  CHECK(shrink <= 200.0);
}

TEST_CASE("long-run deviation obeys the fitted log-over-k envelope") {
  // empirical constant for these parameters is ~127 and decreasing in k
  const auto bp = BoundParams::from_initial_error(0.01, 0.0025, 100.0);
  for (double k : {1e4, 1e5, 1e6}) {
    const double dev = std::abs(bound_f(k, bp) * 0.01 * 0.01 * k / 0.0025 - 1.0);
    CHECK(dev <= 130.0 * std::log(k) / k);
  }
}
