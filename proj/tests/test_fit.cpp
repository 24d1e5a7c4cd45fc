// Single-Gaussian fits: profile tables, the moment-matching identity for KL,
// frozen oracle values on the canonical two-Gaussian mixture, the
// mode-seeking / mode-covering width ordering, trace monotonicity, and
// consistency with a brute-force objective grid.
//
// The KL check uses the M-projection identity: minimizing
// KL(q || N(mu, sigma)) over (mu, sigma) is solved exactly by matching the
// first two moments of q, for any q with finite variance.
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "doctest.h"
#include "fdgan/density.hpp"
#include "fdgan/fdiv.hpp"
#include "fdgan/fit.hpp"
#include "fdgan/rng.hpp"

using namespace fdgan;

namespace {

Mixture1D two_gaussians() {
  return Mixture1D({{0.5, {-2.0, 0.5}}, {0.5, {2.0, 0.5}}});
}

}  // namespace

TEST_SUITE_BEGIN("fit");

TEST_CASE("divergence_profile tabulates f pointwise") {
  const FDivergence f({DivTag::Kl, 0.0});
  const std::vector<double> grid = {0.1, 0.5, 1.0, 2.0, 7.5};
  const auto rows = divergence_profile(f, grid);
  REQUIRE(rows.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(rows[i].first == grid[i]);
    CHECK(rows[i].second == f.f(grid[i]));
  }
}

TEST_CASE("KL fit moment-matches random mixtures") {
  RngStream rng(301);
  const FDivergence kl({DivTag::Kl, 0.0});
  for (int trial = 0; trial < 2; ++trial) {
    const double w = rng.uniform(0.25, 0.75);
    const Mixture1D q({{w, {rng.uniform(-2.0, 0.0), rng.uniform(0.5, 1.0)}},
                       {1.0 - w, {rng.uniform(0.5, 2.0), rng.uniform(0.5, 1.5)}}});
    FitOptions opts;
    opts.grid_points = 4001;
    const FitResult r = fit_gaussian(kl, q, opts);
    CHECK(r.converged);
    CHECK(r.mu == doctest::Approx(q.mean()).epsilon(1e-3));
    CHECK(r.sigma == doctest::Approx(std::sqrt(q.variance())).epsilon(1e-3));
  }
}

TEST_CASE("fits on the two-Gaussian mixture match frozen oracle values") {
  // Frozen from an independent high-resolution quadrature + simplex run.
  const Mixture1D q = two_gaussians();

  const FitResult kl = fit_gaussian(FDivergence({DivTag::Kl, 0.0}), q);
  CHECK(kl.converged);
  CHECK(std::abs(kl.mu) < 1e-3);  // symmetric: covers both modes
  CHECK(kl.sigma == doctest::Approx(2.06155248).epsilon(1e-3));
  CHECK(kl.value == doctest::Approx(0.7235530265).epsilon(1e-6));

  const FitResult js = fit_gaussian(FDivergence({DivTag::Js, 0.0}), q);
  CHECK(std::abs(js.mu) < 1e-3);
  CHECK(js.sigma == doctest::Approx(2.04240476).epsilon(1e-3));
  CHECK(js.value == doctest::Approx(0.4019268932).epsilon(1e-6));

  const FitResult rkl = fit_gaussian(FDivergence({DivTag::ReverseKl, 0.0}), q);
  CHECK(std::abs(rkl.mu) == doctest::Approx(1.9998).epsilon(1e-3));
  CHECK(rkl.sigma == doctest::Approx(0.50039820).epsilon(1e-3));
  CHECK(rkl.value == doctest::Approx(0.6930529417).epsilon(1e-6));

  const FitResult ga = fit_gaussian(FDivergence({DivTag::GanAlt, 0.0}), q);
  CHECK(std::abs(ga.mu) == doctest::Approx(1.9998).epsilon(1e-2));
  CHECK(ga.sigma == doctest::Approx(0.50026916).epsilon(1e-3));
  CHECK(ga.value == doctest::Approx(1.0985705866).epsilon(1e-6));

  SUBCASE("widths order from mode-seeking to mode-covering") {
    CHECK(ga.sigma <= rkl.sigma + 1e-3);
    CHECK(rkl.sigma <= js.sigma + 1e-3);
    CHECK(js.sigma <= kl.sigma + 1e-3);
    // The ordering is strict in substance, not only up to tolerance.
    CHECK(kl.sigma - ga.sigma > 1.0);
  }

  SUBCASE("fits are deterministic") {
    const FitResult again = fit_gaussian(FDivergence({DivTag::Kl, 0.0}), q);
    CHECK(again.mu == kl.mu);
    CHECK(again.sigma == kl.sigma);
    CHECK(again.value == kl.value);
  }
}

TEST_CASE("trace records a non-increasing best and bounds the final value") {
  const Mixture1D q = two_gaussians();
  FitOptions opts;
  opts.grid_points = 2001;
  const FitResult r = fit_gaussian(FDivergence({DivTag::Js, 0.0}), q, opts);
  REQUIRE(!r.trace.empty());
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].first == r.trace[i - 1].first + 1);
    CHECK(r.trace[i].second <= r.trace[i - 1].second);
  }
  for (const auto& [iter, best] : r.trace) CHECK(r.value <= best + 1e-9);
  CHECK(r.n_restarts_used == 3);  // moment start + one per component
}

TEST_CASE("fit beats a brute-force objective grid") {
  const Mixture1D q = two_gaussians();
  FitOptions opts;
  opts.grid_points = 4001;
  for (const DivTag tag : {DivTag::Kl, DivTag::GanAlt}) {
    const FDivergence f({tag, 0.0});
    const FitResult r = fit_gaussian(f, q, opts);

    // Evaluate the objective the fit saw (wide clamp, same resolution) over a
    // coarse (mu, sigma) grid; the polished optimum must dominate it.
    const FDivergence oracle({tag, 0.0}, opts.u_min, opts.u_max);
    double grid_min = 1e300;
    for (int i = 0; i < 40; ++i) {
      const double mu = -3.0 + 6.0 * i / 39.0;
      for (int j = 0; j < 40; ++j) {
        const double sigma = 0.3 * std::pow(10.0, j / 39.0);  // 0.3 .. 3
        grid_min = std::min(
            grid_min, fit_objective(oracle, q, mu, sigma, opts.grid_points));
      }
    }
    CHECK(r.value <= grid_min + 1e-9);
    CHECK(r.value == doctest::Approx(grid_min).epsilon(0.02));
  }
}

TEST_SUITE_END();
