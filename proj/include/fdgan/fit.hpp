#pragma once
// Single-Gaussian fits against the quadrature oracle.
//
// fit_gaussian minimizes exact_divergence(f, q, N(mu, sigma)) over
// (mu, log sigma) with Nelder-Mead from three deterministic restarts:
// moment-matched, and centered on each mixture component. This reproduces
// the mode-seeking / mode-covering ordering of the fitted widths:
// sigma(gan-alt) <= sigma(rkl) <= sigma(js) <= sigma(kl).

#include <utility>
#include <vector>

#include "fdgan/density.hpp"
#include "fdgan/fdiv.hpp"

namespace fdgan {

struct FitOptions {
  int max_iters = 2000;
  double tol = 1e-10;          // Nelder-Mead simplex value spread
  int grid_points = 20001;     // quadrature resolution per evaluation
  double envelope_sigmas = 10; // quadrature span around the densities
  // The fit objective must see the full missed-mode penalty, so the oracle
  // runs with clamp bounds wide enough to never bind (the default training
  // bounds cap the penalty and collapse the KL fit).
  double u_min = 1e-280;
  double u_max = 1e280;
};

struct FitResult {
  DivergenceKind kind;
  double mu = 0.0;
  double sigma = 1.0;
  double value = 0.0;
  bool converged = false;
  int n_restarts_used = 0;
  // Best objective value seen up to each accepted iteration.
  std::vector<std::pair<int, double>> trace;
};

FitResult fit_gaussian(const FDivergence& f, const Mixture1D& q,
                       const FitOptions& opts = {});

// (u, f(u)) table for plotting.
std::vector<std::pair<double, double>> divergence_profile(
    const FDivergence& f, const std::vector<double>& u_grid);

// The fit objective: exact_divergence of f between q and N(mu, sigma) on an
// envelope grid covering both. Exposed for the brute-force grid checks.
double fit_objective(const FDivergence& f, const Mixture1D& q, double mu,
                     double sigma, int grid_points = 20001,
                     double envelope_sigmas = 10.0);

}  // namespace fdgan
