// Nelder-Mead single-Gaussian fits against the quadrature oracle.

#include "fdgan/fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace fdgan {

namespace {

// Optimization runs in theta = (mu, log sigma); log sigma is clamped to a
// generous range so a wandering simplex can never overflow exp().
constexpr double kLogSigmaMax = 30.0;

double clamp_log_sigma(double s) {
  return s < -kLogSigmaMax ? -kLogSigmaMax
                           : (s > kLogSigmaMax ? kLogSigmaMax : s);
}

struct NelderMeadResult {
  std::array<double, 2> x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Standard Nelder-Mead (reflect 1, expand 2, contract 1/2, shrink 1/2) on a
// 2-parameter objective, terminating on simplex value spread <= tol.
template <typename F>
NelderMeadResult nelder_mead(F&& fn, std::array<double, 2> x0, double tol,
                             int max_iters,
                             std::vector<std::pair<int, double>>* trace,
                             int* trace_iter, double* best_so_far) {
  struct Vertex {
    std::array<double, 2> x;
    double value;
  };
  std::array<Vertex, 3> simplex;
  const std::array<std::array<double, 2>, 2> steps{{{0.5, 0.0}, {0.0, 0.35}}};
  simplex[0] = {x0, fn(x0)};
  for (int i = 0; i < 2; ++i) {
    std::array<double, 2> xi{x0[0] + steps[i][0], x0[1] + steps[i][1]};
    simplex[i + 1] = {xi, fn(xi)};
  }
  auto by_value = [](const Vertex& a, const Vertex& b) {
    return a.value < b.value;
  };

  NelderMeadResult out;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    std::sort(simplex.begin(), simplex.end(), by_value);
    if (trace) {
      *best_so_far = std::min(*best_so_far, simplex[0].value);
      trace->emplace_back((*trace_iter)++, *best_so_far);
    }
    if (std::abs(simplex[2].value - simplex[0].value) <= tol) {
      out.converged = true;
      break;
    }
    const auto& best = simplex[0];
    const auto& worst = simplex[2];
    std::array<double, 2> centroid{(simplex[0].x[0] + simplex[1].x[0]) / 2.0,
                                   (simplex[0].x[1] + simplex[1].x[1]) / 2.0};
    auto point = [&](double coef) {
      return std::array<double, 2>{centroid[0] + coef * (centroid[0] - worst.x[0]),
                                   centroid[1] + coef * (centroid[1] - worst.x[1])};
    };
    const auto xr = point(1.0);
    const double fr = fn(xr);
    if (fr < best.value) {
      const auto xe = point(2.0);
      const double fe = fn(xe);
      simplex[2] = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
      continue;
    }
    if (fr < simplex[1].value) {
      simplex[2] = {xr, fr};
      continue;
    }
    if (fr < worst.value) {
      const auto xc = point(0.5);  // outside contraction
      const double fc = fn(xc);
      if (fc <= fr) {
        simplex[2] = {xc, fc};
        continue;
      }
    } else {
      const auto xc = point(-0.5);  // inside contraction
      const double fc = fn(xc);
      if (fc < worst.value) {
        simplex[2] = {xc, fc};
        continue;
      }
    }
    for (int i = 1; i < 3; ++i) {  // shrink toward the best vertex
      for (int d = 0; d < 2; ++d)
        simplex[i].x[d] = best.x[d] + 0.5 * (simplex[i].x[d] - best.x[d]);
      simplex[i].value = fn(simplex[i].x);
    }
  }
  std::sort(simplex.begin(), simplex.end(), by_value);
  out.x = simplex[0].x;
  out.value = simplex[0].value;
  out.iterations = iter;
  return out;
}

}  // namespace

double fit_objective(const FDivergence& f, const Mixture1D& q, double mu,
                     double sigma, int grid_points, double envelope_sigmas) {
  const Gaussian1D model{mu, sigma};
  const auto grid =
      QuadratureGrid::envelope(q, model, envelope_sigmas, grid_points);
  return exact_divergence(f, q, model, grid);
}

FitResult fit_gaussian(const FDivergence& f, const Mixture1D& q,
                       const FitOptions& opts) {
  // Widen the clamp so the oracle keeps the full tail penalty (see header).
  const FDivergence oracle(f.kind(), opts.u_min, opts.u_max);
  const auto objective = [&](std::array<double, 2> theta) {
    const double sigma = std::exp(clamp_log_sigma(theta[1]));
    return fit_objective(oracle, q, theta[0], sigma, opts.grid_points,
                         opts.envelope_sigmas);
  };

  // Deterministic restarts: moment-matched, then each mixture component.
  std::vector<std::array<double, 2>> starts;
  starts.push_back({q.mean(), 0.5 * std::log(q.variance())});
  for (const auto& c : q.components)
    starts.push_back({c.g.mean, std::log(c.g.stddev)});

  FitResult result;
  result.kind = f.kind();
  result.n_restarts_used = static_cast<int>(starts.size());
  int trace_iter = 0;
  double best_so_far = 1e300;
  bool have_best = false;
  double best_value = 0.0, best_abs_mu = 0.0;
  for (const auto& x0 : starts) {
    const auto r = nelder_mead(objective, x0, opts.tol, opts.max_iters,
                               &result.trace, &trace_iter, &best_so_far);
    const double abs_mu = std::abs(r.x[0]);
    // Prefer strictly better values; within 1e-9, prefer the smaller |mu| so
    // symmetric problems have a deterministic answer.
    const bool better =
        !have_best || r.value < best_value - 1e-9 ||
        (std::abs(r.value - best_value) <= 1e-9 && abs_mu < best_abs_mu);
    if (better) {
      have_best = true;
      best_value = r.value;
      best_abs_mu = abs_mu;
      result.mu = r.x[0];
      result.sigma = std::exp(clamp_log_sigma(r.x[1]));
      result.value = r.value;
      result.converged = r.converged;
    }
  }
  return result;
}

std::vector<std::pair<double, double>> divergence_profile(
    const FDivergence& f, const std::vector<double>& u_grid) {
  std::vector<std::pair<double, double>> out;
  out.reserve(u_grid.size());
  for (double u : u_grid) out.emplace_back(u, f.f(u));
  return out;
}

}  // namespace fdgan
