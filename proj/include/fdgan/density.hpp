#pragma once
// Analytic densities and the quadrature oracle.
//
// Gaussians and Gaussian mixtures (1D and isotropic 2D) with pointwise pdf,
// log-pdf and sampling, plus composite-Simpson evaluation of
//
//   exact_divergence:  D_f(q||p) = integral p(x) f(clamp(q(x)/p(x))) dx
//   lower_bound:       E_q[T(x)] - E_p[f*(T(x))]     (the variational bound)
//
// The integrand is evaluated from log densities (FDivergence::weighted_f) so
// the oracle stays meaningful where one density underflows; the ratio clamp
// bounds come from the FDivergence instance.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fdgan/fdiv.hpp"
#include "fdgan/rng.hpp"

namespace fdgan {

struct Gaussian1D {
  double mean = 0.0;
  double stddev = 1.0;

  double pdf(double x) const;
  double log_pdf(double x) const;
  double sample(RngStream& rng) const;
};

// Weighted sum of 1D Gaussians. A single Gaussian converts implicitly, so
// every oracle below accepts plain Gaussians too. Weights must sum to 1.
struct Mixture1D {
  struct Component {
    double weight = 1.0;
    Gaussian1D g;
  };
  std::vector<Component> components;

  Mixture1D() = default;
  Mixture1D(const Gaussian1D& g) : components{{1.0, g}} {}
  Mixture1D(std::vector<Component> c);

  double pdf(double x) const;
  double log_pdf(double x) const;
  double sample(RngStream& rng) const;
  void sample(RngStream& rng, std::size_t n, std::vector<double>& out) const;

  double mean() const;
  double variance() const;
  double min_mean() const;
  double max_mean() const;
  double max_stddev() const;
};

// Isotropic 2D Gaussian mixture (the ring dataset lives here).
struct Mixture2D {
  struct Component {
    double weight = 1.0;
    std::array<double, 2> mean{0.0, 0.0};
    double stddev = 1.0;
  };
  std::vector<Component> components;

  Mixture2D() = default;
  Mixture2D(std::vector<Component> c);

  double pdf(double x, double y) const;
  std::array<double, 2> sample(RngStream& rng) const;

  // Ring of n equal-weight modes on a circle; the 2D toy dataset.
  static Mixture2D ring(int n_modes, double radius, double stddev);
};

// Uniform grid for composite Simpson: n_points odd and >= 1001, spanning at
// least +/-10 stddev around every density under integration.
struct QuadratureGrid {
  double lo = -10.0;
  double hi = 10.0;
  int n_points = 20001;

  QuadratureGrid() = default;
  QuadratureGrid(double lo, double hi, int n_points);

  double x(int i) const {
    return lo + (hi - lo) * static_cast<double>(i) / (n_points - 1);
  }

  // Smallest grid covering mean +/- k_sigma * stddev of both densities.
  static QuadratureGrid envelope(const Mixture1D& q, const Mixture1D& p,
                                 double k_sigma = 10.0, int n_points = 20001);
};

// Composite Simpson integral of fn over the grid.
double simpson(const QuadratureGrid& grid,
               const std::function<double(double)>& fn);

// D_f(q||p) by quadrature. Throws std::runtime_error if the clamped
// integrand turns non-finite (possible only with widened clamp bounds).
double exact_divergence(const FDivergence& f, const Mixture1D& q,
                        const Mixture1D& p, const QuadratureGrid& grid);

// Variational lower bound E_q[T] - E_p[f*(T)] for an arbitrary T. Throws
// std::domain_error naming the offending x if T(x) leaves the conjugate
// domain.
double lower_bound(const FDivergence& f, const Mixture1D& q,
                   const Mixture1D& p,
                   const std::function<double(double)>& T,
                   const QuadratureGrid& grid);

// Structured-text (key = value) density configs, e.g.
//   type = mixture1d
//   weights = 0.5 0.5
//   means = -2 2
//   stddevs = 0.5 0.5
std::string to_config(const Mixture1D& m);
std::string to_config(const Mixture2D& m);
Mixture1D mixture1d_from_config(const std::string& text);
Mixture2D mixture2d_from_config(const std::string& text);

}  // namespace fdgan
