// Densities, sampling, and the Simpson quadrature oracle.

#include "fdgan/density.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fdgan {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log sqrt(2 pi)

void check_weights(const std::vector<double>& w) {
  double total = 0.0;
  for (double wi : w) {
    if (!(wi > 0.0)) throw std::invalid_argument("mixture weights must be positive");
    total += wi;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("mixture weights must sum to 1");
}

// Shared key = value parser for density configs.
std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  double x;
  while (in >> x) out.push_back(x);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
//  Gaussian1D / Mixture1D
// ---------------------------------------------------------------------------

double Gaussian1D::pdf(double x) const { return std::exp(log_pdf(x)); }

double Gaussian1D::log_pdf(double x) const {
  const double z = (x - mean) / stddev;
  return -0.5 * z * z - std::log(stddev) - kLogSqrt2Pi;
}

double Gaussian1D::sample(RngStream& rng) const {
  return rng.normal(mean, stddev);
}

Mixture1D::Mixture1D(std::vector<Component> c) : components(std::move(c)) {
  if (components.empty())
    throw std::invalid_argument("mixture needs at least one component");
  std::vector<double> w;
  for (const auto& comp : components) {
    if (!(comp.g.stddev > 0.0))
      throw std::invalid_argument("mixture stddev must be positive");
    w.push_back(comp.weight);
  }
  check_weights(w);
}

double Mixture1D::pdf(double x) const {
  double total = 0.0;
  for (const auto& c : components) total += c.weight * c.g.pdf(x);
  return total;
}

double Mixture1D::log_pdf(double x) const {
  // log-sum-exp over components; exact for the single-component case.
  const std::size_t n = components.size();
  if (n == 1) return components[0].g.log_pdf(x);
  double small[8];
  std::vector<double> big;
  double* lw = small;
  if (n > 8) {
    big.resize(n);
    lw = big.data();
  }
  double mx = -1e300;
  for (std::size_t i = 0; i < n; ++i) {
    lw[i] = std::log(components[i].weight) + components[i].g.log_pdf(x);
    mx = std::max(mx, lw[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += std::exp(lw[i] - mx);
  return mx + std::log(total);
}

double Mixture1D::sample(RngStream& rng) const {
  if (components.size() == 1) return components[0].g.sample(rng);
  std::vector<double> w;
  w.reserve(components.size());
  for (const auto& c : components) w.push_back(c.weight);
  return components[rng.categorical(w)].g.sample(rng);
}

void Mixture1D::sample(RngStream& rng, std::size_t n,
                       std::vector<double>& out) const {
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = sample(rng);
}

double Mixture1D::mean() const {
  double m = 0.0;
  for (const auto& c : components) m += c.weight * c.g.mean;
  return m;
}

double Mixture1D::variance() const {
  const double m = mean();
  double v = 0.0;
  for (const auto& c : components)
    v += c.weight * (c.g.stddev * c.g.stddev + c.g.mean * c.g.mean);
  return v - m * m;
}

double Mixture1D::min_mean() const {
  double m = components[0].g.mean;
  for (const auto& c : components) m = std::min(m, c.g.mean);
  return m;
}

double Mixture1D::max_mean() const {
  double m = components[0].g.mean;
  for (const auto& c : components) m = std::max(m, c.g.mean);
  return m;
}

double Mixture1D::max_stddev() const {
  double s = 0.0;
  for (const auto& c : components) s = std::max(s, c.g.stddev);
  return s;
}

// ---------------------------------------------------------------------------
//  Mixture2D
// ---------------------------------------------------------------------------

Mixture2D::Mixture2D(std::vector<Component> c) : components(std::move(c)) {
  if (components.empty())
    throw std::invalid_argument("mixture needs at least one component");
  std::vector<double> w;
  for (const auto& comp : components) {
    if (!(comp.stddev > 0.0))
      throw std::invalid_argument("mixture stddev must be positive");
    w.push_back(comp.weight);
  }
  check_weights(w);
}

double Mixture2D::pdf(double x, double y) const {
  double total = 0.0;
  for (const auto& c : components) {
    const double dx = x - c.mean[0], dy = y - c.mean[1];
    const double s2 = c.stddev * c.stddev;
    total += c.weight * std::exp(-0.5 * (dx * dx + dy * dy) / s2) /
             (2.0 * 3.14159265358979323846 * s2);
  }
  return total;
}

std::array<double, 2> Mixture2D::sample(RngStream& rng) const {
  std::size_t idx = 0;
  if (components.size() > 1) {
    std::vector<double> w;
    w.reserve(components.size());
    for (const auto& c : components) w.push_back(c.weight);
    idx = rng.categorical(w);
  }
  const auto& c = components[idx];
  // Two independent normals; keep draw order fixed (x then y).
  const double gx = rng.normal();
  const double gy = rng.normal();
  return {c.mean[0] + c.stddev * gx, c.mean[1] + c.stddev * gy};
}

Mixture2D Mixture2D::ring(int n_modes, double radius, double stddev) {
  std::vector<Component> comps;
  for (int k = 0; k < n_modes; ++k) {
    const double ang = 2.0 * 3.14159265358979323846 * k / n_modes;
    comps.push_back({1.0 / n_modes,
                     {radius * std::cos(ang), radius * std::sin(ang)},
                     stddev});
  }
  return Mixture2D(std::move(comps));
}

// ---------------------------------------------------------------------------
//  Quadrature
// ---------------------------------------------------------------------------

QuadratureGrid::QuadratureGrid(double lo_, double hi_, int n)
    : lo(lo_), hi(hi_), n_points(n) {
  if (!(hi > lo)) throw std::invalid_argument("QuadratureGrid: hi must exceed lo");
  if (n_points < 1001 || n_points % 2 == 0)
    throw std::invalid_argument("QuadratureGrid: n_points must be odd and >= 1001");
}

QuadratureGrid QuadratureGrid::envelope(const Mixture1D& q, const Mixture1D& p,
                                        double k_sigma, int n_points) {
  const double lo = std::min(q.min_mean(), p.min_mean()) -
                    k_sigma * std::max(q.max_stddev(), p.max_stddev());
  const double hi = std::max(q.max_mean(), p.max_mean()) +
                    k_sigma * std::max(q.max_stddev(), p.max_stddev());
  return QuadratureGrid(lo, hi, n_points);
}

double simpson(const QuadratureGrid& grid,
               const std::function<double(double)>& fn) {
  const int n = grid.n_points;
  const double h = (grid.hi - grid.lo) / (n - 1);
  double odd = 0.0, even = 0.0;
  for (int i = 1; i < n - 1; i += 2) odd += fn(grid.x(i));
  for (int i = 2; i < n - 1; i += 2) even += fn(grid.x(i));
  return (fn(grid.lo) + 4.0 * odd + 2.0 * even + fn(grid.hi)) * h / 3.0;
}

double exact_divergence(const FDivergence& f, const Mixture1D& q,
                        const Mixture1D& p, const QuadratureGrid& grid) {
  const double value = simpson(grid, [&](double x) {
    const double term = f.weighted_f(q.log_pdf(x), p.log_pdf(x));
    if (!std::isfinite(term)) {
      std::ostringstream os;
      os << "exact_divergence(" << f.kind().name()
         << "): non-finite integrand at x = " << x;
      throw std::runtime_error(os.str());
    }
    return term;
  });
  return value;
}

double lower_bound(const FDivergence& f, const Mixture1D& q,
                   const Mixture1D& p,
                   const std::function<double(double)>& T,
                   const QuadratureGrid& grid) {
  return simpson(grid, [&](double x) {
    const double t = T(x);
    if (!f.in_conjugate_domain(t)) {
      std::ostringstream os;
      os << "lower_bound(" << f.kind().name() << "): T(x) = " << t
         << " outside the conjugate domain at x = " << x;
      throw std::domain_error(os.str());
    }
    return std::exp(q.log_pdf(x)) * t - std::exp(p.log_pdf(x)) * f.conjugate(t);
  });
}

// ---------------------------------------------------------------------------
//  Config serialization
// ---------------------------------------------------------------------------

namespace {

std::string fmt17(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

std::string to_config(const Mixture1D& m) {
  std::ostringstream os;
  os << "type = mixture1d\nweights =";
  for (const auto& c : m.components) os << ' ' << fmt17(c.weight);
  os << "\nmeans =";
  for (const auto& c : m.components) os << ' ' << fmt17(c.g.mean);
  os << "\nstddevs =";
  for (const auto& c : m.components) os << ' ' << fmt17(c.g.stddev);
  os << '\n';
  return os.str();
}

std::string to_config(const Mixture2D& m) {
  std::ostringstream os;
  os << "type = mixture2d\nweights =";
  for (const auto& c : m.components) os << ' ' << fmt17(c.weight);
  os << "\nmeans_x =";
  for (const auto& c : m.components) os << ' ' << fmt17(c.mean[0]);
  os << "\nmeans_y =";
  for (const auto& c : m.components) os << ' ' << fmt17(c.mean[1]);
  os << "\nstddevs =";
  for (const auto& c : m.components) os << ' ' << fmt17(c.stddev);
  os << '\n';
  return os.str();
}

Mixture1D mixture1d_from_config(const std::string& text) {
  auto kv = parse_kv(text);
  if (kv["type"] != "mixture1d")
    throw std::invalid_argument("density config: expected type = mixture1d");
  const auto w = parse_list(kv["weights"]);
  const auto mu = parse_list(kv["means"]);
  const auto sg = parse_list(kv["stddevs"]);
  if (w.size() != mu.size() || w.size() != sg.size() || w.empty())
    throw std::invalid_argument("density config: weights/means/stddevs sizes differ");
  std::vector<Mixture1D::Component> comps;
  for (std::size_t i = 0; i < w.size(); ++i)
    comps.push_back({w[i], Gaussian1D{mu[i], sg[i]}});
  return Mixture1D(std::move(comps));
}

Mixture2D mixture2d_from_config(const std::string& text) {
  auto kv = parse_kv(text);
  if (kv["type"] != "mixture2d")
    throw std::invalid_argument("density config: expected type = mixture2d");
  const auto w = parse_list(kv["weights"]);
  const auto mx = parse_list(kv["means_x"]);
  const auto my = parse_list(kv["means_y"]);
  const auto sg = parse_list(kv["stddevs"]);
  if (w.size() != mx.size() || w.size() != my.size() || w.size() != sg.size() ||
      w.empty())
    throw std::invalid_argument("density config: component list sizes differ");
  std::vector<Mixture2D::Component> comps;
  for (std::size_t i = 0; i < w.size(); ++i)
    comps.push_back({w[i], {mx[i], my[i]}, sg[i]});
  return Mixture2D(std::move(comps));
}

}  // namespace fdgan
