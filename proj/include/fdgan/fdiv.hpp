#pragma once
// f-divergence calculus.
//
// Each divergence is described by a convex function f on (0, inf) with the
// pieces the rest of the code needs:
//
//   f(u)            divergence integrand weight, D_f(q||p) = E_p[f(q/p)]
//   f'(u)           derivative; the optimal discriminator is T* = f'(q/p)
//   (f')^{-1}(t)    recovers the density ratio from a discriminator value
//   f*(t)           Fenchel conjugate sup_u(u t - f(u)); gives the
//                   variational lower bound E_q[T] - E_p[f*(T)]
//   g_f(v)          output activation mapping a raw network logit v onto the
//                   range of f', so T = g_f(V(x)) is always admissible
//
// Density ratios are clamped to [u_min, u_max] and raw logits to +/-30
// before exponentiation; the clamp bounds live on the FDivergence instance
// so callers that need an effectively unclamped oracle can widen them.

#include <optional>
#include <string>
#include <string_view>

namespace fdgan {

enum class DivTag { GanJs, Kl, ReverseKl, Js, SquaredHellinger, Alpha, GanAlt };

// A named divergence. Alpha carries its exponent; for every other tag the
// alpha field is ignored and kept at zero so kinds compare cleanly.
struct DivergenceKind {
  DivTag tag = DivTag::GanJs;
  double alpha = 0.0;

  // Canonicalizes the removable singularities: |alpha| < 1e-6 becomes
  // ReverseKl and |alpha - 1| < 1e-6 becomes Kl, avoiding the 1/(a(a-1))
  // blow-up in the alpha formulas.
  static DivergenceKind make_alpha(double alpha);

  // Accepts: gan-js, kl, rkl, js, hellinger, gan-alt, alpha:<value>.
  static std::optional<DivergenceKind> parse(std::string_view name);
  static std::string valid_names();

  std::string name() const;
  bool operator==(const DivergenceKind&) const = default;
};

class FDivergence {
 public:
  // Raw logits are clamped to this magnitude before any exponentiation:
  // e^{alpha v} overflows for mode-covering alpha at large v, and beyond
  // +/-30 the ratio estimate is meaningless anyway.
  static constexpr double kLogitClamp = 30.0;

  explicit FDivergence(DivergenceKind kind, double u_min = 1e-8,
                       double u_max = 1e8);

  const DivergenceKind& kind() const { return kind_; }
  DivTag tag() const { return kind_.tag; }
  double alpha() const { return kind_.alpha; }
  bool normalized() const { return normalized_; }  // whether f(1) == 0
  double u_min() const { return u_min_; }
  double u_max() const { return u_max_; }

  double clamp_ratio(double u) const;
  static double clamp_logit(double v);

  // f(u). Throws std::domain_error for non-finite or non-positive u.
  double f(double u) const;

  // f(e^L) evaluated without forming e^L when that would lose precision
  // (alpha near the removable singularities, GanJs/Js at large L). Valid
  // for |L| up to ~700.
  double f_from_log(double log_u) const;

  // f'(u) and its inverse. f_prime_inv clamps its result to [u_min, u_max]
  // and throws std::domain_error if t is outside the range of f'.
  double f_prime(double u) const;
  double f_prime_inv(double t) const;

  // f''(u) > 0; used to differentiate (f')^{-1} via the inverse rule.
  double f_second(double u) const;

  // Fenchel conjugate f*(t); throws std::domain_error outside the domain.
  double conjugate(double t) const;
  bool in_conjugate_domain(double t) const;

  // (f*)'(t) = (f')^{-1}(t) without the ratio clamp; this is the exact
  // derivative the discriminator ascent needs for the E_p[f*(T)] term.
  double conjugate_prime(double t) const;

  // Output activation g_f and its derivative. Strictly increasing with
  // range equal to the range of f'. For GanJs: g_f(v) = -log(1 + e^{-v}).
  double activation(double v) const;
  double activation_grad(double v) const;

  // p * f(clamp(q/p)) computed from log densities, stable when either
  // density underflows. This is the oracle quadrature integrand.
  double weighted_f(double log_q, double log_p) const;

 private:
  double f_prime_inv_raw(double t) const;  // no ratio clamp

  DivergenceKind kind_;
  double u_min_, u_max_;
  bool normalized_;
};

// Generator objective term h(v) = f_G((f_D')^{-1}(g_{f_D}(v))) for one model
// sample with discriminator logit v. v is clamped to +/-30 first; the
// recovered ratio is NOT additionally clamped so that for f_D = GanJs the
// closed forms h(v) = f_G(e^v) hold exactly on the whole clamp range.
double generator_objective_term(const FDivergence& f_d, const FDivergence& f_g,
                                double v);

// dh/dv. Zero where the logit clamp is active (and where the ratio clamp
// binds on the general path): the clamp deliberately kills gradients in
// regions where the ratio estimate is unreliable.
double generator_objective_grad(const FDivergence& f_d, const FDivergence& f_g,
                                double v);

// Recovered density ratio u = (f_D')^{-1}(g_f(v)), logit- and ratio-clamped.
// Equals e^{clamp(v)} (then ratio-clamped) for f_D = GanJs.
double ratio_from_logit(const FDivergence& f_d, double v);

// Numerically stable log(1 + e^x) and 1/(1 + e^{-x}).
double softplus(double x);
double sigmoid(double x);

}  // namespace fdgan
