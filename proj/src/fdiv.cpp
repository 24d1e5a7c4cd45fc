// f-divergence calculus implementation. Closed forms:
//
//   kind        f(u)                          f'(u)                f*(t), domain
//   GanJs       u log u - (u+1)log(u+1)       -log1p(1/u)          -log(1-e^t),   t < 0
//   Kl          u log u                       1 + log u            e^{t-1},       t in R
//   ReverseKl   -log u                        -1/u                 -1 - log(-t),  t < 0
//   Js          u log u - (u+1)log((u+1)/2)   log2 - log1p(1/u)    -log(2-e^t),   t < log 2
//   Hellinger   (sqrt(u)-1)^2                 1 - 1/sqrt(u)        t/(1-t),       t < 1
//   Alpha(a)    (u^a-1-a(u-1))/(a(a-1))       (u^{a-1}-1)/(a-1)    ((1+(a-1)t)^{a/(a-1)}-1)/a,
//                                                                  1+(a-1)t > 0
//   GanAlt      log(1+1/u)                    -1/(u(u+1))          t u(t) - f(u(t)), t < 0
//
// Js here is twice the textbook Jensen-Shannon divergence, so that
// D_Js = 2 JS(q||p) and D_GanJs = 2 JS(q||p) - log 4 exactly.

#include "fdgan/fdiv.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fdgan {

namespace {

constexpr double kLog2 = 0.6931471805599453094;

[[noreturn]] void domain_fail(const DivergenceKind& kind, const char* what,
                              double value) {
  std::ostringstream os;
  os << kind.name() << ": " << what << " (got " << value << ")";
  throw std::domain_error(os.str());
}

void check_ratio(const DivergenceKind& kind, double u) {
  if (!std::isfinite(u) || u <= 0.0)
    domain_fail(kind, "density ratio must be finite and positive", u);
}

}  // namespace

double softplus(double x) {
  // log(1+e^x) = max(x,0) + log1p(e^{-|x|})
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
//  DivergenceKind
// ---------------------------------------------------------------------------

DivergenceKind DivergenceKind::make_alpha(double alpha) {
  if (std::abs(alpha) < 1e-6) return {DivTag::ReverseKl, 0.0};
  if (std::abs(alpha - 1.0) < 1e-6) return {DivTag::Kl, 0.0};
  return {DivTag::Alpha, alpha};
}

std::optional<DivergenceKind> DivergenceKind::parse(std::string_view name) {
  if (name == "gan-js") return DivergenceKind{DivTag::GanJs, 0.0};
  if (name == "kl") return DivergenceKind{DivTag::Kl, 0.0};
  if (name == "rkl") return DivergenceKind{DivTag::ReverseKl, 0.0};
  if (name == "js") return DivergenceKind{DivTag::Js, 0.0};
  if (name == "hellinger") return DivergenceKind{DivTag::SquaredHellinger, 0.0};
  if (name == "gan-alt") return DivergenceKind{DivTag::GanAlt, 0.0};
  if (name.substr(0, 6) == "alpha:") {
    const std::string arg(name.substr(6));
    try {
      size_t pos = 0;
      const double a = std::stod(arg, &pos);
      if (pos != arg.size() || !std::isfinite(a)) return std::nullopt;
      return make_alpha(a);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::string DivergenceKind::valid_names() {
  return "gan-js, kl, rkl, js, hellinger, gan-alt, alpha:<value>";
}

std::string DivergenceKind::name() const {
  switch (tag) {
    case DivTag::GanJs: return "gan-js";
    case DivTag::Kl: return "kl";
    case DivTag::ReverseKl: return "rkl";
    case DivTag::Js: return "js";
    case DivTag::SquaredHellinger: return "hellinger";
    case DivTag::GanAlt: return "gan-alt";
    case DivTag::Alpha: {
      std::ostringstream os;
      os << "alpha:" << alpha;
      return os.str();
    }
  }
  return "?";
}

// ---------------------------------------------------------------------------
//  FDivergence
// ---------------------------------------------------------------------------

FDivergence::FDivergence(DivergenceKind kind, double u_min, double u_max)
    : kind_(kind), u_min_(u_min), u_max_(u_max) {
  if (kind_.tag == DivTag::Alpha)
    kind_ = DivergenceKind::make_alpha(kind_.alpha);  // enforce canonical form
  if (!(u_min > 0.0) || !(u_max > u_min))
    throw std::invalid_argument("FDivergence: need 0 < u_min < u_max");
  normalized_ =
      kind_.tag != DivTag::GanJs && kind_.tag != DivTag::GanAlt;
}

double FDivergence::clamp_ratio(double u) const {
  return u < u_min_ ? u_min_ : (u > u_max_ ? u_max_ : u);
}

double FDivergence::clamp_logit(double v) {
  return v < -kLogitClamp ? -kLogitClamp : (v > kLogitClamp ? kLogitClamp : v);
}

double FDivergence::f(double u) const {
  check_ratio(kind_, u);
  const double a = kind_.alpha;
  switch (kind_.tag) {
    case DivTag::GanJs:
      return u * std::log(u) - (u + 1.0) * std::log(u + 1.0);
    case DivTag::Kl:
      return u * std::log(u);
    case DivTag::ReverseKl:
      return -std::log(u);
    case DivTag::Js:
      return u * std::log(u) - (u + 1.0) * std::log(0.5 * (u + 1.0));
    case DivTag::SquaredHellinger: {
      const double s = std::sqrt(u) - 1.0;
      return s * s;
    }
    case DivTag::Alpha:
      return (std::pow(u, a) - 1.0 - a * (u - 1.0)) / (a * (a - 1.0));
    case DivTag::GanAlt:
      return std::log1p(1.0 / u);
  }
  return 0.0;
}

double FDivergence::f_from_log(double log_u) const {
  const double L = log_u;
  const double a = kind_.alpha;
  switch (kind_.tag) {
    case DivTag::GanJs:
      // L e^L - (e^L+1) log(e^L+1); rearranged for L > 0 where the direct
      // form cancels catastrophically: = -L - (e^L+1) log1p(e^{-L}).
      if (L > 0.0) return -L - (std::exp(L) + 1.0) * std::log1p(std::exp(-L));
      return L * std::exp(L) - (std::exp(L) + 1.0) * std::log1p(std::exp(L));
    case DivTag::Kl:
      return L * std::exp(L);
    case DivTag::ReverseKl:
      return -L;
    case DivTag::Js: {
      if (std::abs(L) <= 1.0) {
        // log(e^L+1) - log 2 = L/2 + log cosh(L/2), so
        //   f(e^L) = (L/2) expm1(L) - (e^L+1) log cosh(L/2),
        // a difference of two O(L^2) terms; the direct form cancels O(1)
        // terms near L = 0 and loses most of its digits there.
        const double sh = std::sinh(0.25 * L);
        const double log_cosh = std::log1p(2.0 * sh * sh);
        return 0.5 * L * std::expm1(L) - (std::exp(L) + 1.0) * log_cosh;
      }
      if (L > 0.0)
        return -L - (std::exp(L) + 1.0) * (std::log1p(std::exp(-L)) - kLog2);
      return L * std::exp(L) -
             (std::exp(L) + 1.0) * (std::log1p(std::exp(L)) - kLog2);
    }
    case DivTag::SquaredHellinger: {
      const double s = std::expm1(0.5 * L);
      return s * s;
    }
    case DivTag::Alpha: {
      // (e^{aL} - 1 - a(e^L - 1))/(a(a-1)). The leading aL terms cancel, so
      // near L = 0 use the series sum_{k>=2} (a^k - a) L^k / k!.
      if (std::abs(L) < 1e-3) {
        double sum = 0.0, lk = L, ak = a, kfac = 1.0;
        for (int k = 2; k <= 12; ++k) {
          lk *= L;
          ak *= a;
          kfac *= k;
          sum += (ak - a) * lk / kfac;
        }
        return sum / (a * (a - 1.0));
      }
      return (std::expm1(a * L) - a * std::expm1(L)) / (a * (a - 1.0));
    }
    case DivTag::GanAlt:
      return softplus(-L);
  }
  return 0.0;
}

double FDivergence::f_prime(double u) const {
  check_ratio(kind_, u);
  const double a = kind_.alpha;
  switch (kind_.tag) {
    case DivTag::GanJs:
      return -std::log1p(1.0 / u);
    case DivTag::Kl:
      return 1.0 + std::log(u);
    case DivTag::ReverseKl:
      return -1.0 / u;
    case DivTag::Js:
      return kLog2 - std::log1p(1.0 / u);
    case DivTag::SquaredHellinger:
      return -std::expm1(-0.5 * std::log(u));  // 1 - 1/sqrt(u)
    case DivTag::Alpha:
      return std::expm1((a - 1.0) * std::log(u)) / (a - 1.0);
    case DivTag::GanAlt:
      return -1.0 / (u * (u + 1.0));
  }
  return 0.0;
}

double FDivergence::f_second(double u) const {
  check_ratio(kind_, u);
  const double a = kind_.alpha;
  switch (kind_.tag) {
    case DivTag::GanJs:
    case DivTag::Js:
      return 1.0 / (u * (u + 1.0));
    case DivTag::Kl:
      return 1.0 / u;
    case DivTag::ReverseKl:
      return 1.0 / (u * u);
    case DivTag::SquaredHellinger:
      return 0.5 * std::pow(u, -1.5);
    case DivTag::Alpha:
      return std::pow(u, a - 2.0);
    case DivTag::GanAlt: {
      const double d = u * (u + 1.0);
      return (2.0 * u + 1.0) / (d * d);
    }
  }
  return 0.0;
}

bool FDivergence::in_conjugate_domain(double t) const {
  if (!std::isfinite(t)) return false;
  switch (kind_.tag) {
    case DivTag::GanJs:
    case DivTag::ReverseKl:
    case DivTag::GanAlt:
      return t < 0.0;
    case DivTag::Kl:
      return true;
    case DivTag::Js:
      return t < kLog2;
    case DivTag::SquaredHellinger:
      return t < 1.0;
    case DivTag::Alpha:
      return 1.0 + (kind_.alpha - 1.0) * t > 0.0;
  }
  return false;
}

double FDivergence::f_prime_inv_raw(double t) const {
  if (!in_conjugate_domain(t))
    domain_fail(kind_, "t outside the range of f'", t);
  const double a = kind_.alpha;
  switch (kind_.tag) {
    case DivTag::GanJs:
      return std::exp(t) / (-std::expm1(t));
    case DivTag::Kl:
      return std::exp(t - 1.0);
    case DivTag::ReverseKl:
      return -1.0 / t;
    case DivTag::Js:
      return std::exp(t) / (-2.0 * std::expm1(t - kLog2));
    case DivTag::SquaredHellinger: {
      const double d = 1.0 - t;
      return 1.0 / (d * d);
    }
    case DivTag::Alpha:
      return std::pow(1.0 + (a - 1.0) * t, 1.0 / (a - 1.0));
    case DivTag::GanAlt:
      // Solve -1/(u(u+1)) = t: u = (-1+sqrt(1-4/t))/2, written so the
      // subtraction stays exact when 4/|t| is small.
      return -2.0 / (t * (1.0 + std::sqrt(1.0 - 4.0 / t)));
  }
  return 1.0;
}

double FDivergence::f_prime_inv(double t) const {
  return clamp_ratio(f_prime_inv_raw(t));
}

double FDivergence::conjugate_prime(double t) const {
  return f_prime_inv_raw(t);
}

double FDivergence::conjugate(double t) const {
  if (!in_conjugate_domain(t))
    domain_fail(kind_, "t outside the conjugate domain", t);
  const double a = kind_.alpha;
  switch (kind_.tag) {
    case DivTag::GanJs:
      return -std::log(-std::expm1(t));
    case DivTag::Kl:
      return std::exp(t - 1.0);
    case DivTag::ReverseKl:
      return -1.0 - std::log(-t);
    case DivTag::Js:
      // -log(2 - e^t) = -log2 - log(1 - e^{t-log2})
      return -kLog2 - std::log(-std::expm1(t - kLog2));
    case DivTag::SquaredHellinger:
      return t / (1.0 - t);
    case DivTag::Alpha:
      return (std::pow(1.0 + (a - 1.0) * t, a / (a - 1.0)) - 1.0) / a;
    case DivTag::GanAlt: {
      const double u = f_prime_inv_raw(t);
      return t * u - std::log1p(1.0 / u);
    }
  }
  return 0.0;
}

double FDivergence::activation(double v) const {
  const double a = kind_.alpha;
  switch (kind_.tag) {
    case DivTag::GanJs:
      return -softplus(-v);  // range (-inf, 0)
    case DivTag::Kl:
      return v;  // range R
    case DivTag::ReverseKl:
    case DivTag::GanAlt:
      return -std::exp(-v);  // range (-inf, 0)
    case DivTag::Js:
      return kLog2 - softplus(-v);  // range (-inf, log 2)
    case DivTag::SquaredHellinger:
      return 1.0 - std::exp(-v);  // range (-inf, 1)
    case DivTag::Alpha:
      // range of f': (-inf, 1/(1-a)) for a < 1, (-1/(a-1), inf) for a > 1
      if (a < 1.0) return 1.0 / (1.0 - a) - std::exp(-v);
      return std::exp(v) - 1.0 / (a - 1.0);
  }
  return v;
}

double FDivergence::activation_grad(double v) const {
  switch (kind_.tag) {
    case DivTag::GanJs:
    case DivTag::Js:
      return sigmoid(-v);
    case DivTag::Kl:
      return 1.0;
    case DivTag::ReverseKl:
    case DivTag::GanAlt:
    case DivTag::SquaredHellinger:
      return std::exp(-v);
    case DivTag::Alpha:
      return kind_.alpha < 1.0 ? std::exp(-v) : std::exp(v);
  }
  return 1.0;
}

double FDivergence::weighted_f(double log_q, double log_p) const {
  // Clamp the log ratio, then evaluate p * f(e^{Lc}) with every factor kept
  // as exp(log_p + c*Lc) so nothing overflows or underflows prematurely.
  const double lo = std::log(u_min_), hi = std::log(u_max_);
  double L = log_q - log_p;
  const double Lc = L < lo ? lo : (L > hi ? hi : L);
  const auto E = [&](double c) { return std::exp(log_p + c * Lc); };
  const double a = kind_.alpha;
  switch (kind_.tag) {
    case DivTag::Kl:
      return Lc * E(1.0);
    case DivTag::ReverseKl:
      return -Lc * E(0.0);
    case DivTag::GanJs:
      // q Lc - (q+p) log(e^{Lc}+1), split by sign of Lc to avoid cancelling
      // the dominant q Lc term.
      if (Lc > 0.0)
        return -Lc * E(0.0) -
               (E(1.0) + E(0.0)) * std::log1p(std::exp(-Lc));
      return Lc * E(1.0) - (E(1.0) + E(0.0)) * std::log1p(std::exp(Lc));
    case DivTag::Js:
      // Near q = p the direct split cancels O(p) terms down to an O(p Lc^2)
      // result; f_from_log has a stable form there, and with |Lc| bounded
      // the p * f(e^{Lc}) factoring cannot overflow.
      if (std::abs(Lc) < 1.0) return E(0.0) * f_from_log(Lc);
      if (Lc > 0.0)
        return -Lc * E(0.0) -
               (E(1.0) + E(0.0)) * (std::log1p(std::exp(-Lc)) - kLog2);
      return Lc * E(1.0) -
             (E(1.0) + E(0.0)) * (std::log1p(std::exp(Lc)) - kLog2);
    case DivTag::SquaredHellinger:
      // p (e^{Lc/2} - 1)^2 = q - 2 sqrt(q p) + p with clamped q; the three-
      // term form cancels near q = p, so use p expm1(Lc/2)^2 there.
      if (std::abs(Lc) < 1.0) return E(0.0) * f_from_log(Lc);
      return E(1.0) - 2.0 * E(0.5) + E(0.0);
    case DivTag::Alpha:
      // The E-form terms start at O(p a Lc), two orders above the result,
      // and each exp() carries eps*|log_p| argument rounding, so hand the
      // whole cancelling regime to the stable log-domain form.
      if (std::abs(Lc) < 1.0) return E(0.0) * f_from_log(Lc);
      return (E(a) - E(0.0) - a * (E(1.0) - E(0.0))) / (a * (a - 1.0));
    case DivTag::GanAlt:
      return E(0.0) * softplus(-Lc);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
//  Generator objective family
// ---------------------------------------------------------------------------

double generator_objective_term(const FDivergence& f_d, const FDivergence& f_g,
                                double v) {
  if (!std::isfinite(v))
    throw std::domain_error("generator_objective_term: non-finite logit");
  const double vc = FDivergence::clamp_logit(v);
  if (f_d.tag() == DivTag::GanJs) {
    // (f_D')^{-1}(g_f(v)) = e^v exactly, so evaluate f_G in the log domain;
    // this is what makes the closed-form identities hold to machine
    // precision over the whole clamp range.
    return f_g.f_from_log(vc);
  }
  const double u = f_d.f_prime_inv(f_d.activation(vc));
  return f_g.f(u);
}

double generator_objective_grad(const FDivergence& f_d, const FDivergence& f_g,
                                double v) {
  if (!std::isfinite(v))
    throw std::domain_error("generator_objective_grad: non-finite logit");
  if (std::abs(v) >= FDivergence::kLogitClamp) return 0.0;
  if (f_d.tag() == DivTag::GanJs) {
    // d/dv f_G(e^v) = f_G'(e^v) e^v, specialized per kind for stability.
    const double a = f_g.alpha();
    switch (f_g.tag()) {
      case DivTag::GanAlt:
        return -sigmoid(-v);
      case DivTag::ReverseKl:
        return -1.0;
      case DivTag::Kl:
        return (1.0 + v) * std::exp(v);
      case DivTag::Js:
        return std::exp(v) * (kLog2 - softplus(-v));
      case DivTag::GanJs:
        return -std::exp(v) * softplus(-v);
      case DivTag::SquaredHellinger:
        return std::exp(v) - std::exp(0.5 * v);
      case DivTag::Alpha:
        return (std::expm1(a * v) - std::expm1(v)) / (a - 1.0);
    }
    return 0.0;
  }
  // General chain rule: h'(v) = f_G'(u) g'(v) / f_D''(u) with
  // u = (f_D')^{-1}(g(v)); the inverse-function rule supplies 1/f_D''.
  // conjugate_prime is exactly the unclamped derivative inverse.
  const double u = f_d.conjugate_prime(f_d.activation(v));
  if (u <= f_d.u_min() || u >= f_d.u_max()) return 0.0;  // ratio clamp active
  return f_g.f_prime(u) * f_d.activation_grad(v) / f_d.f_second(u);
}

double ratio_from_logit(const FDivergence& f_d, double v) {
  if (!std::isfinite(v))
    throw std::domain_error("ratio_from_logit: non-finite logit");
  const double vc = FDivergence::clamp_logit(v);
  if (f_d.tag() == DivTag::GanJs) return f_d.clamp_ratio(std::exp(vc));
  return f_d.f_prime_inv(f_d.activation(vc));
}

}  // namespace fdgan
