// Alternating GAN training loop and its evaluation helpers.

#include "fdgan/gan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fdgan {

namespace {

// Discriminator gradients with respect to the raw logit v, per batch row.
// Ascent on E_q[T] - E_p[f*(T)]:
//   q rows:  d/dv g(v)            =  g'(v)
//   p rows:  d/dv -f*(g(v))       = -(f*)'(g(v)) g'(v)
// For f_D = GanJs this reduces to sigmoid(-v) and -sigmoid(v). Gradients are
// zeroed where the logit clamp is active.
struct DLogitGrads {
  double value_q = 0.0;  // sum of T over q rows
  double value_p = 0.0;  // sum of f*(T) over p rows
};

void disc_logit_grads(const FDivergence& f_d, const Matrix& v, bool is_q,
                      double inv_n, Matrix& dv, DLogitGrads& acc) {
  const bool gan_js = f_d.tag() == DivTag::GanJs;
  dv = Matrix(v.rows, 1);
  for (int i = 0; i < v.rows; ++i) {
    const double raw = v.at(i, 0);
    const double vc = FDivergence::clamp_logit(raw);
    const bool inside = std::abs(raw) < FDivergence::kLogitClamp;
    if (gan_js) {
      if (is_q) {
        acc.value_q += -softplus(-vc);
        dv.at(i, 0) = inside ? sigmoid(-vc) * inv_n : 0.0;
      } else {
        acc.value_p += softplus(vc);  // f*(-softplus(-v)) = softplus(v)
        dv.at(i, 0) = inside ? -sigmoid(vc) * inv_n : 0.0;
      }
      continue;
    }
    const double t = f_d.activation(vc);
    if (is_q) {
      acc.value_q += t;
      dv.at(i, 0) = inside ? f_d.activation_grad(vc) * inv_n : 0.0;
    } else {
      acc.value_p += f_d.conjugate(t);
      dv.at(i, 0) =
          inside ? -f_d.conjugate_prime(t) * f_d.activation_grad(vc) * inv_n
                 : 0.0;
    }
  }
}

void add_grads(ParamGrads& into, const ParamGrads& from) {
  for (std::size_t l = 0; l < into.w.size(); ++l) {
    for (std::size_t i = 0; i < into.w[l].a.size(); ++i)
      into.w[l].a[i] += from.w[l].a[i];
    for (std::size_t i = 0; i < into.b[l].size(); ++i)
      into.b[l][i] += from.b[l][i];
  }
}

Matrix sample_data_batch(const GanConfig& cfg, RngStream& rng, int n) {
  Matrix batch(n, cfg.data_dim());
  if (const auto* m1 = std::get_if<Mixture1D>(&cfg.data)) {
    for (int i = 0; i < n; ++i) batch.at(i, 0) = m1->sample(rng);
  } else {
    const auto& m2 = std::get<Mixture2D>(cfg.data);
    for (int i = 0; i < n; ++i) {
      const auto xy = m2.sample(rng);
      batch.at(i, 0) = xy[0];
      batch.at(i, 1) = xy[1];
    }
  }
  return batch;
}

Matrix sample_latent_batch(int n, int latent_dim, RngStream& rng) {
  Matrix z(n, latent_dim);
  for (double& x : z.a) x = rng.normal();
  return z;
}

}  // namespace

GanState init_gan(const GanConfig& cfg) {
  if (cfg.batch < 2) throw std::invalid_argument("GanConfig: batch size must be >= 2");
  GanState st;
  st.rng = RngStream(cfg.seed, 0);
  MlpConfig gcfg;
  gcfg.sizes.push_back(cfg.latent_dim);
  for (int h : cfg.gen_hidden) gcfg.sizes.push_back(h);
  gcfg.sizes.push_back(cfg.data_dim());
  gcfg.hidden = cfg.gen_act;
  gcfg.leak = cfg.leak;
  gcfg.output = Output::Linear;  // data space is unbounded
  gcfg.init_std = cfg.init_std;
  st.gen = Mlp::init(gcfg, st.rng);

  MlpConfig dcfg;
  dcfg.sizes.push_back(cfg.data_dim());
  for (int h : cfg.disc_hidden) dcfg.sizes.push_back(h);
  dcfg.sizes.push_back(1);
  dcfg.hidden = cfg.disc_act;
  dcfg.leak = cfg.leak;
  dcfg.output = Output::Linear;  // raw logit V(x)
  dcfg.init_std = cfg.init_std;
  st.disc = Mlp::init(dcfg, st.rng);

  st.opt_g = AdamState::init(st.gen, cfg.adam_g);
  st.opt_d = AdamState::init(st.disc, cfg.adam_d);
  return st;
}

double discriminator_step(GanState& state, const GanConfig& cfg,
                          const Matrix& data_batch, const Matrix& model_batch) {
  const FDivergence f_d(cfg.f_d);
  Mlp::Cache cache_q, cache_p;
  const Matrix v_q = state.disc.forward(data_batch, &cache_q);
  const Matrix v_p = state.disc.forward(model_batch, &cache_p);

  DLogitGrads acc;
  Matrix dv_q, dv_p;
  disc_logit_grads(f_d, v_q, true, 1.0 / v_q.rows, dv_q, acc);
  disc_logit_grads(f_d, v_p, false, 1.0 / v_p.rows, dv_p, acc);
  const double value = acc.value_q / v_q.rows - acc.value_p / v_p.rows;
  if (!std::isfinite(value))
    throw StepRejected("discriminator_step: non-finite bound estimate");

  ParamGrads grads = state.disc.backward(cache_q, dv_q);
  const ParamGrads grads_p = state.disc.backward(cache_p, dv_p);
  add_grads(grads, grads_p);
  adam_step(state.opt_d, state.disc, grads, -1.0);  // ascend
  return value;
}

double generator_step(GanState& state, const GanConfig& cfg,
                      const Matrix& latent_batch) {
  const FDivergence f_d(cfg.f_d);
  const FDivergence f_g(cfg.f_g);
  Mlp::Cache cache_g, cache_d;
  const Matrix x = state.gen.forward(latent_batch, &cache_g);
  const Matrix v = state.disc.forward(x, &cache_d);

  double value = 0.0;
  Matrix dv(v.rows, 1);
  for (int i = 0; i < v.rows; ++i) {
    value += generator_objective_term(f_d, f_g, v.at(i, 0));
    dv.at(i, 0) = generator_objective_grad(f_d, f_g, v.at(i, 0)) / v.rows;
  }
  value /= v.rows;
  if (!std::isfinite(value))
    throw StepRejected("generator_step: non-finite objective");

  // Backprop through the frozen discriminator to get d(loss)/dx, then into
  // the generator. Discriminator parameter gradients are discarded.
  Matrix dx;
  (void)state.disc.backward(cache_d, dv, &dx);
  const ParamGrads grads = state.gen.backward(cache_g, dx);
  adam_step(state.opt_g, state.gen, grads, 1.0);  // descend
  return value;
}

Matrix sample_generator(const Mlp& gen, int latent_dim, int n, RngStream& rng) {
  const Matrix z = sample_latent_batch(n, latent_dim, rng);
  return gen.forward(z);
}

TrainResult train(const GanConfig& cfg) {
  TrainResult result;
  result.state = init_gan(cfg);
  GanState& st = result.state;

  double d_obj = 0.0, g_obj = 0.0;
  const auto log_row = [&](long step) {
    MetricRow row;
    row.step = step;
    row.d_objective = d_obj;
    row.g_objective = g_obj;
    // Evaluation uses its own stream keyed to the step so it never disturbs
    // the training stream.
    RngStream eval_rng(cfg.seed, 0xE0000000ull + static_cast<std::uint64_t>(step));
    const Matrix samples =
        sample_generator(st.gen, cfg.latent_dim, cfg.report_samples, eval_rng);
    if (const auto* m1 = std::get_if<Mixture1D>(&cfg.data)) {
      std::vector<double> xs(samples.a.begin(), samples.a.end());
      const ModeReport rep = mode_report(xs, *m1);
      row.modes_covered = rep.covered;
      row.hq_fraction = rep.hq_fraction;
      std::vector<double> kde_xs(xs.begin(),
                                 xs.begin() + std::min<std::size_t>(
                                                  cfg.kde_samples, xs.size()));
      const Mixture1D kde = kde_density(kde_xs);
      const QuadratureGrid grid = QuadratureGrid::envelope(*m1, kde, 10.0, 2001);
      row.kde_divergence = exact_divergence(
          FDivergence(DivergenceKind{DivTag::Js, 0.0}), *m1, kde, grid);
    } else {
      const ModeReport rep = mode_report(samples, std::get<Mixture2D>(cfg.data));
      row.modes_covered = rep.covered;
      row.hq_fraction = rep.hq_fraction;
      row.kde_divergence = std::numeric_limits<double>::quiet_NaN();
    }
    result.log.push_back(row);
  };

  for (long step = 1; step <= cfg.steps; ++step) {
    try {
      for (int k = 0; k < cfg.d_steps_per_g; ++k) {
        const Matrix data_batch = sample_data_batch(cfg, st.rng, cfg.batch);
        const Matrix z = sample_latent_batch(cfg.batch, cfg.latent_dim, st.rng);
        const Matrix model_batch = st.gen.forward(z);
        d_obj = discriminator_step(st, cfg, data_batch, model_batch);
      }
      const Matrix z = sample_latent_batch(cfg.batch, cfg.latent_dim, st.rng);
      g_obj = generator_step(st, cfg, z);
    } catch (const StepRejected& e) {
      result.aborted = true;
      std::ostringstream os;
      os << "step " << step << ": " << e.what();
      result.abort_message = os.str();
      break;
    }
    st.step = step;
    if (cfg.log_every > 0 &&
        (step % cfg.log_every == 0 || step == cfg.steps)) {
      log_row(step);
    }
  }
  return result;
}

double ratio_accuracy(const Mlp& disc, const FDivergence& f_d,
                      const Mixture1D& q, const Mixture1D& p,
                      const QuadratureGrid& grid) {
  Matrix xs(grid.n_points, 1);
  for (int i = 0; i < grid.n_points; ++i) xs.at(i, 0) = grid.x(i);
  const Matrix v = disc.forward(xs);
  double total = 0.0;
  long count = 0;
  for (int i = 0; i < grid.n_points; ++i) {
    const double x = grid.x(i);
    const double lq = q.log_pdf(x), lp = p.log_pdf(x);
    if (std::exp(lq) + std::exp(lp) <= 1e-4) continue;
    const double log_u = std::log(ratio_from_logit(f_d, v.at(i, 0)));
    total += std::abs(log_u - (lq - lp));
    ++count;
  }
  if (count == 0)
    throw std::domain_error("ratio_accuracy: no grid point has q + p > 1e-4");
  return total / count;
}

namespace {

ModeReport report_from_assignments(const std::vector<int>& nearest,
                                   std::size_t n_modes, std::size_t n) {
  ModeReport rep;
  rep.fractions.assign(n_modes, 0.0);
  std::size_t hq = 0;
  for (int m : nearest) {
    if (m < 0) continue;
    rep.fractions[m] += 1.0;
    ++hq;
  }
  for (double& f : rep.fractions) f /= static_cast<double>(n);
  rep.hq_fraction = static_cast<double>(hq) / static_cast<double>(n);
  for (double f : rep.fractions)
    if (f >= 0.02) ++rep.covered;
  return rep;
}

}  // namespace

ModeReport mode_report(const std::vector<double>& samples, const Mixture1D& m) {
  if (samples.size() < 1000)
    throw std::invalid_argument("mode_report: need at least 1000 samples");
  std::vector<int> nearest(samples.size(), -1);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double best = 1e300;
    int arg = -1;
    for (std::size_t k = 0; k < m.components.size(); ++k) {
      const double d = std::abs(samples[i] - m.components[k].g.mean);
      if (d < best) {
        best = d;
        arg = static_cast<int>(k);
      }
    }
    if (arg >= 0 && best <= 3.0 * m.components[arg].g.stddev) nearest[i] = arg;
  }
  return report_from_assignments(nearest, m.components.size(), samples.size());
}

ModeReport mode_report(const Matrix& samples, const Mixture2D& m) {
  if (samples.rows < 1000)
    throw std::invalid_argument("mode_report: need at least 1000 samples");
  if (samples.cols != 2)
    throw std::invalid_argument("mode_report: 2D samples required");
  std::vector<int> nearest(samples.rows, -1);
  for (int i = 0; i < samples.rows; ++i) {
    double best = 1e300;
    int arg = -1;
    for (std::size_t k = 0; k < m.components.size(); ++k) {
      const double dx = samples.at(i, 0) - m.components[k].mean[0];
      const double dy = samples.at(i, 1) - m.components[k].mean[1];
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d < best) {
        best = d;
        arg = static_cast<int>(k);
      }
    }
    if (arg >= 0 && best <= 3.0 * m.components[arg].stddev) nearest[i] = arg;
  }
  return report_from_assignments(nearest, m.components.size(),
                                 static_cast<std::size_t>(samples.rows));
}

Mixture1D kde_density(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("kde_density: need at least 2 samples");
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : samples) var += (x - mean) * (x - mean);
  var /= (n - 1);
  std::vector<double> sorted(samples);
  std::sort(sorted.begin(), sorted.end());
  const auto quantile = [&](double p) {
    const double idx = p * (n - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const double frac = idx - lo;
    return lo + 1 < n ? sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
                      : sorted[lo];
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  // Silverman's rule with the robust spread estimate.
  double spread = std::sqrt(var);
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  if (!(h > 1e-9)) h = 1e-9;  // degenerate sample sets still need stddev > 0
  std::vector<Mixture1D::Component> comps;
  comps.reserve(n);
  for (double x : sorted) comps.push_back({1.0 / n, Gaussian1D{x, h}});
  return Mixture1D(std::move(comps));
}

}  // namespace fdgan
