#pragma once
// Alternating GAN training as density-ratio estimation.
//
// Each alternation takes one (or k) discriminator ascent steps on the
// variational bound E_q[T] - E_p[f_D*(T)] with T = g_f(V(x)), then one
// generator descent step on the recovered-ratio objective
// mean_z f_G((f_D')^{-1}(g_f(V(G(z))))) with the discriminator frozen.
//
// Evaluation helpers quantify what training achieved: ratio_accuracy checks
// the recovered log ratio against the analytic one, mode_report counts which
// mixture modes receive generated samples.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fdgan/density.hpp"
#include "fdgan/fdiv.hpp"
#include "fdgan/nn.hpp"

namespace fdgan {

struct GanConfig {
  DivergenceKind f_d{DivTag::GanJs, 0.0};
  DivergenceKind f_g{DivTag::GanAlt, 0.0};
  int latent_dim = 2;
  std::vector<int> gen_hidden{32, 32};
  std::vector<int> disc_hidden{32, 32};
  Hidden gen_act = Hidden::Tanh;
  Hidden disc_act = Hidden::LeakyRelu;
  double leak = 0.1;
  double init_std = 0.01;
  int batch = 128;
  AdamConfig adam_g;  // Adam(1e-4, 0.5, 0.999) defaults
  AdamConfig adam_d;
  long steps = 20000;
  std::uint64_t seed = 1;
  int d_steps_per_g = 1;  // k discriminator steps per generator step
  std::variant<Mixture1D, Mixture2D> data = Mixture1D(Gaussian1D{0.0, 1.0});
  long log_every = 500;
  int report_samples = 4096;  // generator draws per mode report
  int kde_samples = 256;      // draws for the 1D KDE diagnostic

  int data_dim() const { return std::holds_alternative<Mixture2D>(data) ? 2 : 1; }
};

struct GanState {
  Mlp gen;
  Mlp disc;
  AdamState opt_g;
  AdamState opt_d;
  long step = 0;  // alternations performed
  RngStream rng;  // training stream (data batches, latents)

  GanState() : rng(0) {}
};

struct ModeReport {
  std::vector<double> fractions;  // per-mode share of samples within 3 sigma
  int covered = 0;                // modes with fraction >= 2%
  double hq_fraction = 0.0;       // samples within 3 sigma of some mode
};

struct MetricRow {
  long step = 0;
  double d_objective = 0.0;
  double g_objective = 0.0;
  int modes_covered = 0;
  double hq_fraction = 0.0;
  double kde_divergence = 0.0;  // NaN for 2D data (quadrature is 1D only)
};

struct TrainResult {
  GanState state;
  std::vector<MetricRow> log;
  bool aborted = false;
  std::string abort_message;
};

// Fresh state: generator [latent, hidden..., data_dim], discriminator
// [data_dim, hidden..., 1], both initialized from the seed's train stream.
GanState init_gan(const GanConfig& cfg);

// One Adam ascent step on the bound estimate; returns the pre-step value.
// Throws StepRejected on a non-finite loss or gradient.
double discriminator_step(GanState& state, const GanConfig& cfg,
                          const Matrix& data_batch, const Matrix& model_batch);

// One Adam descent step on the generator objective (discriminator frozen);
// returns the pre-step objective value.
double generator_step(GanState& state, const GanConfig& cfg,
                      const Matrix& latent_batch);

// Full alternation loop with periodic metric logging. A rejected step aborts
// training but preserves the metric log collected so far.
TrainResult train(const GanConfig& cfg);

// Mean |log u_hat(x) - log(q(x)/p(x))| over grid points with q+p > 1e-4,
// where u_hat = ratio_from_logit(f_d, V(x)). Throws std::domain_error if no
// grid point clears the density threshold.
double ratio_accuracy(const Mlp& disc, const FDivergence& f_d,
                      const Mixture1D& q, const Mixture1D& p,
                      const QuadratureGrid& grid);

// Nearest-mode assignment within 3 sigma; a mode counts as covered when it
// receives at least 2% of the samples. Requires >= 1000 samples.
ModeReport mode_report(const std::vector<double>& samples, const Mixture1D& m);
ModeReport mode_report(const Matrix& samples, const Mixture2D& m);

// n generator draws (rows) using the given stream.
Matrix sample_generator(const Mlp& gen, int latent_dim, int n, RngStream& rng);

// Gaussian KDE of 1D samples with Silverman's bandwidth, as a mixture usable
// by the quadrature oracle. Diagnostic only, never used for training.
Mixture1D kde_density(const std::vector<double>& samples);

}  // namespace fdgan
