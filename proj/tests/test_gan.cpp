// Training loop mechanics and evaluation helpers: the all-zero saddle, the
// closed-form value -log 4 of an uninformative discriminator, the exact
// reduction of the gan-alt generator objective to softplus(-v), frozen-player
// invariants, ratio recovery against analytic log ratios, mode reports with
// hand-counted fractions, seeded determinism, and abort semantics.
//
// The saddle check exploits the network structure: with every weight and
// bias at zero, all activations vanish, so both players' parameter gradients
// are exactly zero and one step of either leaves the system in place.
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <variant>
#include <vector>

#include "doctest.h"
#include "fdgan/density.hpp"
#include "fdgan/fdiv.hpp"
#include "fdgan/gan.hpp"
#include "fdgan/nn.hpp"
#include "fdgan/rng.hpp"

using namespace fdgan;

namespace {

const double kLog2 = std::log(2.0);

Mixture1D two_gaussians() {
  return Mixture1D({{0.5, {-2.0, 0.5}}, {0.5, {2.0, 0.5}}});
}

GanConfig small_config() {
  GanConfig cfg;
  cfg.data = two_gaussians();
  cfg.latent_dim = 1;
  cfg.gen_hidden = {8};
  cfg.disc_hidden = {8};
  cfg.batch = 32;
  cfg.steps = 40;
  cfg.log_every = 20;
  cfg.seed = 7;
  return cfg;
}

void zero_params(Mlp& net) {
  for (auto& w : net.weights())
    for (double& x : w.a) x = 0.0;
  for (auto& b : net.biases())
    for (double& x : b) x = 0.0;
}

}  // namespace

TEST_SUITE_BEGIN("gan");

// ---------------------------------------------------------------------------
//  Step mechanics
// ---------------------------------------------------------------------------

TEST_CASE("all-zero parameters are a mutual fixed point") {
  GanConfig cfg = small_config();
  GanState st = init_gan(cfg);
  zero_params(st.gen);
  zero_params(st.disc);
  const Mlp gen_before = st.gen;
  const Mlp disc_before = st.disc;

  RngStream rng(1, 1);
  Matrix data(cfg.batch, 1), latent(cfg.batch, cfg.latent_dim);
  for (double& x : data.a) x = rng.normal(0.0, 2.0);
  for (double& x : latent.a) x = rng.normal();

  // V == 0 everywhere: T = -softplus(0) = -log 2 on both populations, so the
  // bound estimate is -log 4, and the zero weight matrices pass no gradient.
  const Matrix model = st.gen.forward(latent);
  const double d_value = discriminator_step(st, cfg, data, model);
  CHECK(d_value == doctest::Approx(-2.0 * kLog2).epsilon(1e-15));
  CHECK(st.disc.params_equal(disc_before));

  // Generator objective at u = 1: f_G(1) = softplus(0) = log 2 for gan-alt.
  const double g_value = generator_step(st, cfg, latent);
  CHECK(g_value == doctest::Approx(kLog2).epsilon(1e-15));
  CHECK(st.gen.params_equal(gen_before));
}

TEST_CASE("gan-alt generator objective is exactly softplus(-v)") {
  const FDivergence f_d({DivTag::GanJs, 0.0});
  const FDivergence f_g({DivTag::GanAlt, 0.0});
  RngStream rng(2);
  for (int i = 0; i < 200; ++i) {
    const double v = rng.uniform(-29.9, 29.9);
    CHECK(generator_objective_term(f_d, f_g, v) == softplus(-v));
    CHECK(generator_objective_grad(f_d, f_g, v) == -sigmoid(-v));
  }
  // Outside the logit clamp the objective saturates and the gradient is cut.
  CHECK(generator_objective_term(f_d, f_g, 100.0) == softplus(-30.0));
  CHECK(generator_objective_grad(f_d, f_g, 100.0) == 0.0);
}

TEST_CASE("each step leaves the frozen player untouched") {
  GanConfig cfg = small_config();
  GanState st = init_gan(cfg);
  RngStream rng(3, 2);
  Matrix data(cfg.batch, 1), latent(cfg.batch, cfg.latent_dim);
  for (double& x : data.a) x = rng.normal(0.0, 2.0);
  for (double& x : latent.a) x = rng.normal();

  const Mlp gen_before = st.gen;
  const Matrix model = st.gen.forward(latent);
  discriminator_step(st, cfg, data, model);
  CHECK(st.gen.params_equal(gen_before));
  CHECK(st.opt_g.t == 0);
  CHECK(st.opt_d.t == 1);
  CHECK_FALSE(st.disc.params_equal(init_gan(cfg).disc));

  const Mlp disc_after_d = st.disc;
  generator_step(st, cfg, latent);
  CHECK(st.disc.params_equal(disc_after_d));
  CHECK(st.opt_d.t == 1);
  CHECK(st.opt_g.t == 1);
  CHECK_FALSE(st.gen.params_equal(gen_before));
}

TEST_CASE("batch size below 2 is rejected") {
  GanConfig cfg = small_config();
  cfg.batch = 1;
  CHECK_THROWS_AS(init_gan(cfg), std::invalid_argument);
}

// ---------------------------------------------------------------------------
//  Evaluation helpers
// ---------------------------------------------------------------------------

TEST_CASE("ratio_accuracy recovers an analytic log ratio exactly") {
  // V(x) = x via a 1x1 identity network; with f_D = gan-js the recovered
  // ratio is e^x, and q = N(0.5, 1) against p = N(-0.5, 1) has
  // log q/p = x, so the mean absolute error is pure roundoff.
  MlpConfig mcfg;
  mcfg.sizes = {1, 1};
  RngStream rng(4);
  Mlp disc = Mlp::init(mcfg, rng);
  disc.weights()[0].at(0, 0) = 1.0;
  disc.biases()[0][0] = 0.0;

  const Mixture1D q(Gaussian1D{0.5, 1.0});
  const Mixture1D p(Gaussian1D{-0.5, 1.0});
  const QuadratureGrid grid = QuadratureGrid::envelope(q, p);
  const FDivergence f_d({DivTag::GanJs, 0.0});
  CHECK(ratio_accuracy(disc, f_d, q, p, grid) < 1e-12);

  SUBCASE("zero discriminator against equal densities is exact") {
    zero_params(disc);
    CHECK(ratio_accuracy(disc, f_d, q, q, grid) == 0.0);
  }

  SUBCASE("throws when no grid point clears the density threshold") {
    const QuadratureGrid far{100.0, 101.0, 1001};
    CHECK_THROWS_AS(ratio_accuracy(disc, f_d, q, p, far), std::domain_error);
  }
}

TEST_CASE("mode_report counts hand-built 1D assignments") {
  const Mixture1D m = two_gaussians();  // modes at -2 and 2, 3 sigma = 1.5
  std::vector<double> xs;
  xs.insert(xs.end(), 700, -2.0);
  xs.insert(xs.end(), 290, 2.1);
  xs.insert(xs.end(), 10, 50.0);  // beyond 3 sigma of every mode
  const ModeReport rep = mode_report(xs, m);
  REQUIRE(rep.fractions.size() == 2);
  CHECK(rep.fractions[0] == 0.7);
  CHECK(rep.fractions[1] == 0.29);
  CHECK(rep.covered == 2);
  CHECK(rep.hq_fraction == 0.99);

  SUBCASE("coverage threshold is inclusive at 2%") {
    std::vector<double> ys;
    ys.insert(ys.end(), 980, -2.0);
    ys.insert(ys.end(), 20, 2.0);
    CHECK(mode_report(ys, m).covered == 2);
    ys[999] = -2.0;  // 19 samples -> 1.9% < 2%
    CHECK(mode_report(ys, m).covered == 1);
  }

  SUBCASE("fewer than 1000 samples is rejected") {
    CHECK_THROWS_AS(mode_report(std::vector<double>(999, 0.0), m),
                    std::invalid_argument);
  }
}

TEST_CASE("mode_report assigns 2D ring samples to their components") {
  const Mixture2D ring = Mixture2D::ring(8, 2.0, 0.05);
  Matrix xs(1024, 2);
  for (int i = 0; i < 1000; ++i) {
    const auto& c = ring.components[i % 8];
    xs.at(i, 0) = c.mean[0];
    xs.at(i, 1) = c.mean[1];
  }
  for (int i = 1000; i < 1024; ++i) {
    xs.at(i, 0) = 0.0;  // origin: 2.0 away from every center, > 3 sigma
    xs.at(i, 1) = 0.0;
  }
  const ModeReport rep = mode_report(xs, ring);
  CHECK(rep.covered == 8);
  CHECK(rep.hq_fraction == doctest::Approx(1000.0 / 1024.0).epsilon(1e-15));
  for (double f : rep.fractions)
    CHECK(f == doctest::Approx(125.0 / 1024.0).epsilon(1e-15));

  CHECK_THROWS_AS(mode_report(Matrix(1024, 1), ring), std::invalid_argument);
  CHECK_THROWS_AS(mode_report(Matrix(999, 2), ring), std::invalid_argument);
}

TEST_CASE("kde_density applies Silverman's bandwidth") {
  std::vector<double> xs;
  for (int i = 0; i < 10; ++i) xs.push_back(static_cast<double>(i));
  const Mixture1D kde = kde_density(xs);
  REQUIRE(kde.components.size() == 10);
  // sd = sqrt(82.5/9) ~ 3.028 < iqr/1.34 = 4.5/1.34, so the sd wins.
  const double h = 0.9 * std::sqrt(82.5 / 9.0) * std::pow(10.0, -0.2);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(kde.components[i].weight == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(kde.components[i].g.mean == static_cast<double>(i));
    CHECK(kde.components[i].g.stddev == doctest::Approx(h).epsilon(1e-13));
  }
  const QuadratureGrid grid = QuadratureGrid::envelope(kde, kde);
  CHECK(simpson(grid, [&](double x) { return kde.pdf(x); }) ==
        doctest::Approx(1.0).epsilon(1e-8));

  CHECK_THROWS_AS(kde_density({1.0}), std::invalid_argument);
}

TEST_CASE("sample_generator is a pure function of its stream") {
  GanConfig cfg = small_config();
  const GanState st = init_gan(cfg);
  RngStream r1(9, 5), r2(9, 5), r3(9, 6);
  const Matrix a = sample_generator(st.gen, cfg.latent_dim, 64, r1);
  const Matrix b = sample_generator(st.gen, cfg.latent_dim, 64, r2);
  const Matrix c = sample_generator(st.gen, cfg.latent_dim, 64, r3);
  CHECK(a.a == b.a);
  CHECK(a.a != c.a);
}

// ---------------------------------------------------------------------------
//  Training loop
// ---------------------------------------------------------------------------

TEST_CASE("zero steps returns the initial state with an empty log") {
  GanConfig cfg = small_config();
  cfg.steps = 0;
  const TrainResult res = train(cfg);
  CHECK(res.log.empty());
  CHECK_FALSE(res.aborted);
  CHECK(res.state.step == 0);
  CHECK(res.state.gen.params_equal(init_gan(cfg).gen));
}

TEST_CASE("training is bitwise deterministic in the seed") {
  const GanConfig cfg = small_config();
  const TrainResult a = train(cfg);
  const TrainResult b = train(cfg);
  CHECK(a.state.gen.params_equal(b.state.gen));
  CHECK(a.state.disc.params_equal(b.state.disc));
  REQUIRE(a.log.size() == b.log.size());
  REQUIRE(a.log.size() == 2);  // steps 20 and 40
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].step == b.log[i].step);
    CHECK(a.log[i].d_objective == b.log[i].d_objective);
    CHECK(a.log[i].g_objective == b.log[i].g_objective);
    CHECK(a.log[i].modes_covered == b.log[i].modes_covered);
    CHECK(a.log[i].hq_fraction == b.log[i].hq_fraction);
    CHECK(a.log[i].kde_divergence == b.log[i].kde_divergence);
  }

  GanConfig other = cfg;
  other.seed = 8;
  CHECK_FALSE(train(other).state.gen.params_equal(a.state.gen));
}

TEST_CASE("a rejected step aborts cleanly instead of throwing") {
  GanConfig cfg = small_config();
  cfg.init_std = 1e160;  // overflow meets sign-mixed infinities -> NaN logits
  cfg.steps = 5;
  cfg.log_every = 1;
  const TrainResult res = train(cfg);
  CHECK(res.aborted);
  CHECK(res.abort_message.find("step 1:") != std::string::npos);
  CHECK(res.abort_message.find("non-finite") != std::string::npos);
  CHECK(res.state.step == 0);
  CHECK(res.log.empty());
}

TEST_SUITE_END();
