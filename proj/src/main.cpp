// fdgan command-line driver.
//
// Four subcommands tie the library into reproducible experiments that emit
// plot-ready CSV:
//
//   profile     tabulate f(u) per divergence            -> profiles.csv
//   fit         single-Gaussian fits to a 1D mixture    -> fits.csv, fit_curves.csv
//   train       alternating GAN training                -> metrics.csv, samples.csv,
//                                                          generator.txt, discriminator.txt
//   ratio-eval  density-ratio recovery between two      -> ratio_report.csv,
//               fixed 1D densities                         ratio_curve.csv
//
// Option precedence: flags > config file (key = value) > built-in defaults.
// The output directory comes from --out, or the FDGAN_OUT environment
// variable when the flag is absent. Every numeric cell is printed with 17
// significant digits, so equal seeds give byte-identical outputs.
//
// Exit codes: 0 success (including fits flagged as non-converged),
// 1 usage error, 2 numerical abort (partial outputs are still written).

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "fdgan/density.hpp"
#include "fdgan/fit.hpp"
#include "fdgan/gan.hpp"
#include "fdgan/nn.hpp"

namespace {

using namespace fdgan;

std::string fmt17(double x) {
  if (x == 0.0) return "0";  // avoid the distracting "-0"
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + name;
  std::ofstream out(path);
  if (!out)
    throw std::invalid_argument("cannot open output file: " + path);
  return out;
}

DivergenceKind parse_div(const std::string& name) {
  if (auto kind = DivergenceKind::parse(name)) return *kind;
  throw std::invalid_argument("unknown divergence '" + name +
                              "' (valid: " + DivergenceKind::valid_names() +
                              ")");
}

std::vector<DivergenceKind> parse_divs(const std::vector<std::string>& names) {
  if (names.empty())
    throw std::invalid_argument("at least one divergence name is required");
  std::vector<DivergenceKind> kinds;
  kinds.reserve(names.size());
  for (const auto& n : names) kinds.push_back(parse_div(n));
  return kinds;
}

// Named presets accepted anywhere a density config is expected.
//   two-gaussians: the 1D fixture, 0.5 N(-2, 0.5^2) + 0.5 N(2, 0.5^2)
//   ring8:         8 equal modes on a circle of radius 2, sigma 0.05
Mixture1D two_gaussians() {
  return Mixture1D({{0.5, {-2.0, 0.5}}, {0.5, {2.0, 0.5}}});
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read density config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Mixture1D mixture1d_arg(const std::string& spec) {
  if (spec == "two-gaussians") return two_gaussians();
  if (spec.rfind("gaussian:", 0) == 0) {
    double mean = 0.0, stddev = 1.0;
    if (std::sscanf(spec.c_str(), "gaussian:%lf,%lf", &mean, &stddev) != 2)
      throw std::invalid_argument(
          "bad density spec (want gaussian:<mean>,<stddev>): " + spec);
    return Gaussian1D{mean, stddev};
  }
  return mixture1d_from_config(read_file(spec));
}

std::variant<Mixture1D, Mixture2D> data_arg(const std::string& spec) {
  if (spec == "ring8") return Mixture2D::ring(8, 2.0, 0.05);
  if (spec != "two-gaussians" && spec.rfind("gaussian:", 0) != 0) {
    const std::string text = read_file(spec);
    if (text.find("mixture2d") != std::string::npos)
      return mixture2d_from_config(text);
    return mixture1d_from_config(text);
  }
  return mixture1d_arg(spec);
}

// ---------------------------------------------------------------------------
// profile

int cmd_profile(const std::vector<std::string>& div_names, double u_min,
                double u_max, int points, const std::string& out_dir) {
  if (!(0.0 < u_min && u_min < u_max))
    throw std::invalid_argument("need 0 < u-min < u-max");
  if (points < 2) throw std::invalid_argument("need at least 2 grid points");
  const auto kinds = parse_divs(div_names);
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i)
    grid[i] = u_min + (u_max - u_min) * i / (points - 1);

  auto out = open_out(out_dir, "profiles.csv");
  out << "divergence,u,f\n";
  for (const auto& kind : kinds) {
    const FDivergence f(kind);
    for (const auto& [u, fu] : divergence_profile(f, grid))
      out << kind.name() << ',' << fmt17(u) << ',' << fmt17(fu) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// fit

int cmd_fit(const std::string& mix_spec,
            const std::vector<std::string>& div_names, int max_iters,
            int grid_points, const std::string& out_dir) {
  const Mixture1D q = mixture1d_arg(mix_spec);
  const auto kinds = parse_divs(div_names);
  FitOptions opts;
  opts.max_iters = max_iters;
  opts.grid_points = grid_points;

  std::vector<FitResult> fits;
  fits.reserve(kinds.size());
  for (const auto& kind : kinds)
    fits.push_back(fit_gaussian(FDivergence(kind), q, opts));

  auto table = open_out(out_dir, "fits.csv");
  table << "divergence,mu,sigma,value,converged,n_restarts_used\n";
  for (const auto& r : fits)
    table << r.kind.name() << ',' << fmt17(r.mu) << ',' << fmt17(r.sigma)
          << ',' << fmt17(r.value) << ',' << (r.converged ? 1 : 0) << ','
          << r.n_restarts_used << '\n';

  // Density curves for the Figure-style plot: the data mixture plus each
  // fitted Gaussian, long-form (curve, x, density).
  double lo = q.min_mean() - 6.0 * q.max_stddev();
  double hi = q.max_mean() + 6.0 * q.max_stddev();
  for (const auto& r : fits) {
    lo = std::min(lo, r.mu - 6.0 * r.sigma);
    hi = std::max(hi, r.mu + 6.0 * r.sigma);
  }
  const int n = 801;
  auto curves = open_out(out_dir, "fit_curves.csv");
  curves << "curve,x,density\n";
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    curves << "data," << fmt17(x) << ',' << fmt17(q.pdf(x)) << '\n';
  }
  for (const auto& r : fits) {
    const Gaussian1D g{r.mu, r.sigma};
    for (int i = 0; i < n; ++i) {
      const double x = lo + (hi - lo) * i / (n - 1);
      curves << r.kind.name() << ',' << fmt17(x) << ',' << fmt17(g.pdf(x))
             << '\n';
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const GanConfig& cfg, const std::string& out_dir) {
  TrainResult res = train(cfg);

  auto metrics = open_out(out_dir, "metrics.csv");
  metrics << "step,d_objective,g_objective,modes_covered,hq_fraction,"
             "kde_divergence\n";
  for (const auto& row : res.log)
    metrics << row.step << ',' << fmt17(row.d_objective) << ','
            << fmt17(row.g_objective) << ',' << row.modes_covered << ','
            << fmt17(row.hq_fraction) << ',' << fmt17(row.kde_divergence)
            << '\n';

  // Final sample dump (its own stream, so it never perturbs training RNG).
  RngStream sample_rng(cfg.seed, 0xD0000000ull);
  const Matrix xs =
      sample_generator(res.state.gen, cfg.latent_dim, 10000, sample_rng);
  auto samples = open_out(out_dir, "samples.csv");
  samples << (cfg.data_dim() == 2 ? "x,y\n" : "x\n");
  for (int i = 0; i < xs.rows; ++i) {
    samples << fmt17(xs.at(i, 0));
    for (int j = 1; j < xs.cols; ++j) samples << ',' << fmt17(xs.at(i, j));
    samples << '\n';
  }

  open_out(out_dir, "generator.txt") << res.state.gen.save_text();
  open_out(out_dir, "discriminator.txt") << res.state.disc.save_text();

  if (res.aborted) {
    std::fprintf(stderr, "numerical abort: %s\n", res.abort_message.c_str());
    return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// ratio-eval

int cmd_ratio_eval(const std::string& q_spec, const std::string& p_spec,
                   long steps, int batch, double lr, bool no_decay,
                   std::uint64_t seed, int grid_points,
                   const std::string& out_dir) {
  const Mixture1D q = mixture1d_arg(q_spec);
  const Mixture1D p = mixture1d_arg(p_spec);

  GanConfig cfg;  // only the discriminator side of the config is used
  cfg.batch = batch;
  cfg.adam_d.lr = lr;
  cfg.adam_d.decay_steps = no_decay ? 0 : steps;

  GanState st;
  st.rng = RngStream(seed, 0);
  st.disc = Mlp::init(
      MlpConfig{{1, 32, 32, 1}, Hidden::LeakyRelu, 0.1, Output::Linear, 0.01},
      st.rng);
  st.opt_d = AdamState::init(st.disc, cfg.adam_d);

  std::vector<double> draw;
  Matrix xq(batch, 1), xp(batch, 1);
  for (long t = 0; t < steps; ++t) {
    q.sample(st.rng, static_cast<std::size_t>(batch), draw);
    for (int i = 0; i < batch; ++i) xq.at(i, 0) = draw[i];
    p.sample(st.rng, static_cast<std::size_t>(batch), draw);
    for (int i = 0; i < batch; ++i) xp.at(i, 0) = draw[i];
    discriminator_step(st, cfg, xq, xp);
  }

  const FDivergence f_d(cfg.f_d);
  const QuadratureGrid grid = QuadratureGrid::envelope(q, p, 10.0, grid_points);
  const double err = ratio_accuracy(st.disc, f_d, q, p, grid);

  // Clamp-fraction statistic over the same high-density region: how often
  // ratio_from_logit had to clamp (logit beyond +/-30 or ratio at a bound).
  Matrix gx(grid.n_points, 1);
  for (int i = 0; i < grid.n_points; ++i) gx.at(i, 0) = grid.x(i);
  const Matrix v = st.disc.forward(gx);
  long n_region = 0, n_clamped = 0;
  auto curve = open_out(out_dir, "ratio_curve.csv");
  curve << "x,v,log_ratio_est,log_ratio_true,in_region\n";
  for (int i = 0; i < grid.n_points; ++i) {
    const double x = grid.x(i);
    const bool in_region = q.pdf(x) + p.pdf(x) > 1e-4;
    const double u_hat = ratio_from_logit(f_d, v.at(i, 0));
    if (in_region) {
      ++n_region;
      const bool clamped = std::abs(v.at(i, 0)) >= FDivergence::kLogitClamp ||
                           u_hat <= f_d.u_min() || u_hat >= f_d.u_max();
      n_clamped += clamped ? 1 : 0;
    }
    curve << fmt17(x) << ',' << fmt17(v.at(i, 0)) << ',' << fmt17(std::log(u_hat))
          << ',' << fmt17(q.log_pdf(x) - p.log_pdf(x)) << ','
          << (in_region ? 1 : 0) << '\n';
  }

  auto report = open_out(out_dir, "ratio_report.csv");
  report << "mean_abs_log_ratio_error,clamp_fraction,n_region,steps\n";
  report << fmt17(err) << ','
         << fmt17(n_region ? static_cast<double>(n_clamped) / n_region : 0.0)
         << ',' << n_region << ',' << steps << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// Config-file expansion.
//
// Each subcommand accepts --config FILE holding plain `key = value` lines
// (# starts a comment, `key = true` switches a flag on). The file is expanded
// into ordinary --key tokens inserted right after the subcommand name,
// skipping any key the command line already sets, so flags always win and
// list-valued options are never concatenated across the two sources. (CLI11
// only processes set_config on the top-level app, not on subcommands, hence
// the manual expansion ahead of parsing.)

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> config_tokens(const std::string& path,
                                       const std::vector<std::string>& given) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file: " + path);
  const auto already_given = [&](const std::string& flag) {
    for (const auto& tok : given)
      if (tok == flag || tok.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string key = eq == std::string::npos ? "" : trim(line.substr(0, eq));
    const std::string value = eq == std::string::npos ? "" : trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string flag = "--" + key;
    if (already_given(flag)) continue;  // flags take precedence
    if (value == "true") {
      out.push_back(flag);  // bare switch, e.g. no-decay = true
    } else if (value != "false") {
      out.push_back(flag);
      out.push_back(value);
    }
  }
  return out;
}

// argv without the program name, with any --config file expanded in place.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size())
        throw std::invalid_argument("--config needs a file argument");
      path = args[i + 1];
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      break;
    }
  }
  if (path.empty()) return args;

  // The subcommand is the first token that is neither an option nor the
  // value of the top-level --out; injected tokens go right after it.
  std::size_t sub = 0;
  while (sub < args.size()) {
    if (args[sub] == "--out") {
      sub += 2;
      continue;
    }
    if (args[sub].rfind('-', 0) == 0) {
      ++sub;
      continue;
    }
    break;
  }
  sub = std::min(sub + 1, args.size());
  const std::vector<std::string> extra = config_tokens(path, args);
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub), extra.begin(),
              extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"f-divergence GAN toolbox: density-ratio estimation and "
               "approximate divergence minimization on analytic densities"};
  app.require_subcommand(1);
  app.fallthrough();  // accept --out after the subcommand name too

  std::string out_dir = ".";
  app.add_option("--out", out_dir, "Output directory")
      ->envname("FDGAN_OUT")
      ->capture_default_str();
  // Registered per subcommand for --help; the file itself is expanded into
  // tokens by expand_config before parsing.
  std::string config_file;
  const char* config_help = "Options from an ini file (key = value; flags win)";

  // profile ------------------------------------------------------------
  auto* profile = app.add_subcommand("profile", "Tabulate f(u) per divergence");
  std::vector<std::string> prof_divs{"gan-alt", "rkl", "js", "kl"};
  double u_min = 0.01, u_max = 10.0;
  int prof_points = 400;
  profile->add_option("--config", config_file, config_help);
  profile->add_option("--div", prof_divs, "Divergences (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  profile->add_option("--u-min", u_min, "Grid start")->capture_default_str();
  profile->add_option("--u-max", u_max, "Grid end")->capture_default_str();
  profile->add_option("--points", prof_points, "Grid size")
      ->capture_default_str();

  // fit ----------------------------------------------------------------
  auto* fit = app.add_subcommand(
      "fit", "Fit a single Gaussian to a mixture per divergence");
  std::string fit_mix = "two-gaussians";
  std::vector<std::string> fit_divs{"gan-alt", "rkl", "js", "kl"};
  int fit_iters = 2000, fit_grid = 20001;
  fit->add_option("--config", config_file, config_help);
  fit->add_option("--mix", fit_mix,
                  "Mixture: preset name, gaussian:<m>,<s>, or config file")
      ->capture_default_str();
  fit->add_option("--div", fit_divs, "Divergences (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  fit->add_option("--max-iters", fit_iters, "Nelder-Mead iteration cap")
      ->capture_default_str();
  fit->add_option("--grid-points", fit_grid, "Quadrature resolution")
      ->capture_default_str();

  // train ----------------------------------------------------------------
  auto* train_cmd =
      app.add_subcommand("train", "Alternating GAN training on a toy density");
  std::string data_spec = "two-gaussians";
  std::string fd_name = "gan-js", fg_name = "gan-alt";
  GanConfig base;  // library defaults; flags override
  long steps = base.steps, log_every = base.log_every;
  long decay_g = 0, decay_d = 0;
  std::uint64_t seed = base.seed;
  int batch = base.batch, latent = base.latent_dim, k_d = base.d_steps_per_g;
  double lr_g = base.adam_g.lr, lr_d = base.adam_d.lr;
  double beta1 = base.adam_g.beta1, beta2 = base.adam_g.beta2;
  double init_std = base.init_std;
  std::vector<int> g_hidden = base.gen_hidden, d_hidden = base.disc_hidden;
  train_cmd->add_option("--config", config_file, config_help);
  train_cmd->add_option("--data", data_spec,
                        "Dataset: two-gaussians, ring8, or config file")
      ->capture_default_str();
  train_cmd->add_option("--fd", fd_name, "Discriminator divergence f_D")
      ->capture_default_str();
  train_cmd->add_option("--fg", fg_name, "Generator divergence f_G")
      ->capture_default_str();
  train_cmd->add_option("--steps", steps, "Training alternations")
      ->capture_default_str();
  train_cmd->add_option("--seed", seed, "RNG seed")->capture_default_str();
  train_cmd->add_option("--batch", batch, "Batch size")->capture_default_str();
  train_cmd->add_option("--latent", latent, "Latent dimension")
      ->capture_default_str();
  train_cmd->add_option("--g-hidden", g_hidden, "Generator hidden sizes")
      ->delimiter(',')
      ->capture_default_str();
  train_cmd->add_option("--d-hidden", d_hidden, "Discriminator hidden sizes")
      ->delimiter(',')
      ->capture_default_str();
  train_cmd->add_option("--lr-g", lr_g, "Generator Adam step size")
      ->capture_default_str();
  train_cmd->add_option("--lr-d", lr_d, "Discriminator Adam step size")
      ->capture_default_str();
  train_cmd->add_option("--lr-decay-g", decay_g,
                        "Linear lr decay horizon for G (0 = none)")
      ->capture_default_str();
  train_cmd->add_option("--lr-decay-d", decay_d,
                        "Linear lr decay horizon for D (0 = none)")
      ->capture_default_str();
  train_cmd->add_option("--beta1", beta1, "Adam beta1 (both nets)")
      ->capture_default_str();
  train_cmd->add_option("--beta2", beta2, "Adam beta2 (both nets)")
      ->capture_default_str();
  train_cmd->add_option("--init-std", init_std, "Weight init stddev")
      ->capture_default_str();
  train_cmd->add_option("--k-d", k_d, "Discriminator steps per generator step")
      ->capture_default_str();
  train_cmd->add_option("--log-every", log_every, "Metric logging period")
      ->capture_default_str();

  // ratio-eval ---------------------------------------------------------
  auto* ratio = app.add_subcommand(
      "ratio-eval", "Train a discriminator between two fixed 1D densities "
                    "and report log-ratio recovery accuracy");
  std::string q_spec = "gaussian:0.5,1", p_spec = "gaussian:-0.5,1";
  long r_steps = 5000;
  int r_batch = 1024, r_grid = 2001;
  double r_lr = 0.01;
  bool r_no_decay = false;
  std::uint64_t r_seed = 1;
  ratio->add_option("--config", config_file, config_help);
  ratio->add_option("--q", q_spec, "Data density")->capture_default_str();
  ratio->add_option("--p", p_spec, "Model density")->capture_default_str();
  ratio->add_option("--steps", r_steps, "Training steps")
      ->capture_default_str();
  ratio->add_option("--batch", r_batch, "Batch size")->capture_default_str();
  ratio->add_option("--lr", r_lr, "Adam step size")->capture_default_str();
  ratio->add_flag("--no-decay", r_no_decay, "Disable linear lr decay");
  ratio->add_option("--seed", r_seed, "RNG seed")->capture_default_str();
  ratio->add_option("--grid-points", r_grid, "Evaluation grid resolution")
      ->capture_default_str();

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::reverse(args.begin(), args.end());  // the vector overload pops from the back
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*profile)
      return cmd_profile(prof_divs, u_min, u_max, prof_points, out_dir);
    if (*fit) return cmd_fit(fit_mix, fit_divs, fit_iters, fit_grid, out_dir);
    if (*train_cmd) {
      GanConfig cfg = base;
      cfg.f_d = parse_div(fd_name);
      cfg.f_g = parse_div(fg_name);
      cfg.data = data_arg(data_spec);
      cfg.steps = steps;
      cfg.seed = seed;
      cfg.batch = batch;
      cfg.latent_dim = latent;
      cfg.gen_hidden = g_hidden;
      cfg.disc_hidden = d_hidden;
      cfg.adam_g.lr = lr_g;
      cfg.adam_d.lr = lr_d;
      cfg.adam_g.decay_steps = decay_g;
      cfg.adam_d.decay_steps = decay_d;
      cfg.adam_g.beta1 = cfg.adam_d.beta1 = beta1;
      cfg.adam_g.beta2 = cfg.adam_d.beta2 = beta2;
      cfg.init_std = init_std;
      cfg.d_steps_per_g = k_d;
      cfg.log_every = log_every;
      return cmd_train(cfg, out_dir);
    }
    if (*ratio)
      return cmd_ratio_eval(q_spec, p_spec, r_steps, r_batch, r_lr, r_no_decay,
                            r_seed, r_grid, out_dir);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 2;
  }
  return 1;
}
