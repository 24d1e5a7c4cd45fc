// End-to-end checks of the command-line driver: CSV schemas and row counts,
// byte-identical reruns under a fixed seed, exit codes (0 success, 1 usage,
// 2 numerical abort with partial outputs), the valid-name listing on a bad
// divergence, zero-step training, config-file precedence, and the FDGAN_OUT
// fallback. Every case shells out to the real binary (FDGAN_CLI_PATH) and
// inspects only what a user would see: files and exit codes.
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const char* kCli = FDGAN_CLI_PATH;

// Fresh per-case directory under the system temp root.
fs::path test_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fdgan_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const fs::path& stderr_to = {}) {
  std::string cmd = std::string(kCli) + " " + args;
  if (!stderr_to.empty()) cmd += " 2> " + stderr_to.string();
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file: " << p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("profile emits the tabulated grid") {
  const fs::path dir = test_dir("profile");
  CHECK(run("profile --div kl,rkl --u-min 0.5 --u-max 2 --points 4 --out " +
            dir.string()) == 0);
  const auto rows = lines(slurp(dir / "profiles.csv"));
  REQUIRE(rows.size() == 9);  // header + 2 divergences x 4 points
  CHECK(rows[0] == "divergence,u,f");
  const auto first = fields(rows[1]);
  REQUIRE(first.size() == 3);
  CHECK(first[0] == "kl");
  CHECK(std::strtod(first[1].c_str(), nullptr) == 0.5);
  // f_kl(0.5) = 0.5 ln 0.5
  CHECK(std::strtod(first[2].c_str(), nullptr) ==
        doctest::Approx(0.5 * std::log(0.5)).epsilon(1e-15));
  CHECK(fields(rows[5])[0] == "rkl");
}

TEST_CASE("fit recovers a single Gaussian and writes both tables") {
  const fs::path dir = test_dir("fit");
  CHECK(run("fit --mix gaussian:0.25,1.5 --div rkl --grid-points 2001 --out " +
            dir.string()) == 0);
  const auto rows = lines(slurp(dir / "fits.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "divergence,mu,sigma,value,converged,n_restarts_used");
  const auto r = fields(rows[1]);
  REQUIRE(r.size() == 6);
  CHECK(r[0] == "rkl");
  // Fitting a Gaussian to itself: the optimum is the target, value ~ 0.
  CHECK(std::strtod(r[1].c_str(), nullptr) == doctest::Approx(0.25).epsilon(1e-3));
  CHECK(std::strtod(r[2].c_str(), nullptr) == doctest::Approx(1.5).epsilon(1e-3));
  CHECK(std::abs(std::strtod(r[3].c_str(), nullptr)) < 1e-6);
  CHECK(r[4] == "1");
  CHECK(r[5] == "2");  // moment start + one component start

  const auto curves = lines(slurp(dir / "fit_curves.csv"));
  CHECK(curves[0] == "curve,x,density");
  CHECK(curves.size() == 1 + 2 * 801);  // data curve + one fitted curve
}

TEST_CASE("train writes metrics, samples, and checkpoints deterministically") {
  const std::string common =
      "train --data two-gaussians --steps 30 --log-every 10 --batch 16 "
      "--g-hidden 8 --d-hidden 8 --seed 11 --out ";
  const fs::path a = test_dir("train_a"), b = test_dir("train_b");
  CHECK(run(common + a.string()) == 0);
  CHECK(run(common + b.string()) == 0);
  for (const char* name :
       {"metrics.csv", "samples.csv", "generator.txt", "discriminator.txt"})
    CHECK(slurp(a / name) == slurp(b / name));

  const auto rows = lines(slurp(a / "metrics.csv"));
  REQUIRE(rows.size() == 4);  // header + steps 10, 20, 30
  CHECK(rows[0] ==
        "step,d_objective,g_objective,modes_covered,hq_fraction,"
        "kde_divergence");
  CHECK(fields(rows[3])[0] == "30");
  CHECK(lines(slurp(a / "samples.csv")).size() == 10001);

  SUBCASE("a different seed changes the bytes") {
    const fs::path c = test_dir("train_c");
    CHECK(run("train --data two-gaussians --steps 30 --log-every 10 "
              "--batch 16 --g-hidden 8 --d-hidden 8 --seed 12 --out " +
              c.string()) == 0);
    CHECK(slurp(a / "metrics.csv") != slurp(c / "metrics.csv"));
  }
}

TEST_CASE("zero-step training emits headers and initial-generator samples") {
  const fs::path dir = test_dir("train_zero");
  CHECK(run("train --steps 0 --batch 16 --g-hidden 8 --d-hidden 8 --out " +
            dir.string()) == 0);
  const auto rows = lines(slurp(dir / "metrics.csv"));
  REQUIRE(rows.size() == 1);  // header only, no alternations ran
  CHECK(lines(slurp(dir / "samples.csv")).size() == 10001);
}

TEST_CASE("ratio-eval reports recovery error and clamp statistics") {
  const fs::path a = test_dir("ratio_a"), b = test_dir("ratio_b");
  const std::string common =
      "ratio-eval --steps 200 --batch 64 --grid-points 1001 --seed 5 --out ";
  CHECK(run(common + a.string()) == 0);
  CHECK(run(common + b.string()) == 0);
  CHECK(slurp(a / "ratio_report.csv") == slurp(b / "ratio_report.csv"));
  CHECK(slurp(a / "ratio_curve.csv") == slurp(b / "ratio_curve.csv"));

  const auto rows = lines(slurp(a / "ratio_report.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "mean_abs_log_ratio_error,clamp_fraction,n_region,steps");
  const auto r = fields(rows[1]);
  REQUIRE(r.size() == 4);
  CHECK(std::strtod(r[0].c_str(), nullptr) < 1.0);  // 200 steps: rough but sane
  CHECK(r[3] == "200");
  const auto curve_rows = lines(slurp(a / "ratio_curve.csv"));
  CHECK(curve_rows[0] == "x,v,log_ratio_est,log_ratio_true,in_region");
  CHECK(curve_rows.size() == 1 + 1001);
}

TEST_CASE("usage errors exit 1 with a helpful message") {
  const fs::path dir = test_dir("usage");
  CHECK(run("bogus-subcommand", dir / "err1.txt") == 1);
  CHECK(run("profile --div nope --out " + dir.string(), dir / "err2.txt") == 1);
  const std::string err = slurp(dir / "err2.txt");
  CHECK(err.find("unknown divergence 'nope'") != std::string::npos);
  CHECK(err.find("kl") != std::string::npos);  // lists the valid names
  CHECK(err.find("gan-alt") != std::string::npos);
  CHECK(run("train --data missing-file.cfg --out " + dir.string(),
            dir / "err3.txt") == 1);
  CHECK(slurp(dir / "err3.txt").find("cannot read density config") !=
        std::string::npos);
}

TEST_CASE("numerical aborts exit 2 but keep partial outputs") {
  const fs::path dir = test_dir("abort");
  CHECK(run("train --init-std 1e160 --steps 5 --batch 16 --g-hidden 8 "
            "--d-hidden 8 --out " +
            dir.string(),
            dir / "err.txt") == 2);
  CHECK(slurp(dir / "err.txt").find("numerical abort") != std::string::npos);
  CHECK(lines(slurp(dir / "metrics.csv")).size() == 1);  // header survives
  CHECK(fs::exists(dir / "generator.txt"));
}

TEST_CASE("config files feed options and flags override them") {
  const fs::path dir = test_dir("config");
  {
    std::ofstream ini(dir / "train.ini");
    ini << "steps = 7\nseed = 3\nbatch = 16\ng-hidden = 8\nd-hidden = 8\n";
  }
  const std::string tail = " --log-every 1000 --out ";
  CHECK(run("train --config " + (dir / "train.ini").string() + tail +
            (dir / "from_config").string()) == 0);
  // log_every 1000 > steps: a single row is logged at the final step.
  const auto rows = lines(slurp(dir / "from_config" / "metrics.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(fields(rows[1])[0] == "7");

  // The same settings given as flags produce byte-identical results.
  CHECK(run("train --steps 7 --seed 3 --batch 16 --g-hidden 8 --d-hidden 8" +
            tail + (dir / "from_flags").string()) == 0);
  CHECK(slurp(dir / "from_config" / "metrics.csv") ==
        slurp(dir / "from_flags" / "metrics.csv"));

  // A flag beats the config file for the same key.
  CHECK(run("train --config " + (dir / "train.ini").string() + " --steps 5" +
            tail + (dir / "override").string()) == 0);
  CHECK(fields(lines(slurp(dir / "override" / "metrics.csv"))[1])[0] == "5");
}

TEST_CASE("FDGAN_OUT provides the output directory when --out is absent") {
  const fs::path dir = test_dir("envout");
  const std::string cmd = "FDGAN_OUT=" + dir.string() + " " + kCli +
                          " profile --div kl --points 2 --u-min 1 --u-max 2";
  const int rc = std::system(cmd.c_str());
  CHECK((WIFEXITED(rc) ? WEXITSTATUS(rc) : -1) == 0);
  CHECK(fs::exists(dir / "profiles.csv"));
}

TEST_SUITE_END();
