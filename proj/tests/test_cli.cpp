// End-to-end tests driving the command-line binary. The build passes the
// binary location in PAULI_RMT_CLI_PATH; every invocation runs through the
// shell with stdout/stderr captured to temp files.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "pauli_rmt/covariance.hpp"
#include "pauli_rmt/experiments.hpp"
#include "pauli_rmt/matrix_io.hpp"

using namespace pauli_rmt;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string temp_path(const std::string& name) {
  return ::testing::TempDir() + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliRun run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  const std::string tag = std::to_string(counter++);
  const std::string out_file = temp_path("cli_out_" + tag + ".txt");
  const std::string err_file = temp_path("cli_err_" + tag + ".txt");
  std::string cmd;
  if (!env_prefix.empty()) cmd += env_prefix + " ";
  cmd += std::string(PAULI_RMT_CLI_PATH) + " " + args + " > " + out_file +
         " 2> " + err_file;
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

// Parses the first number following the first '=' after `key`.
double value_after(const std::string& text, const std::string& key) {
  const std::size_t at = text.find(key);
  if (at == std::string::npos) {
    ADD_FAILURE() << "key \"" << key << "\" not found in output:\n" << text;
    return 0.0;
  }
  const std::size_t eq = text.find('=', at + key.size());
  if (eq == std::string::npos) {
    ADD_FAILURE() << "no '=' after \"" << key << "\"";
    return 0.0;
  }
  return std::stod(text.substr(eq + 1));
}

}  // namespace

TEST(Cli, help_exits_zero_and_lists_subcommands) {
  const CliRun r = run_cli("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("simulate"), std::string::npos);
  EXPECT_NE(r.out.find("rephys"), std::string::npos);
}

TEST(Cli, usage_errors_exit_one) {
  EXPECT_EQ(run_cli("simulate --bogus 1 -N 2").code, 1);
  EXPECT_EQ(run_cli("").code, 1);                    // missing subcommand
  EXPECT_EQ(run_cli("simulate").code, 1);            // missing required -N
  const CliRun bad_proto =
      run_cli("simulate -N 2 --protocol telepathy -R 2");
  EXPECT_EQ(bad_proto.code, 1);
  EXPECT_NE(bad_proto.err.find("telepathy"), std::string::npos);
}

TEST(Cli, simulate_is_reproducible_across_runs_and_threads) {
  const std::string a = temp_path("sim_a.csv");
  const std::string b = temp_path("sim_b.csv");
  const std::string common =
      "simulate --protocol naive --state ghz -N 3 -S 200 -R 10 --seed 7 "
      "--format csv --out ";
  const CliRun ra = run_cli(common + a);
  const CliRun rb = run_cli(common + b + " --threads 3");
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(rb.code, 0) << rb.err;
  const std::string ca = slurp(a);
  EXPECT_FALSE(ca.empty());
  EXPECT_EQ(ca, slurp(b));
  EXPECT_NE(ra.out.find("wrote " + a), std::string::npos);
}

TEST(Cli, simulate_default_name_respects_output_dir) {
  const std::string dir = temp_path("outdir");
  std::system(("mkdir -p " + dir).c_str());
  const CliRun r = run_cli(
      "simulate --protocol naive --state ghz -N 2 -S 100 -R 4 --seed 3",
      "PAULI_RMT_OUT_DIR=" + dir);
  ASSERT_EQ(r.code, 0) << r.err;
  ExperimentConfig cfg;
  cfg.protocol = Protocol::naive;
  cfg.state_spec = "ghz";
  cfg.n_qubits = 2;
  cfg.shots = 100;
  cfg.master_seed = 3;
  const std::string expected = dir + "/" + default_output_name(cfg, "csv");
  EXPECT_TRUE(std::ifstream(expected).good()) << expected;
  EXPECT_NE(r.out.find(expected), std::string::npos);
}

TEST(Cli, simulate_json_loads_back) {
  const std::string path = temp_path("sim_result.json");
  const CliRun r = run_cli(
      "simulate --protocol qwc --state identity -N 2 -S 50 -R 6 --seed 1 "
      "--format json --cov-stats --out " + path);
  ASSERT_EQ(r.code, 0) << r.err;
  const ExperimentResult loaded = load_result_json(path);
  EXPECT_EQ(loaded.config.protocol, Protocol::qwc);
  EXPECT_EQ(loaded.config.n_qubits, 2);
  EXPECT_EQ(loaded.resolved_mode, "shots");
  EXPECT_EQ(loaded.replications.size(), 6u);
  EXPECT_TRUE(loaded.covariance_stats.has_value());
}

TEST(Cli, predict_prints_reference_numbers) {
  // Default output is the exact-vbar block: for the identity that is the
  // leading-order value shrunk by sqrt(1 - 1/D^2) (mean) and 1 - 1/D^2
  // (variance).
  const CliRun r =
      run_cli("predict --protocol naive --state identity -N 6 -S 10000");
  ASSERT_EQ(r.code, 0) << r.err;
  const double shrink = 4095.0 / 4096.0;
  EXPECT_NEAR(value_after(r.out, "mean / 2^N"),
              0.008488263631567752 * std::sqrt(shrink), 1e-12);
  EXPECT_NEAR(value_after(r.out, "variance"), 4.052847345693511e-05 * shrink,
              1e-17);

  const CliRun lead = run_cli(
      "predict --protocol qwc --state ghz -N 6 -S 10000 --leading");
  ASSERT_EQ(lead.code, 0) << lead.err;
  const std::size_t tag = lead.out.find("leading-order");
  ASSERT_NE(tag, std::string::npos);
  EXPECT_NEAR(value_after(lead.out.substr(tag), "mean trace norm"),
              0.3143801345025094, 1e-12);
}

TEST(Cli, complexity_reference_estimate) {
  const CliRun r = run_cli("complexity --epsilon 0.1 --fail-prob 0.5 -N 2");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(value_after(r.out, "shots per setting"), 3202.2497546220334,
              1e-8);
  EXPECT_NEAR(value_after(r.out, "total copies"), 9.0 * 3202.2497546220334,
              1e-7);

  // Neither -N nor --in: nothing to do.
  EXPECT_EQ(run_cli("complexity --epsilon 0.1").code, 1);
}

TEST(Cli, complexity_empirical_rates_from_saved_run) {
  const std::string path = temp_path("for_complexity.csv");
  const CliRun sim = run_cli(
      "simulate --protocol naive --state identity -N 2 -S 400 -R 40 --seed 2 "
      "--format csv --out " + path);
  ASSERT_EQ(sim.code, 0) << sim.err;
  const CliRun r = run_cli("complexity --epsilon 0.0001 --in " + path);
  ASSERT_EQ(r.code, 0) << r.err;
  // Tiny epsilon: every replication exceeds it.
  EXPECT_DOUBLE_EQ(value_after(r.out, "empirical P[error >= epsilon]"), 1.0);
}

TEST(Cli, spectrum_format_and_rephys_pipeline) {
  const std::string spec = temp_path("spec.txt");
  const std::string mat = temp_path("noisy.mat");
  const std::string proj = temp_path("projected.mat");
  const CliRun r = run_cli(
      "spectrum --protocol qwc --state ghz -N 2 -S 100 --seed 5 --out " +
      spec + " --save-matrix " + mat);
  ASSERT_EQ(r.code, 0) << r.err;

  const std::string text = slurp(spec);
  EXPECT_EQ(text.rfind("# pauli-rmt spectrum v1\n", 0), 0u);
  EXPECT_NE(text.find("\neigenvalues 4\n"), std::string::npos);
  EXPECT_NE(text.find("\noverlay 256\n"), std::string::npos);

  const CliRun rp = run_cli("rephys --in " + mat + " --out " + proj);
  ASSERT_EQ(rp.code, 0) << rp.err;
  EXPECT_NE(rp.out.find("min eigenvalue before"), std::string::npos);

  const LoadedMatrix projected = load_matrix(proj);
  EXPECT_EQ(projected.n_qubits, 2);
  EXPECT_NEAR(projected.matrix.trace().real(), 1.0, 1e-9);
  const std::vector<double> eigs = oracle::jacobi_eigenvalues(projected.matrix);
  EXPECT_GE(eigs.front(), -1e-11);
}

TEST(Cli, missing_input_exits_two) {
  const CliRun r = run_cli("rephys --in " + temp_path("no_such_matrix.mat"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST(Cli, covariance_stats_and_dump) {
  const std::string dump = temp_path("cov_dump.csv");
  const CliRun r = run_cli(
      "covariance --protocol qwc --state identity -N 2 -S 100 --dump " + dump);
  ASSERT_EQ(r.code, 0) << r.err;

  const CovarianceModel model = qwc_sigma(StateModel::identity(2), 100);
  const VarStats stats = var_stats(model);
  EXPECT_NEAR(value_after(r.out, "vbar"), stats.vbar, 1e-15);

  // The dump is a 16 x 16 CSV whose diagonal matches the model.
  std::ifstream in(dump);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    double diag = 0.0;
    while (std::getline(ss, cell, ',')) {
      if (cols == rows) diag = std::stod(cell);
      ++cols;
    }
    EXPECT_EQ(cols, 16);
    EXPECT_NEAR(diag, model.sigma()(rows, rows), 1e-15);
    ++rows;
  }
  EXPECT_EQ(rows, 16);

  // gue has no estimator covariance; oversized dense requests are refused.
  EXPECT_EQ(run_cli("covariance --protocol gue -N 2").code, 1);
  EXPECT_EQ(run_cli("covariance --protocol qwc -N 8").code, 1);
}
