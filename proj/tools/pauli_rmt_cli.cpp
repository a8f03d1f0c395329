// pauli-rmt: batch front end for the tomographic error-matrix toolkit.
//
// Subcommands: simulate, predict, spectrum, covariance, complexity, rephys.
// Every run is pure given its flags and seed, so repeated invocations
// reproduce output files byte for byte. Exit codes: 0 success, 1 validation
// or usage error, 2 I/O error.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pauli_rmt/analytics.hpp"
#include "pauli_rmt/covariance.hpp"
#include "pauli_rmt/experiments.hpp"
#include "pauli_rmt/matrix_io.hpp"
#include "pauli_rmt/protocols.hpp"
#include "pauli_rmt/spectral.hpp"

namespace {

using namespace pauli_rmt;

std::string fmt(double x) { return detail::format_double(x); }

// Relative paths resolve against PAULI_RMT_OUT_DIR when it is set, so batch
// jobs can redirect artifacts without touching every flag.
std::string resolve_output_path(const std::string& name) {
  if (name.empty() || name.front() == '/') return name;
  const char* dir = std::getenv("PAULI_RMT_OUT_DIR");
  if (!dir || !*dir) return name;
  std::string out(dir);
  if (out.back() != '/') out += '/';
  return out + name;
}

struct SimulateArgs {
  ExperimentConfig cfg;
  std::string protocol = "naive";
  std::string mode = "auto";
  std::string format = "csv";
  std::string out;
  double gue_sigma2 = 0.0;
  bool has_gue_sigma2 = false;
};

void add_common_flags(CLI::App* cmd, SimulateArgs& a, bool with_reps) {
  cmd->add_option("--protocol", a.protocol, "naive | qwc | surrogate | gue")
      ->default_val(a.protocol);
  cmd->add_option("--state", a.cfg.state_spec,
                  "identity | ghz | random-pure(seed) | dense(path)")
      ->default_val(a.cfg.state_spec);
  cmd->add_option("-N,--qubits", a.cfg.n_qubits, "register size")
      ->required();
  cmd->add_option("-S,--shots", a.cfg.shots, "shots per measurement setting")
      ->default_val(a.cfg.shots);
  if (with_reps) {
    cmd->add_option("-R,--reps", a.cfg.replications, "independent replications")
        ->default_val(a.cfg.replications);
  }
  cmd->add_option("--seed", a.cfg.master_seed, "master seed (64-bit)")
      ->default_val(a.cfg.master_seed);
  cmd->add_option("--mode", a.mode,
                  "auto | shots | surrogate (sampling backend)")
      ->default_val(a.mode);
  cmd->add_option("--gue-sigma2", a.gue_sigma2,
                  "per-entry variance for --protocol gue")
      ->each([&a](const std::string&) { a.has_gue_sigma2 = true; });
  cmd->add_option("--threads", a.cfg.threads, "worker cap, 0 = all cores")
      ->default_val(a.cfg.threads);
}

ExperimentConfig finalize_config(SimulateArgs& a) {
  a.cfg.protocol = protocol_from_string(a.protocol);
  a.cfg.mode = mode_from_string(a.mode);
  if (a.has_gue_sigma2) a.cfg.gue_sigma2 = a.gue_sigma2;
  return a.cfg;
}

void print_prediction(const std::string& tag, const Prediction& p) {
  const double d = static_cast<double>(pow2(p.n_qubits));
  std::cout << tag << ": radius R = " << fmt(p.radius)
            << "\n  mean trace norm   = " << fmt(p.mean_trace_norm)
            << "\n  mean / 2^N        = " << fmt(p.mean_trace_norm / d)
            << "\n  variance          = " << fmt(p.var_trace_norm) << "\n";
}

int cmd_simulate(SimulateArgs& a) {
  const ExperimentConfig cfg = finalize_config(a);
  const ExperimentResult result = run_experiment(cfg);

  std::string name = a.out.empty()
                         ? default_output_name(cfg, a.format)
                         : a.out;
  const std::string path = resolve_output_path(name);
  if (a.format == "json") {
    save_json(result, path);
  } else if (a.format == "csv") {
    save_csv(result, path);
  } else {
    throw std::invalid_argument("unknown format \"" + a.format +
                                "\"; expected csv or json");
  }

  const Aggregate& agg = result.trace_norm_stats;
  std::cout << "protocol " << to_string(cfg.protocol) << ", state "
            << cfg.state_spec << ", N = " << cfg.n_qubits
            << ", S = " << cfg.shots << ", R = " << cfg.replications
            << ", mode " << result.resolved_mode << "\n";
  std::cout << "mean trace norm = " << fmt(agg.mean) << " +- "
            << fmt(agg.se_mean) << "\n";
  std::cout << "variance        = " << fmt(agg.variance) << " +- "
            << fmt(agg.se_variance) << "\n";
  if (result.prediction_exact) {
    std::cout << "predicted mean  = " << fmt(result.prediction_exact->mean_trace_norm)
              << ", predicted variance = "
              << fmt(result.prediction_exact->var_trace_norm) << "\n";
  }
  if (result.rephys) {
    const RephysSummary& rs = *result.rephys;
    std::cout << "rephys: mean excess = " << fmt(rs.mean_excess)
              << ", reference 2R = " << fmt(rs.bound_2r) << ", within bound "
              << rs.count_within_bound << "/" << cfg.replications << "\n";
  }
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_predict(SimulateArgs& a, bool leading) {
  const ExperimentConfig cfg = finalize_config(a);
  if (cfg.protocol == Protocol::gue) {
    if (!cfg.gue_sigma2) {
      throw std::invalid_argument("predict: --protocol gue needs --gue-sigma2");
    }
    print_prediction("gue", predict_gue(cfg.n_qubits, cfg.shots, *cfg.gue_sigma2));
    return 0;
  }
  const StateModel state = build_state(cfg.state_spec, cfg.n_qubits);
  const TomographyProtocol base = cfg.protocol == Protocol::naive
                                      ? TomographyProtocol::naive
                                      : TomographyProtocol::qwc;
  print_prediction("exact-vbar",
                   predict(base, state, cfg.shots, PredictionMode::exact_vbar));
  if (leading) {
    print_prediction(
        "leading-order",
        predict(base, state, cfg.shots, PredictionMode::leading_order));
  }
  return 0;
}

int cmd_spectrum(SimulateArgs& a, const std::string& out,
                 const std::string& save_matrix_path) {
  ExperimentConfig cfg = finalize_config(a);
  cfg.replications = 1;
  cfg.collect_spectra = true;
  const ExperimentResult result = run_experiment(cfg);
  const std::vector<double>& lam = *result.pooled_spectrum;
  const Prediction& p = *result.prediction_exact;

  std::ostream* os = &std::cout;
  std::ofstream file;
  std::string path;
  if (!out.empty()) {
    path = resolve_output_path(out);
    file.open(path);
    if (!file) throw io_error(path, "cannot open for writing");
    os = &file;
  }
  *os << "# pauli-rmt spectrum v1\n";
  *os << "# protocol=" << to_string(cfg.protocol) << " state=" << cfg.state_spec
      << " N=" << cfg.n_qubits << " S=" << cfg.shots
      << " seed=" << cfg.master_seed << " mode=" << result.resolved_mode
      << "\n";
  *os << "# radius=" << fmt(p.radius) << "\n";
  *os << "eigenvalues " << lam.size() << "\n";
  for (const double x : lam) *os << fmt(x) << "\n";
  const SemicircleLaw law(p.radius);
  constexpr int overlay_points = 256;
  *os << "overlay " << overlay_points << "\n";
  for (int i = 0; i < overlay_points; ++i) {
    const double x = -p.radius + 2.0 * p.radius * i / (overlay_points - 1);
    *os << fmt(x) << " " << fmt(law.pdf(x)) << "\n";
  }
  if (!out.empty()) {
    if (!file.flush()) throw io_error(path, "write failed");
    std::cout << "wrote " << path << "\n";
  }

  if (!save_matrix_path.empty()) {
    if (cfg.protocol == Protocol::gue) {
      throw std::invalid_argument(
          "spectrum: --save-matrix needs a reference state, not available "
          "for the gue protocol");
    }
    // Persist rho + error matrix: a single noisy reconstruction, suitable
    // as input to the rephys subcommand.
    const StateModel state = build_state(cfg.state_spec, cfg.n_qubits);
    RngStream rng(derive_replication_seed(cfg.master_seed, 0));
    const ExcessSample sample = [&]() -> ExcessSample {
      if (result.resolved_mode == "shots") {
        return cfg.protocol == Protocol::naive
                   ? sample_naive(state, ShotPlan(cfg.shots), rng)
                   : sample_qwc(state, ShotPlan(cfg.shots), rng);
      }
      const CovarianceModel model = cfg.protocol == Protocol::naive
                                        ? naive_variances(state, cfg.shots)
                                        : qwc_sigma(state, cfg.shots);
      return sample_surrogate(model, rng);
    }();
    const Eigen::MatrixXcd rho_hat =
        state.density_matrix() + synthesize(sample.y).matrix();
    const std::string mpath = resolve_output_path(save_matrix_path);
    save_matrix(mpath, rho_hat, cfg.n_qubits);
    std::cout << "wrote " << mpath << "\n";
  }
  return 0;
}

int cmd_covariance(SimulateArgs& a, const std::string& dump) {
  const ExperimentConfig cfg = finalize_config(a);
  if (cfg.protocol == Protocol::gue) {
    throw std::invalid_argument("covariance: gue has no estimator covariance");
  }
  const StateModel state = build_state(cfg.state_spec, cfg.n_qubits);
  const bool is_naive = cfg.protocol == Protocol::naive;
  std::optional<CovarianceModel> model;
  if (is_naive) {
    model = naive_variances(state, cfg.shots);
  } else {
    if (cfg.n_qubits > 7) {
      throw std::invalid_argument(
          "covariance: dense grouped-protocol covariance is limited to 7 "
          "qubits, got " + std::to_string(cfg.n_qubits));
    }
    model = qwc_sigma(state, cfg.shots);
  }
  const VarStats stats = var_stats(*model);
  std::cout << "protocol " << to_string(cfg.protocol) << ", state "
            << cfg.state_spec << ", N = " << cfg.n_qubits
            << ", S = " << cfg.shots << "\n";
  std::cout << "vbar         = " << fmt(stats.vbar) << "\n";
  std::cout << "var[v]       = " << fmt(stats.var_v)
            << (stats.var_is_upper_bound ? "  (upper bound)" : "") << "\n";
  std::cout << "2^N var/vbar = " << fmt(stats.bound_ratio) << "\n";
  std::cout << "closed-form vbar = "
            << fmt(closed_form_vbar(is_naive ? TomographyProtocol::naive
                                             : TomographyProtocol::qwc,
                                    state, cfg.shots))
            << "\n";

  if (!dump.empty()) {
    if (cfg.n_qubits > 4) {
      throw std::invalid_argument(
          "covariance: --dump writes 16^N entries, limited to 4 qubits");
    }
    const std::string path = resolve_output_path(dump);
    std::ofstream out(path);
    if (!out) throw io_error(path, "cannot open for writing");
    const auto m = static_cast<Eigen::Index>(pow4(cfg.n_qubits));
    const bool diagonal = model->kind() == CovarianceModel::Kind::diagonal;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j) out << ',';
        const double entry = diagonal ? (i == j ? model->variances()[i] : 0.0)
                                      : model->sigma()(i, j);
        out << fmt(entry);
      }
      out << "\n";
    }
    if (!out.flush()) throw io_error(path, "write failed");
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

int cmd_complexity(double epsilon, double fail_prob, int n_qubits,
                   const std::string& in) {
  if (in.empty()) {
    const ComplexityEstimate est = markov_shots(epsilon, fail_prob, n_qubits);
    std::cout << "epsilon = " << fmt(epsilon)
              << ", failure probability = " << fmt(fail_prob)
              << ", N = " << n_qubits << "\n";
    std::cout << "shots per setting S ~= " << fmt(est.shots_per_setting) << "\n";
    std::cout << "settings 3^N       = " << fmt(pow3(n_qubits)) << "\n";
    std::cout << "total copies      ~= " << fmt(est.total_copies) << "\n";
    return 0;
  }
  const std::vector<double> norms = load_trace_norms(in);
  double mean = 0.0, var = 0.0;
  bool predicted = false;
  if (in.size() >= 5 && in.substr(in.size() - 5) == ".json") {
    const ExperimentResult r = load_result_json(in);
    if (r.prediction_exact) {
      mean = r.prediction_exact->mean_trace_norm;
      var = r.prediction_exact->var_trace_norm;
      predicted = true;
    }
  }
  if (!predicted) {
    const Aggregate agg = aggregate(norms);
    mean = agg.mean;
    var = agg.variance;
  }
  const FailureProbability fp =
      empirical_failure_prob(norms, epsilon, mean, var);
  std::cout << "replications = " << fp.replications
            << ", epsilon = " << fmt(epsilon) << "\n";
  std::cout << "empirical P[error >= epsilon] = " << fmt(fp.p_hat) << "  (95% CI ["
            << fmt(fp.ci_low) << ", " << fmt(fp.ci_high) << "])\n";
  std::cout << "first-moment bound = " << fmt(fp.markov_bound)
            << "  (" << (predicted ? "predicted" : "empirical")
            << " mean " << fmt(mean) << ")\n";
  std::cout << "concentration floor = " << fmt(fp.pz_floor) << "\n";
  return 0;
}

int cmd_rephys(const std::string& in, const std::string& out) {
  const LoadedMatrix loaded = load_matrix(in);
  const HermitianMatrix input(loaded.matrix);
  const RephysProjection proj = rephys_project(input);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> before(
      input.matrix(), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> after(
      proj.projected.matrix(), Eigen::EigenvaluesOnly);
  std::cout << "dimension = " << input.matrix().rows() << "\n";
  std::cout << "min eigenvalue before = " << fmt(before.eigenvalues()[0])
            << ", after = " << fmt(after.eigenvalues()[0]) << "\n";
  std::cout << "excess (trace-norm displacement) = " << fmt(proj.excess) << "\n";
  if (!out.empty()) {
    const std::string path = resolve_output_path(out);
    save_matrix(path, proj.projected.matrix(), loaded.n_qubits);
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-matrix toolkit for Pauli tomography error operators"};
  app.require_subcommand(1);

  SimulateArgs sim_args, pred_args, spec_args, cov_args;
  std::string sim_out, spec_out, spec_matrix, cov_dump;
  std::string complexity_in, rephys_in, rephys_out;
  bool pred_leading = false;
  double epsilon = 0.0, fail_prob = 0.5;
  int complexity_n = 0;

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Run replicated experiments and persist per-replication results");
  add_common_flags(simulate, sim_args, true);
  simulate->add_option("--format", sim_args.format, "csv | json")
      ->default_val(sim_args.format);
  simulate->add_option("--out", sim_out, "output file (default derived from flags)");
  simulate->add_flag("--spectra", sim_args.cfg.collect_spectra,
                     "pool eigenvalues across replications (json output)");
  simulate->add_flag("--rephys", sim_args.cfg.compute_rephys,
                     "rephysicalize each reconstruction and record the excess");
  simulate->add_flag("--cov-stats", sim_args.cfg.covariance_stats,
                     "attach variance-profile statistics (json output)");
  simulate->add_flag("--allow-large-qwc", sim_args.cfg.allow_large_qwc,
                     "permit shot-level grouped runs above 6 qubits");

  CLI::App* predict_cmd = app.add_subcommand(
      "predict", "Print closed-form trace-norm statistics for a configuration");
  add_common_flags(predict_cmd, pred_args, false);
  predict_cmd->add_flag("--leading", pred_leading,
                        "also print the state-independent leading-order form");

  CLI::App* spectrum = app.add_subcommand(
      "spectrum", "Emit eigenvalues of one realization plus a density overlay");
  add_common_flags(spectrum, spec_args, false);
  spectrum->add_option("--out", spec_out, "output file (default stdout)");
  spectrum->add_option("--save-matrix", spec_matrix,
                       "also persist the noisy reconstruction matrix");

  CLI::App* covariance = app.add_subcommand(
      "covariance", "Print variance-profile statistics of the estimator covariance");
  add_common_flags(covariance, cov_args, false);
  covariance->add_option("--dump", cov_dump, "write dense covariance as CSV");

  CLI::App* complexity = app.add_subcommand(
      "complexity", "Shot-count estimate for a target accuracy, or empirical "
                    "failure rates from a saved run");
  complexity->add_option("--epsilon", epsilon, "target trace-norm accuracy")
      ->required();
  complexity->add_option("--fail-prob", fail_prob, "allowed failure probability")
      ->default_val(fail_prob);
  complexity->add_option("-N,--qubits", complexity_n, "register size");
  complexity->add_option("--in", complexity_in,
                         "saved simulate output (csv or json)");

  CLI::App* rephys = app.add_subcommand(
      "rephys", "Project a persisted reconstruction back onto physical states");
  rephys->add_option("--in", rephys_in, "matrix file to project")->required();
  rephys->add_option("--out", rephys_out, "where to write the projected matrix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return 1;
  }

  try {
    if (simulate->parsed()) {
      sim_args.out = sim_out;
      return cmd_simulate(sim_args);
    }
    if (predict_cmd->parsed()) return cmd_predict(pred_args, pred_leading);
    if (spectrum->parsed()) return cmd_spectrum(spec_args, spec_out, spec_matrix);
    if (covariance->parsed()) return cmd_covariance(cov_args, cov_dump);
    if (complexity->parsed()) {
      if (complexity_in.empty() && complexity_n == 0) {
        throw std::invalid_argument(
            "complexity: need -N for the shot-count estimate or --in for "
            "empirical rates");
      }
      return cmd_complexity(epsilon, fail_prob, complexity_n, complexity_in);
    }
    if (rephys->parsed()) return cmd_rephys(rephys_in, rephys_out);
    throw std::logic_error("no subcommand dispatched");
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
