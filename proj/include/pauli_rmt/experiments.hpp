#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pauli_rmt/analytics.hpp"
#include "pauli_rmt/covariance.hpp"
#include "pauli_rmt/protocols.hpp"
#include "pauli_rmt/rng.hpp"
#include "pauli_rmt/spectral.hpp"
#include "pauli_rmt/states.hpp"
#include "pauli_rmt/transform.hpp"

namespace pauli_rmt {

enum class Protocol { naive, qwc, surrogate, gue };
enum class SamplingMode { automatic, shots, surrogate };

inline const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::naive: return "naive";
    case Protocol::qwc: return "qwc";
    case Protocol::surrogate: return "surrogate";
    case Protocol::gue: return "gue";
  }
  throw std::logic_error("Protocol: unreachable value");
}

inline Protocol protocol_from_string(const std::string& s) {
  if (s == "naive") return Protocol::naive;
  if (s == "qwc") return Protocol::qwc;
  if (s == "surrogate") return Protocol::surrogate;
  if (s == "gue") return Protocol::gue;
  throw std::invalid_argument("unknown protocol \"" + s +
                              "\"; expected naive, qwc, surrogate or gue");
}

inline const char* to_string(SamplingMode m) {
  switch (m) {
    case SamplingMode::automatic: return "auto";
    case SamplingMode::shots: return "shots";
    case SamplingMode::surrogate: return "surrogate";
  }
  throw std::logic_error("SamplingMode: unreachable value");
}

inline SamplingMode mode_from_string(const std::string& s) {
  if (s == "auto") return SamplingMode::automatic;
  if (s == "shots") return SamplingMode::shots;
  if (s == "surrogate") return SamplingMode::surrogate;
  throw std::invalid_argument("unknown mode \"" + s +
                              "\"; expected auto, shots or surrogate");
}

// Largest register simulated at the shot level under the grouped protocol
// unless explicitly overridden; beyond this the Gaussian surrogate stands in.
inline constexpr int qwc_shot_level_default_limit = 6;

struct ExperimentConfig {
  std::string state_spec = "identity";
  Protocol protocol = Protocol::naive;
  int n_qubits = 1;
  long long shots = 10000;
  int replications = 100;
  std::uint64_t master_seed = 0;
  SamplingMode mode = SamplingMode::automatic;
  std::optional<double> gue_sigma2;  // defaults to naive vbar * D
  bool collect_spectra = false;
  bool compute_rephys = false;
  bool covariance_stats = false;
  bool allow_large_qwc = false;
  int threads = 1;  // 0 = hardware concurrency
};

struct ReplicationRecord {
  int index = 0;
  std::uint64_t seed = 0;
  double trace_norm = 0.0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  std::optional<double> rephys_excess;
  std::optional<double> rephys_error_after;
};

struct Aggregate {
  double mean = 0.0;
  double se_mean = 0.0;
  double variance = 0.0;
  double se_variance = 0.0;
};

struct RephysSummary {
  double bound_2r = 0.0;  // projection-displacement reference scale
  long long count_within_bound = 0;
  double mean_excess = 0.0;
  double max_excess = 0.0;
  double mean_error_before = 0.0;
  double mean_error_after = 0.0;
  double mean_abs_rel_change = 0.0;  // mean |after - before| / before
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string resolved_mode;  // shots | surrogate-dense | surrogate-diagonal | gue
  std::vector<ReplicationRecord> replications;
  Aggregate trace_norm_stats;
  std::optional<Prediction> prediction_exact;
  std::optional<Prediction> prediction_leading;
  std::optional<std::vector<double>> pooled_spectrum;  // sorted ascending
  std::optional<VarStats> covariance_stats;
  std::optional<RephysSummary> rephys;
};

namespace detail {

inline double kahan_sum(const std::vector<double>& xs) {
  double sum = 0.0, comp = 0.0;
  for (const double x : xs) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

}  // namespace detail

// Sample mean and unbiased variance with standard errors; SE of the
// variance is the delete-one jackknife estimate. Summation runs in input
// order with compensation, so results do not depend on scheduling.
inline Aggregate aggregate(const std::vector<double>& values) {
  const std::size_t r = values.size();
  if (r < 2) {
    throw std::invalid_argument("aggregate: need at least 2 values, got " +
                                std::to_string(r));
  }
  Aggregate a;
  const double n = static_cast<double>(r);
  a.mean = detail::kahan_sum(values) / n;
  std::vector<double> sq(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double e = values[i] - a.mean;
    sq[i] = e * e;
  }
  const double m2 = detail::kahan_sum(sq);
  a.variance = m2 / (n - 1.0);
  a.se_mean = std::sqrt(a.variance / n);
  if (r == 2) {
    a.se_variance = 0.0;  // delete-one samples are single points
    return a;
  }
  // Delete-one variances via the exact update
  //   var_i = (m2 - e_i^2 n / (n - 1)) / (n - 2).
  std::vector<double> loo(r);
  for (std::size_t i = 0; i < r; ++i) {
    loo[i] = (m2 - sq[i] * n / (n - 1.0)) / (n - 2.0);
  }
  const double loo_mean = detail::kahan_sum(loo) / n;
  std::vector<double> dev(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double e = loo[i] - loo_mean;
    dev[i] = e * e;
  }
  a.se_variance = std::sqrt((n - 1.0) / n * detail::kahan_sum(dev));
  return a;
}

namespace detail {

struct RunContext {
  const ExperimentConfig* config = nullptr;
  std::optional<StateModel> state;
  std::shared_ptr<const SurrogateSampler> surrogate;
  std::optional<Eigen::MatrixXcd> rho;  // dense state, for rephysicalization
  double gue_sigma2 = 0.0;
  enum class Path { naive_shots, qwc_shots, surrogate, gue } path =
      Path::naive_shots;
};

inline void run_one_replication(const RunContext& ctx, int index,
                                ReplicationRecord& rec,
                                std::vector<double>* spectrum_slot) {
  const ExperimentConfig& cfg = *ctx.config;
  const std::uint64_t seed =
      derive_replication_seed(cfg.master_seed, static_cast<std::uint64_t>(index));
  RngStream rng(seed);
  rec.index = index;
  rec.seed = seed;

  Eigen::MatrixXcd h;
  switch (ctx.path) {
    case RunContext::Path::naive_shots: {
      ExcessSample s = sample_naive(*ctx.state, ShotPlan(cfg.shots), rng);
      h = synthesize(s.y).matrix();
      break;
    }
    case RunContext::Path::qwc_shots: {
      ExcessSample s = sample_qwc(*ctx.state, ShotPlan(cfg.shots), rng);
      h = synthesize(s.y).matrix();
      break;
    }
    case RunContext::Path::surrogate: {
      ExcessSample s = ctx.surrogate->sample(rng);
      h = synthesize(s.y).matrix();
      break;
    }
    case RunContext::Path::gue: {
      const auto d = static_cast<Eigen::Index>(pow2(cfg.n_qubits));
      h = sample_gue(d, ctx.gue_sigma2, rng).matrix();
      break;
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h,
                                                     Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("run_experiment: eigensolver failed");
  }
  const Eigen::VectorXd& lam = es.eigenvalues();
  rec.trace_norm = lam.cwiseAbs().sum();
  rec.min_eigenvalue = lam[0];
  rec.max_eigenvalue = lam[lam.size() - 1];
  if (spectrum_slot) {
    spectrum_slot->assign(lam.data(), lam.data() + lam.size());
  }
  if (ctx.rho) {
    const HermitianMatrix rho_prime(*ctx.rho + h);
    const RephysProjection proj = rephys_project(rho_prime);
    rec.rephys_excess = proj.excess;
    const HermitianMatrix residual(proj.projected.matrix() - *ctx.rho, 1e-9);
    rec.rephys_error_after = trace_norm(residual);
  }
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.replications < 1) {
    throw std::invalid_argument("run_experiment: replications must be >= 1");
  }
  if (cfg.shots < 1) {
    throw std::invalid_argument("run_experiment: shots must be >= 1");
  }
  check_register_size(cfg.n_qubits, max_dense_qubits, "run_experiment");
  if (cfg.protocol == Protocol::gue && cfg.compute_rephys) {
    throw std::invalid_argument(
        "run_experiment: rephysicalization needs a reference state, not "
        "available for the gue protocol");
  }

  ExperimentResult result;
  result.config = cfg;

  detail::RunContext ctx;
  ctx.config = &cfg;

  const bool needs_state =
      cfg.protocol != Protocol::gue || !cfg.gue_sigma2.has_value();
  if (needs_state) {
    ctx.state = build_state(cfg.state_spec, cfg.n_qubits);
  }

  // Resolve the sampling path. The naive protocol defaults to shot level at
  // any size; the grouped protocol defaults to shot level only up to
  // qwc_shot_level_default_limit qubits, handing over to the Gaussian
  // surrogate beyond (dense covariance through 7 qubits, flat-vbar diagonal
  // past that).
  const auto make_qwc_surrogate = [&]() {
    if (cfg.n_qubits <= 7) {
      ctx.surrogate = std::make_shared<SurrogateSampler>(
          qwc_sigma(*ctx.state, cfg.shots));
      result.resolved_mode = "surrogate-dense";
    } else {
      const double vbar =
          closed_form_vbar(TomographyProtocol::qwc, *ctx.state, cfg.shots);
      Eigen::VectorXd v = Eigen::VectorXd::Constant(
          static_cast<Eigen::Index>(pow4(cfg.n_qubits)), vbar);
      v[0] = 0.0;
      ctx.surrogate = std::make_shared<SurrogateSampler>(
          CovarianceModel::diagonal(cfg.n_qubits, cfg.shots, std::move(v)));
      result.resolved_mode = "surrogate-diagonal";
    }
    ctx.path = detail::RunContext::Path::surrogate;
  };

  switch (cfg.protocol) {
    case Protocol::naive:
      if (cfg.mode == SamplingMode::surrogate) {
        ctx.surrogate = std::make_shared<SurrogateSampler>(
            naive_variances(*ctx.state, cfg.shots));
        ctx.path = detail::RunContext::Path::surrogate;
        result.resolved_mode = "surrogate-diagonal";
      } else {
        ctx.path = detail::RunContext::Path::naive_shots;
        result.resolved_mode = "shots";
      }
      break;
    case Protocol::qwc:
      if (cfg.mode == SamplingMode::shots ||
          (cfg.mode == SamplingMode::automatic &&
           (cfg.n_qubits <= qwc_shot_level_default_limit ||
            cfg.allow_large_qwc))) {
        if (cfg.n_qubits > qwc_shot_level_default_limit &&
            !cfg.allow_large_qwc) {
          throw std::invalid_argument(
              "run_experiment: qwc shot-level runs above " +
              std::to_string(qwc_shot_level_default_limit) +
              " qubits need the large-run override");
        }
        ctx.path = detail::RunContext::Path::qwc_shots;
        result.resolved_mode = "shots";
      } else {
        make_qwc_surrogate();
      }
      break;
    case Protocol::surrogate:
      make_qwc_surrogate();
      break;
    case Protocol::gue: {
      ctx.path = detail::RunContext::Path::gue;
      result.resolved_mode = "gue";
      if (cfg.gue_sigma2) {
        ctx.gue_sigma2 = *cfg.gue_sigma2;
      } else {
        const double vbar =
            closed_form_vbar(TomographyProtocol::naive, *ctx.state, cfg.shots);
        ctx.gue_sigma2 = vbar * static_cast<double>(pow2(cfg.n_qubits));
      }
      if (!(ctx.gue_sigma2 > 0.0)) {
        throw std::invalid_argument("run_experiment: gue variance must be positive");
      }
      break;
    }
  }

  if (cfg.compute_rephys) {
    ctx.rho = ctx.state->density_matrix();
  }

  // Predictions attached up front; the exact form uses the state's closed
  // form vbar, the leading form only (protocol, N, S).
  if (cfg.protocol == Protocol::gue) {
    result.prediction_exact = predict_gue(cfg.n_qubits, cfg.shots, ctx.gue_sigma2);
  } else {
    const TomographyProtocol base = cfg.protocol == Protocol::naive
                                        ? TomographyProtocol::naive
                                        : TomographyProtocol::qwc;
    result.prediction_exact =
        predict(base, *ctx.state, cfg.shots, PredictionMode::exact_vbar);
    result.prediction_leading =
        predict(base, *ctx.state, cfg.shots, PredictionMode::leading_order);
  }

  if (cfg.covariance_stats && cfg.protocol != Protocol::gue) {
    if (cfg.protocol == Protocol::naive) {
      result.covariance_stats = var_stats(naive_variances(*ctx.state, cfg.shots));
    } else if (cfg.n_qubits <= 7) {
      result.covariance_stats = var_stats(qwc_sigma(*ctx.state, cfg.shots));
    }
  }

  const int r = cfg.replications;
  std::vector<ReplicationRecord> records(static_cast<std::size_t>(r));
  std::vector<std::vector<double>> spectra;
  if (cfg.collect_spectra) spectra.resize(static_cast<std::size_t>(r));

  int workers = cfg.threads;
  if (workers == 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
  }
  workers = std::min(workers, r);

  if (workers <= 1) {
    for (int i = 0; i < r; ++i) {
      detail::run_one_replication(
          ctx, i, records[static_cast<std::size_t>(i)],
          cfg.collect_spectra ? &spectra[static_cast<std::size_t>(i)] : nullptr);
    }
  } else {
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= r || failed.load()) break;
        try {
          detail::run_one_replication(
              ctx, i, records[static_cast<std::size_t>(i)],
              cfg.collect_spectra ? &spectra[static_cast<std::size_t>(i)]
                                  : nullptr);
        } catch (...) {
          std::scoped_lock lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
          break;
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  result.replications = std::move(records);

  std::vector<double> norms(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) {
    norms[static_cast<std::size_t>(i)] =
        result.replications[static_cast<std::size_t>(i)].trace_norm;
  }
  if (r >= 2) {
    result.trace_norm_stats = aggregate(norms);
  } else {
    result.trace_norm_stats.mean = norms[0];
  }

  if (cfg.collect_spectra) {
    std::vector<double> pooled;
    pooled.reserve(spectra.size() * spectra.front().size());
    for (const auto& s : spectra) pooled.insert(pooled.end(), s.begin(), s.end());
    std::sort(pooled.begin(), pooled.end());
    result.pooled_spectrum = std::move(pooled);
  }

  if (cfg.compute_rephys) {
    RephysSummary rs;
    rs.bound_2r = 2.0 * result.prediction_exact->radius;
    double sum_excess = 0.0, sum_before = 0.0, sum_after = 0.0, sum_rel = 0.0;
    for (const auto& rec : result.replications) {
      const double excess = rec.rephys_excess.value();
      const double after = rec.rephys_error_after.value();
      rs.max_excess = std::max(rs.max_excess, excess);
      if (excess <= rs.bound_2r) ++rs.count_within_bound;
      sum_excess += excess;
      sum_before += rec.trace_norm;
      sum_after += after;
      sum_rel += std::abs(after - rec.trace_norm) / rec.trace_norm;
    }
    const double n = static_cast<double>(r);
    rs.mean_excess = sum_excess / n;
    rs.mean_error_before = sum_before / n;
    rs.mean_error_after = sum_after / n;
    rs.mean_abs_rel_change = sum_rel / n;
    result.rephys = rs;
  }

  return result;
}

// ---------------------------------------------------------------------------
// Persistence. CSV holds one row per replication; JSON holds the full result
// including the config echo. Numbers are written with 17 significant digits,
// which round-trips IEEE doubles exactly; 64-bit seeds are serialized as
// decimal strings to avoid any reader truncating them to 53-bit floats.

namespace detail {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

inline void save_csv(const ExperimentResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error(path, "cannot open for writing");
  const bool rephys = result.config.compute_rephys;
  out << "replication_index,seed,trace_norm,min_eigenvalue,max_eigenvalue";
  if (rephys) out << ",rephys_excess";
  out << "\n";
  for (const auto& rec : result.replications) {
    out << rec.index << ',' << rec.seed << ','
        << detail::format_double(rec.trace_norm) << ','
        << detail::format_double(rec.min_eigenvalue) << ','
        << detail::format_double(rec.max_eigenvalue);
    if (rephys) out << ',' << detail::format_double(rec.rephys_excess.value());
    out << "\n";
  }
  if (!out.flush()) throw io_error(path, "write failed");
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"state", c.state_spec},
                     {"protocol", to_string(c.protocol)},
                     {"n_qubits", c.n_qubits},
                     {"shots", c.shots},
                     {"replications", c.replications},
                     {"master_seed", std::to_string(c.master_seed)},
                     {"mode", to_string(c.mode)},
                     {"collect_spectra", c.collect_spectra},
                     {"compute_rephys", c.compute_rephys},
                     {"covariance_stats", c.covariance_stats},
                     {"allow_large_qwc", c.allow_large_qwc},
                     {"threads", c.threads}};
  if (c.gue_sigma2) j["gue_sigma2"] = *c.gue_sigma2;
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c.state_spec = j.at("state").get<std::string>();
  c.protocol = protocol_from_string(j.at("protocol").get<std::string>());
  c.n_qubits = j.at("n_qubits").get<int>();
  c.shots = j.at("shots").get<long long>();
  c.replications = j.at("replications").get<int>();
  c.master_seed = std::stoull(j.at("master_seed").get<std::string>());
  c.mode = mode_from_string(j.at("mode").get<std::string>());
  c.collect_spectra = j.at("collect_spectra").get<bool>();
  c.compute_rephys = j.at("compute_rephys").get<bool>();
  c.covariance_stats = j.at("covariance_stats").get<bool>();
  c.allow_large_qwc = j.at("allow_large_qwc").get<bool>();
  c.threads = j.at("threads").get<int>();
  if (j.contains("gue_sigma2")) c.gue_sigma2 = j.at("gue_sigma2").get<double>();
}

inline void to_json(nlohmann::json& j, const Prediction& p) {
  j = nlohmann::json{{"protocol", p.protocol},
                     {"n_qubits", p.n_qubits},
                     {"shots", p.shots},
                     {"radius", p.radius},
                     {"mean_trace_norm", p.mean_trace_norm},
                     {"var_trace_norm", p.var_trace_norm}};
}

inline void from_json(const nlohmann::json& j, Prediction& p) {
  p.protocol = j.at("protocol").get<std::string>();
  p.n_qubits = j.at("n_qubits").get<int>();
  p.shots = j.at("shots").get<long long>();
  p.radius = j.at("radius").get<double>();
  p.mean_trace_norm = j.at("mean_trace_norm").get<double>();
  p.var_trace_norm = j.at("var_trace_norm").get<double>();
}

inline void to_json(nlohmann::json& j, const VarStats& v) {
  j = nlohmann::json{{"vbar", v.vbar},
                     {"var_v", v.var_v},
                     {"bound_ratio", v.bound_ratio},
                     {"var_is_upper_bound", v.var_is_upper_bound}};
}

inline void from_json(const nlohmann::json& j, VarStats& v) {
  v.vbar = j.at("vbar").get<double>();
  v.var_v = j.at("var_v").get<double>();
  v.bound_ratio = j.at("bound_ratio").get<double>();
  v.var_is_upper_bound = j.at("var_is_upper_bound").get<bool>();
}

inline void to_json(nlohmann::json& j, const RephysSummary& r) {
  j = nlohmann::json{{"bound_2r", r.bound_2r},
                     {"count_within_bound", r.count_within_bound},
                     {"mean_excess", r.mean_excess},
                     {"max_excess", r.max_excess},
                     {"mean_error_before", r.mean_error_before},
                     {"mean_error_after", r.mean_error_after},
                     {"mean_abs_rel_change", r.mean_abs_rel_change}};
}

inline void from_json(const nlohmann::json& j, RephysSummary& r) {
  r.bound_2r = j.at("bound_2r").get<double>();
  r.count_within_bound = j.at("count_within_bound").get<long long>();
  r.mean_excess = j.at("mean_excess").get<double>();
  r.max_excess = j.at("max_excess").get<double>();
  r.mean_error_before = j.at("mean_error_before").get<double>();
  r.mean_error_after = j.at("mean_error_after").get<double>();
  r.mean_abs_rel_change = j.at("mean_abs_rel_change").get<double>();
}

inline void to_json(nlohmann::json& j, const ExperimentResult& r) {
  j = nlohmann::json::object();
  j["config"] = r.config;
  j["resolved_mode"] = r.resolved_mode;
  j["aggregate"] = {{"mean", r.trace_norm_stats.mean},
                    {"se_mean", r.trace_norm_stats.se_mean},
                    {"variance", r.trace_norm_stats.variance},
                    {"se_variance", r.trace_norm_stats.se_variance}};
  auto reps = nlohmann::json::array();
  for (const auto& rec : r.replications) {
    nlohmann::json jr = {{"index", rec.index},
                         {"seed", std::to_string(rec.seed)},
                         {"trace_norm", rec.trace_norm},
                         {"min_eigenvalue", rec.min_eigenvalue},
                         {"max_eigenvalue", rec.max_eigenvalue}};
    if (rec.rephys_excess) jr["rephys_excess"] = *rec.rephys_excess;
    if (rec.rephys_error_after) {
      jr["rephys_error_after"] = *rec.rephys_error_after;
    }
    reps.push_back(std::move(jr));
  }
  j["replications"] = std::move(reps);
  if (r.prediction_exact) j["prediction_exact"] = *r.prediction_exact;
  if (r.prediction_leading) j["prediction_leading"] = *r.prediction_leading;
  if (r.pooled_spectrum) j["pooled_spectrum"] = *r.pooled_spectrum;
  if (r.covariance_stats) j["covariance_stats"] = *r.covariance_stats;
  if (r.rephys) j["rephys_summary"] = *r.rephys;
}

inline void from_json(const nlohmann::json& j, ExperimentResult& r) {
  r.config = j.at("config").get<ExperimentConfig>();
  r.resolved_mode = j.at("resolved_mode").get<std::string>();
  const auto& agg = j.at("aggregate");
  r.trace_norm_stats.mean = agg.at("mean").get<double>();
  r.trace_norm_stats.se_mean = agg.at("se_mean").get<double>();
  r.trace_norm_stats.variance = agg.at("variance").get<double>();
  r.trace_norm_stats.se_variance = agg.at("se_variance").get<double>();
  r.replications.clear();
  for (const auto& jr : j.at("replications")) {
    ReplicationRecord rec;
    rec.index = jr.at("index").get<int>();
    rec.seed = std::stoull(jr.at("seed").get<std::string>());
    rec.trace_norm = jr.at("trace_norm").get<double>();
    rec.min_eigenvalue = jr.at("min_eigenvalue").get<double>();
    rec.max_eigenvalue = jr.at("max_eigenvalue").get<double>();
    if (jr.contains("rephys_excess")) {
      rec.rephys_excess = jr.at("rephys_excess").get<double>();
    }
    if (jr.contains("rephys_error_after")) {
      rec.rephys_error_after = jr.at("rephys_error_after").get<double>();
    }
    r.replications.push_back(std::move(rec));
  }
  if (j.contains("prediction_exact")) {
    r.prediction_exact = j.at("prediction_exact").get<Prediction>();
  }
  if (j.contains("prediction_leading")) {
    r.prediction_leading = j.at("prediction_leading").get<Prediction>();
  }
  if (j.contains("pooled_spectrum")) {
    r.pooled_spectrum = j.at("pooled_spectrum").get<std::vector<double>>();
  }
  if (j.contains("covariance_stats")) {
    r.covariance_stats = j.at("covariance_stats").get<VarStats>();
  }
  if (j.contains("rephys_summary")) {
    r.rephys = j.at("rephys_summary").get<RephysSummary>();
  }
}

inline void save_json(const ExperimentResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error(path, "cannot open for writing");
  const nlohmann::json j = result;
  out << j.dump(2) << "\n";
  if (!out.flush()) throw io_error(path, "write failed");
}

inline ExperimentResult load_result_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path, "cannot open for reading");
  nlohmann::json j;
  try {
    in >> j;
    return j.get<ExperimentResult>();
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path, std::string("malformed result file: ") + e.what());
  }
}

// Reads the trace-norm column from either persisted format.
inline std::vector<double> load_trace_norms(const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    const ExperimentResult r = load_result_json(path);
    std::vector<double> norms;
    norms.reserve(r.replications.size());
    for (const auto& rec : r.replications) norms.push_back(rec.trace_norm);
    return norms;
  }
  std::ifstream in(path);
  if (!in) throw io_error(path, "cannot open for reading");
  std::string line;
  if (!std::getline(in, line)) throw io_error(path, "empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::size_t column = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "trace_norm") column = i;
  }
  if (column == header.size()) {
    throw io_error(path, "no trace_norm column in CSV header");
  }
  std::vector<double> norms;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t i = 0; i <= column; ++i) {
      if (!std::getline(ss, cell, ',')) {
        throw io_error(path, "short CSV row: " + line);
      }
    }
    norms.push_back(std::stod(cell));
  }
  if (norms.empty()) throw io_error(path, "no data rows");
  return norms;
}

// Default output file name: {protocol}_{state}_N{n}_S{s}_seed{k}.{ext},
// with the state descriptor reduced to filesystem-safe characters.
inline std::string default_output_name(const ExperimentConfig& cfg,
                                       const std::string& extension) {
  std::string state;
  for (const char ch : cfg.state_spec) {
    if ((ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
        (ch >= '0' && ch <= '9') || ch == '.' || ch == '-') {
      state += ch;
    } else if (ch == '(' || ch == '/' || ch == '_') {
      state += '-';
    }  // ')' and anything else: dropped
  }
  std::ostringstream name;
  name << to_string(cfg.protocol) << "_" << state << "_N" << cfg.n_qubits
       << "_S" << cfg.shots << "_seed" << cfg.master_seed << "." << extension;
  return name.str();
}

}  // namespace pauli_rmt
