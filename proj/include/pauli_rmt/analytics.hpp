#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "pauli_rmt/common.hpp"
#include "pauli_rmt/covariance.hpp"
#include "pauli_rmt/spectral.hpp"
#include "pauli_rmt/states.hpp"
#include "pauli_rmt/transform.hpp"

namespace pauli_rmt {

// Predicted trace-norm statistics of the error operator under the
// semicircle model with radius R = 2 D sqrt(vbar):
//   mean = 4 D R / (3 pi),  variance = R^2 / pi^2.
struct Prediction {
  std::string protocol;
  int n_qubits = 0;
  long long shots = 0;
  double radius = 0.0;
  double mean_trace_norm = 0.0;
  double var_trace_norm = 0.0;
};

enum class PredictionMode { exact_vbar, leading_order };

inline Prediction prediction_from_vbar(const std::string& protocol,
                                       int n_qubits, long long shots,
                                       double vbar) {
  const double d = static_cast<double>(pow2(n_qubits));
  const double r = 2.0 * d * std::sqrt(vbar);
  Prediction p;
  p.protocol = protocol;
  p.n_qubits = n_qubits;
  p.shots = shots;
  p.radius = r;
  p.mean_trace_norm = 4.0 * d * r / (3.0 * M_PI);
  p.var_trace_norm = r * r / (M_PI * M_PI);
  return p;
}

// leading_order drops the state dependence entirely:
//   naive: vbar = 1 / (S D^2), giving mean = (8 D / 3 pi) / sqrt(S)
//   qwc:   vbar = (5/24)^N / S, giving mean = (8 / 3 pi) (10/3)^(N/2) / sqrt(S)
inline Prediction predict(TomographyProtocol protocol, const StateModel& state,
                          long long shots, PredictionMode mode) {
  if (shots < 1) {
    throw std::invalid_argument("predict: shot count must be >= 1");
  }
  const int n = state.n_qubits();
  double vbar = 0.0;
  if (mode == PredictionMode::exact_vbar) {
    vbar = closed_form_vbar(protocol, state, shots);
  } else if (protocol == TomographyProtocol::naive) {
    const double d = static_cast<double>(pow2(n));
    vbar = 1.0 / (static_cast<double>(shots) * d * d);
  } else {
    vbar = std::pow(5.0 / 24.0, n) / static_cast<double>(shots);
  }
  return prediction_from_vbar(protocol_name(protocol), n, shots, vbar);
}

inline Prediction predict_gue(int n_qubits, long long shots, double sigma2) {
  if (!(sigma2 > 0.0)) {
    throw std::invalid_argument("predict_gue: variance must be positive");
  }
  const double d = static_cast<double>(pow2(n_qubits));
  // R = 2 sigma sqrt(D) corresponds to vbar = sigma2 / D.
  return prediction_from_vbar("gue", n_qubits, shots, sigma2 / d);
}

// Shot budget for the grouped protocol that drives the Markov bound
// P(|error| >= eps) <= fail_prob at leading order:
//   S >= (8 / (3 pi eps fail_prob))^2 (10/3)^N,
// for a total of 3^N S copies, growing as 10^N / eps^2.
struct ComplexityEstimate {
  double epsilon = 0.0;
  double fail_prob = 0.0;
  int n_qubits = 0;
  double shots_per_setting = 0.0;
  double total_copies = 0.0;
};

inline ComplexityEstimate markov_shots(double epsilon, double fail_prob,
                                       int n_qubits) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("markov_shots: epsilon must be positive");
  }
  if (!(fail_prob > 0.0 && fail_prob < 1.0)) {
    throw std::invalid_argument("markov_shots: failure probability must be in (0, 1)");
  }
  check_register_size(n_qubits, max_qubits, "markov_shots");
  ComplexityEstimate e;
  e.epsilon = epsilon;
  e.fail_prob = fail_prob;
  e.n_qubits = n_qubits;
  const double base = 8.0 / (3.0 * M_PI * epsilon * fail_prob);
  e.shots_per_setting = base * base * std::pow(10.0 / 3.0, n_qubits);
  e.total_copies = e.shots_per_setting * static_cast<double>(pow3(n_qubits));
  return e;
}

// Empirical exceedance frequency of the trace norm with a 95% Wilson score
// interval, alongside the model bounds evaluated at the same threshold:
// Markov gives P <= mean / eps, Paley-Zygmund gives
// P >= (1 - eps / mean)^2 / (1 + var / mean^2) for eps < mean.
struct FailureProbability {
  double epsilon = 0.0;
  long long replications = 0;
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double markov_bound = 0.0;
  double pz_floor = 0.0;
};

inline FailureProbability empirical_failure_prob(
    const std::vector<double>& trace_norms, double epsilon, double mean,
    double variance) {
  if (trace_norms.size() < 30) {
    throw std::invalid_argument(
        "empirical_failure_prob: need at least 30 replications, got " +
        std::to_string(trace_norms.size()));
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("empirical_failure_prob: epsilon must be positive");
  }
  FailureProbability f;
  f.epsilon = epsilon;
  f.replications = static_cast<long long>(trace_norms.size());
  long long hits = 0;
  for (const double t : trace_norms) {
    if (t >= epsilon) ++hits;
  }
  const double n = static_cast<double>(trace_norms.size());
  f.p_hat = static_cast<double>(hits) / n;
  const double z = 1.959963984540054;  // 97.5% normal quantile
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (f.p_hat + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(f.p_hat * (1.0 - f.p_hat) / n + z2 / (4.0 * n * n)) / denom;
  f.ci_low = std::max(0.0, center - half);
  f.ci_high = std::min(1.0, center + half);
  f.markov_bound = std::min(1.0, mean / epsilon);
  if (epsilon < mean) {
    const double shortfall = 1.0 - epsilon / mean;
    f.pz_floor = shortfall * shortfall / (1.0 + variance / (mean * mean));
  } else {
    f.pz_floor = 0.0;
  }
  return f;
}

// Closest-spectrum physicalization: clip the most negative eigenvalues to
// zero and shift the deficit onto the survivors, preserving unit trace.
// Walking the sorted spectrum once gives the fixed point directly.
inline std::vector<double> rephysicalize_spectrum(std::vector<double> mu) {
  if (mu.empty()) {
    throw std::invalid_argument("rephysicalize_spectrum: empty spectrum");
  }
  std::vector<std::size_t> order(mu.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return mu[a] < mu[b]; });
  const auto n = mu.size();
  double deficit = 0.0;
  std::size_t cut = 0;
  for (; cut < n; ++cut) {
    const double value = mu[order[cut]];
    const double share =
        deficit / static_cast<double>(n - cut);  // shift if kept as-is
    if (value + share >= 0.0) break;
    deficit += value;
  }
  if (cut == n) {
    throw std::invalid_argument(
        "rephysicalize_spectrum: spectrum sums to a nonpositive value");
  }
  const double share = deficit / static_cast<double>(n - cut);
  for (std::size_t k = 0; k < cut; ++k) mu[order[k]] = 0.0;
  for (std::size_t k = cut; k < n; ++k) mu[order[k]] += share;
  return mu;
}

struct RephysProjection {
  HermitianMatrix projected;
  double excess = 0.0;  // total spectral movement, sum_j |mu_j - mu'_j|
};

inline RephysProjection rephys_project(const HermitianMatrix& h) {
  const double tr = h.matrix().trace().real();
  if (std::abs(tr - 1.0) > 1e-8) {
    throw std::invalid_argument("rephys_project: trace " + std::to_string(tr) +
                                " differs from 1 by more than 1e-8");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.matrix());
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("rephys_project: eigensolver failed");
  }
  const Eigen::VectorXd& mu = es.eigenvalues();
  std::vector<double> fixed = rephysicalize_spectrum(
      std::vector<double>(mu.data(), mu.data() + mu.size()));
  double excess = 0.0;
  Eigen::VectorXd diag(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    diag[i] = fixed[static_cast<std::size_t>(i)];
    excess += std::abs(mu[i] - diag[i]);
  }
  Eigen::MatrixXcd out =
      es.eigenvectors() * diag.asDiagonal() * es.eigenvectors().adjoint();
  return {HermitianMatrix(std::move(out), 1e-10), excess};
}

inline HermitianMatrix rephysicalize(const HermitianMatrix& h) {
  return rephys_project(h).projected;
}

inline double rephys_excess(const HermitianMatrix& h) {
  return rephys_project(h).excess;
}

}  // namespace pauli_rmt
