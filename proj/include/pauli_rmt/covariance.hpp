#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "pauli_rmt/common.hpp"
#include "pauli_rmt/pauli_string.hpp"
#include "pauli_rmt/states.hpp"

namespace pauli_rmt {

// Second-moment model of the coefficient estimation error y. Protocols
// whose estimators are independent across Pauli indices store just the
// per-index variances; correlated protocols store the full matrix. Entry 0
// (the identity coefficient) is exactly zero in both forms.
class CovarianceModel {
 public:
  enum class Kind { diagonal, dense };

  static CovarianceModel diagonal(int n_qubits, long long shots,
                                  Eigen::VectorXd variances) {
    check_register_size(n_qubits, max_dense_qubits,
                        "CovarianceModel::diagonal");
    if (variances.size() != static_cast<Eigen::Index>(pow4(n_qubits))) {
      throw std::invalid_argument(
          "CovarianceModel::diagonal: variance vector has " +
          std::to_string(variances.size()) + " entries, expected " +
          std::to_string(pow4(n_qubits)));
    }
    for (Eigen::Index i = 0; i < variances.size(); ++i) {
      if (variances[i] < 0.0) {
        throw std::invalid_argument(
            "CovarianceModel::diagonal: negative variance at index " +
            std::to_string(i));
      }
    }
    if (variances[0] != 0.0) {
      throw std::invalid_argument(
          "CovarianceModel::diagonal: identity coefficient variance must be 0");
    }
    CovarianceModel m(Kind::diagonal, n_qubits, shots);
    m.diag_ = std::move(variances);
    return m;
  }

  static CovarianceModel dense(int n_qubits, long long shots,
                               Eigen::MatrixXd sigma) {
    check_register_size(n_qubits, max_dense_qubits, "CovarianceModel::dense");
    const auto m4 = static_cast<Eigen::Index>(pow4(n_qubits));
    if (sigma.rows() != m4 || sigma.cols() != m4) {
      throw std::invalid_argument("CovarianceModel::dense: matrix is " +
                                  std::to_string(sigma.rows()) + "x" +
                                  std::to_string(sigma.cols()) +
                                  ", expected " + std::to_string(m4) +
                                  " square");
    }
    CovarianceModel m(Kind::dense, n_qubits, shots);
    m.sigma_ = std::move(sigma);
    return m;
  }

  Kind kind() const { return kind_; }
  int n_qubits() const { return n_; }
  long long shots() const { return shots_; }
  std::uint64_t size() const { return pow4(n_); }

  const Eigen::VectorXd& variances() const {
    if (kind_ != Kind::diagonal) {
      throw std::logic_error("CovarianceModel: not a diagonal model");
    }
    return diag_;
  }

  const Eigen::MatrixXd& sigma() const {
    if (kind_ != Kind::dense) {
      throw std::logic_error("CovarianceModel: not a dense model");
    }
    return sigma_;
  }

 private:
  CovarianceModel(Kind k, int n, long long shots)
      : kind_(k), n_(n), shots_(shots) {
    if (shots < 1) {
      throw std::invalid_argument("CovarianceModel: shot count must be >= 1");
    }
  }

  Kind kind_;
  int n_;
  long long shots_;
  Eigen::VectorXd diag_;
  Eigen::MatrixXd sigma_;
};

// Moments of the variance profile: vbar is the mean diagonal entry, var_v
// its spread, and bound_ratio = 2^N var_v / vbar the figure controlling how
// close the profile is to flat. For dense models too large to diagonalize,
// var_v falls back to the Frobenius bound and is flagged as such.
struct VarStats {
  double vbar = 0.0;
  double var_v = 0.0;
  double bound_ratio = 0.0;
  bool var_is_upper_bound = false;
};

// Per-index estimator variances of the independent-binomial protocol:
// v_j = (1 - c_j^2) / (S D^2), and exactly zero for j = 0.
inline CovarianceModel naive_variances(const StateModel& state,
                                       long long shots) {
  if (shots < 1) {
    throw std::invalid_argument("naive_variances: shot count must be >= 1");
  }
  const auto& c = state.pauli_coeffs().values;
  const double d2 = static_cast<double>(pow2(state.n_qubits())) *
                    static_cast<double>(pow2(state.n_qubits()));
  Eigen::VectorXd v(c.size());
  v[0] = 0.0;
  for (Eigen::Index j = 1; j < c.size(); ++j) {
    const double cj = c[j];
    v[j] = std::max(0.0, 1.0 - cj * cj) / (static_cast<double>(shots) * d2);
  }
  return CovarianceModel::diagonal(state.n_qubits(), shots, std::move(v));
}

// Full covariance of the grouped protocol:
//   Sigma_ij = k_ij (Tr(rho P_i P_j) - c_i c_j) / D^2,
// where k_ij = 3^(w_i + w_j - w_ij - N) / S for compatible pairs (w_ij the
// joint weight) and 0 otherwise. Compatible strings commute, so the product
// P_i P_j is itself a Pauli string with phase +1 and Tr(rho P_i P_j) is read
// off the coefficient vector.
inline CovarianceModel qwc_sigma(const StateModel& state, long long shots) {
  const int n = state.n_qubits();
  if (n > 7) {
    throw std::domain_error(
        "qwc_sigma: dense covariance limited to 7 qubits, got " +
        std::to_string(n));
  }
  if (shots < 1) {
    throw std::invalid_argument("qwc_sigma: shot count must be >= 1");
  }
  const std::uint64_t m = pow4(n);
  const auto& c = state.pauli_coeffs().values;
  const double d2 = static_cast<double>(pow2(n)) * static_cast<double>(pow2(n));
  const double s = static_cast<double>(shots);

  std::vector<double> inv_pow3(static_cast<std::size_t>(2 * n + 1));
  for (int e = 0; e <= 2 * n; ++e) {
    inv_pow3[static_cast<std::size_t>(e)] =
        1.0 / static_cast<double>(pow3(e));
  }

  struct Bits {
    std::uint32_t x, z, supp;
    int w;
  };
  std::vector<Bits> bits(m);
  for (std::uint64_t j = 0; j < m; ++j) {
    const std::uint64_t e = detail::compact_bits(j);
    const std::uint64_t o = detail::compact_bits(j >> 1);
    const auto x = static_cast<std::uint32_t>(e ^ o);
    const auto z = static_cast<std::uint32_t>(o);
    bits[j] = {x, z, x | z, std::popcount(x | z)};
  }

  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                static_cast<Eigen::Index>(m));
  for (std::uint64_t i = 1; i < m; ++i) {
    const Bits& pi = bits[i];
    const double ci = c[static_cast<Eigen::Index>(i)];
    for (std::uint64_t j = i; j < m; ++j) {
      const Bits& pj = bits[j];
      const std::uint32_t both = pi.supp & pj.supp;
      if (((pi.x ^ pj.x) | (pi.z ^ pj.z)) & both) continue;
      const int wij = std::popcount(pi.supp | pj.supp);
      // Compatible strings share letters on the overlap, so the product
      // phase i^e must vanish; guard against encoding regressions.
      const int e = std::popcount(pi.x & pi.z) + std::popcount(pj.x & pj.z) -
                    std::popcount((pi.x ^ pj.x) & (pi.z ^ pj.z)) +
                    2 * std::popcount(pi.z & pj.x);
      if (((e % 4) + 4) % 4 != 0) {
        throw std::logic_error("qwc_sigma: nonreal product phase");
      }
      const std::uint64_t prod =
          detail::spread_bits((pi.x ^ pj.x) ^ (pi.z ^ pj.z)) |
          (detail::spread_bits(pi.z ^ pj.z) << 1);
      const double k =
          inv_pow3[static_cast<std::size_t>(n + wij - pi.w - pj.w)] / s;
      const double gamma =
          (c[static_cast<Eigen::Index>(prod)] - ci * c[static_cast<Eigen::Index>(j)]) / d2;
      const double entry = k * gamma;
      sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entry;
      sigma(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = entry;
    }
  }
  return CovarianceModel::dense(n, shots, std::move(sigma));
}

// Eigenvalue cutoff above which dense models report the Frobenius bound
// instead of exact spread.
inline constexpr Eigen::Index var_stats_dense_limit = 4096;

inline VarStats var_stats(const CovarianceModel& model) {
  VarStats out;
  const double m = static_cast<double>(model.size());
  const double d = static_cast<double>(pow2(model.n_qubits()));
  if (model.kind() == CovarianceModel::Kind::diagonal) {
    const auto& v = model.variances();
    out.vbar = v.sum() / m;
    out.var_v = (v.array() - out.vbar).square().sum() / m;
  } else if (model.sigma().rows() <= var_stats_dense_limit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.sigma(),
                                                      Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
      throw std::runtime_error("var_stats: eigensolver failed");
    }
    const Eigen::VectorXd& lam = es.eigenvalues();
    out.vbar = lam.sum() / m;
    out.var_v = (lam.array() - out.vbar).square().sum() / m;
  } else {
    out.vbar = model.sigma().trace() / m;
    out.var_v = model.sigma().squaredNorm() / m;
    out.var_is_upper_bound = true;
  }
  out.bound_ratio = out.vbar > 0.0 ? d * out.var_v / out.vbar : 0.0;
  return out;
}

// Closed-form mean variance without building the model:
//   naive: (D^2 - D Tr(rho^2)) / (S D^4)
//   qwc:   sum_j 3^(w_j) (1 - c_j^2) / (S D^4 3^N)
inline double closed_form_vbar(TomographyProtocol protocol,
                               const StateModel& state, long long shots) {
  if (shots < 1) {
    throw std::invalid_argument("closed_form_vbar: shot count must be >= 1");
  }
  const double d = static_cast<double>(pow2(state.n_qubits()));
  const double s = static_cast<double>(shots);
  if (protocol == TomographyProtocol::naive) {
    return (d * d - d * state.purity()) / (s * d * d * d * d);
  }
  const int n = state.n_qubits();
  const auto& c = state.pauli_coeffs().values;
  double sum = 0.0;
  for (std::uint64_t j = 0; j < pow4(n); ++j) {
    const std::uint64_t supp =
        detail::compact_bits(j) | detail::compact_bits(j >> 1);
    const double cj = c[static_cast<Eigen::Index>(j)];
    sum += static_cast<double>(pow3(std::popcount(supp))) *
           std::max(0.0, 1.0 - cj * cj);
  }
  return sum / (s * d * d * d * d * static_cast<double>(pow3(n)));
}

}  // namespace pauli_rmt
