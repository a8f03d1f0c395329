#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "pauli_rmt/common.hpp"
#include "pauli_rmt/covariance.hpp"
#include "pauli_rmt/rng.hpp"
#include "pauli_rmt/states.hpp"
#include "pauli_rmt/transform.hpp"

namespace pauli_rmt {

struct ShotPlan {
  long long shots;

  explicit ShotPlan(long long s) : shots(s) {
    if (s < 1) {
      throw std::invalid_argument("ShotPlan: shot count must be >= 1, got " +
                                  std::to_string(s));
    }
  }
};

struct SampleProvenance {
  std::string protocol;
  long long shots = 0;
  std::uint64_t seed = 0;
};

// One draw of the coefficient estimation error y_j = (c_hat_j - c_j) / D.
// The identity entry is exactly zero; the reconstructed error operator is
// synthesize(y). Matrix and spectrum are filled on demand.
struct ExcessSample {
  CoefficientVector y;
  SampleProvenance provenance;
  std::optional<Eigen::MatrixXcd> matrix;
  std::optional<std::vector<double>> spectrum;
};

// Independent-binomial protocol: every non-identity coefficient is
// estimated from its own S single-shot measurements, so the count of +1
// outcomes is Binomial(S, (1 + c_j) / 2).
inline ExcessSample sample_naive(const StateModel& state, ShotPlan plan,
                                 RngStream& rng) {
  const int n = state.n_qubits();
  const double d = static_cast<double>(pow2(n));
  const double s = static_cast<double>(plan.shots);
  const auto& c = state.pauli_coeffs().values;
  auto y = CoefficientVector::zero(n);
  for (Eigen::Index j = 1; j < c.size(); ++j) {
    const double p = std::clamp(0.5 * (1.0 + c[j]), 0.0, 1.0);
    const double k = static_cast<double>(rng.binomial(plan.shots, p));
    const double estimate = 2.0 * k / s - 1.0;
    y.values[j] = (estimate - c[j]) / d;
  }
  return {std::move(y), {"naive", plan.shots, rng.seed()}, {}, {}};
}

// Grouped protocol: S shots for each of the 3^N full-weight settings, with
// every Pauli string estimated from all settings covering it. The per-setting
// histogram is reduced by an integer Walsh-Hadamard transform, which yields
// the outcome-product sums of all 2^N covered strings at once; accumulators
// stay in 64-bit integers, so pooling is exact.
inline ExcessSample sample_qwc(const StateModel& state, ShotPlan plan,
                               RngStream& rng) {
  const int n = state.n_qubits();
  if (n > 10) {
    throw std::domain_error(
        "sample_qwc: setting enumeration limited to 10 qubits, got " +
        std::to_string(n));
  }
  const std::uint64_t d = pow2(n);
  const std::uint64_t m = pow4(n);
  const std::uint64_t settings = pow3(n);
  const auto& c = state.pauli_coeffs().values;

  std::vector<std::int64_t> acc(m, 0);
  std::vector<std::int64_t> hist(d);
  std::vector<std::uint64_t> pauli_of_subset(d);

  for (std::uint64_t q = 0; q < settings; ++q) {
    const MeasurementSetting setting = MeasurementSetting::from_index(n, q);
    const SettingDistribution dist = state.setting_distribution(setting);
    const AliasTable alias(dist.probabilities);

    std::fill(hist.begin(), hist.end(), 0);
    for (long long shot = 0; shot < plan.shots; ++shot) {
      ++hist[alias.sample(rng)];
    }

    // In-place transform: entry T becomes sum_b hist[b] (-1)^popcount(b & T),
    // the summed product of outcomes over the sites in T.
    for (std::uint64_t bit = 1; bit < d; bit <<= 1) {
      for (std::uint64_t i = 0; i < d; ++i) {
        if (i & bit) continue;
        const std::int64_t u = hist[i];
        const std::int64_t v = hist[i | bit];
        hist[i] = u + v;
        hist[i | bit] = u - v;
      }
    }

    // Subset T of sites corresponds to the Pauli string with this setting's
    // letter on each site of T; build indices by lowest-bit recursion.
    pauli_of_subset[0] = 0;
    std::uint64_t contrib[32];
    for (int k = 0; k < n; ++k) {
      const auto digit = static_cast<std::uint64_t>(
          static_cast<int>(setting.axes[static_cast<std::size_t>(k)]) + 1);
      contrib[k] = digit << (2 * k);
    }
    for (std::uint64_t t = 1; t < d; ++t) {
      const std::uint64_t low = t & (~t + 1);
      pauli_of_subset[t] =
          pauli_of_subset[t ^ low] + contrib[std::countr_zero(low)];
    }
    for (std::uint64_t t = 0; t < d; ++t) {
      acc[pauli_of_subset[t]] += hist[t];
    }
  }

  auto y = CoefficientVector::zero(n);
  const double dd = static_cast<double>(d);
  for (std::uint64_t j = 1; j < m; ++j) {
    const std::uint64_t supp =
        detail::compact_bits(j) | detail::compact_bits(j >> 1);
    const int w = std::popcount(supp);
    // Each string is covered by exactly 3^(N - w) settings.
    const double total_shots =
        static_cast<double>(plan.shots) * static_cast<double>(pow3(n - w));
    const double estimate = static_cast<double>(acc[j]) / total_shots;
    y.values[static_cast<Eigen::Index>(j)] =
        (estimate - c[static_cast<Eigen::Index>(j)]) / dd;
  }
  return {std::move(y), {"qwc", plan.shots, rng.seed()}, {}, {}};
}

// Gaussian surrogate for a shot-level protocol: draws y ~ N(0, Sigma) from a
// precomputed factorization. Diagonal models scale independent normals;
// dense models up to 4096 coefficients use an eigendecomposition (rejecting
// indefinite input); larger dense models fall back to a pivoted LDLT.
class SurrogateSampler {
 public:
  explicit SurrogateSampler(const CovarianceModel& model)
      : n_(model.n_qubits()), shots_(model.shots()) {
    if (model.kind() == CovarianceModel::Kind::diagonal) {
      mode_ = Mode::diagonal;
      scale_ = model.variances().cwiseSqrt();
      return;
    }
    const auto& sigma = model.sigma();
    if (sigma.rows() <= var_stats_dense_limit) {
      mode_ = Mode::eigen;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
      if (es.info() != Eigen::Success) {
        throw std::runtime_error("SurrogateSampler: eigensolver failed");
      }
      Eigen::VectorXd lam = es.eigenvalues();
      const double floor = -1e-10 * std::max(std::abs(lam[0]),
                                             std::abs(lam[lam.size() - 1]));
      for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam[i] < floor) {
          throw std::invalid_argument(
              "SurrogateSampler: covariance eigenvalue " +
              std::to_string(lam[i]) + " is negative beyond tolerance");
        }
        if (lam[i] < 0.0) lam[i] = 0.0;
      }
      transform_ = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
    } else {
      mode_ = Mode::ldlt;
      ldlt_ = std::make_shared<Eigen::LDLT<Eigen::MatrixXd>>(sigma);
      if (ldlt_->info() != Eigen::Success) {
        throw std::runtime_error("SurrogateSampler: LDLT factorization failed");
      }
      Eigen::VectorXd dvec = ldlt_->vectorD();
      const double floor = -1e-10 * dvec.cwiseAbs().maxCoeff();
      for (Eigen::Index i = 0; i < dvec.size(); ++i) {
        if (dvec[i] < floor) {
          throw std::invalid_argument(
              "SurrogateSampler: covariance pivot " + std::to_string(dvec[i]) +
              " is negative beyond tolerance");
        }
        if (dvec[i] < 0.0) dvec[i] = 0.0;
      }
      sqrt_d_ = dvec.cwiseSqrt();
    }
  }

  int n_qubits() const { return n_; }

  ExcessSample sample(RngStream& rng) const {
    const auto m = static_cast<Eigen::Index>(pow4(n_));
    Eigen::VectorXd z(m);
    for (Eigen::Index i = 0; i < m; ++i) z[i] = rng.normal();
    Eigen::VectorXd y;
    switch (mode_) {
      case Mode::diagonal:
        y = scale_.cwiseProduct(z);
        break;
      case Mode::eigen:
        y = transform_ * z;
        break;
      case Mode::ldlt:
        y = ldlt_->transpositionsP().transpose() *
            Eigen::VectorXd(ldlt_->matrixL() *
                            Eigen::VectorXd(sqrt_d_.cwiseProduct(z)));
        break;
    }
    y[0] = 0.0;
    return {CoefficientVector(n_, std::move(y)),
            {"surrogate", shots_, rng.seed()},
            {},
            {}};
  }

 private:
  enum class Mode { diagonal, eigen, ldlt };

  int n_;
  long long shots_;
  Mode mode_ = Mode::diagonal;
  Eigen::VectorXd scale_;
  Eigen::MatrixXd transform_;
  std::shared_ptr<Eigen::LDLT<Eigen::MatrixXd>> ldlt_;
  Eigen::VectorXd sqrt_d_;
};

inline ExcessSample sample_surrogate(const CovarianceModel& model,
                                     RngStream& rng) {
  return SurrogateSampler(model).sample(rng);
}

// GUE draw with diagonal variance sigma2 and off-diagonal real/imaginary
// variances sigma2 / 2, so E[Tr H^2] = dim^2 sigma2.
inline HermitianMatrix sample_gue(Eigen::Index dim, double sigma2,
                                  RngStream& rng) {
  if (dim < 1) {
    throw std::invalid_argument("sample_gue: dimension must be >= 1");
  }
  if (!(sigma2 > 0.0)) {
    throw std::invalid_argument("sample_gue: variance must be positive");
  }
  const double diag_scale = std::sqrt(sigma2);
  const double off_scale = std::sqrt(0.5 * sigma2);
  Eigen::MatrixXcd h(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    h(r, r) = diag_scale * rng.normal();
    for (Eigen::Index c = r + 1; c < dim; ++c) {
      const double re = off_scale * rng.normal();
      const double im = off_scale * rng.normal();
      h(r, c) = {re, im};
      h(c, r) = {re, -im};
    }
  }
  return HermitianMatrix(std::move(h));
}

// Synthesizes the error operator and its spectrum into the sample.
inline void realize_sample(ExcessSample& sample) {
  if (!sample.matrix) {
    sample.matrix = synthesize(sample.y).matrix();
  }
  if (!sample.spectrum) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(*sample.matrix,
                                                       Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
      throw std::runtime_error("realize_sample: eigensolver failed");
    }
    sample.spectrum = std::vector<double>(
        es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  }
}

}  // namespace pauli_rmt
