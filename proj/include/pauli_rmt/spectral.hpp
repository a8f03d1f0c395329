#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "pauli_rmt/transform.hpp"

namespace pauli_rmt {

// Empirical spectral measure: one unit-mass atom per eigenvalue, kept
// sorted ascending.
struct SpectralMeasure {
  std::vector<double> atoms;

  explicit SpectralMeasure(std::vector<double> values)
      : atoms(std::move(values)) {
    if (atoms.empty()) {
      throw std::invalid_argument("SpectralMeasure: no atoms");
    }
    std::sort(atoms.begin(), atoms.end());
  }

  std::size_t dim() const { return atoms.size(); }
};

inline SpectralMeasure eigenvalues(const HermitianMatrix& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.matrix(),
                                                     Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigenvalues: eigensolver failed");
  }
  return SpectralMeasure(std::vector<double>(
      es.eigenvalues().data(),
      es.eigenvalues().data() + es.eigenvalues().size()));
}

inline double trace_norm(const SpectralMeasure& m) {
  double sum = 0.0;
  for (const double a : m.atoms) sum += std::abs(a);
  return sum;
}

inline double trace_norm(const HermitianMatrix& h) {
  return trace_norm(eigenvalues(h));
}

// Semicircle density of radius R, the large-D limit of the flat-variance
// Gaussian ensemble: pdf(x) = 2 sqrt(R^2 - x^2) / (pi R^2) on [-R, R].
class SemicircleLaw {
 public:
  explicit SemicircleLaw(double radius) : r_(radius) {
    if (!(radius > 0.0)) {
      throw std::invalid_argument("SemicircleLaw: radius must be positive");
    }
  }

  // Radius matched to an error-coefficient variance profile with mean vbar
  // on a dimension-D register: R = 2 D sqrt(vbar).
  static SemicircleLaw from_vbar(double vbar, Eigen::Index dim) {
    if (!(vbar > 0.0)) {
      throw std::invalid_argument("SemicircleLaw: vbar must be positive");
    }
    if (dim < 1) {
      throw std::invalid_argument("SemicircleLaw: dimension must be >= 1");
    }
    return SemicircleLaw(2.0 * static_cast<double>(dim) * std::sqrt(vbar));
  }

  double radius() const { return r_; }

  double pdf(double x) const {
    if (std::abs(x) >= r_) return 0.0;
    return 2.0 * std::sqrt(r_ * r_ - x * x) / (M_PI * r_ * r_);
  }

  double cdf(double x) const {
    if (x <= -r_) return 0.0;
    if (x >= r_) return 1.0;
    return 0.5 + x * std::sqrt(r_ * r_ - x * x) / (M_PI * r_ * r_) +
           std::asin(x / r_) / M_PI;
  }

  // Inverse CDF by bisection; the CDF is strictly increasing on [-R, R].
  double quantile(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) {
      throw std::invalid_argument("SemicircleLaw::quantile: argument " +
                                  std::to_string(u) + " outside [0, 1]");
    }
    if (u == 0.0) return -r_;
    if (u == 1.0) return r_;
    double lo = -r_, hi = r_;
    for (int iter = 0; iter < 200 && hi - lo > 1e-15 * r_; ++iter) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  // Mean absolute eigenvalue under the law, 4R / (3 pi).
  double mean_abs() const { return 4.0 * r_ / (3.0 * M_PI); }

 private:
  double r_;
};

// Coupling distances between equal-size sorted atom sets under the
// normalization used throughout: W1 = (1/n) sum |d_k| and
// W2^2 = (1/n^2) sum d_k^2 with d_k the sorted differences.
struct WassersteinDistances {
  double w1 = 0.0;
  double w2_squared = 0.0;
};

inline WassersteinDistances wasserstein_sorted(const SpectralMeasure& a,
                                               const SpectralMeasure& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("wasserstein_sorted: measures have " +
                                std::to_string(a.dim()) + " and " +
                                std::to_string(b.dim()) + " atoms");
  }
  const double n = static_cast<double>(a.dim());
  WassersteinDistances out;
  for (std::size_t k = 0; k < a.dim(); ++k) {
    const double d = a.atoms[k] - b.atoms[k];
    out.w1 += std::abs(d) / n;
    out.w2_squared += d * d / (n * n);
  }
  return out;
}

// Exact two-point coupling average over all ordered pairs (j, k), j != k:
//   (1 / (D^2 (D^2 - 1))) sum_{j != k} (d_j + d_k)
// with d_j the squared sorted differences. Expanding the sum gives the
// closed form 2 (D - 1) / (D^2 (D^2 - 1)) * sum_j d_j, equal to
// 2 W2^2 / (D + 1); the standalone ratio helper below exposes how far the
// finite-D value sits from 2 W2^2.
inline double two_point_w2(const SpectralMeasure& a, const SpectralMeasure& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("two_point_w2: measures have " +
                                std::to_string(a.dim()) + " and " +
                                std::to_string(b.dim()) + " atoms");
  }
  const double d = static_cast<double>(a.dim());
  if (a.dim() < 2) {
    throw std::invalid_argument("two_point_w2: need at least two atoms");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) {
    const double diff = a.atoms[k] - b.atoms[k];
    sum += diff * diff;
  }
  return 2.0 * (d - 1.0) * sum / (d * d * (d * d - 1.0));
}

inline double two_point_w2_ratio(const SpectralMeasure& a,
                                 const SpectralMeasure& b) {
  const double w2sq = wasserstein_sorted(a, b).w2_squared;
  if (w2sq == 0.0) {
    throw std::domain_error("two_point_w2_ratio: measures coincide");
  }
  return two_point_w2(a, b) / (2.0 * w2sq);
}

// W1 distance from an empirical measure to the law, evaluated by quantile
// matching at midpoint ranks (k - 1/2) / n against the sorted atoms.
inline double semicircle_distance(const SpectralMeasure& m,
                                  const SemicircleLaw& law) {
  const double n = static_cast<double>(m.dim());
  double sum = 0.0;
  for (std::size_t k = 0; k < m.dim(); ++k) {
    const double u = (static_cast<double>(k) + 0.5) / n;
    sum += std::abs(m.atoms[k] - law.quantile(u));
  }
  return sum / n;
}

}  // namespace pauli_rmt
