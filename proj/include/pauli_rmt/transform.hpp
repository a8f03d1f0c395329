#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pauli_rmt/common.hpp"
#include "pauli_rmt/pauli_string.hpp"

namespace pauli_rmt {

// Real expansion coefficients a_j of a Hermitian operator in the Pauli
// basis, H = sum_j a_j P_j, ordered by canonical Pauli index. No dimension
// factor is folded in: analyze returns a_j = Tr(H P_j) / 2^N.
struct CoefficientVector {
  int n_qubits = 0;
  Eigen::VectorXd values;

  CoefficientVector(int n, Eigen::VectorXd v)
      : n_qubits(n), values(std::move(v)) {
    check_register_size(n, max_dense_qubits, "CoefficientVector");
    if (values.size() != static_cast<Eigen::Index>(pow4(n))) {
      throw std::invalid_argument(
          "CoefficientVector: expected " + std::to_string(pow4(n)) +
          " entries for " + std::to_string(n) + " qubits, got " +
          std::to_string(values.size()));
    }
  }

  static CoefficientVector zero(int n) {
    return CoefficientVector(
        n, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pow4(n))));
  }

  std::uint64_t size() const { return pow4(n_qubits); }
};

// Dense Hermitian operator on N qubits; the constructor enforces
// Hermiticity up to an absolute entrywise tolerance.
class HermitianMatrix {
 public:
  explicit HermitianMatrix(Eigen::MatrixXcd m, double tolerance = 1e-12)
      : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) {
      throw std::invalid_argument("HermitianMatrix: matrix is " +
                                  std::to_string(m_.rows()) + "x" +
                                  std::to_string(m_.cols()) + ", not square");
    }
    const double res = hermiticity_residual(m_);
    if (res > tolerance) {
      throw std::invalid_argument(
          "HermitianMatrix: hermiticity residual " + std::to_string(res) +
          " exceeds tolerance " + std::to_string(tolerance));
    }
  }

  static double hermiticity_residual(const Eigen::MatrixXcd& m) {
    double worst = 0.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = r; c < m.cols(); ++c) {
        worst = std::max(worst, std::abs(m(r, c) - std::conj(m(c, r))));
      }
    }
    return worst;
  }

  const Eigen::MatrixXcd& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  Eigen::MatrixXcd m_;
};

namespace detail {

// Per-site butterfly stages realizing the tensor-product change of basis
// between Pauli coefficients (digit order I, X, Y, Z) and matrix entries
// (digit order 00, 01, 10, 11). One stage per site costs O(4^N), so the
// full transform is O(N 4^N) instead of the naive O(16^N).
inline void pauli_to_entry_stages(std::vector<std::complex<double>>& buf,
                                  int n_qubits) {
  const std::complex<double> im(0.0, 1.0);
  const std::uint64_t m = buf.size();
  for (int site = 0; site < n_qubits; ++site) {
    const std::uint64_t quarter = std::uint64_t{1} << (2 * site);
    for (std::uint64_t base = 0; base < m; base += 4 * quarter) {
      for (std::uint64_t t = 0; t < quarter; ++t) {
        const std::uint64_t i0 = base + t;
        const std::uint64_t i1 = i0 + quarter;
        const std::uint64_t i2 = i1 + quarter;
        const std::uint64_t i3 = i2 + quarter;
        const auto aI = buf[i0], aX = buf[i1], aY = buf[i2], aZ = buf[i3];
        buf[i0] = aI + aZ;       // <0|.|0>
        buf[i1] = aX - im * aY;  // <0|.|1>
        buf[i2] = aX + im * aY;  // <1|.|0>
        buf[i3] = aI - aZ;       // <1|.|1>
      }
    }
  }
}

inline void entry_to_pauli_stages(std::vector<std::complex<double>>& buf,
                                  int n_qubits) {
  const std::complex<double> half_im(0.0, 0.5);
  const std::uint64_t m = buf.size();
  for (int site = 0; site < n_qubits; ++site) {
    const std::uint64_t quarter = std::uint64_t{1} << (2 * site);
    for (std::uint64_t base = 0; base < m; base += 4 * quarter) {
      for (std::uint64_t t = 0; t < quarter; ++t) {
        const std::uint64_t i0 = base + t;
        const std::uint64_t i1 = i0 + quarter;
        const std::uint64_t i2 = i1 + quarter;
        const std::uint64_t i3 = i2 + quarter;
        const auto e00 = buf[i0], e01 = buf[i1], e10 = buf[i2], e11 = buf[i3];
        buf[i0] = 0.5 * (e00 + e11);
        buf[i1] = 0.5 * (e01 + e10);
        buf[i2] = half_im * (e01 - e10);
        buf[i3] = 0.5 * (e00 - e11);
      }
    }
  }
}

inline std::vector<std::uint64_t> spread_table(std::uint64_t dim) {
  std::vector<std::uint64_t> t(dim);
  for (std::uint64_t i = 0; i < dim; ++i) {
    t[i] = spread_bits(static_cast<std::uint32_t>(i));
  }
  return t;
}

}  // namespace detail

// Builds the dense matrix sum_j a_j P_j.
inline HermitianMatrix synthesize(const CoefficientVector& a) {
  const int n = a.n_qubits;
  const std::uint64_t d = pow2(n);
  std::vector<std::complex<double>> buf(a.size());
  for (std::uint64_t j = 0; j < a.size(); ++j) {
    buf[j] = a.values[static_cast<Eigen::Index>(j)];
  }
  detail::pauli_to_entry_stages(buf, n);
  // Buffer index interleaves row and column bits: row bit k sits at
  // position 2k + 1, column bit k at position 2k. Real coefficients make
  // the result Hermitian in exact arithmetic; mirroring the upper triangle
  // keeps it exactly Hermitian in floating point too.
  const auto spread = detail::spread_table(d);
  Eigen::MatrixXcd h(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::uint64_t r = 0; r < d; ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    const std::uint64_t row_part = spread[r] << 1;
    h(ri, ri) = buf[row_part | spread[r]].real();
    for (std::uint64_t c = r + 1; c < d; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      const std::complex<double> v = buf[row_part | spread[c]];
      h(ri, ci) = v;
      h(ci, ri) = std::conj(v);
    }
  }
  return HermitianMatrix(std::move(h));
}

// Recovers a_j = Tr(H P_j) / 2^N. Rejects visibly non-Hermitian input.
inline CoefficientVector analyze(const Eigen::MatrixXcd& h) {
  const std::uint64_t d = static_cast<std::uint64_t>(h.rows());
  if (h.rows() != h.cols() || d == 0 || (d & (d - 1)) != 0) {
    throw std::invalid_argument(
        "analyze: matrix dimension must be a nonzero power of two");
  }
  int n = 0;
  while (pow2(n) < d) ++n;
  check_register_size(n, max_dense_qubits, "analyze");
  const double res = HermitianMatrix::hermiticity_residual(h);
  if (res > 1e-10) {
    throw std::invalid_argument("analyze: hermiticity residual " +
                                std::to_string(res) + " exceeds 1e-10");
  }
  const auto spread = detail::spread_table(d);
  std::vector<std::complex<double>> buf(pow4(n));
  for (std::uint64_t r = 0; r < d; ++r) {
    const std::uint64_t row_part = spread[r] << 1;
    for (std::uint64_t c = 0; c < d; ++c) {
      buf[row_part | spread[c]] =
          h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  detail::entry_to_pauli_stages(buf, n);
  Eigen::VectorXd out(static_cast<Eigen::Index>(buf.size()));
  for (std::uint64_t j = 0; j < buf.size(); ++j) {
    out[static_cast<Eigen::Index>(j)] = buf[j].real();
  }
  return CoefficientVector(n, std::move(out));
}

inline CoefficientVector analyze(const HermitianMatrix& h) {
  return analyze(h.matrix());
}

}  // namespace pauli_rmt
