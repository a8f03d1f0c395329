#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pauli_rmt/common.hpp"
#include "pauli_rmt/matrix_io.hpp"
#include "pauli_rmt/pauli_string.hpp"
#include "pauli_rmt/rng.hpp"
#include "pauli_rmt/transform.hpp"

namespace pauli_rmt {

enum class Axis : int { x = 0, y = 1, z = 2 };

// One measurement setting: a basis axis per site. Settings are enumerated
// in base 3 with site k as digit k and digit order (X, Y, Z) = (0, 1, 2).
struct MeasurementSetting {
  std::vector<Axis> axes;

  static MeasurementSetting from_index(int n_qubits, std::uint64_t index) {
    check_register_size(n_qubits, max_dense_qubits,
                        "MeasurementSetting::from_index");
    if (index >= pow3(n_qubits)) {
      throw std::invalid_argument(
          "MeasurementSetting::from_index: index " + std::to_string(index) +
          " out of range for " + std::to_string(n_qubits) + " qubits");
    }
    MeasurementSetting s;
    s.axes.resize(static_cast<std::size_t>(n_qubits));
    for (int k = 0; k < n_qubits; ++k) {
      s.axes[static_cast<std::size_t>(k)] = static_cast<Axis>(index % 3);
      index /= 3;
    }
    return s;
  }

  std::uint64_t index() const {
    std::uint64_t idx = 0;
    for (std::size_t k = axes.size(); k-- > 0;) {
      idx = idx * 3 + static_cast<std::uint64_t>(axes[k]);
    }
    return idx;
  }

  // Character i of the label is site i, mirroring PauliString labels.
  std::string label() const {
    static constexpr char letters[] = "XYZ";
    std::string out(axes.size(), 'X');
    for (std::size_t k = 0; k < axes.size(); ++k) {
      out[k] = letters[static_cast<int>(axes[k])];
    }
    return out;
  }

  int n_qubits() const { return static_cast<int>(axes.size()); }

  // True when every non-identity letter of p matches this setting's axis.
  bool covers(const PauliString& p) const {
    if (p.n_qubits() != n_qubits()) {
      throw std::invalid_argument(
          "MeasurementSetting::covers: register size mismatch");
    }
    for (int k = 0; k < n_qubits(); ++k) {
      const int xb = static_cast<int>((p.x_bits() >> k) & 1);
      const int zb = static_cast<int>((p.z_bits() >> k) & 1);
      if (xb == 0 && zb == 0) continue;
      const int digit = (xb ^ zb) + 2 * zb;  // X=1, Y=2, Z=3
      if (digit != static_cast<int>(axes[static_cast<std::size_t>(k)]) + 1) {
        return false;
      }
    }
    return true;
  }
};

// Outcome distribution of measuring every site of a state along the axes of
// one setting. Outcome bitstring b has bit k = 1 when site k reads -1.
struct SettingDistribution {
  MeasurementSetting setting;
  Eigen::VectorXd probabilities;
};

namespace detail {

// Single-qubit rotations mapping each axis eigenbasis onto the computational
// basis; row 0 is the +1 eigenvector.
inline void axis_rotation(Axis a, std::complex<double> u[2][2]) {
  const double s = 1.0 / std::sqrt(2.0);
  switch (a) {
    case Axis::x:
      u[0][0] = {s, 0}; u[0][1] = {s, 0};
      u[1][0] = {s, 0}; u[1][1] = {-s, 0};
      break;
    case Axis::y:
      u[0][0] = {s, 0}; u[0][1] = {0, -s};
      u[1][0] = {s, 0}; u[1][1] = {0, s};
      break;
    case Axis::z:
      u[0][0] = {1, 0}; u[0][1] = {0, 0};
      u[1][0] = {0, 0}; u[1][1] = {1, 0};
      break;
  }
}

inline void apply_single_qubit(Eigen::VectorXcd& psi, int site,
                               const std::complex<double> u[2][2]) {
  const std::uint64_t bit = std::uint64_t{1} << site;
  const std::uint64_t d = static_cast<std::uint64_t>(psi.size());
  for (std::uint64_t i = 0; i < d; ++i) {
    if (i & bit) continue;
    const auto i0 = static_cast<Eigen::Index>(i);
    const auto i1 = static_cast<Eigen::Index>(i | bit);
    const auto a = psi[i0];
    const auto b = psi[i1];
    psi[i0] = u[0][0] * a + u[0][1] * b;
    psi[i1] = u[1][0] * a + u[1][1] * b;
  }
}

}  // namespace detail

// A state preparation known in one of four forms. The Pauli coefficient
// vector c_j = Tr(rho P_j) is precomputed once; c_0 = 1 always.
class StateModel {
 public:
  enum class Kind { identity, ghz, pure, dense };

  static StateModel identity(int n_qubits) {
    check_register_size(n_qubits, max_dense_qubits, "StateModel::identity");
    StateModel s(Kind::identity, n_qubits);
    auto c = CoefficientVector::zero(n_qubits);
    c.values[0] = 1.0;
    s.coeffs_ = std::make_shared<CoefficientVector>(std::move(c));
    s.purity_ = 1.0 / static_cast<double>(pow2(n_qubits));
    return s;
  }

  static StateModel ghz(int n_qubits) {
    check_register_size(n_qubits, max_dense_qubits, "StateModel::ghz");
    StateModel s(Kind::ghz, n_qubits);
    s.coeffs_ = std::make_shared<CoefficientVector>(ghz_coefficients(n_qubits));
    s.purity_ = 1.0;
    return s;
  }

  static StateModel pure(int n_qubits, Eigen::VectorXcd amplitudes) {
    check_register_size(n_qubits, max_dense_qubits, "StateModel::pure");
    if (amplitudes.size() != static_cast<Eigen::Index>(pow2(n_qubits))) {
      throw std::invalid_argument("StateModel::pure: amplitude vector has " +
                                  std::to_string(amplitudes.size()) +
                                  " entries, expected " +
                                  std::to_string(pow2(n_qubits)));
    }
    const double norm = amplitudes.norm();
    if (std::abs(norm - 1.0) > 1e-10) {
      throw std::invalid_argument(
          "StateModel::pure: amplitude norm " + std::to_string(norm) +
          " differs from 1 by more than 1e-10");
    }
    StateModel s(Kind::pure, n_qubits);
    s.amplitudes_ =
        std::make_shared<Eigen::VectorXcd>(std::move(amplitudes));
    s.coeffs_ = std::make_shared<CoefficientVector>(coeffs_from_density(
        n_qubits, (*s.amplitudes_) * s.amplitudes_->adjoint()));
    s.purity_ = 1.0;
    return s;
  }

  // Accepts a Hermitian matrix with unit trace; eigenvalues in
  // [-1e-8, 0) are clipped to zero and the spectrum renormalized, anything
  // more negative is rejected.
  static StateModel dense(int n_qubits, const Eigen::MatrixXcd& rho) {
    check_register_size(n_qubits, max_dense_qubits, "StateModel::dense");
    const auto d = static_cast<Eigen::Index>(pow2(n_qubits));
    if (rho.rows() != d || rho.cols() != d) {
      throw std::invalid_argument("StateModel::dense: matrix is " +
                                  std::to_string(rho.rows()) + "x" +
                                  std::to_string(rho.cols()) + ", expected " +
                                  std::to_string(d) + "x" + std::to_string(d));
    }
    const double herm = HermitianMatrix::hermiticity_residual(rho);
    if (herm > 1e-10) {
      throw std::invalid_argument(
          "StateModel::dense: hermiticity residual " + std::to_string(herm) +
          " exceeds 1e-10");
    }
    const double tr = rho.trace().real();
    if (std::abs(tr - 1.0) > 1e-10) {
      throw std::invalid_argument("StateModel::dense: trace " +
                                  std::to_string(tr) + " differs from 1");
    }
    const Eigen::MatrixXcd sym = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sym);
    if (es.info() != Eigen::Success) {
      throw std::runtime_error("StateModel::dense: eigensolver failed");
    }
    Eigen::VectorXd lam = es.eigenvalues();
    if (lam.minCoeff() < -1e-8) {
      throw std::invalid_argument(
          "StateModel::dense: eigenvalue " + std::to_string(lam.minCoeff()) +
          " below -1e-8, matrix is not physical");
    }
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      if (lam[i] < 0.0) lam[i] = 0.0;
    }
    lam /= lam.sum();
    StateModel s(Kind::dense, n_qubits);
    s.density_ = std::make_shared<Eigen::MatrixXcd>(
        es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint());
    s.coeffs_ = std::make_shared<CoefficientVector>(
        coeffs_from_density(n_qubits, *s.density_));
    s.purity_ = lam.squaredNorm();
    return s;
  }

  Kind kind() const { return kind_; }
  int n_qubits() const { return n_; }
  std::uint64_t dim() const { return pow2(n_); }
  const CoefficientVector& pauli_coeffs() const { return *coeffs_; }
  double purity() const { return purity_; }

  Eigen::MatrixXcd density_matrix() const {
    const auto d = static_cast<Eigen::Index>(dim());
    switch (kind_) {
      case Kind::identity:
        return Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d);
      case Kind::ghz: {
        const Eigen::VectorXcd psi = ghz_amplitudes(n_);
        return psi * psi.adjoint();
      }
      case Kind::pure:
        return (*amplitudes_) * amplitudes_->adjoint();
      case Kind::dense:
        return *density_;
    }
    throw std::logic_error("StateModel: unreachable kind");
  }

  SettingDistribution setting_distribution(
      const MeasurementSetting& setting) const {
    if (setting.n_qubits() != n_) {
      throw std::invalid_argument(
          "setting_distribution: setting has " +
          std::to_string(setting.n_qubits()) + " sites, state has " +
          std::to_string(n_));
    }
    SettingDistribution out;
    out.setting = setting;
    const auto d = static_cast<Eigen::Index>(dim());
    if (kind_ == Kind::identity) {
      out.probabilities =
          Eigen::VectorXd::Constant(d, 1.0 / static_cast<double>(d));
      return out;
    }
    if (kind_ == Kind::dense) {
      Eigen::MatrixXcd rho = *density_;
      std::complex<double> u[2][2];
      for (int k = 0; k < n_; ++k) {
        const Axis a = setting.axes[static_cast<std::size_t>(k)];
        if (a == Axis::z) continue;
        detail::axis_rotation(a, u);
        rotate_density_site(rho, k, u);
      }
      out.probabilities = rho.diagonal().real();
    } else {
      Eigen::VectorXcd psi =
          (kind_ == Kind::ghz) ? ghz_amplitudes(n_) : *amplitudes_;
      std::complex<double> u[2][2];
      for (int k = 0; k < n_; ++k) {
        const Axis a = setting.axes[static_cast<std::size_t>(k)];
        if (a == Axis::z) continue;
        detail::axis_rotation(a, u);
        detail::apply_single_qubit(psi, k, u);
      }
      out.probabilities = psi.cwiseAbs2();
    }
    // Rotation arithmetic can leave negligibly negative diagonal entries.
    for (Eigen::Index i = 0; i < out.probabilities.size(); ++i) {
      if (out.probabilities[i] < 0.0) {
        if (out.probabilities[i] < -1e-12) {
          throw std::runtime_error(
              "setting_distribution: negative probability " +
              std::to_string(out.probabilities[i]));
        }
        out.probabilities[i] = 0.0;
      }
    }
    return out;
  }

 private:
  StateModel(Kind k, int n) : kind_(k), n_(n) {}

  static CoefficientVector coeffs_from_density(int n,
                                               const Eigen::MatrixXcd& rho) {
    CoefficientVector a = analyze(rho);
    a.values *= static_cast<double>(pow2(n));  // c_j = D * a_j
    return a;
  }

  static Eigen::VectorXcd ghz_amplitudes(int n) {
    const auto d = static_cast<Eigen::Index>(pow2(n));
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(d);
    const double s = 1.0 / std::sqrt(2.0);
    psi[0] = s;
    psi[d - 1] = s;
    return psi;
  }

  // Nonzero GHZ coefficients: +1 on every even-weight all-Z string and
  // (-1)^(#Y/2) on every {X,Y}^N string with an even number of Y letters.
  static CoefficientVector ghz_coefficients(int n) {
    auto c = CoefficientVector::zero(n);
    const std::uint64_t full = pow2(n) - 1;
    for (std::uint64_t zmask = 0; zmask <= full; ++zmask) {
      if (std::popcount(zmask) % 2 != 0) continue;
      const std::uint64_t idx = 3 * detail::spread_bits(
                                        static_cast<std::uint32_t>(zmask));
      c.values[static_cast<Eigen::Index>(idx)] = 1.0;
    }
    for (std::uint64_t ymask = 0; ymask <= full; ++ymask) {
      const int ny = std::popcount(ymask);
      if (ny % 2 != 0) continue;
      const std::uint64_t xonly = full ^ ymask;
      const std::uint64_t idx =
          detail::spread_bits(static_cast<std::uint32_t>(xonly)) |
          (detail::spread_bits(static_cast<std::uint32_t>(ymask)) << 1);
      c.values[static_cast<Eigen::Index>(idx)] = (ny / 2) % 2 == 0 ? 1.0 : -1.0;
    }
    return c;
  }

  static void rotate_density_site(Eigen::MatrixXcd& rho, int site,
                                  const std::complex<double> u[2][2]) {
    const std::uint64_t bit = std::uint64_t{1} << site;
    const std::uint64_t d = static_cast<std::uint64_t>(rho.rows());
    // rho <- U rho U^dagger, applied as row then column updates.
    for (std::uint64_t c = 0; c < d; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      for (std::uint64_t r = 0; r < d; ++r) {
        if (r & bit) continue;
        const auto r0 = static_cast<Eigen::Index>(r);
        const auto r1 = static_cast<Eigen::Index>(r | bit);
        const auto a = rho(r0, ci);
        const auto b = rho(r1, ci);
        rho(r0, ci) = u[0][0] * a + u[0][1] * b;
        rho(r1, ci) = u[1][0] * a + u[1][1] * b;
      }
    }
    for (std::uint64_t r = 0; r < d; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      for (std::uint64_t c = 0; c < d; ++c) {
        if (c & bit) continue;
        const auto c0 = static_cast<Eigen::Index>(c);
        const auto c1 = static_cast<Eigen::Index>(c | bit);
        const auto a = rho(ri, c0);
        const auto b = rho(ri, c1);
        rho(ri, c0) = std::conj(u[0][0]) * a + std::conj(u[0][1]) * b;
        rho(ri, c1) = std::conj(u[1][0]) * a + std::conj(u[1][1]) * b;
      }
    }
  }

  Kind kind_;
  int n_;
  double purity_ = 0.0;
  std::shared_ptr<CoefficientVector> coeffs_;
  std::shared_ptr<Eigen::VectorXcd> amplitudes_;
  std::shared_ptr<Eigen::MatrixXcd> density_;
};

// Parses a state descriptor: "identity", "ghz", "random-pure(<seed>)" for a
// Haar-random pure state, or "dense(<path>)" for a density matrix stored in
// the pauli-rmt matrix format.
inline StateModel build_state(const std::string& descriptor, int n_qubits) {
  if (descriptor == "identity") return StateModel::identity(n_qubits);
  if (descriptor == "ghz") return StateModel::ghz(n_qubits);
  const auto open = descriptor.find('(');
  if (open != std::string::npos && descriptor.back() == ')') {
    const std::string head = descriptor.substr(0, open);
    const std::string arg =
        descriptor.substr(open + 1, descriptor.size() - open - 2);
    if (head == "random-pure") {
      std::uint64_t seed = 0;
      std::size_t used = 0;
      try {
        seed = std::stoull(arg, &used);
      } catch (const std::exception&) {
        used = std::string::npos;
      }
      if (used != arg.size() || arg.empty()) {
        throw std::invalid_argument(
            "build_state: random-pure expects an unsigned integer seed, got \"" +
            arg + "\"");
      }
      RngStream rng(seed);
      const auto d = static_cast<Eigen::Index>(pow2(n_qubits));
      Eigen::VectorXcd psi(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const double re = rng.normal();
        const double im = rng.normal();
        psi[i] = {re, im};
      }
      psi /= psi.norm();
      return StateModel::pure(n_qubits, std::move(psi));
    }
    if (head == "dense") {
      const LoadedMatrix loaded = load_matrix(arg);
      if (loaded.n_qubits != n_qubits) {
        throw std::invalid_argument(
            "build_state: file " + arg + " holds a " +
            std::to_string(loaded.n_qubits) + "-qubit matrix, expected " +
            std::to_string(n_qubits));
      }
      return StateModel::dense(n_qubits, loaded.matrix);
    }
  }
  throw std::invalid_argument(
      "build_state: unknown state \"" + descriptor +
      "\"; expected identity, ghz, random-pure(<seed>) or dense(<path>)");
}

}  // namespace pauli_rmt
