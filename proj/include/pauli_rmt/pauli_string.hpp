#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include "pauli_rmt/common.hpp"

namespace pauli_rmt {

// An N-site Pauli string stored as two bitmasks. Site k is
//   I when (x_k, z_k) = (0, 0),   X when (1, 0),
//   Y when (1, 1),                Z when (0, 1).
// The canonical index uses per-site digits (I, X, Y, Z) = (0, 1, 2, 3),
// little-endian in the site number: index = sum_k digit_k * 4^k.
class PauliString {
 public:
  PauliString(int n_qubits, std::uint64_t x_bits, std::uint64_t z_bits)
      : n_(n_qubits), x_(x_bits), z_(z_bits) {
    check_register_size(n_qubits, max_qubits, "PauliString");
    const std::uint64_t mask = pow2(n_qubits) - 1;
    if ((x_bits | z_bits) & ~mask) {
      throw std::invalid_argument(
          "PauliString: bitmask refers to sites outside the register");
    }
  }

  static PauliString identity(int n_qubits) {
    return PauliString(n_qubits, 0, 0);
  }

  static PauliString from_index(int n_qubits, std::uint64_t index) {
    check_register_size(n_qubits, max_qubits, "PauliString::from_index");
    if (index >= pow4(n_qubits)) {
      throw std::invalid_argument("PauliString::from_index: index " +
                                  std::to_string(index) +
                                  " out of range for " +
                                  std::to_string(n_qubits) + " qubits");
    }
    // Even index bits hold x ^ z, odd bits hold z.
    const std::uint64_t e = detail::compact_bits(index);
    const std::uint64_t o = detail::compact_bits(index >> 1);
    return PauliString(n_qubits, e ^ o, o);
  }

  // Label convention: character i of the label is site i.
  static PauliString from_label(const std::string& label) {
    if (label.empty()) {
      throw std::invalid_argument("PauliString::from_label: empty label");
    }
    check_register_size(static_cast<int>(label.size()), max_qubits,
                        "PauliString::from_label");
    std::uint64_t x = 0, z = 0;
    for (std::size_t i = 0; i < label.size(); ++i) {
      switch (label[i]) {
        case 'I':
          break;
        case 'X':
          x |= std::uint64_t{1} << i;
          break;
        case 'Y':
          x |= std::uint64_t{1} << i;
          z |= std::uint64_t{1} << i;
          break;
        case 'Z':
          z |= std::uint64_t{1} << i;
          break;
        default:
          throw std::invalid_argument(
              std::string("PauliString::from_label: invalid character '") +
              label[i] + "' in \"" + label + "\"");
      }
    }
    return PauliString(static_cast<int>(label.size()), x, z);
  }

  std::uint64_t index() const {
    return detail::spread_bits(static_cast<std::uint32_t>(x_ ^ z_)) |
           (detail::spread_bits(static_cast<std::uint32_t>(z_)) << 1);
  }

  std::string label() const {
    static constexpr char letters[] = "IXYZ";
    std::string out(static_cast<std::size_t>(n_), 'I');
    for (int k = 0; k < n_; ++k) {
      const int xb = static_cast<int>((x_ >> k) & 1);
      const int zb = static_cast<int>((z_ >> k) & 1);
      out[static_cast<std::size_t>(k)] = letters[(xb ^ zb) + 2 * zb];
    }
    return out;
  }

  int n_qubits() const { return n_; }
  std::uint64_t x_bits() const { return x_; }
  std::uint64_t z_bits() const { return z_; }
  std::uint64_t support() const { return x_ | z_; }

  friend bool operator==(const PauliString& a, const PauliString& b) {
    return a.n_ == b.n_ && a.x_ == b.x_ && a.z_ == b.z_;
  }
  friend bool operator!=(const PauliString& a, const PauliString& b) {
    return !(a == b);
  }

 private:
  int n_;
  std::uint64_t x_;
  std::uint64_t z_;
};

inline int weight(const PauliString& p) { return std::popcount(p.support()); }

inline void check_same_register(const PauliString& p, const PauliString& q,
                                const char* where) {
  if (p.n_qubits() != q.n_qubits()) {
    throw std::invalid_argument(std::string(where) +
                                ": operands act on different register sizes");
  }
}

// Product P * Q = phase * R with phase in {1, i, -1, -i}. The phase exponent
// counts the Y letters created or consumed by the symplectic sum plus the
// anticommutation contribution of z_p against x_q.
inline std::pair<PauliString, std::complex<double>> multiply(
    const PauliString& p, const PauliString& q) {
  check_same_register(p, q, "multiply");
  const std::uint64_t x3 = p.x_bits() ^ q.x_bits();
  const std::uint64_t z3 = p.z_bits() ^ q.z_bits();
  int e = std::popcount(p.x_bits() & p.z_bits()) +
          std::popcount(q.x_bits() & q.z_bits()) -
          std::popcount(x3 & z3) +
          2 * std::popcount(p.z_bits() & q.x_bits());
  e = ((e % 4) + 4) % 4;
  static const std::complex<double> phases[4] = {
      {1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return {PauliString(p.n_qubits(), x3, z3), phases[e]};
}

// Two strings are measurement-compatible when they agree letter by letter
// on the overlap of their supports.
inline bool compatible(const PauliString& p, const PauliString& q) {
  check_same_register(p, q, "compatible");
  const std::uint64_t both = p.support() & q.support();
  return (((p.x_bits() ^ q.x_bits()) | (p.z_bits() ^ q.z_bits())) & both) == 0;
}

// Size of the union of supports; defined only for compatible pairs.
inline int joint_weight(const PauliString& p, const PauliString& q) {
  if (!compatible(p, q)) {
    throw std::domain_error("joint_weight: strings " + p.label() + " and " +
                            q.label() + " are not compatible");
  }
  return std::popcount(p.support() | q.support());
}

}  // namespace pauli_rmt
