#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pauli_rmt {

// Largest register the dense coefficient-vector machinery supports.
// 4^12 doubles is ~134 MB, which is the practical ceiling for a workstation.
inline constexpr int max_dense_qubits = 12;

// Largest register PauliString itself supports (index fits in 64 bits).
inline constexpr int max_qubits = 31;

enum class TomographyProtocol { naive, qwc };

inline const char* protocol_name(TomographyProtocol p) {
  return p == TomographyProtocol::naive ? "naive" : "qwc";
}

// File and stream failures carry the offending path so callers can
// distinguish them from validation errors.
class io_error : public std::runtime_error {
 public:
  io_error(const std::string& path, const std::string& what)
      : std::runtime_error("i/o error (" + path + "): " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline void check_register_size(int n_qubits, int limit, const char* where) {
  if (n_qubits < 1) {
    throw std::invalid_argument(std::string(where) +
                                ": qubit count must be positive, got " +
                                std::to_string(n_qubits));
  }
  if (n_qubits > limit) {
    throw std::invalid_argument(std::string(where) + ": qubit count " +
                                std::to_string(n_qubits) + " exceeds limit " +
                                std::to_string(limit));
  }
}

inline std::uint64_t pow2(int n) { return std::uint64_t{1} << n; }
inline std::uint64_t pow4(int n) { return std::uint64_t{1} << (2 * n); }

inline std::uint64_t pow3(int n) {
  std::uint64_t r = 1;
  for (int i = 0; i < n; ++i) r *= 3;
  return r;
}

namespace detail {

// Bit interleaving between site index k and position 2k (Morton order).
inline std::uint64_t spread_bits(std::uint32_t v) {
  std::uint64_t x = v;
  x = (x | (x << 16)) & 0x0000ffff0000ffffull;
  x = (x | (x << 8)) & 0x00ff00ff00ff00ffull;
  x = (x | (x << 4)) & 0x0f0f0f0f0f0f0f0full;
  x = (x | (x << 2)) & 0x3333333333333333ull;
  x = (x | (x << 1)) & 0x5555555555555555ull;
  return x;
}

// Inverse of spread_bits: collect the even-position bits of v.
inline std::uint32_t compact_bits(std::uint64_t v) {
  std::uint64_t x = v & 0x5555555555555555ull;
  x = (x | (x >> 1)) & 0x3333333333333333ull;
  x = (x | (x >> 2)) & 0x0f0f0f0f0f0f0f0full;
  x = (x | (x >> 4)) & 0x00ff00ff00ff00ffull;
  x = (x | (x >> 8)) & 0x0000ffff0000ffffull;
  x = (x | (x >> 16)) & 0x00000000ffffffffull;
  return static_cast<std::uint32_t>(x);
}

}  // namespace detail

}  // namespace pauli_rmt
