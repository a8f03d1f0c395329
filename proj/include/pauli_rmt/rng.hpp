#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pauli_rmt/common.hpp"

namespace pauli_rmt {

// Stateless splitmix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Per-replication seeds are a pure function of (master seed, replication
// index), so results are independent of how replications are scheduled:
//   seed_r = splitmix64(splitmix64(master ^ (r + 1) * 0x9e3779b97f4a7c15)).
inline std::uint64_t derive_replication_seed(std::uint64_t master_seed,
                                             std::uint64_t replication_index) {
  const std::uint64_t mixed =
      master_seed ^ ((replication_index + 1) * 0x9e3779b97f4a7c15ull);
  return splitmix64(splitmix64(mixed));
}

// xoshiro256++ stream with cached Box-Muller normals and exact binomial
// draws. Every distribution consumes the raw stream in a fixed order, so a
// given seed reproduces bit-identical output on any platform with IEEE
// doubles.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) {
      s = splitmix64(s);
      w = s;
    }
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the second deviate of each pair is
  // cached so consecutive calls consume the stream deterministically.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // in (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Exact Binomial(n, p) draw: sequential inversion when n*min(p,1-p) is
  // small, otherwise the BTRS transformed-rejection sampler. Both branches
  // sample the exact discrete distribution.
  std::int64_t binomial(std::int64_t n, double p) {
    if (n < 0) {
      throw std::invalid_argument("binomial: negative trial count " +
                                  std::to_string(n));
    }
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("binomial: probability " +
                                  std::to_string(p) + " outside [0, 1]");
    }
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    const bool flipped = p > 0.5;
    const double q = flipped ? 1.0 - p : p;
    const std::int64_t k = (static_cast<double>(n) * q < 30.0)
                               ? binomial_inversion(n, q)
                               : binomial_btrs(n, q);
    return flipped ? n - k : k;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::int64_t binomial_inversion(std::int64_t n, double p) {
    const double lqn = static_cast<double>(n) * std::log1p(-p);
    const double odds = p / (1.0 - p);
    double u = uniform();
    double pk = std::exp(lqn);  // P(X = 0)
    double cdf = pk;
    std::int64_t k = 0;
    while (u > cdf && k < n) {
      ++k;
      pk *= odds * static_cast<double>(n - k + 1) / static_cast<double>(k);
      cdf += pk;
    }
    return k;
  }

  // Correction term of Stirling's series for log(k!).
  static double stirling_tail(std::int64_t k) {
    static const double table[] = {
        0.0810614667953272,  0.0413406959554092,  0.0276779256849983,
        0.02079067210376509, 0.0166446911898211,  0.0138761288230707,
        0.0118967099458917,  0.0104112652619720,  0.00925546218271273,
        0.00833056343336287};
    if (k < 10) return table[k];
    const double kp1sq = static_cast<double>(k + 1) * static_cast<double>(k + 1);
    return (1.0 / 12 - (1.0 / 360 - 1.0 / 1260 / kp1sq) / kp1sq) /
           static_cast<double>(k + 1);
  }

  // BTRS of Hormann (1993), valid for n*p >= 10 with p <= 1/2.
  std::int64_t binomial_btrs(std::int64_t n, double p) {
    const double np = static_cast<double>(n) * p;
    const double spq = std::sqrt(np * (1.0 - p));
    const double b = 1.15 + 2.53 * spq;
    const double a = -0.0873 + 0.0248 * b + 0.01 * p;
    const double c = np + 0.5;
    const double v_r = 0.92 - 4.2 / b;
    const double r = p / (1.0 - p);
    const double alpha = (2.83 + 5.1 / b) * spq;
    const double m = std::floor((static_cast<double>(n) + 1.0) * p);
    for (;;) {
      double u = uniform() - 0.5;
      double v = uniform();
      const double us = 0.5 - std::abs(u);
      const double kf = std::floor((2.0 * a / us + b) * u + c);
      if (kf < 0.0 || kf > static_cast<double>(n)) continue;
      if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(kf);
      const std::int64_t k = static_cast<std::int64_t>(kf);
      v = std::log(v * alpha / (a / (us * us) + b));
      const double upper =
          (m + 0.5) * std::log((m + 1.0) / (r * (static_cast<double>(n) - m + 1.0))) +
          (static_cast<double>(n) + 1.0) *
              std::log((static_cast<double>(n) - m + 1.0) /
                       (static_cast<double>(n) - kf + 1.0)) +
          (kf + 0.5) *
              std::log(r * (static_cast<double>(n) - kf + 1.0) / (kf + 1.0)) +
          stirling_tail(static_cast<std::int64_t>(m)) +
          stirling_tail(n - static_cast<std::int64_t>(m)) - stirling_tail(k) -
          stirling_tail(n - k);
      if (v <= upper) return k;
    }
  }

  std::uint64_t seed_;
  std::uint64_t state_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Walker-Vose alias table for discrete sampling in O(1) per draw. When the
// outcome count is a power of two (always the case for measurement
// outcomes), a single 64-bit draw supplies both the bin index and the
// acceptance coin.
class AliasTable {
 public:
  explicit AliasTable(const Eigen::VectorXd& probabilities) {
    const auto n = probabilities.size();
    if (n <= 0) {
      throw std::invalid_argument("AliasTable: empty probability vector");
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (probabilities[i] < 0.0) {
        throw std::invalid_argument("AliasTable: negative probability at bin " +
                                    std::to_string(i));
      }
      total += probabilities[i];
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument("AliasTable: probabilities sum to " +
                                  std::to_string(total) + ", expected 1");
    }
    size_ = static_cast<std::uint64_t>(n);
    index_bits_ = 0;
    while ((std::uint64_t{1} << index_bits_) < size_) ++index_bits_;
    power_of_two_ = (std::uint64_t{1} << index_bits_) == size_;
    accept_.resize(size_);
    alias_.resize(size_);

    std::vector<double> scaled(size_);
    std::vector<std::uint32_t> small, large;
    for (std::uint64_t i = 0; i < size_; ++i) {
      scaled[i] = probabilities[static_cast<Eigen::Index>(i)] *
                  static_cast<double>(size_) / total;
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      const std::uint32_t s = small.back();
      const std::uint32_t l = large.back();
      small.pop_back();
      accept_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (const auto i : large) {
      accept_[i] = 1.0;
      alias_[i] = i;
    }
    for (const auto i : small) {
      accept_[i] = 1.0;  // only reachable through rounding
      alias_[i] = i;
    }
  }

  std::uint64_t size() const { return size_; }

  std::uint32_t sample(RngStream& rng) const {
    std::uint64_t bin;
    double coin;
    if (power_of_two_) {
      const std::uint64_t word = rng.next_u64();
      bin = word & (size_ - 1);
      coin = static_cast<double>((word >> index_bits_) &
                                 ((std::uint64_t{1} << 53) - 1)) *
             0x1.0p-53;
    } else {
      bin = static_cast<std::uint64_t>(rng.uniform() * static_cast<double>(size_));
      if (bin >= size_) bin = size_ - 1;
      coin = rng.uniform();
    }
    return coin < accept_[bin] ? static_cast<std::uint32_t>(bin) : alias_[bin];
  }

 private:
  std::uint64_t size_ = 0;
  int index_bits_ = 0;
  bool power_of_two_ = false;
  std::vector<double> accept_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace pauli_rmt
