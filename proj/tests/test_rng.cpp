#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "oracles.hpp"
#include "pauli_rmt/rng.hpp"

using namespace pauli_rmt;

TEST(Rng, splitmix64_reference_values) {
  // First outputs of the reference splitmix64 stream seeded at 0 and 1.
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFull);
  EXPECT_EQ(splitmix64(1), 0x910A2DEC89025CC1ull);
  EXPECT_EQ(splitmix64(0xDEADBEEFull), 0x4ADFB90F68C9EB9Bull);
}

TEST(Rng, derived_seeds_are_stable_and_distinct) {
  EXPECT_EQ(derive_replication_seed(42, 0), 0xFC991BCA1A1AA1AEull);
  EXPECT_EQ(derive_replication_seed(42, 1), 0x7E8FD40545BCDD70ull);
  EXPECT_EQ(derive_replication_seed(43, 0), 0x3A564F44D0F945B6ull);
  std::map<std::uint64_t, int> seen;
  for (std::uint64_t m = 0; m < 16; ++m) {
    for (std::uint64_t r = 0; r < 256; ++r) {
      ++seen[derive_replication_seed(m, r)];
    }
  }
  EXPECT_EQ(seen.size(), 16u * 256u);
}

TEST(Rng, streams_are_deterministic) {
  RngStream a(123), b(123), c(124);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t ua = a.next_u64();
    all_equal = all_equal && (ua == b.next_u64());
    any_diff = any_diff || (ua != c.next_u64());
  }
  EXPECT_TRUE(all_equal);
  EXPECT_TRUE(any_diff);
}

TEST(Rng, uniform_range_and_moments) {
  RngStream rng(7);
  const int m = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < m; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sum_sq += u * u;
  }
  const double mean = sum / m;
  const double var = sum_sq / m - mean * mean;
  // SE of the mean is 1/sqrt(12 m) ~ 6.5e-4.
  EXPECT_NEAR(mean, 0.5, 5.0 * 6.5e-4);
  EXPECT_NEAR(var, 1.0 / 12.0, 0.002);
}

TEST(Rng, normal_moments) {
  RngStream rng(8);
  const int m = 200000;
  double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
  for (int i = 0; i < m; ++i) {
    const double x = rng.normal();
    s1 += x;
    s2 += x * x;
    s3 += x * x * x;
    s4 += x * x * x * x;
  }
  EXPECT_NEAR(s1 / m, 0.0, 5.0 / std::sqrt(double(m)));          // SE = 1/sqrt(m)
  EXPECT_NEAR(s2 / m, 1.0, 5.0 * std::sqrt(2.0 / m));            // SE = sqrt(2/m)
  EXPECT_NEAR(s3 / m, 0.0, 5.0 * std::sqrt(15.0 / m));           // SE = sqrt(15/m)
  EXPECT_NEAR(s4 / m, 3.0, 5.0 * std::sqrt(96.0 / m));           // SE = sqrt(96/m)
}

TEST(Rng, binomial_edge_cases) {
  RngStream rng(9);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(rng.binomial(100, 0.0), 0);
    EXPECT_EQ(rng.binomial(100, 1.0), 100);
    EXPECT_EQ(rng.binomial(0, 0.5), 0);
    const long long one = rng.binomial(1, 0.3);
    EXPECT_TRUE(one == 0 || one == 1);
  }
  EXPECT_THROW(rng.binomial(-1, 0.5), std::invalid_argument);
  EXPECT_THROW(rng.binomial(10, -0.1), std::invalid_argument);
  EXPECT_THROW(rng.binomial(10, 1.5), std::invalid_argument);
}

TEST(Rng, binomial_small_n_matches_exact_pmf) {
  // Inversion regime. Chi-square against the exact pmf, 12 bins.
  RngStream rng(10);
  const long long n = 12;
  const double p = 0.37;
  const int m = 100000;
  std::vector<int> counts(n + 1, 0);
  for (int i = 0; i < m; ++i) {
    const long long k = rng.binomial(n, p);
    ASSERT_GE(k, 0);
    ASSERT_LE(k, n);
    ++counts[static_cast<std::size_t>(k)];
  }
  double chi2 = 0.0;
  int dof = 0;
  for (long long k = 0; k <= n; ++k) {
    const double expect = m * oracle::binomial_pmf(n, k, p);
    if (expect < 5.0) continue;  // fold negligible tails
    const double diff = counts[static_cast<std::size_t>(k)] - expect;
    chi2 += diff * diff / expect;
    ++dof;
  }
  // Generous: P(chi2 > dof + 5 sqrt(2 dof)) is far below 1e-4.
  EXPECT_LT(chi2, dof + 5.0 * std::sqrt(2.0 * double(dof)));
}

TEST(Rng, binomial_large_n_moments) {
  // BTRS regime: check mean and variance at 5 sigma.
  RngStream rng(11);
  for (const double p : {0.03, 0.25, 0.5, 0.77}) {
    const long long n = 10000;
    const int m = 20000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < m; ++i) {
      const double k = static_cast<double>(rng.binomial(n, p));
      sum += k;
      sum_sq += k * k;
    }
    const double mean = sum / m;
    const double var = sum_sq / m - mean * mean;
    const double true_mean = n * p;
    const double true_var = n * p * (1.0 - p);
    EXPECT_NEAR(mean, true_mean, 5.0 * std::sqrt(true_var / m)) << "p=" << p;
    // SE of the sample variance of a binomial: var * sqrt(2/m) is close
    // enough here (excess kurtosis is O(1/np)).
    EXPECT_NEAR(var, true_var, 6.0 * true_var * std::sqrt(2.0 / m)) << "p=" << p;
  }
}

TEST(Rng, binomial_btrs_tail_coverage) {
  // The sampler must reach several sigma into the tails, not clip them.
  RngStream rng(12);
  const long long n = 40000;
  const double p = 0.5;
  const double sigma = std::sqrt(n * p * (1 - p));
  int above = 0, below = 0;
  const int m = 200000;
  for (int i = 0; i < m; ++i) {
    const double z = (static_cast<double>(rng.binomial(n, p)) - n * p) / sigma;
    if (z > 2.5) ++above;
    if (z < -2.5) ++below;
  }
  const double expect = m * (1.0 - oracle::normal_cdf(2.5));
  EXPECT_NEAR(above, expect, 5.0 * std::sqrt(expect));
  EXPECT_NEAR(below, expect, 5.0 * std::sqrt(expect));
}

TEST(AliasTable, matches_weights) {
  Eigen::VectorXd w(4);
  w << 0.5, 0.125, 0.25, 0.125;
  AliasTable table(w);
  RngStream rng(13);
  std::vector<int> counts(static_cast<std::size_t>(w.size()), 0);
  const int m = 400000;
  for (int i = 0; i < m; ++i) ++counts[table.sample(rng)];
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const double expect = m * w[j];
    EXPECT_NEAR(counts[static_cast<std::size_t>(j)], expect,
                5.0 * std::sqrt(expect)) << "bin " << j;
  }
}

TEST(AliasTable, non_power_of_two_and_skewed) {
  Eigen::VectorXd w(5);
  w << 0.7, 0.1, 0.1, 0.05, 0.05;
  AliasTable table(w);
  RngStream rng(14);
  std::vector<int> counts(static_cast<std::size_t>(w.size()), 0);
  const int m = 400000;
  for (int i = 0; i < m; ++i) ++counts[table.sample(rng)];
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const double expect = m * w[j];
    EXPECT_NEAR(counts[static_cast<std::size_t>(j)], expect,
                5.0 * std::sqrt(expect)) << "bin " << j;
  }
}

TEST(AliasTable, degenerate_and_invalid) {
  AliasTable point(Eigen::VectorXd::Ones(1));
  RngStream rng(15);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(point.sample(rng), 0u);
  EXPECT_THROW(AliasTable(Eigen::VectorXd()), std::invalid_argument);
  Eigen::VectorXd short_sum(2);
  short_sum << 0.5, 0.4;
  EXPECT_THROW((AliasTable(short_sum)), std::invalid_argument);
  Eigen::VectorXd negative(2);
  negative << -0.5, 1.5;
  EXPECT_THROW((AliasTable(negative)), std::invalid_argument);
}
