#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pauli_rmt/covariance.hpp"
#include "pauli_rmt/protocols.hpp"

using namespace pauli_rmt;

namespace {

// Columns of per-index error samples y collected over many replications.
struct SampleMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  int count = 0;
};

template <typename Sampler>
SampleMoments collect_moments(int reps, Eigen::Index size, Sampler&& draw) {
  SampleMoments m;
  m.mean = Eigen::VectorXd::Zero(size);
  m.var = Eigen::VectorXd::Zero(size);
  Eigen::MatrixXd samples(size, reps);
  for (int r = 0; r < reps; ++r) samples.col(r) = draw(r);
  m.mean = samples.rowwise().mean();
  for (Eigen::Index j = 0; j < size; ++j) {
    m.var[j] = (samples.row(j).array() - m.mean[j]).square().sum() / (reps - 1);
  }
  m.count = reps;
  return m;
}

}  // namespace

TEST(NaiveProtocol, deterministic_and_identity_slot_zero) {
  const StateModel ghz = StateModel::ghz(3);
  RngStream a(derive_replication_seed(5, 0));
  RngStream b(derive_replication_seed(5, 0));
  const ExcessSample sa = sample_naive(ghz, ShotPlan(200), a);
  const ExcessSample sb = sample_naive(ghz, ShotPlan(200), b);
  EXPECT_EQ((sa.y.values - sb.y.values).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(sa.y.values[0], 0.0);
}

TEST(NaiveProtocol, moments_match_variance_model) {
  const StateModel state = build_state("random-pure(2)", 2);
  const long long shots = 400;
  const Eigen::VectorXd v = naive_variances(state, shots).variances();
  RngStream rng(77);
  const int reps = 4000;
  const SampleMoments m = collect_moments(
      reps, 16, [&](int) { return sample_naive(state, ShotPlan(shots), rng).y.values; });
  for (Eigen::Index j = 1; j < 16; ++j) {
    const double se_mean = std::sqrt(v[j] / reps);
    EXPECT_NEAR(m.mean[j], 0.0, 5.0 * se_mean + 1e-15) << "j=" << j;
    // Relative SE of a sample variance is ~sqrt(2/reps) for near-Gaussian
    // summands; binomial kurtosis corrections are tiny at S=400.
    EXPECT_NEAR(m.var[j], v[j], 6.0 * v[j] * std::sqrt(2.0 / reps) + 1e-18)
        << "j=" << j;
  }
}

TEST(NaiveProtocol, estimates_are_attainable_values) {
  // y_j must be (2k/S - 1 - c_j)/D for integer k in [0, S].
  const StateModel id = StateModel::identity(1);
  const long long s = 7;
  RngStream rng(3);
  for (int r = 0; r < 50; ++r) {
    const ExcessSample smp = sample_naive(id, ShotPlan(s), rng);
    for (Eigen::Index j = 1; j < 4; ++j) {
      const double k = (smp.y.values[j] * 2.0 + 1.0) * s / 2.0;  // c_j = 0, D = 2
      EXPECT_NEAR(k, std::round(k), 1e-9);
      EXPECT_GE(k, -1e-9);
      EXPECT_LE(k, s + 1e-9);
    }
  }
}

TEST(QwcProtocol, stabilizer_coefficients_have_zero_error) {
  // GHZ stabilizer strings have c = ±1: every shot agrees, so the pooled
  // estimate is exact no matter the seed. Exercises the histogram and
  // subset-sum paths end to end.
  const StateModel ghz = StateModel::ghz(3);
  RngStream rng(123);
  const ExcessSample smp = sample_qwc(ghz, ShotPlan(50), rng);
  const Eigen::VectorXd& c = ghz.pauli_coeffs().values;
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    if (std::abs(c[j]) > 0.5) {
      EXPECT_NEAR(smp.y.values[j], 0.0, 1e-15) << "j=" << j;
    }
  }
}

TEST(QwcProtocol, moments_match_sigma) {
  const StateModel state = build_state("random-pure(4)", 2);
  const long long shots = 60;
  const Eigen::MatrixXd sigma = qwc_sigma(state, shots).sigma();
  RngStream rng(88);
  const int reps = 4000;
  const SampleMoments m = collect_moments(
      reps, 16, [&](int) { return sample_qwc(state, ShotPlan(shots), rng).y.values; });
  for (Eigen::Index j = 1; j < 16; ++j) {
    const double se_mean = std::sqrt(sigma(j, j) / reps);
    EXPECT_NEAR(m.mean[j], 0.0, 5.0 * se_mean + 1e-15) << "j=" << j;
    EXPECT_NEAR(m.var[j], sigma(j, j),
                6.0 * sigma(j, j) * std::sqrt(2.0 / reps) + 1e-18)
        << "j=" << j;
  }
}

TEST(QwcProtocol, cross_covariance_sign) {
  // Identity state, strings ZI and ZZ share the ZZ setting: covariance
  // k (Tr(rho ZI*ZZ) - 0) / D^2 = k c_IZ / 4 = 0 for identity, but for a
  // state with c_IZ != 0 the sampled covariance must track the model.
  const StateModel state = build_state("random-pure(31)", 2);
  const Eigen::MatrixXd sigma = qwc_sigma(state, 40).sigma();
  RngStream rng(99);
  const int reps = 6000;
  Eigen::MatrixXd samples(16, reps);
  for (int r = 0; r < reps; ++r) {
    samples.col(r) = sample_qwc(state, ShotPlan(40), rng).y.values;
  }
  // Pick the largest off-diagonal entries and verify each empirically.
  double max_off = 0.0;
  for (Eigen::Index i = 1; i < 16; ++i) {
    for (Eigen::Index j = i + 1; j < 16; ++j) {
      max_off = std::max(max_off, std::abs(sigma(i, j)));
    }
  }
  ASSERT_GT(max_off, 0.0);
  int checked = 0;
  for (Eigen::Index i = 1; i < 16; ++i) {
    for (Eigen::Index j = i + 1; j < 16; ++j) {
      if (std::abs(sigma(i, j)) < 0.5 * max_off) continue;
      double cov = 0.0, second = 0.0;
      for (int r = 0; r < reps; ++r) {
        const double prod = samples(i, r) * samples(j, r);
        cov += prod;
        second += prod * prod;
      }
      cov /= reps;
      const double se = std::sqrt((second / reps - cov * cov) / reps);
      EXPECT_NEAR(cov, sigma(i, j), 5.0 * se) << "(" << i << "," << j << ")";
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(QwcProtocol, rejects_oversized_registers) {
  RngStream rng(1);
  EXPECT_THROW(sample_qwc(StateModel::identity(11), ShotPlan(10), rng),
               std::domain_error);
}

TEST(SurrogateSampler, diagonal_matches_model) {
  const StateModel state = StateModel::ghz(2);
  const CovarianceModel model = naive_variances(state, 300);
  const SurrogateSampler sampler(model);
  RngStream rng(55);
  const int reps = 4000;
  const SampleMoments m = collect_moments(
      reps, 16, [&](int) { return sampler.sample(rng).y.values; });
  const Eigen::VectorXd& v = model.variances();
  for (Eigen::Index j = 0; j < 16; ++j) {
    EXPECT_NEAR(m.mean[j], 0.0, 5.0 * std::sqrt(v[j] / reps) + 1e-15);
    EXPECT_NEAR(m.var[j], v[j], 6.0 * v[j] * std::sqrt(2.0 / reps) + 1e-18);
  }
}

TEST(SurrogateSampler, dense_matches_model_covariance) {
  const StateModel state = build_state("random-pure(8)", 2);
  const CovarianceModel model = qwc_sigma(state, 50);
  const SurrogateSampler sampler(model);
  RngStream rng(66);
  const int reps = 8000;
  Eigen::MatrixXd samples(16, reps);
  for (int r = 0; r < reps; ++r) samples.col(r) = sampler.sample(rng).y.values;
  const Eigen::MatrixXd empirical =
      samples * samples.transpose() / static_cast<double>(reps);
  const Eigen::MatrixXd& sigma = model.sigma();
  const double scale = sigma.diagonal().maxCoeff();
  for (Eigen::Index i = 0; i < 16; ++i) {
    for (Eigen::Index j = 0; j < 16; ++j) {
      // Gaussian fourth moments give SE ~ sqrt((s_ii s_jj + s_ij^2)/reps).
      const double se = std::sqrt(
          (sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) / reps);
      EXPECT_NEAR(empirical(i, j), sigma(i, j), 5.0 * se + 1e-12 * scale)
          << "(" << i << "," << j << ")";
    }
  }
}

TEST(GueSampler, hermitian_with_correct_entry_variances) {
  const double sigma2 = 0.25;
  RngStream rng(44);
  const int reps = 3000;
  const Eigen::Index d = 8;
  double diag_sq = 0.0, off_re_sq = 0.0, off_im_sq = 0.0, mean_abs = 0.0;
  for (int r = 0; r < reps; ++r) {
    const HermitianMatrix h = sample_gue(d, sigma2, rng);
    const Eigen::MatrixXcd& m = h.matrix();
    EXPECT_EQ((m - m.adjoint()).cwiseAbs().maxCoeff(), 0.0);
    diag_sq += m(3, 3).real() * m(3, 3).real();
    off_re_sq += m(1, 5).real() * m(1, 5).real();
    off_im_sq += m(1, 5).imag() * m(1, 5).imag();
    mean_abs += m(2, 6).real();
  }
  // Diagonal entries have variance sigma2, off-diagonal parts sigma2/2.
  EXPECT_NEAR(diag_sq / reps, sigma2, 6.0 * sigma2 * std::sqrt(2.0 / reps));
  EXPECT_NEAR(off_re_sq / reps, sigma2 / 2,
              6.0 * (sigma2 / 2) * std::sqrt(2.0 / reps));
  EXPECT_NEAR(off_im_sq / reps, sigma2 / 2,
              6.0 * (sigma2 / 2) * std::sqrt(2.0 / reps));
  EXPECT_NEAR(mean_abs / reps, 0.0, 5.0 * std::sqrt(sigma2 / 2 / reps));
}

TEST(RealizeSample, fills_matrix_and_spectrum) {
  const StateModel state = StateModel::identity(2);
  RngStream rng(7);
  ExcessSample smp = sample_naive(state, ShotPlan(100), rng);
  EXPECT_FALSE(smp.matrix.has_value());
  realize_sample(smp);
  ASSERT_TRUE(smp.matrix.has_value());
  ASSERT_TRUE(smp.spectrum.has_value());
  // Trace of the error operator is D * y_0 = 0.
  EXPECT_NEAR(smp.matrix->trace().real(), 0.0, 1e-14);
  const std::vector<double> expected = oracle::jacobi_eigenvalues(*smp.matrix);
  ASSERT_EQ(expected.size(), smp.spectrum->size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_NEAR((*smp.spectrum)[i], expected[i], 1e-10);
  }
}
