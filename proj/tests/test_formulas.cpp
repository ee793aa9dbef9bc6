#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "qtc/formulas.hpp"

using namespace qtc::formulas;

namespace {

std::vector<cplx> amps(std::initializer_list<cplx> v) { return v; }

}  // namespace

TEST(Formulas, OptimalAndEstimation) {
  EXPECT_DOUBLE_EQ(f_opt(2, 2), 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(f_opt(2, 3), 7.0 / 9.0);
  EXPECT_DOUBLE_EQ(f_opt(3, 2), 0.75);
  EXPECT_DOUBLE_EQ(f_opt(2, 1), 1.0);
  EXPECT_DOUBLE_EQ(f_est(2), 2.0 / 3.0);
  EXPECT_THROW(f_opt(1, 2), std::invalid_argument);
}

TEST(Formulas, ProbabilitiesSumToOne) {
  std::mt19937_64 rng(1);
  for (int d = 2; d <= 5; ++d) {
    const auto a = oracle::to_std(oracle::random_state(d, rng));
    const auto c = oracle::random_channel(d, rng);
    double s = 0;
    for (int m = 0; m < d; ++m) s += p_m(a, c, m);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Formulas, MaximalChannelGivesOptimum) {
  for (int d = 2; d <= 5; ++d) {
    std::vector<double> c(static_cast<std::size_t>(d), 1 / std::sqrt(double(d)));
    std::mt19937_64 rng(static_cast<unsigned>(d));
    const auto a = oracle::to_std(oracle::random_state(d, rng));
    for (int m = 0; m < d; ++m) EXPECT_NEAR(f_pe_m(a, c, m), f_opt(d, 2), 1e-12);
    EXPECT_NEAR(f_pe_avg(a, c), f_opt(d, 2), 1e-12);
    EXPECT_NEAR(f_pe_avg_haar(c), f_opt(d, 2), 1e-12);
  }
}

TEST(Formulas, QubitPrintedFormEqualsFirstBranch) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto a = oracle::to_std(oracle::random_state(2, rng));
    const auto c = oracle::random_channel(2, rng);
    EXPECT_NEAR(f_pe_qubit_printed(a[0], a[1], c[0], c[1]), f_pe_m(a, c, 0), 1e-12);
    EXPECT_NEAR(f_me_qubit_printed(a[0], a[1], c[0], c[1]), f_pe_m(a, c, 0) / 8, 1e-12);
  }
  // Equal weights: F_0 = F_1, so the printed form equals the average.
  const auto a = amps({1 / std::sqrt(2.0), cplx(0, 1 / std::sqrt(2.0))});
  const std::vector<double> c{0.8, 0.6};
  EXPECT_NEAR(f_pe_qubit_printed(a[0], a[1], c[0], c[1]), f_pe_avg(a, c), 1e-12);
}

TEST(Formulas, MinErrorPrintedCarriesInverseCube) {
  std::mt19937_64 rng(3);
  for (int d = 2; d <= 4; ++d) {
    const auto a = oracle::to_std(oracle::random_state(d, rng));
    const auto c = oracle::random_channel(d, rng);
    EXPECT_NEAR(f_me_avg(a, c) * d * d * d, f_pe_avg(a, c), 1e-12);
    for (int m = 0; m < d; ++m) EXPECT_NEAR(f_me_m(a, c, m) * d * d * d, f_pe_m(a, c, m), 1e-12);
  }
}

TEST(Formulas, ThresholdIdentity) {
  for (int d = 2; d <= 6; ++d) {
    const double t = cmin2_threshold(d);
    EXPECT_NEAR(f_av(d, d * t), f_est(d), 1e-14);
    EXPECT_GT(f_av(d, d * t * 1.01), f_est(d));
    EXPECT_LT(f_av(d, d * t * 0.99), f_est(d));
  }
  EXPECT_DOUBLE_EQ(cmin2_threshold(2), 0.25);
}

TEST(Formulas, UsdAndFailureWeights) {
  const std::vector<double> c{std::sqrt(0.8), std::sqrt(0.2)};
  EXPECT_NEAR(p_usd(c), 0.4, 1e-15);
  EXPECT_THROW(p_usd(std::vector<double>{1.0, 0.0}), std::domain_error);
  std::mt19937_64 rng(4);
  for (int d = 2; d <= 4; ++d) {
    const auto a = oracle::to_std(oracle::random_state(d, rng));
    const auto cc = oracle::random_channel(d, rng);
    double fail = 0;
    for (int m = 0; m < d; ++m) fail += fail_weight(a, cc, m, FailWeight::kFailureBranch);
    EXPECT_NEAR(fail, 1 - p_usd(cc), 1e-12);
  }
}

TEST(Formulas, FailureHaarAverageIsInverseD) {
  std::mt19937_64 rng(5);
  for (int d = 2; d <= 5; ++d) {
    const auto c = oracle::random_channel(d, rng);
    EXPECT_NEAR(f_fail_avg_haar(c, FailWeight::kFailureBranch), f_fail_avg(d), 1e-12);
    const double pd = p_usd(c);
    EXPECT_NEAR(f_fail_avg_haar(c, FailWeight::kProjection),
                1 / (2.0 * (d + 1)) + (d + 2) * (1 - pd) / (2.0 * d * (d + 1)), 1e-12);
  }
}

TEST(Formulas, FailureFidelityAgainstMixture) {
  // Unreconstructed failure branch: clones hold sum_j |a_j|^2 s_{j+m}^2 rho_{j+m} / W, where the
  // single-clone marginal of |phi_k> (M = 2) has <a|rho_k|a> = (1 + (d+2)|a_k|^2) / (2(d+1)).
  std::mt19937_64 rng(6);
  for (int d = 2; d <= 4; ++d) {
    const auto a = oracle::to_std(oracle::random_state(d, rng));
    const auto c = oracle::random_channel(d, rng);
    const double cm2 = *std::min_element(c.begin(), c.end()) * *std::min_element(c.begin(), c.end());
    for (int m = 0; m < d; ++m) {
      double num = 0, w = 0;
      for (int j = 0; j < d; ++j) {
        const int k = (j + m) % d;
        const double s2 = c[static_cast<std::size_t>(k)] * c[static_cast<std::size_t>(k)] - cm2;
        const double wt = std::norm(a[static_cast<std::size_t>(j)]) * s2;
        num += wt * (1 + (d + 2) * std::norm(a[static_cast<std::size_t>(k)])) / (2.0 * (d + 1));
        w += wt;
      }
      if (w < 1e-12) continue;
      EXPECT_NEAR(f_fail_m(a, c, m), num / w, 1e-12);
    }
  }
}

TEST(Formulas, SeparationAndMaxConfidence) {
  const std::vector<double> c{0.8, 0.6};
  const std::vector<double> t{1 / std::sqrt(2.0), 1 / std::sqrt(2.0)};
  EXPECT_NEAR(p_sep(c, t), 0.72, 1e-14);
  EXPECT_NEAR(p_sep_orth_paper(c), 0.18, 1e-14);
  const std::vector<double> z{0.8, 0.6, 0.0};
  EXPECT_NEAR(mc_confidence(z), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(mc_inconclusive(z), 1 - 2 * 0.36, 1e-15);
  EXPECT_THROW(mc_confidence(c), std::invalid_argument);
}

TEST(Formulas, HaarAverageAgainstSampling) {
  const std::vector<double> c{std::sqrt(0.7), std::sqrt(0.2), std::sqrt(0.1)};
  std::mt19937_64 rng(7);
  const std::size_t n = 40000;
  double s = 0, s2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = oracle::to_std(oracle::random_state(3, rng));
    const double f = f_pe_avg(a, c);
    s += f;
    s2 += f * f;
  }
  const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_LT(std::abs(mean - f_pe_avg_haar(c)), 3 * se);
}
