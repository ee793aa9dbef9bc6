#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "qtc/symmetric_subspace.hpp"

using namespace qtc;

TEST(Channel, Validation) {
  EXPECT_THROW(Channel({1.0}), std::invalid_argument);
  EXPECT_THROW(Channel({0.6, -0.8}), std::invalid_argument);
  EXPECT_THROW(Channel({0.6, 0.6}), std::invalid_argument);
  EXPECT_NO_THROW(Channel({0.6, 0.8}));
  EXPECT_TRUE(Channel::maximal(4).is_maximal());
  EXPECT_EQ(Channel::rank1(3).rank(), 1);
  EXPECT_EQ(Channel({0.6, 0.8, 0.0}).rank(), 2);
  EXPECT_DOUBLE_EQ(Channel({0.6, 0.8, 0.0}).c_min_nonzero(), 0.6);
  EXPECT_DOUBLE_EQ(Channel({0.6, 0.8})[3], 0.8);
}

TEST(Channel, ParseAndRenormalizeWithWarning) {
  std::ostringstream warn;
  const Channel c = parse_channel("c=[0.8,0.5,0.33]", 3, &warn);
  EXPECT_FALSE(warn.str().empty());
  double n2 = 0;
  for (double x : c.coeffs()) n2 += x * x;
  EXPECT_NEAR(n2, 1.0, 1e-15);
  std::ostringstream quiet;
  parse_channel("maximal", 3, &quiet);
  parse_channel("[0.6,0.8]", 2, &quiet);
  EXPECT_TRUE(quiet.str().empty());
  EXPECT_THROW(parse_channel("c=[0.6,0.8]", 3), std::invalid_argument);
  EXPECT_THROW(parse_channel("c=[0.6,x]", 2), std::invalid_argument);
  EXPECT_EQ(parse_channel(to_string(c), 3), c);
}

TEST(DimSym, MatchesBinomial) {
  for (int d = 2; d <= 6; ++d)
    for (int m = 1; m <= 5; ++m) EXPECT_EQ(dim_sym(d, m), static_cast<std::uint64_t>(oracle::binomial(d + m - 1, m)));
  EXPECT_EQ(dim_sym(2, 2), 3u);
  EXPECT_EQ(dim_sym(3, 2), 6u);
  EXPECT_THROW(dim_sym(1, 2), std::invalid_argument);
  EXPECT_THROW(dim_sym(1000, 100), std::overflow_error);
}

TEST(SymBasis, OrthonormalSymmetricAndSpanning) {
  for (int d = 2; d <= 4; ++d)
    for (int m = 1; m <= 3; ++m) {
      const auto b = sym_basis(d, m);
      ASSERT_EQ(b.states.size(), dim_sym(d, m));
      const oracle::Mat s = oracle::symmetrizer(d, m);
      oracle::Mat proj = oracle::Mat::Zero(s.rows(), s.cols());
      for (std::size_t i = 0; i < b.states.size(); ++i) {
        const auto& v = b.states[i].amps();
        for (std::size_t k = 0; k < b.states.size(); ++k)
          EXPECT_NEAR(std::abs(v.dot(b.states[k].amps()) - (i == k ? 1.0 : 0.0)), 0.0, 1e-12);
        EXPECT_LT((s * v - v).norm(), 1e-12);
        proj += v * v.adjoint();
      }
      EXPECT_LT((proj - s).norm(), 1e-10) << d << "," << m;
    }
}

TEST(SymBasis, LexicographicOccupations) {
  const auto b = sym_basis(3, 2);
  for (std::size_t i = 1; i < b.occupations.size(); ++i) EXPECT_LT(b.occupations[i - 1], b.occupations[i]);
}

TEST(CloneBasis, MatchesSymmetrizerConstruction) {
  for (int d = 2; d <= 4; ++d)
    for (int m = 1; m <= 3; ++m) {
      const auto cb = clone_basis(d, m);
      ASSERT_EQ(static_cast<int>(cb.phi.size()), d);
      for (int j = 0; j < d; ++j) {
        const auto& phi = cb.phi[static_cast<std::size_t>(j)];
        EXPECT_LT((phi.amps() - oracle::clone_vector(d, m, j)).norm(), 1e-12) << d << "," << m << "," << j;
        EXPECT_NEAR(phi.norm(), 1.0, 1e-12);
        for (int k = 0; k < d; ++k)
          if (k != j) EXPECT_LT(std::abs(phi.amps().dot(cb.phi[static_cast<std::size_t>(k)].amps())), 1e-12);
      }
    }
}

TEST(CloneBasis, QubitTwoClonesExplicit) {
  // Ancilla A, clones C1 C2: |phi_0> = sqrt(2/3)|0>|00> + sqrt(1/6)|1>(|01>+|10>).
  const auto cb = clone_basis(2, 2);
  EXPECT_EQ(cb.phi[0].labels(), (std::vector<std::string>{"A1", "C1", "C2"}));
  oracle::Vec ref = oracle::Vec::Zero(8);
  ref(0) = std::sqrt(2.0 / 3.0);
  ref(4 + 1) = std::sqrt(1.0 / 6.0);
  ref(4 + 2) = std::sqrt(1.0 / 6.0);
  EXPECT_LT((cb.phi[0].amps() - ref).norm(), 1e-14);
}

TEST(ChannelState, SchmidtCoefficientsAcrossPort) {
  const Channel c({std::sqrt(0.8), std::sqrt(0.2)});
  const auto s = build_channel_state(c, 2);
  EXPECT_EQ(s.labels().front(), "P");
  const Eigen::Map<const oracle::Mat> m(s.amps().data(), 8, 2);  // column-major view: rows = AC, cols = P
  Eigen::JacobiSVD<oracle::Mat> svd(m.transpose());
  const auto sv = svd.singularValues();
  EXPECT_NEAR(sv(0), std::sqrt(0.8), 1e-12);
  EXPECT_NEAR(sv(1), std::sqrt(0.2), 1e-12);
}

TEST(ChannelState, MatchesOracle) {
  std::mt19937_64 rng(11);
  for (int d = 2; d <= 4; ++d)
    for (int m = 1; m <= 3; ++m) {
      const auto c = oracle::random_channel(d, rng);
      const auto s = build_channel_state(Channel(c), m);
      EXPECT_TRUE(s.is_normalized());
      EXPECT_LT((s.amps() - oracle::channel_state(c, m)).norm(), 1e-12);
    }
}

TEST(ChannelState, ClonesAreExchangeSymmetric) {
  const auto s = build_channel_state(Channel::maximal(3), 3);
  // swap C1 and C3 (positions 3 and 5 of P A1 A2 C1 C2 C3)
  const oracle::Mat swap = oracle::permutation(3, {0, 1, 2, 5, 4, 3});
  EXPECT_LT((swap * s.amps() - s.amps()).norm(), 1e-12);
}
