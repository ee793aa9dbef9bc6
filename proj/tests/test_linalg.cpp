#include <cstdlib>
#include <random>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "qtc/linalg.hpp"

using namespace qtc;

namespace {

StateVector from(const oracle::Vec& v, std::vector<int> dims, std::vector<std::string> labels) {
  return StateVector(std::move(dims), std::move(labels), v, false);
}

}  // namespace

TEST(StateVector, RejectsBadShapes) {
  EXPECT_THROW(StateVector({2, 2}, {"A"}, CVector::Zero(4)), DimensionError);
  EXPECT_THROW(StateVector({2, 2}, {"A", "A"}, CVector::Zero(4), false), DimensionError);
  EXPECT_THROW(StateVector({2, 3}, {"A", "B"}, CVector::Zero(4), false), DimensionError);
  EXPECT_THROW(StateVector({2}, {"A"}, CVector::Ones(2)), std::invalid_argument);
  EXPECT_THROW(StateVector::basis(3, 3, "X"), std::out_of_range);
}

TEST(Tensor, MatchesKronecker) {
  std::mt19937_64 rng(1);
  const auto a = oracle::random_state(2, rng);
  const auto b = oracle::random_state(3, rng);
  const auto t = tensor(from(a, {2}, {"A"}), from(b, {3}, {"B"}));
  EXPECT_EQ(t.labels(), (std::vector<std::string>{"A", "B"}));
  EXPECT_LT((t.amps() - oracle::kron(a, b)).norm(), 1e-14);
  EXPECT_THROW(tensor(from(a, {2}, {"A"}), from(a, {2}, {"A"})), DimensionError);
}

TEST(Apply, MatchesEmbeddedOperatorOnEveryPosition) {
  std::mt19937_64 rng(2);
  const int d = 3;
  oracle::Vec psi = oracle::random_state(d * d * d, rng);
  const auto state = from(psi, {d, d, d}, {"A", "B", "C"});
  oracle::Mat op = oracle::Mat::Random(d, d);
  const std::vector<std::string> names{"A", "B", "C"};
  for (int pos = 0; pos < 3; ++pos) {
    const auto out = apply(Operator({d}, op), state, {names[static_cast<std::size_t>(pos)]});
    EXPECT_LT((out.amps() - oracle::embed(op, pos, 3, d) * psi).norm(), 1e-12) << pos;
  }
}

TEST(Apply, TwoTargetsInReversedOrder) {
  std::mt19937_64 rng(3);
  const int d = 2;
  oracle::Vec psi = oracle::random_state(d * d * d, rng);
  const auto state = from(psi, {d, d, d}, {"A", "B", "C"});
  oracle::Mat op = oracle::Mat::Random(d * d, d * d);
  const auto out = apply(Operator({d, d}, op), state, {"C", "A"});
  // op acts on the pair (c, a) with b a spectator.
  oracle::Vec ref = oracle::Vec::Zero(8);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int c2 = 0; c2 < d; ++c2)
          for (int a2 = 0; a2 < d; ++a2) ref(a2 * 4 + b * 2 + c2) += op(c2 * d + a2, c * d + a) * psi(a * 4 + b * 2 + c);
  EXPECT_LT((out.amps() - ref).norm(), 1e-12);
}

TEST(Apply, InverseRoundTrip) {
  std::mt19937_64 rng(4);
  const auto psi = from(oracle::random_state(9, rng), {3, 3}, {"A", "B"});
  Eigen::HouseholderQR<CMatrix> qr(CMatrix::Random(3, 3));
  const Operator u({3}, qr.householderQ() * CMatrix::Identity(3, 3));
  ASSERT_TRUE(u.is_unitary());
  const auto back = apply(u.adjoint(), apply(u, psi, {"B"}), {"B"});
  EXPECT_LT((back.amps() - psi.amps()).norm(), 1e-12);
}

TEST(Measure, ProbabilitiesSumToOneAndPostStatesCollapse) {
  std::mt19937_64 rng(5);
  const int d = 3;
  const auto psi = from(oracle::random_state(d * d, rng), {d, d}, {"X", "P"});
  const auto branches = measure_computational(psi, "P");
  ASSERT_EQ(branches.size(), 3u);
  double total = 0;
  for (const auto& b : branches) {
    total += b.probability;
    double ref = 0;
    for (int x = 0; x < d; ++x) ref += std::norm(psi[static_cast<std::size_t>(x * d + static_cast<int>(b.outcome))]);
    EXPECT_NEAR(b.probability, ref, 1e-14);
    ASSERT_TRUE(b.post_state);
    EXPECT_TRUE(b.post_state->is_normalized());
    for (int x = 0; x < d; ++x)
      for (int p = 0; p < d; ++p)
        if (p != static_cast<int>(b.outcome)) EXPECT_EQ(std::abs((*b.post_state)[static_cast<std::size_t>(x * d + p)]), 0.0);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Measure, ZeroBranchIsFlaggedNotDropped) {
  const auto psi = tensor(StateVector::basis(2, 0, "A"), StateVector::basis(2, 1, "B"));
  const auto branches = measure_computational(psi, "A");
  ASSERT_EQ(branches.size(), 2u);
  EXPECT_TRUE(branches[1].zero);
  EXPECT_FALSE(branches[1].post_state.has_value());
  EXPECT_NEAR(branches[0].probability, 1.0, 1e-15);
}

TEST(Measure, RejectsNonOrthonormalBasis) {
  const auto psi = StateVector::basis(2, 0, "A");
  const cplx plus[] = {1.0, 1.0};
  const std::vector<StateVector> basis{StateVector::basis(2, 0, "A"), StateVector::single(plus, "A", true)};
  const std::vector<std::string> t{"A"};
  EXPECT_THROW(measure_projective(psi, t, basis), std::invalid_argument);
}

TEST(PartialTrace, MatchesIndexLoop) {
  std::mt19937_64 rng(6);
  const int d = 3;
  const oracle::Vec v = oracle::random_state(d * d * d, rng);
  const auto psi = from(v, {d, d, d}, {"A", "B", "C"});
  const std::vector<std::string> names{"A", "B", "C"};
  for (int pos = 0; pos < 3; ++pos) {
    const std::vector<std::string> keep{names[static_cast<std::size_t>(pos)]};
    const auto rho = partial_trace(psi, keep);
    EXPECT_LT((rho.matrix - oracle::reduced(v, pos, 3, d)).norm(), 1e-13);
    EXPECT_TRUE(rho.is_hermitian());
    EXPECT_NEAR(rho.trace(), 1.0, 1e-12);
    EXPECT_GT(rho.min_eigenvalue(), -1e-12);
  }
}

TEST(PartialTrace, OfProductStateIsFactor) {
  std::mt19937_64 rng(7);
  const auto a = oracle::random_state(2, rng);
  const auto b = oracle::random_state(3, rng);
  const auto psi = tensor(from(a, {2}, {"A"}), from(b, {3}, {"B"}));
  const std::vector<std::string> keep{"B"};
  EXPECT_LT((partial_trace(psi, keep).matrix - b * b.adjoint()).norm(), 1e-14);
}

TEST(Fidelity, PureAndMixed) {
  const cplx plus[] = {1.0, 1.0};
  const auto p = StateVector::single(plus, "A", true);
  EXPECT_NEAR(fidelity(p, projector(p)), 1.0, 1e-15);
  DensityMatrix mixed{{2}, {"A"}, CMatrix::Identity(2, 2) / 2.0};
  EXPECT_NEAR(fidelity(p, mixed), 0.5, 1e-15);
}

TEST(CompleteUnitary, ReproducesPrescriptionAndIsUnitary) {
  std::mt19937_64 rng(8);
  const int d = 4;
  // Two orthonormal inputs mapped to two orthonormal outputs.
  Eigen::HouseholderQR<CMatrix> qa(CMatrix::Random(d, d)), qb(CMatrix::Random(d, d));
  const CMatrix a = qa.householderQ() * CMatrix::Identity(d, d);
  const CMatrix b = qb.householderQ() * CMatrix::Identity(d, d);
  std::vector<std::pair<StateVector, StateVector>> pres;
  for (int k = 0; k < 2; ++k)
    pres.emplace_back(StateVector({d}, {"A"}, a.col(k)), StateVector({d}, {"A"}, b.col(k)));
  const Operator u = complete_unitary(pres);
  EXPECT_TRUE(u.is_unitary(1e-12));
  for (const auto& [in, out] : pres) EXPECT_LT((u.matrix * in.amps() - out.amps()).norm(), 1e-12);
}

TEST(CompleteUnitary, RejectsInconsistentGram) {
  const cplx plus[] = {1.0, 1.0};
  std::vector<std::pair<StateVector, StateVector>> pres{
      {StateVector::basis(2, 0, "A"), StateVector::basis(2, 0, "A")},
      {StateVector::single(plus, "A", true), StateVector::basis(2, 1, "A")}};
  EXPECT_THROW(complete_unitary(pres), std::invalid_argument);
}

TEST(Haar, SeededAndNormalized) {
  const auto a = haar_random_state(3, 99);
  const auto b = haar_random_state(3, 99);
  EXPECT_EQ(a.amps(), b.amps());
  EXPECT_TRUE(a.is_normalized());
  EXPECT_NE(derive_seed(42, 0), derive_seed(42, 1));
  EXPECT_EQ(derive_seed(42, 7), derive_seed(42, 7));
}

TEST(Haar, SecondAndFourthMomentsWithinThreeSigma) {
  const int d = 3;
  const std::size_t n = 100000;
  double s2 = 0, s2sq = 0, s4 = 0, s4sq = 0, s22 = 0, s22sq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto psi = haar_random_state(d, derive_seed(2024, i));
    const double p0 = std::norm(psi[0]), p1 = std::norm(psi[1]);
    s2 += p0;
    s2sq += p0 * p0;
    s4 += p0 * p0;
    s4sq += p0 * p0 * p0 * p0;
    s22 += p0 * p1;
    s22sq += p0 * p1 * p0 * p1;
  }
  auto check = [&](double sum, double sumsq, double expected) {
    const double mean = sum / n;
    const double se = std::sqrt((sumsq / n - mean * mean) / n);
    EXPECT_LT(std::abs(mean - expected), 3 * se) << mean << " vs " << expected;
  };
  check(s2, s2sq, 1.0 / d);
  check(s4, s4sq, oracle::haar_pair_moment(d, true));
  check(s22, s22sq, oracle::haar_pair_moment(d, false));
}

TEST(MemoryBudget, EnvironmentOverride) {
  ::setenv("QTC_MEM_BUDGET", "100", 1);
  EXPECT_EQ(memory_budget(), 100u);
  EXPECT_THROW(check_memory_budget(101, "test"), MemoryBudgetError);
  EXPECT_NO_THROW(check_memory_budget(100, "test"));
  ::unsetenv("QTC_MEM_BUDGET");
  EXPECT_EQ(memory_budget(), kDefaultMemoryBudget);
}

TEST(Rank, DetectsDependence) {
  const cplx v[] = {1.0, 1.0};
  const std::vector<StateVector> vs{StateVector::basis(2, 0, "A"), StateVector::basis(2, 1, "A"),
                                    StateVector::single(v, "A", true)};
  EXPECT_EQ(numerical_rank(vs), 2);
}
