// Strategies for identifying the symmetric states |Psi_n> on the port qudit:
// unambiguous discrimination, minimum-error readout, state separation and
// maximum-confidence discrimination.
//
// Every probabilistic strategy is a diagonal filter on P (a KrausPair). Its
// unitary dilation uses the X register as the flag: success leaves X at |m>,
// failure moves it to |m+1>.
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtc/linalg.hpp"
#include "qtc/symmetric_subspace.hpp"

namespace qtc {

class RankDeficiencyError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Strategy {
  enum class Kind { kNone, kUsd, kMinError, kSeparation, kMaxConfidence };
  Kind kind = Kind::kNone;
  /// Separation target coefficients; empty for every other kind.
  std::vector<double> target;

  static Strategy none() { return {}; }
  static Strategy usd() { return {Kind::kUsd, {}}; }
  static Strategy min_error() { return {Kind::kMinError, {}}; }
  static Strategy separation(const Channel& target) { return {Kind::kSeparation, target.coeffs()}; }
  static Strategy max_confidence() { return {Kind::kMaxConfidence, {}}; }

  bool operator==(const Strategy&) const = default;
};

/// none | usd | minerror | maxconf | sep:maximal | sep:c=[...] | sep:[...]
Strategy parse_strategy(const std::string& token, int d, std::ostream* warn = nullptr);
std::string to_string(const Strategy& s);

struct KrausPair {
  Operator success;
  Operator fail;

  bool is_complete(double tol = kTol) const;
};

/// A_s = sum_k (c_min/c_k)|k><k|, A_f = sum_k sqrt(1 - c_min^2/c_k^2)|k><k|.
/// Throws RankDeficiencyError when any c_k vanishes.
KrausPair usd_kraus(const Channel& channel);

/// Unitary on (P, X) with U|Psi_n>|m> = sqrt(p_d)|u_n>|m> + A_f|Psi_n>|m+1>.
/// The action is prescribed for the X value `m` the first measurement left
/// behind; other X values are completed by Gram-Schmidt.
Operator usd_embed_unitary(const Channel& channel, int m = 0);

/// Unitary on (P, X) prescribing |k>|m> -> A_s|k>|m> + A_f|k>|m+1>.
Operator dilate(const KrausPair& pair, int m = 0);

/// |chi_l> = d^{-1/2}(1-p_d)^{-1/2} sum_{m,n} w^{(l-m)n} sqrt(c_n^2 - c_min^2)|m>.
/// Equals F^dagger A_f|Psi_l> / sqrt(1-p_d). Throws when p_d == 1.
std::vector<StateVector> chi_states(const Channel& channel);

struct MinErrorMeasurement {
  /// Applied to P before the computational readout (F^dagger).
  Operator readout;
};

MinErrorMeasurement min_error_measure(const Channel& channel);

struct SeparationFilter {
  KrausPair kraus;
  /// A_s|Psi_n> = gamma |Psi~_n>; success probability gamma^2.
  double gamma = 0.0;
  Channel target;
};

/// A_s = gamma sum_k (c~_k / c_k)|k><k| with gamma = min_k c_k / c~_k.
SeparationFilter separation_filter(const Channel& channel, const Channel& target);

struct MaxConfidenceResult {
  Operator unitary;           // on (P, X), prescribed for X = |m>
  KrausPair kraus;
  double confidence = 0.0;    // N/d
  double inconclusive = 0.0;  // 1 - N c_min^2, c_min smallest non-zero
  /// Same quantities from the enumerated joint outcome distribution.
  double confidence_bayes = 0.0;
  double inconclusive_enumerated = 0.0;
  /// |u~_n> = N^{-1/2} sum_{k in support} w^{kn}|k>.
  std::vector<StateVector> u_tilde;
  /// |chi~_n> = sum_{k in support} sqrt((c_k^2 - c_min^2)/p_?) w^{kn}|k>;
  /// empty when p_? == 0.
  std::vector<StateVector> chi_tilde;
};

/// Requires 2 <= N < d non-zero coefficients.
MaxConfidenceResult max_confidence(const Channel& channel, int m = 0);

/// The filter a strategy applies to P, or nullopt for None / MinError.
std::optional<KrausPair> strategy_filter(const Strategy& strategy, const Channel& channel);

struct DiscriminationOutcome {
  enum class Kind { kConclusive, kInconclusive, kGuess };
  Kind kind = Kind::kGuess;
  int n = -1;  // -1 for inconclusive
  double probability = 0.0;
};

/// Outcome distribution when |Psi_prepared> is fed to the strategy followed
/// by the Fourier readout. Probabilities sum to 1.
std::vector<DiscriminationOutcome> discriminate(const Strategy& strategy,
                                                const Channel& channel, int prepared);

/// Joint distribution over (prepared n, outcome) with prior 1/d.
struct OutcomeStatistics {
  int d = 0;
  /// joint[n][k]: prepared n, readout k on the success (or guess) branch.
  std::vector<std::vector<double>> joint;
  /// inconclusive[n]: prepared n, failure flag raised.
  std::vector<double> inconclusive;

  double success_probability() const;
  double inconclusive_probability() const;
  /// P(prepared == k | readout k).
  double posterior_correct(int k) const;
  /// P(readout == prepared).
  double correct_probability() const;
};

OutcomeStatistics enumerate_outcomes(const Strategy& strategy, const Channel& channel);

}  // namespace qtc
