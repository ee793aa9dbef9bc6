// Telecloning runs: input (x) channel, a measurement flow, reconstruction,
// exhaustive branch enumeration and clone fidelities. Monte Carlo sampling and
// Haar averaging are layered on top of the exact branches.
#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qtc/bell_ops.hpp"
#include "qtc/discrimination.hpp"
#include "qtc/linalg.hpp"
#include "qtc/symmetric_subspace.hpp"

namespace qtc {

enum class Flow {
  /// Generalized Bell measurement on XP, then reconstruction.
  kBellDirect,
  /// GXOR on PX, X readout, strategy on P, Fourier readout, reconstruction.
  kGxor,
};

struct HaarSpec {
  std::uint64_t seed = 42;
  std::size_t samples = 10000;
  bool operator==(const HaarSpec&) const = default;
};

using InputSpec = std::variant<std::vector<cplx>, HaarSpec>;

struct ProtocolConfig {
  int d = 2;
  int m_copies = 2;
  Channel channel = Channel::maximal(2);
  Flow flow = Flow::kBellDirect;
  Strategy strategy;
  ReconVariant recon = ReconVariant::kSectionIV;
  InputSpec input = std::vector<cplx>{1.0, 0.0};

  /// Strategy None maps to the Bell flow, everything else to the GXOR flow.
  static ProtocolConfig make(int d, int m_copies, Channel channel, Strategy strategy,
                             InputSpec input = std::vector<cplx>{},
                             ReconVariant recon = ReconVariant::kSectionIV);
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  bool operator==(const ProtocolConfig&) const = default;
};

std::string to_string(Flow f);
Flow parse_flow(const std::string& token);

enum class BranchFlag {
  kBell,          // direct Bell measurement
  kGuess,         // Fourier readout without a filter
  kSuccess,       // filter succeeded (USD, separation)
  kFail,          // filter failed (USD, separation)
  kConclusive,    // maximum confidence, flag unchanged
  kInconclusive,  // maximum confidence, flag raised
};

std::string to_string(BranchFlag f);
BranchFlag parse_branch_flag(const std::string& token);

struct BranchResult {
  int m = 0;
  /// Readout on P; absent on failure / inconclusive branches, which are
  /// left unreconstructed with P traced out.
  std::optional<int> n;
  BranchFlag flag = BranchFlag::kBell;
  double probability = 0.0;
  /// Probability below kZeroProbability; no state or fidelities recorded.
  bool zero = false;
  std::vector<double> clone_fidelities;
  std::optional<DensityMatrix> clone_marginal;  // C1
  std::optional<StateVector> post_state;        // whole register

  double fidelity() const;
};

struct Comparison {
  enum class Status { kMatch, kDiscrepancy, kNote };
  std::string name;
  double simulated = 0.0;
  double closed_form = 0.0;
  double abs_diff = 0.0;
  /// simulated / closed_form (0 when the closed form vanishes).
  double ratio = 0.0;
  Status status = Status::kMatch;
  /// Index into RunReport::branches when the comparison is per-branch.
  std::optional<std::size_t> branch;
};

std::string to_string(Comparison::Status s);
Comparison::Status parse_comparison_status(const std::string& token);

struct FlagSummary {
  double probability = 0.0;
  /// Fidelity conditioned on the flag (NaN when the flag never occurs).
  double fidelity = 0.0;
};

struct Statistic {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

struct SamplingSummary {
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> counts;  // per branch
  std::vector<double> frequency;
  std::vector<double> frequency_stderr;
  Statistic fidelity;
};

struct HaarSummary {
  HaarSpec spec;
  Statistic average_fidelity;
  std::map<std::string, Statistic> flag_fidelity;
  std::map<std::string, Statistic> flag_probability;
  /// Exact Haar averages from a two-term quadrature of the simulator.
  double exact_average_fidelity = 0.0;
  std::map<std::string, double> exact_flag_fidelity;
  std::map<std::string, double> exact_flag_probability;
  /// For USD: whether 1/d lies within 3 standard errors of the fail mean.
  std::optional<bool> fail_within_3sigma_of_inverse_d;
};

struct RunReport {
  ProtocolConfig config;
  std::vector<cplx> input;  // amplitudes of the run (empty for Haar reports)
  std::vector<BranchResult> branches;
  double average_fidelity = 0.0;
  std::map<std::string, FlagSummary> by_flag;
  std::vector<Comparison> comparisons;
  std::optional<SamplingSummary> sampling;
  std::optional<HaarSummary> haar;

  double total_probability() const;
  /// Sum of branch probabilities with the given outcome m.
  double probability_of_m(int m) const;
  bool has_discrepancy() const;
};

/// Precomputed resources for repeated runs of one configuration.
class Telecloner {
 public:
  explicit Telecloner(ProtocolConfig config);

  const ProtocolConfig& config() const { return config_; }
  const StateVector& channel_state() const { return channel_state_; }
  const CloneBasis& basis() const { return basis_; }
  std::vector<std::string> register_labels() const;

  /// Full register X (x) PAC for the given input amplitudes.
  StateVector initial_state(std::span<const cplx> alpha) const;

  /// The same register assembled as
  /// d^{-1} sum_{nm} |Phi~_nm>_{XP} (x) U_nm^dagger sum_j alpha_j |phi_j>_{AC},
  /// with the phase convention under which the two expansions coincide.
  StateVector decoupled_state(std::span<const cplx> alpha) const;

  RunReport run(std::span<const cplx> alpha, bool keep_states = true) const;

 private:
  void readout(const StateVector& state, int m, double weight, BranchFlag flag,
               std::span<const cplx> alpha, bool keep_states, RunReport& report) const;
  void push_zero(int m, std::optional<int> n, BranchFlag flag, double p, RunReport& report) const;
  BranchResult finalize(StateVector state, int m, std::optional<int> n, BranchFlag flag,
                        double probability, std::span<const cplx> alpha, bool keep_states) const;
  StateVector reconstruct(const StateVector& state, int n, int m) const;

  ProtocolConfig config_;
  CloneBasis basis_;
  StateVector channel_state_;
  std::vector<StateVector> bell_basis_;
  Operator readout_op_;
  std::vector<Operator> strategy_unitaries_;  // one per first-measurement outcome m
  std::vector<std::string> ancillas_;
  std::vector<std::string> clones_;
};

/// Runs the explicit input of `config` (throws for Haar inputs).
RunReport run_exact(const ProtocolConfig& config);

/// Reduced state of clone `clone_index` (1-based) of a branch.
DensityMatrix clone_marginal(const BranchResult& branch, int clone_index);

/// Attaches every applicable closed form; differences above `tol` are
/// flagged as discrepancies.
RunReport compare_to_formulas(RunReport report, double tol = 1e-8);

/// Samples `samples` outcomes from the exact branch distribution.
RunReport monte_carlo(const ProtocolConfig& config, std::size_t samples, std::uint64_t seed);

/// Averages over Haar-random inputs drawn from the config's HaarSpec.
RunReport haar_average(const ProtocolConfig& config);

/// Exact Haar average of a quantity that is quadratic in |alpha><alpha|
/// (probability-weighted fidelities, branch probabilities). Evaluates it on
/// basis states and on phased two-term superpositions.
double haar_exact(int d, const std::function<double(std::span<const cplx>)>& f);

}  // namespace qtc
