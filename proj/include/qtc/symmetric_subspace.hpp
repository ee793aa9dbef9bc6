// Symmetrized M-qudit basis, telecloning clone basis and channel states.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "qtc/linalg.hpp"

namespace qtc {

/// Schmidt coefficients {c_j} of the port/clone-side split of the resource.
/// Index order is meaningful; coefficients are real, non-negative and
/// square-normalized.
class Channel {
 public:
  Channel() = default;
  /// Validates sum c^2 == 1 within 1e-12 and c_j >= 0.
  explicit Channel(std::vector<double> coeffs);

  static Channel maximal(int d);
  /// (1, 0, ..., 0).
  static Channel rank1(int d);
  /// Rescales to unit norm. Sets `renormalized` when sum c^2 was off by more
  /// than 1e-6.
  static Channel normalized(std::vector<double> coeffs, bool* renormalized = nullptr);

  int d() const { return static_cast<int>(coeffs_.size()); }
  const std::vector<double>& coeffs() const { return coeffs_; }
  double operator[](int j) const;  // index reduced mod d

  /// Number of non-zero coefficients.
  int rank() const;
  bool full_rank() const { return rank() == d(); }
  bool is_maximal(double tol = 1e-12) const;
  /// Smallest coefficient (zero for rank-deficient channels).
  double c_min() const;
  /// Smallest non-zero coefficient.
  double c_min_nonzero() const;

  bool operator==(const Channel&) const = default;

 private:
  std::vector<double> coeffs_;
};

/// Coefficients below this are treated as vanishing Schmidt coefficients.
inline constexpr double kZeroCoefficient = 1e-14;

/// Parses "maximal", "rank1" or "c=[0.894,0.447]". Explicit lists that are
/// off normalization by more than 1e-6 are rescaled and a warning is written
/// to `warn` (when non-null).
Channel parse_channel(std::string_view text, int d, std::ostream* warn = nullptr);
std::string to_string(const Channel& channel);

/// d[M] = (d+M-1)! / (M! (d-1)!). Throws std::overflow_error beyond 64 bits.
std::uint64_t dim_sym(int d, int m);

struct SymBasis {
  int d = 0;
  int m = 0;
  std::vector<StateVector> states;
  /// Sorted occupation tuple of each state, lexicographic order.
  std::vector<std::vector<int>> occupations;
};

/// Equal-weight symmetrization of every size-M multiset over {0..d-1}.
SymBasis sym_basis(int d, int m, const std::vector<std::string>& labels = {});

struct CloneBasis {
  int d = 0;
  int m = 0;
  /// |phi_j> on A1..A(M-1), C1..CM.
  std::vector<StateVector> phi;
};

std::vector<std::string> ancilla_labels(int m);
std::vector<std::string> clone_labels(int m);

CloneBasis clone_basis(int d, int m);

/// sum_j c_j |j>_P (x) |phi_j>_AC, labels P, A1.., C1...
StateVector build_channel_state(const Channel& channel, const CloneBasis& basis);
StateVector build_channel_state(const Channel& channel, int m);

}  // namespace qtc
