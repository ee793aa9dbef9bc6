// Generalized Bell states, the deformed Bell set, GXOR, Fourier transform,
// symmetric states and the receivers' reconstruction unitaries.
//
// All index arithmetic (k+m, k-m, the phases w^{kn}) is reduced mod d.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qtc/linalg.hpp"
#include "qtc/symmetric_subspace.hpp"

namespace qtc {

/// w^k with w = exp(2 pi i / d), from a per-dimension table indexed by k mod d.
cplx omega_pow(int d, long long k);

inline int mod(long long a, int d) { return static_cast<int>(((a % d) + d) % d); }

struct BellLabel {
  int n = 0;
  int m = 0;
  bool operator==(const BellLabel&) const = default;
};

/// |Phi_nm>_{XP} = d^{-1/2} sum_k w^{kn} |k>_X |k+m>_P.
StateVector bell_state(int d, int n, int m);
/// All d^2 Bell states, index n * d + m.
std::vector<StateVector> bell_basis(int d);
inline BellLabel bell_label(int d, std::size_t index) {
  return {static_cast<int>(index) / d, static_cast<int>(index) % d};
}

/// sum_k c_k w^{kn} |k-m>_X |k>_P (non-orthogonal unless the channel is maximal).
StateVector tilde_bell_state(const Channel& channel, int n, int m);

/// Operator on (control, target): |n>|m> -> |n>|n-m>.
Operator gxor_operator(int d);
StateVector gxor(const StateVector& state, const std::string& control = "P",
                 const std::string& target = "X");

/// F|n> = d^{-1/2} sum_k w^{kn}|k>.
Operator fourier(int d);

struct SymmetricFamily {
  Channel channel;
  /// |Psi_n> = sum_k c_k w^{nk} |k>_P.
  std::vector<StateVector> states;
};

SymmetricFamily symmetric_states(const Channel& channel);
/// Z = sum_j w^j |j><j|.
Operator clock_operator(int d);

enum class ReconVariant {
  /// U^A = sum_j w^{-jn}|j><j+m|, U^C = sum_j w^{jn}|j><j+m|.
  kSectionII,
  /// Phases w^{-(j+m)n} and w^{(j+m)n}; differs from kSectionII by w^{mn}.
  kSectionIV,
};

std::string to_string(ReconVariant v);
ReconVariant parse_recon_variant(const std::string& token);

struct ReconUnitaries {
  Operator ancilla;
  Operator clone;
};

ReconUnitaries recon_unitaries(int d, int n, int m,
                               ReconVariant variant = ReconVariant::kSectionIV);

}  // namespace qtc
