// Closed-form fidelities, probabilities and thresholds for 1 -> M telecloning.
//
// These are scalar evaluations with no dependency on the state-vector
// machinery, so that agreement with the simulator is evidence. Printed forms
// are implemented as printed (including suspicious factors); reconciliation is
// done by the comparison layer in protocol.hpp.
//
// Channel index shifts j+m are reduced mod d. The M = 2 forms take the input
// amplitudes alpha and channel coefficients c directly.
#pragma once

#include <complex>
#include <span>

namespace qtc::formulas {

using cplx = std::complex<double>;

/// (2M + d - 1) / (M + M d).
double f_opt(int d, int m);
/// 2 / (d + 1), optimal measure-and-prepare fidelity.
double f_est(int d);

/// P_m = sum_j |alpha_j|^2 c_{j+m}^2.
double p_m(std::span<const cplx> alpha, std::span<const double> c, int m);

/// Per-outcome clone fidelity through a partially entangled channel (M = 2).
/// Throws std::domain_error when P_m == 0.
double f_pe_m(std::span<const cplx> alpha, std::span<const double> c, int m);
/// sum_m P_m F_m.
double f_pe_avg(std::span<const cplx> alpha, std::span<const double> c);
/// Printed qubit form (N^2/12)[5|a|^4 c1^2 + 5|b|^4 c2^2 + |a|^2|b|^2(1 + 8 c1 c2)],
/// N^2 = 2 / (|a|^2 c1^2 + |b|^2 c2^2).
double f_pe_qubit_printed(cplx a, cplx b, double c1, double c2);

/// d c_min^2.
double p_usd(std::span<const double> c);

/// Normalization used in the failure-branch fidelity.
enum class FailWeight {
  /// P_m of the first measurement, as printed.
  kProjection,
  /// Weight of the failure branch itself, sum_j |alpha_j|^2 (c_{j+m}^2 - c_min^2).
  kFailureBranch,
};

double fail_weight(std::span<const cplx> alpha, std::span<const double> c, int m, FailWeight w);
/// 1/(2(d+1)) + (d+2)/(2(d+1)) (1/W_m) sum_j |alpha_{j+m}|^2 |alpha_j|^2 (c_{j+m}^2 - c_min^2).
double f_fail_m(std::span<const cplx> alpha, std::span<const double> c, int m,
                FailWeight w = FailWeight::kFailureBranch);
/// Printed Haar average of the failure fidelity: 1/d.
double f_fail_avg(int d);
/// Haar integral of sum_m W_m F_m^fail through the moment identity; for
/// kFailureBranch it is divided by the total failure probability 1 - p_d.
double f_fail_avg_haar(std::span<const double> c, FailWeight w = FailWeight::kFailureBranch);

/// F_opt(d, M) p_d + (1 - p_d)/d.
double f_av(int d, double p_d, int m = 2);
/// 2 / (d (d + 2)).
double cmin2_threshold(int d);

/// Printed minimum-error forms (carry a 1/d^3 factor).
double f_me_m(std::span<const cplx> alpha, std::span<const double> c, int m);
double f_me_avg(std::span<const cplx> alpha, std::span<const double> c);
double f_me_qubit_printed(cplx a, cplx b, double c1, double c2);

/// Separation forms: the partial-entanglement forms at the target coefficients.
double f_sep_m(std::span<const cplx> alpha, std::span<const double> target, int m);
double f_sep_avg(std::span<const cplx> alpha, std::span<const double> target);
double f_sep_qubit_printed(cplx a, cplx b, double t1, double t2);
/// c_min^2 / c~_min^2.
double p_sep(std::span<const double> c, std::span<const double> target);
/// Printed orthogonalizing case c_min^2 / d.
double p_sep_orth_paper(std::span<const double> c);

/// N / d, N = number of non-zero coefficients (requires 2 <= N < d).
double mc_confidence(std::span<const double> c);
/// 1 - N c_min^2 with c_min the smallest non-zero coefficient.
double mc_inconclusive(std::span<const double> c);

/// Haar average of f_pe_avg via the moment identity
/// int |psi_j|^2 |psi_k|^2 = (delta_jk + 1) / (d (d + 1)).
double f_pe_avg_haar(std::span<const double> c);

}  // namespace qtc::formulas
