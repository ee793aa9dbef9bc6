#include "qtc/bell_ops.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <stdexcept>

namespace qtc {

namespace {

const std::vector<cplx>& omega_table(int d) {
  static std::shared_mutex mutex;
  static std::map<int, std::vector<cplx>> tables;
  {
    std::shared_lock lock(mutex);
    if (auto it = tables.find(d); it != tables.end()) return it->second;
  }
  std::unique_lock lock(mutex);
  auto& t = tables[d];
  if (t.empty()) {
    t.resize(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) t[static_cast<std::size_t>(k)] = std::polar(1.0, 2.0 * std::numbers::pi * k / d);
  }
  return t;
}

void check_index(int d, int v, const char* what) {
  if (v < 0 || v >= d) throw std::out_of_range(std::string(what) + " index out of range");
}

}  // namespace

cplx omega_pow(int d, long long k) {
  if (d < 2) throw DimensionError("omega_pow: d < 2");
  return omega_table(d)[static_cast<std::size_t>(mod(k, d))];
}

StateVector bell_state(int d, int n, int m) {
  check_index(d, n, "Bell n");
  check_index(d, m, "Bell m");
  CVector amps = CVector::Zero(d * d);
  const double s = 1.0 / std::sqrt(d);
  for (int k = 0; k < d; ++k) amps(k * d + mod(k + m, d)) = s * omega_pow(d, static_cast<long long>(k) * n);
  return StateVector({d, d}, {"X", "P"}, std::move(amps));
}

std::vector<StateVector> bell_basis(int d) {
  std::vector<StateVector> out;
  out.reserve(static_cast<std::size_t>(d * d));
  for (int n = 0; n < d; ++n)
    for (int m = 0; m < d; ++m) out.push_back(bell_state(d, n, m));
  return out;
}

StateVector tilde_bell_state(const Channel& channel, int n, int m) {
  const int d = channel.d();
  check_index(d, n, "Bell n");
  check_index(d, m, "Bell m");
  CVector amps = CVector::Zero(d * d);
  for (int k = 0; k < d; ++k) amps(mod(k - m, d) * d + k) = channel[k] * omega_pow(d, static_cast<long long>(k) * n);
  return StateVector({d, d}, {"X", "P"}, std::move(amps));
}

Operator gxor_operator(int d) {
  CMatrix u = CMatrix::Zero(d * d, d * d);
  for (int n = 0; n < d; ++n)
    for (int m = 0; m < d; ++m) u(n * d + mod(n - m, d), n * d + m) = 1.0;
  return Operator({d, d}, std::move(u));
}

StateVector gxor(const StateVector& state, const std::string& control,
                 const std::string& target) {
  const int d = state.dim_of(control);
  if (state.dim_of(target) != d) throw DimensionError("gxor: control and target dimensions differ");
  return apply(gxor_operator(d), state, {control, target});
}

Operator fourier(int d) {
  CMatrix f(d, d);
  const double s = 1.0 / std::sqrt(d);
  for (int k = 0; k < d; ++k)
    for (int n = 0; n < d; ++n) f(k, n) = s * omega_pow(d, static_cast<long long>(k) * n);
  return Operator({d}, std::move(f));
}

Operator clock_operator(int d) {
  CMatrix z = CMatrix::Zero(d, d);
  for (int j = 0; j < d; ++j) z(j, j) = omega_pow(d, j);
  return Operator({d}, std::move(z));
}

SymmetricFamily symmetric_states(const Channel& channel) {
  const int d = channel.d();
  SymmetricFamily fam{channel, {}};
  for (int n = 0; n < d; ++n) {
    CVector v(d);
    for (int k = 0; k < d; ++k) v(k) = channel[k] * omega_pow(d, static_cast<long long>(n) * k);
    fam.states.emplace_back(std::vector<int>{d}, std::vector<std::string>{"P"}, std::move(v));
  }
  return fam;
}

std::string to_string(ReconVariant v) { return v == ReconVariant::kSectionII ? "s2" : "s4"; }

ReconVariant parse_recon_variant(const std::string& token) {
  if (token == "s2") return ReconVariant::kSectionII;
  if (token == "s4") return ReconVariant::kSectionIV;
  throw std::invalid_argument("recon: expected s2 or s4, got '" + token + "'");
}

ReconUnitaries recon_unitaries(int d, int n, int m, ReconVariant variant) {
  check_index(d, n, "reconstruction n");
  check_index(d, m, "reconstruction m");
  CMatrix ua = CMatrix::Zero(d, d);
  CMatrix uc = CMatrix::Zero(d, d);
  const long long shift = variant == ReconVariant::kSectionIV ? m : 0;
  for (int j = 0; j < d; ++j) {
    const long long phase = (j + shift) * static_cast<long long>(n);
    ua(j, mod(j + m, d)) = omega_pow(d, -phase);
    uc(j, mod(j + m, d)) = omega_pow(d, phase);
  }
  return {Operator({d}, std::move(ua)), Operator({d}, std::move(uc))};
}

}  // namespace qtc
