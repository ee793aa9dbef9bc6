#include "qtc/discrimination.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qtc/bell_ops.hpp"

namespace qtc {

namespace {

Operator diagonal(const std::vector<double>& entries) {
  const auto d = static_cast<Eigen::Index>(entries.size());
  CMatrix m = CMatrix::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k) m(k, k) = entries[static_cast<std::size_t>(k)];
  return Operator({static_cast<int>(d)}, std::move(m));
}

// |p>_P (x) |x>_X as a (P, X) register.
StateVector px_state(const CVector& p, int d, int x) {
  CVector amps = CVector::Zero(d * d);
  for (int k = 0; k < d; ++k) amps(k * d + x) = p(k);
  return StateVector({d, d}, {"P", "X"}, std::move(amps), false);
}

void require_full_rank(const Channel& channel, const char* what) {
  if (!channel.full_rank())
    throw RankDeficiencyError(std::string(what) +
                              ": channel has vanishing Schmidt coefficients; use maxconf");
}

}  // namespace

// ------------------------------------------------------------------ Strategy

Strategy parse_strategy(const std::string& token, int d, std::ostream* warn) {
  if (token == "none") return Strategy::none();
  if (token == "usd") return Strategy::usd();
  if (token == "minerror") return Strategy::min_error();
  if (token == "maxconf") return Strategy::max_confidence();
  if (token.rfind("sep:", 0) == 0) {
    const std::string rest = token.substr(4);
    if (rest.empty()) throw std::invalid_argument("strategy: sep needs a target");
    return Strategy::separation(parse_channel(rest, d, warn));
  }
  throw std::invalid_argument("strategy: unknown token '" + token + "'");
}

std::string to_string(const Strategy& s) {
  switch (s.kind) {
    case Strategy::Kind::kNone: return "none";
    case Strategy::Kind::kUsd: return "usd";
    case Strategy::Kind::kMinError: return "minerror";
    case Strategy::Kind::kMaxConfidence: return "maxconf";
    case Strategy::Kind::kSeparation: return "sep:" + to_string(Channel(s.target));
  }
  return "none";
}

bool KrausPair::is_complete(double tol) const {
  const Operator family[] = {success, fail};
  return is_kraus_complete(family, tol);
}

// ----------------------------------------------------------------------- USD

KrausPair usd_kraus(const Channel& channel) {
  require_full_rank(channel, "usd");
  const double cmin = channel.c_min();
  std::vector<double> s, f;
  for (double c : channel.coeffs()) {
    const double r = cmin / c;
    s.push_back(r);
    f.push_back(std::sqrt(std::max(0.0, 1.0 - r * r)));
  }
  return {diagonal(s), diagonal(f)};
}

Operator usd_embed_unitary(const Channel& channel, int m) {
  const int d = channel.d();
  const auto kraus = usd_kraus(channel);
  const auto family = symmetric_states(channel);
  const Operator f = fourier(d);
  const double pd = d * channel.c_min() * channel.c_min();
  std::vector<std::pair<StateVector, StateVector>> prescribed;
  for (int n = 0; n < d; ++n) {
    const CVector& psi = family.states[static_cast<std::size_t>(n)].amps();
    const CVector un = f.matrix.col(n);
    StateVector in = px_state(psi, d, m);
    CVector out = px_state(std::sqrt(pd) * un, d, m).amps() +
                  px_state(kraus.fail.matrix * psi, d, mod(m + 1, d)).amps();
    prescribed.emplace_back(std::move(in), StateVector({d, d}, {"P", "X"}, std::move(out), false));
  }
  return complete_unitary(prescribed);
}

Operator dilate(const KrausPair& pair, int m) {
  const int d = pair.success.dims.at(0);
  std::vector<std::pair<StateVector, StateVector>> prescribed;
  for (int k = 0; k < d; ++k) {
    CVector e = CVector::Unit(d, k);
    CVector out = px_state(pair.success.matrix * e, d, m).amps() +
                  px_state(pair.fail.matrix * e, d, mod(m + 1, d)).amps();
    prescribed.emplace_back(px_state(e, d, m), StateVector({d, d}, {"P", "X"}, std::move(out), false));
  }
  return complete_unitary(prescribed);
}

std::vector<StateVector> chi_states(const Channel& channel) {
  require_full_rank(channel, "chi_states");
  const int d = channel.d();
  const double cmin2 = channel.c_min() * channel.c_min();
  const double pd = d * cmin2;
  if (1.0 - pd < 1e-12) throw std::domain_error("chi_states: p_d == 1, failure branch is empty");
  const double pre = 1.0 / std::sqrt(d) / std::sqrt(1.0 - pd);
  std::vector<StateVector> out;
  for (int l = 0; l < d; ++l) {
    CVector v = CVector::Zero(d);
    for (int m = 0; m < d; ++m)
      for (int n = 0; n < d; ++n)
        v(m) += pre * omega_pow(d, static_cast<long long>(l - m) * n) *
                std::sqrt(std::max(0.0, channel[n] * channel[n] - cmin2));
    out.emplace_back(std::vector<int>{d}, std::vector<std::string>{"P"}, std::move(v), false);
  }
  return out;
}

MinErrorMeasurement min_error_measure(const Channel& channel) {
  return {fourier(channel.d()).adjoint()};
}

// ---------------------------------------------------------------- separation

SeparationFilter separation_filter(const Channel& channel, const Channel& target) {
  require_full_rank(channel, "separation");
  if (target.d() != channel.d()) throw DimensionError("separation: target dimension mismatch");
  if (!target.full_rank()) throw std::invalid_argument("separation: target has zero coefficients");
  double gamma = std::numeric_limits<double>::infinity();
  for (int k = 0; k < channel.d(); ++k) gamma = std::min(gamma, channel[k] / target[k]);
  std::vector<double> s, f;
  for (int k = 0; k < channel.d(); ++k) {
    const double a = gamma * target[k] / channel[k];
    s.push_back(a);
    f.push_back(std::sqrt(std::max(0.0, 1.0 - a * a)));
  }
  return {{diagonal(s), diagonal(f)}, gamma, target};
}

// -------------------------------------------------------- maximum confidence

MaxConfidenceResult max_confidence(const Channel& channel, int m) {
  const int d = channel.d();
  const int rank = channel.rank();
  if (rank == d) throw std::invalid_argument("maxconf: channel has full Schmidt rank; use usd");
  if (rank < 2) throw std::invalid_argument("maxconf: needs at least two non-zero coefficients");
  const double cmin = channel.c_min_nonzero();
  const double cmin2 = cmin * cmin;

  std::vector<int> support;
  for (int k = 0; k < d; ++k)
    if (channel[k] > kZeroCoefficient) support.push_back(k);

  std::vector<double> s(static_cast<std::size_t>(d), 0.0), f(static_cast<std::size_t>(d), 1.0);
  for (int k : support) {
    const double r = cmin / channel[k];
    s[static_cast<std::size_t>(k)] = r;
    f[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, 1.0 - r * r));
  }

  MaxConfidenceResult res;
  res.kraus = {diagonal(s), diagonal(f)};
  res.unitary = dilate(res.kraus, m);
  res.confidence = static_cast<double>(rank) / d;
  res.inconclusive = 1.0 - rank * cmin2;

  const double n_norm = 1.0 / std::sqrt(static_cast<double>(rank));
  for (int n = 0; n < d; ++n) {
    CVector u = CVector::Zero(d);
    CVector chi = CVector::Zero(d);
    for (int k : support) {
      u(k) = n_norm * omega_pow(d, static_cast<long long>(k) * n);
      if (res.inconclusive > 1e-14)
        chi(k) = std::sqrt(std::max(0.0, channel[k] * channel[k] - cmin2) / res.inconclusive) *
                 omega_pow(d, static_cast<long long>(k) * n);
    }
    res.u_tilde.emplace_back(std::vector<int>{d}, std::vector<std::string>{"P"}, std::move(u), false);
    if (res.inconclusive > 1e-14)
      res.chi_tilde.emplace_back(std::vector<int>{d}, std::vector<std::string>{"P"}, std::move(chi), false);
  }

  const auto stats = enumerate_outcomes(Strategy::max_confidence(), channel);
  res.inconclusive_enumerated = stats.inconclusive_probability();
  res.confidence_bayes = 1.0;
  for (int k = 0; k < d; ++k) res.confidence_bayes = std::min(res.confidence_bayes, stats.posterior_correct(k));
  return res;
}

// ------------------------------------------------------------- enumeration

std::optional<KrausPair> strategy_filter(const Strategy& strategy, const Channel& channel) {
  switch (strategy.kind) {
    case Strategy::Kind::kNone:
    case Strategy::Kind::kMinError: return std::nullopt;
    case Strategy::Kind::kUsd: return usd_kraus(channel);
    case Strategy::Kind::kSeparation: return separation_filter(channel, Channel(strategy.target)).kraus;
    case Strategy::Kind::kMaxConfidence: {
      // Filter only; the dilation is not needed here.
      const int d = channel.d();
      if (channel.rank() == d || channel.rank() < 2)
        throw std::invalid_argument("maxconf: needs 2 <= N < d non-zero coefficients");
      const double cmin = channel.c_min_nonzero();
      std::vector<double> s(static_cast<std::size_t>(d), 0.0), f(static_cast<std::size_t>(d), 1.0);
      for (int k = 0; k < d; ++k)
        if (channel[k] > kZeroCoefficient) {
          const double r = cmin / channel[k];
          s[static_cast<std::size_t>(k)] = r;
          f[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, 1.0 - r * r));
        }
      return KrausPair{diagonal(s), diagonal(f)};
    }
  }
  return std::nullopt;
}

namespace {

DiscriminationOutcome::Kind success_kind(const Strategy& s) {
  switch (s.kind) {
    case Strategy::Kind::kUsd:
    case Strategy::Kind::kMaxConfidence: return DiscriminationOutcome::Kind::kConclusive;
    default: return DiscriminationOutcome::Kind::kGuess;
  }
}

}  // namespace

std::vector<DiscriminationOutcome> discriminate(const Strategy& strategy,
                                                const Channel& channel, int prepared) {
  const int d = channel.d();
  if (prepared < 0 || prepared >= d) throw std::out_of_range("discriminate: prepared index");
  const auto filter = strategy_filter(strategy, channel);
  const CVector psi = symmetric_states(channel).states[static_cast<std::size_t>(prepared)].amps();
  const CMatrix readout = fourier(d).matrix.adjoint();
  const CVector kept = filter ? CVector(filter->success.matrix * psi) : psi;
  const CVector amps = readout * kept;

  std::vector<DiscriminationOutcome> out;
  for (int k = 0; k < d; ++k) out.push_back({success_kind(strategy), k, std::norm(amps(k))});
  if (filter)
    out.push_back({DiscriminationOutcome::Kind::kInconclusive, -1, (filter->fail.matrix * psi).squaredNorm()});
  return out;
}

OutcomeStatistics enumerate_outcomes(const Strategy& strategy, const Channel& channel) {
  const int d = channel.d();
  OutcomeStatistics st;
  st.d = d;
  st.joint.assign(static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(d), 0.0));
  st.inconclusive.assign(static_cast<std::size_t>(d), 0.0);
  for (int n = 0; n < d; ++n)
    for (const auto& o : discriminate(strategy, channel, n)) {
      const double p = o.probability / d;
      if (o.kind == DiscriminationOutcome::Kind::kInconclusive)
        st.inconclusive[static_cast<std::size_t>(n)] += p;
      else
        st.joint[static_cast<std::size_t>(n)][static_cast<std::size_t>(o.n)] += p;
    }
  return st;
}

double OutcomeStatistics::success_probability() const {
  double s = 0;
  for (const auto& row : joint)
    for (double p : row) s += p;
  return s;
}

double OutcomeStatistics::inconclusive_probability() const {
  double s = 0;
  for (double p : inconclusive) s += p;
  return s;
}

double OutcomeStatistics::posterior_correct(int k) const {
  double col = 0;
  for (const auto& row : joint) col += row[static_cast<std::size_t>(k)];
  if (col <= 0) return 0.0;
  return joint[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)] / col;
}

double OutcomeStatistics::correct_probability() const {
  double s = 0;
  for (int n = 0; n < d; ++n) s += joint[static_cast<std::size_t>(n)][static_cast<std::size_t>(n)];
  return s;
}

}  // namespace qtc
