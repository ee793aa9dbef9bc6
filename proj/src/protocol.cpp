#include "qtc/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "qtc/formulas.hpp"
#include "qtc/parallel.hpp"

namespace qtc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Filter outcomes other than success / failure must carry no weight.
constexpr double kLeakTolerance = 1e-12;

bool is_filter(Strategy::Kind k) {
  return k == Strategy::Kind::kUsd || k == Strategy::Kind::kSeparation ||
         k == Strategy::Kind::kMaxConfidence;
}

std::size_t pow_size(int base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(base))
      return std::numeric_limits<std::size_t>::max();
    r *= static_cast<std::size_t>(base);
  }
  return r;
}

Statistic statistic(const std::vector<double>& xs) {
  Statistic s;
  s.count = xs.size();
  if (xs.empty()) {
    s.mean = kNaN;
    s.stderr_ = kNaN;
    return s;
  }
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double var = 0;
    for (double x : xs) var += (x - s.mean) * (x - s.mean);
    var /= static_cast<double>(xs.size() - 1);
    s.stderr_ = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return s;
}

// Evaluates a vector of quadratic quantities with the exact Haar quadrature.
std::vector<double> haar_exact_many(int d, std::size_t width,
                                    const std::function<std::vector<double>(std::span<const cplx>)>& f) {
  const double scale = 1.0 / (static_cast<double>(d) * (d + 1));
  std::vector<double> acc(width, 0.0);
  std::vector<std::vector<double>> diag;
  for (int j = 0; j < d; ++j) {
    std::vector<cplx> e(static_cast<std::size_t>(d), 0.0);
    e[static_cast<std::size_t>(j)] = 1.0;
    diag.push_back(f(e));
    for (std::size_t q = 0; q < width; ++q) acc[q] += 2.0 * diag.back()[q];
  }
  const cplx phases[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const double r = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      std::vector<double> mean(width, 0.0);
      for (const cplx& ph : phases) {
        std::vector<cplx> v(static_cast<std::size_t>(d), 0.0);
        v[static_cast<std::size_t>(j)] = r;
        v[static_cast<std::size_t>(k)] = r * ph;
        const auto vals = f(v);
        for (std::size_t q = 0; q < width; ++q) mean[q] += vals[q] / 4.0;
      }
      for (std::size_t q = 0; q < width; ++q)
        acc[q] += 4.0 * mean[q] - diag[static_cast<std::size_t>(j)][q] - diag[static_cast<std::size_t>(k)][q];
    }
  for (double& a : acc) a *= scale;
  return acc;
}

const std::vector<BranchFlag>& all_flags() {
  static const std::vector<BranchFlag> flags = {BranchFlag::kBell,    BranchFlag::kGuess,
                                                BranchFlag::kSuccess, BranchFlag::kFail,
                                                BranchFlag::kConclusive, BranchFlag::kInconclusive};
  return flags;
}

}  // namespace

// ------------------------------------------------------------------ config

ProtocolConfig ProtocolConfig::make(int d, int m_copies, Channel channel, Strategy strategy,
                                    InputSpec input, ReconVariant recon) {
  ProtocolConfig c;
  c.d = d;
  c.m_copies = m_copies;
  c.channel = std::move(channel);
  c.flow = strategy.kind == Strategy::Kind::kNone ? Flow::kBellDirect : Flow::kGxor;
  c.strategy = std::move(strategy);
  c.recon = recon;
  if (auto* v = std::get_if<std::vector<cplx>>(&input); v && v->empty()) {
    v->assign(static_cast<std::size_t>(std::max(d, 1)), 0.0);
    (*v)[0] = 1.0;
  }
  c.input = std::move(input);
  return c;
}

void ProtocolConfig::validate() const {
  if (d < 2) throw std::invalid_argument("d: must be >= 2");
  if (m_copies < 1) throw std::invalid_argument("m-copies: must be >= 1");
  if (channel.d() != d)
    throw DimensionError("channel: has " + std::to_string(channel.d()) + " coefficients, expected d = " +
                         std::to_string(d));
  if (flow == Flow::kBellDirect && strategy.kind != Strategy::Kind::kNone)
    throw std::invalid_argument("strategy: the direct Bell flow takes no discrimination strategy");
  switch (strategy.kind) {
    case Strategy::Kind::kUsd:
      if (!channel.full_rank())
        throw RankDeficiencyError("strategy: usd needs a channel with every coefficient non-zero");
      break;
    case Strategy::Kind::kSeparation:
      if (!channel.full_rank())
        throw RankDeficiencyError("strategy: separation needs a channel with every coefficient non-zero");
      if (static_cast<int>(strategy.target.size()) != d)
        throw DimensionError("strategy: separation target must have d coefficients");
      for (double t : strategy.target)
        if (!(t > 0)) throw std::invalid_argument("strategy: separation target coefficients must be positive");
      break;
    case Strategy::Kind::kMaxConfidence:
      if (channel.rank() < 2 || channel.rank() == d)
        throw std::invalid_argument("strategy: maxconf needs 2 <= N < d non-zero channel coefficients");
      break;
    default: break;
  }
  if (const auto* v = std::get_if<std::vector<cplx>>(&input)) {
    if (static_cast<int>(v->size()) != d)
      throw DimensionError("input: has " + std::to_string(v->size()) + " amplitudes, expected d = " +
                           std::to_string(d));
    double n2 = 0;
    for (const auto& a : *v) n2 += std::norm(a);
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-10) throw std::invalid_argument("input: amplitudes are not normalized");
  } else {
    if (std::get<HaarSpec>(input).samples == 0) throw std::invalid_argument("input: haar sample count must be > 0");
  }
  check_memory_budget(pow_size(d, 2 * m_copies + 1), "register X P A C");
}

std::string to_string(Flow f) { return f == Flow::kBellDirect ? "bell" : "gxor"; }

Flow parse_flow(const std::string& token) {
  if (token == "bell") return Flow::kBellDirect;
  if (token == "gxor") return Flow::kGxor;
  throw std::invalid_argument("flow: unknown value '" + token + "'");
}

std::string to_string(BranchFlag f) {
  switch (f) {
    case BranchFlag::kBell: return "bell";
    case BranchFlag::kGuess: return "guess";
    case BranchFlag::kSuccess: return "success";
    case BranchFlag::kFail: return "fail";
    case BranchFlag::kConclusive: return "conclusive";
    case BranchFlag::kInconclusive: return "inconclusive";
  }
  return "?";
}

BranchFlag parse_branch_flag(const std::string& token) {
  for (BranchFlag f : all_flags())
    if (to_string(f) == token) return f;
  throw std::invalid_argument("flag: unknown value '" + token + "'");
}

std::string to_string(Comparison::Status s) {
  switch (s) {
    case Comparison::Status::kMatch: return "MATCH";
    case Comparison::Status::kDiscrepancy: return "DISCREPANCY";
    case Comparison::Status::kNote: return "NOTE";
  }
  return "?";
}

Comparison::Status parse_comparison_status(const std::string& token) {
  if (token == "MATCH") return Comparison::Status::kMatch;
  if (token == "DISCREPANCY") return Comparison::Status::kDiscrepancy;
  if (token == "NOTE") return Comparison::Status::kNote;
  throw std::invalid_argument("status: unknown value '" + token + "'");
}

double BranchResult::fidelity() const {
  if (clone_fidelities.empty()) return kNaN;
  double s = 0;
  for (double f : clone_fidelities) s += f;
  return s / static_cast<double>(clone_fidelities.size());
}

double RunReport::total_probability() const {
  double s = 0;
  for (const auto& b : branches) s += b.probability;
  return s;
}

double RunReport::probability_of_m(int m) const {
  double s = 0;
  for (const auto& b : branches)
    if (b.m == m) s += b.probability;
  return s;
}

bool RunReport::has_discrepancy() const {
  return std::any_of(comparisons.begin(), comparisons.end(),
                     [](const Comparison& c) { return c.status == Comparison::Status::kDiscrepancy; });
}

// -------------------------------------------------------------- telecloner

Telecloner::Telecloner(ProtocolConfig config) : config_(std::move(config)) {
  config_.validate();
  const int d = config_.d;
  basis_ = clone_basis(d, config_.m_copies);
  channel_state_ = build_channel_state(config_.channel, basis_);
  ancillas_ = ancilla_labels(config_.m_copies);
  clones_ = clone_labels(config_.m_copies);
  readout_op_ = fourier(d).adjoint();
  if (config_.flow == Flow::kBellDirect) bell_basis_ = bell_basis(d);
  for (int m = 0; m < d; ++m) {
    switch (config_.strategy.kind) {
      case Strategy::Kind::kUsd: strategy_unitaries_.push_back(usd_embed_unitary(config_.channel, m)); break;
      case Strategy::Kind::kSeparation:
        strategy_unitaries_.push_back(
            dilate(separation_filter(config_.channel, Channel(config_.strategy.target)).kraus, m));
        break;
      case Strategy::Kind::kMaxConfidence:
        strategy_unitaries_.push_back(max_confidence(config_.channel, m).unitary);
        break;
      default: break;
    }
  }
}

std::vector<std::string> Telecloner::register_labels() const {
  std::vector<std::string> labels{"X"};
  labels.insert(labels.end(), channel_state_.labels().begin(), channel_state_.labels().end());
  return labels;
}

StateVector Telecloner::initial_state(std::span<const cplx> alpha) const {
  if (static_cast<int>(alpha.size()) != config_.d)
    throw DimensionError("input: expected " + std::to_string(config_.d) + " amplitudes");
  return tensor(StateVector::single(alpha, "X"), channel_state_);
}

StateVector Telecloner::decoupled_state(std::span<const cplx> alpha) const {
  const int d = config_.d;
  if (static_cast<int>(alpha.size()) != d) throw DimensionError("input: expected " + std::to_string(d) + " amplitudes");
  CVector clones = CVector::Zero(static_cast<Eigen::Index>(basis_.phi.front().size()));
  for (int j = 0; j < d; ++j) clones += alpha[static_cast<std::size_t>(j)] * basis_.phi[static_cast<std::size_t>(j)].amps();
  const StateVector target(basis_.phi.front().dims(), basis_.phi.front().labels(), clones, false);

  CVector total = CVector::Zero(static_cast<Eigen::Index>(pow_size(d, 2 * config_.m_copies + 1)));
  for (int n = 0; n < d; ++n)
    for (int m = 0; m < d; ++m) {
      const auto u = recon_unitaries(d, n, m, ReconVariant::kSectionIV);
      const Operator ua = u.ancilla.adjoint(), uc = u.clone.adjoint();
      StateVector s = target;
      for (const auto& a : ancillas_) s = apply(ua, s, {a});
      for (const auto& c : clones_) s = apply(uc, s, {c});
      total += tensor(tilde_bell_state(config_.channel, n, m), s).amps();
    }
  total /= static_cast<double>(d);
  return StateVector(std::vector<int>(static_cast<std::size_t>(2 * config_.m_copies + 1), d), register_labels(),
                     std::move(total), false);
}

StateVector Telecloner::reconstruct(const StateVector& state, int n, int m) const {
  const auto u = recon_unitaries(config_.d, n, m, config_.recon);
  StateVector s = state;
  for (const auto& a : ancillas_) s = apply(u.ancilla, s, {a});
  for (const auto& c : clones_) s = apply(u.clone, s, {c});
  return s;
}

BranchResult Telecloner::finalize(StateVector state, int m, std::optional<int> n, BranchFlag flag,
                                  double probability, std::span<const cplx> alpha, bool keep_states) const {
  BranchResult b;
  b.m = m;
  b.n = n;
  b.flag = flag;
  b.probability = probability;
  for (std::size_t i = 0; i < clones_.size(); ++i) {
    const std::string label = clones_[i];
    const DensityMatrix rho = partial_trace(state, std::span<const std::string>(&label, 1));
    b.clone_fidelities.push_back(fidelity(StateVector::single(alpha, label), rho));
    if (i == 0 && keep_states) b.clone_marginal = rho;
  }
  if (keep_states) b.post_state = std::move(state);
  return b;
}

void Telecloner::push_zero(int m, std::optional<int> n, BranchFlag flag, double p, RunReport& report) const {
  BranchResult b;
  b.m = m;
  b.n = n;
  b.flag = flag;
  b.probability = p;
  b.zero = true;
  report.branches.push_back(std::move(b));
}

void Telecloner::readout(const StateVector& state, int m, double weight, BranchFlag flag,
                         std::span<const cplx> alpha, bool keep_states, RunReport& report) const {
  const StateVector t = apply(readout_op_, state, {"P"});
  const auto outcomes = measure_computational(t, "P");
  for (int n = 0; n < config_.d; ++n) {
    const auto& o = outcomes[static_cast<std::size_t>(n)];
    const double p = weight * o.probability;
    if (o.zero || p < kZeroProbability) {
      push_zero(m, n, flag, p, report);
      continue;
    }
    report.branches.push_back(finalize(reconstruct(*o.post_state, n, m), m, n, flag, p, alpha, keep_states));
  }
}

RunReport Telecloner::run(std::span<const cplx> alpha, bool keep_states) const {
  const int d = config_.d;
  RunReport report;
  report.config = config_;
  report.config.input = std::vector<cplx>(alpha.begin(), alpha.end());
  report.input.assign(alpha.begin(), alpha.end());
  const StateVector full = initial_state(alpha);

  if (config_.flow == Flow::kBellDirect) {
    const std::vector<std::string> targets{"X", "P"};
    const auto outcomes = measure_projective(full, targets, bell_basis_);
    for (int m = 0; m < d; ++m)
      for (int n = 0; n < d; ++n) {
        const auto& o = outcomes[static_cast<std::size_t>(n * d + m)];
        if (o.zero) {
          push_zero(m, n, BranchFlag::kBell, o.probability, report);
          continue;
        }
        report.branches.push_back(
            finalize(reconstruct(*o.post_state, n, m), m, n, BranchFlag::kBell, o.probability, alpha, keep_states));
      }
  } else {
    const auto kind = config_.strategy.kind;
    const bool mc = kind == Strategy::Kind::kMaxConfidence;
    const BranchFlag ok = is_filter(kind) ? (mc ? BranchFlag::kConclusive : BranchFlag::kSuccess) : BranchFlag::kGuess;
    const BranchFlag bad = mc ? BranchFlag::kInconclusive : BranchFlag::kFail;

    const auto first = measure_computational(gxor(full, "P", "X"), "X");
    for (int m = 0; m < d; ++m) {
      const auto& bx = first[static_cast<std::size_t>(m)];
      if (!is_filter(kind)) {
        if (bx.zero) {
          for (int n = 0; n < d; ++n) push_zero(m, n, ok, 0.0, report);
        } else {
          readout(*bx.post_state, m, bx.probability, ok, alpha, keep_states, report);
        }
        continue;
      }
      if (bx.zero) {
        for (int n = 0; n < d; ++n) push_zero(m, n, ok, 0.0, report);
        push_zero(m, std::nullopt, bad, 0.0, report);
        continue;
      }
      const StateVector filtered =
          apply(strategy_unitaries_[static_cast<std::size_t>(m)], *bx.post_state, {"P", "X"});
      const auto flagged = measure_computational(filtered, "X");
      for (int x = 0; x < d; ++x)
        if (x != m && x != mod(m + 1, d) && flagged[static_cast<std::size_t>(x)].probability > kLeakTolerance)
          throw std::logic_error("filter leaked weight outside the success/failure flags");

      const auto& succ = flagged[static_cast<std::size_t>(m)];
      const double ps = bx.probability * succ.probability;
      if (succ.zero || ps < kZeroProbability) {
        for (int n = 0; n < d; ++n) push_zero(m, n, ok, ps, report);
      } else {
        readout(*succ.post_state, m, ps, ok, alpha, keep_states, report);
      }

      const auto& fail = flagged[static_cast<std::size_t>(mod(m + 1, d))];
      const double pf = bx.probability * fail.probability;
      if (fail.zero || pf < kZeroProbability) {
        push_zero(m, std::nullopt, bad, pf, report);
      } else {
        report.branches.push_back(finalize(*fail.post_state, m, std::nullopt, bad, pf, alpha, keep_states));
      }
    }
  }

  std::map<BranchFlag, std::pair<double, double>> acc;
  for (const auto& b : report.branches) {
    auto& [p, pf] = acc[b.flag];
    p += b.probability;
    if (!b.zero) {
      pf += b.probability * b.fidelity();
      report.average_fidelity += b.probability * b.fidelity();
    }
  }
  for (const auto& [flag, v] : acc)
    report.by_flag[to_string(flag)] = {v.first, v.first > 0 ? v.second / v.first : kNaN};
  return report;
}

// --------------------------------------------------------------- free API

RunReport run_exact(const ProtocolConfig& config) {
  const auto* alpha = std::get_if<std::vector<cplx>>(&config.input);
  if (!alpha) throw std::invalid_argument("input: run_exact needs explicit amplitudes, not a Haar spec");
  return Telecloner(config).run(*alpha);
}

DensityMatrix clone_marginal(const BranchResult& branch, int clone_index) {
  if (!branch.post_state) throw std::invalid_argument("clone_marginal: branch has no stored state");
  const std::string label = "C" + std::to_string(clone_index);
  if (!branch.post_state->has_label(label)) throw std::out_of_range("clone_marginal: no clone " + label);
  return partial_trace(*branch.post_state, std::span<const std::string>(&label, 1));
}

namespace {

class ComparisonSink {
 public:
  ComparisonSink(RunReport& r, double tol) : report_(r), tol_(tol) {}

  // Checked: MATCH within tolerance, otherwise DISCREPANCY.
  void check(std::string name, double sim, double closed, std::optional<std::size_t> branch = std::nullopt) {
    push(std::move(name), sim, closed, branch, false);
  }
  // Informational: always NOTE.
  void note(std::string name, double sim, double closed, std::optional<std::size_t> branch = std::nullopt) {
    push(std::move(name), sim, closed, branch, true);
  }
  // Checked against a Monte Carlo mean: MATCH within 3 standard errors.
  void check_3sigma(std::string name, const Statistic& s, double closed) {
    Comparison c = make(std::move(name), s.mean, closed, std::nullopt);
    const double band = std::max(3.0 * s.stderr_, tol_);
    c.status = c.abs_diff <= band ? Comparison::Status::kMatch : Comparison::Status::kDiscrepancy;
    report_.comparisons.push_back(std::move(c));
  }

 private:
  static Comparison make(std::string name, double sim, double closed, std::optional<std::size_t> branch) {
    Comparison c;
    c.name = std::move(name);
    c.simulated = sim;
    c.closed_form = closed;
    c.abs_diff = std::abs(sim - closed);
    c.ratio = closed != 0.0 ? sim / closed : 0.0;
    c.branch = branch;
    return c;
  }
  void push(std::string name, double sim, double closed, std::optional<std::size_t> branch, bool note) {
    Comparison c = make(std::move(name), sim, closed, branch);
    if (note)
      c.status = Comparison::Status::kNote;
    else
      c.status = c.abs_diff <= tol_ ? Comparison::Status::kMatch : Comparison::Status::kDiscrepancy;
    report_.comparisons.push_back(std::move(c));
  }

  RunReport& report_;
  double tol_;
};

std::string branch_tag(const BranchResult& b) {
  std::ostringstream os;
  os << "m=" << b.m;
  if (b.n) os << ",n=" << *b.n;
  return os.str();
}

double flag_probability(const RunReport& r, BranchFlag f) {
  auto it = r.by_flag.find(to_string(f));
  return it == r.by_flag.end() ? 0.0 : it->second.probability;
}

double flag_fidelity(const RunReport& r, BranchFlag f) {
  auto it = r.by_flag.find(to_string(f));
  return it == r.by_flag.end() ? kNaN : it->second.fidelity;
}

// Fidelity of the reconstructed branch with readout n, averaged over n, at outcome m.
double fidelity_at_m(const RunReport& r, int m, BranchFlag flag) {
  double p = 0, pf = 0;
  for (const auto& b : r.branches)
    if (b.m == m && b.flag == flag && !b.zero) {
      p += b.probability;
      pf += b.probability * b.fidelity();
    }
  return p > 0 ? pf / p : kNaN;
}

void compare_haar(RunReport& report, double tol) {
  ComparisonSink sink(report, tol);
  const auto& cfg = report.config;
  const auto& h = *report.haar;
  const int d = cfg.d;
  const auto& c = cfg.channel.coeffs();
  const auto kind = cfg.strategy.kind;
  const bool m2 = cfg.m_copies == 2;

  if (kind == Strategy::Kind::kNone || kind == Strategy::Kind::kMinError) {
    if (m2) {
      sink.check("<F> Haar (exact quadrature)", h.exact_average_fidelity, formulas::f_pe_avg_haar(c));
      sink.check_3sigma("<F> Haar (sampled)", h.average_fidelity, formulas::f_pe_avg_haar(c));
      if (kind == Strategy::Kind::kMinError)
        sink.check("<F^ME> Haar printed form", h.exact_average_fidelity,
                   formulas::f_pe_avg_haar(c) / (static_cast<double>(d) * d * d));
    }
    if (cfg.channel.is_maximal())
      sink.check("<F> Haar vs F_opt (maximal channel)", h.exact_average_fidelity,
                 formulas::f_opt(d, cfg.m_copies));
    return;
  }
  if (kind == Strategy::Kind::kUsd) {
    const double pd = formulas::p_usd(c);
    sink.check("p_success Haar (exact quadrature)", h.exact_flag_probability.at("success"), pd);
    sink.check("<F_success> Haar (exact quadrature)", h.exact_flag_fidelity.at("success"),
               formulas::f_opt(d, cfg.m_copies));
    if (m2 && pd < 1.0 - 1e-12) {
      sink.check("<F_fail> Haar (exact quadrature)", h.exact_flag_fidelity.at("fail"), formulas::f_fail_avg(d));
      sink.check_3sigma("<F_fail> Haar (sampled)", h.flag_fidelity.at("fail"), formulas::f_fail_avg(d));
      sink.check("F_av Haar (exact quadrature)", h.exact_average_fidelity, formulas::f_av(d, pd, 2));
      sink.note("<F_fail> Haar under P_m weighting", h.exact_flag_fidelity.at("fail"),
                formulas::f_fail_avg_haar(c, formulas::FailWeight::kProjection));
    }
    return;
  }
  if (kind == Strategy::Kind::kSeparation) {
    const auto& t = cfg.strategy.target;
    sink.check("p_sep Haar (exact quadrature)", h.exact_flag_probability.at("success"), formulas::p_sep(c, t));
    if (m2)
      sink.check("<F_sep> Haar (exact quadrature)", h.exact_flag_fidelity.at("success"),
                 formulas::f_pe_avg_haar(t));
    return;
  }
  if (kind == Strategy::Kind::kMaxConfidence) {
    sink.check("p_inconclusive Haar (exact quadrature)", h.exact_flag_probability.at("inconclusive"),
               formulas::mc_inconclusive(c));
  }
}

}  // namespace

RunReport compare_to_formulas(RunReport report, double tol) {
  report.comparisons.clear();
  if (report.haar) {
    compare_haar(report, tol);
    return report;
  }
  ComparisonSink sink(report, tol);
  const auto& cfg = report.config;
  const int d = cfg.d;
  const auto& c = cfg.channel.coeffs();
  const std::span<const cplx> alpha(report.input);
  const auto kind = cfg.strategy.kind;
  const bool m2 = cfg.m_copies == 2;
  if (static_cast<int>(alpha.size()) != d) return report;

  for (int m = 0; m < d; ++m)
    sink.check("P_m (m=" + std::to_string(m) + ")", report.probability_of_m(m), formulas::p_m(alpha, c, m));

  if (kind == Strategy::Kind::kNone || kind == Strategy::Kind::kMinError) {
    const BranchFlag flag = kind == Strategy::Kind::kNone ? BranchFlag::kBell : BranchFlag::kGuess;
    if (cfg.channel.is_maximal())
      sink.check("<F> vs F_opt (maximal channel)", report.average_fidelity, formulas::f_opt(d, cfg.m_copies));
    if (!m2) return report;
    for (std::size_t i = 0; i < report.branches.size(); ++i) {
      const auto& b = report.branches[i];
      if (b.zero) continue;
      sink.check("F_m (" + branch_tag(b) + ")", b.fidelity(), formulas::f_pe_m(alpha, c, b.m), i);
      if (kind == Strategy::Kind::kMinError)
        sink.check("F^ME_m printed (" + branch_tag(b) + ")", b.fidelity(), formulas::f_me_m(alpha, c, b.m), i);
    }
    sink.check("<F> = sum_m P_m F_m", report.average_fidelity, formulas::f_pe_avg(alpha, c));
    if (kind == Strategy::Kind::kMinError)
      sink.check("<F^ME> printed", report.average_fidelity, formulas::f_me_avg(alpha, c));
    if (d == 2 && report.probability_of_m(0) > kZeroProbability) {
      const double f0 = fidelity_at_m(report, 0, flag);
      sink.check("qubit form vs F_{m=0}", f0, formulas::f_pe_qubit_printed(alpha[0], alpha[1], c[0], c[1]));
      sink.check("qubit form vs <F>", report.average_fidelity,
                 formulas::f_pe_qubit_printed(alpha[0], alpha[1], c[0], c[1]));
      if (kind == Strategy::Kind::kMinError)
        sink.check("ME qubit form vs F_{m=0}", f0, formulas::f_me_qubit_printed(alpha[0], alpha[1], c[0], c[1]));
    }
    return report;
  }

  if (kind == Strategy::Kind::kUsd) {
    const double pd = formulas::p_usd(c);
    const double fopt = formulas::f_opt(d, cfg.m_copies);
    sink.check("p_success = d c_min^2", flag_probability(report, BranchFlag::kSuccess), pd);
    for (std::size_t i = 0; i < report.branches.size(); ++i) {
      const auto& b = report.branches[i];
      if (b.zero) continue;
      if (b.flag == BranchFlag::kSuccess) {
        sink.check("F_success vs F_opt (" + branch_tag(b) + ")", b.fidelity(), fopt, i);
        continue;
      }
      sink.check("failure weight (" + branch_tag(b) + ")", b.probability,
                 formulas::fail_weight(alpha, c, b.m, formulas::FailWeight::kFailureBranch), i);
      if (!m2) continue;
      sink.check("F_fail_m (" + branch_tag(b) + ")", b.fidelity(),
                 formulas::f_fail_m(alpha, c, b.m, formulas::FailWeight::kFailureBranch), i);
      if (formulas::fail_weight(alpha, c, b.m, formulas::FailWeight::kProjection) > 0)
        sink.note("F_fail_m under P_m weighting (" + branch_tag(b) + ")", b.fidelity(),
                  formulas::f_fail_m(alpha, c, b.m, formulas::FailWeight::kProjection), i);
    }
    if (flag_probability(report, BranchFlag::kSuccess) > 0)
      sink.check("<F_success> vs F_opt", flag_fidelity(report, BranchFlag::kSuccess), fopt);
    return report;
  }

  if (kind == Strategy::Kind::kSeparation) {
    const auto& t = cfg.strategy.target;
    const double ps = flag_probability(report, BranchFlag::kSuccess);
    const auto filt = separation_filter(cfg.channel, Channel(t));
    sink.check("p_sep = gamma^2", ps, filt.gamma * filt.gamma);
    sink.check("p_sep printed c_min^2 / c~_min^2", ps, formulas::p_sep(c, t));
    if (Channel(t).is_maximal()) sink.check("p_sep printed (orthogonal target)", ps, formulas::p_sep_orth_paper(c));
    if (!m2) return report;
    for (std::size_t i = 0; i < report.branches.size(); ++i) {
      const auto& b = report.branches[i];
      if (b.zero || b.flag != BranchFlag::kSuccess) continue;
      sink.check("F_sep_m (" + branch_tag(b) + ")", b.fidelity(), formulas::f_sep_m(alpha, t, b.m), i);
    }
    if (ps > 0)
      sink.check("<F_sep>", flag_fidelity(report, BranchFlag::kSuccess), formulas::f_sep_avg(alpha, t));
    if (d == 2 && ps > 0)
      sink.check("separation qubit form vs F_{m=0}", fidelity_at_m(report, 0, BranchFlag::kSuccess),
                 formulas::f_sep_qubit_printed(alpha[0], alpha[1], t[0], t[1]));
    return report;
  }

  if (kind == Strategy::Kind::kMaxConfidence) {
    const auto stats = enumerate_outcomes(cfg.strategy, cfg.channel);
    sink.check("p_inconclusive (equal priors)", stats.inconclusive_probability(), formulas::mc_inconclusive(c));
    for (int k = 0; k < d; ++k)
      sink.check("confidence P(n=" + std::to_string(k) + "|readout " + std::to_string(k) + ")",
                 stats.posterior_correct(k), formulas::mc_confidence(c));
  }
  return report;
}

RunReport monte_carlo(const ProtocolConfig& config, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("mc-samples: must be > 0");
  RunReport report = run_exact(config);
  std::vector<double> weights;
  for (const auto& b : report.branches) weights.push_back(b.probability);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::mt19937_64 rng(seed);

  SamplingSummary s;
  s.samples = samples;
  s.seed = seed;
  s.counts.assign(weights.size(), 0);
  std::vector<double> fids;
  fids.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t k = pick(rng);
    ++s.counts[k];
    fids.push_back(report.branches[k].fidelity());
  }
  const double n = static_cast<double>(samples);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double f = static_cast<double>(s.counts[k]) / n;
    s.frequency.push_back(f);
    s.frequency_stderr.push_back(std::sqrt(f * (1.0 - f) / n));
  }
  s.fidelity = statistic(fids);
  report.sampling = std::move(s);
  return report;
}

double haar_exact(int d, const std::function<double(std::span<const cplx>)>& f) {
  return haar_exact_many(d, 1, [&](std::span<const cplx> a) { return std::vector<double>{f(a)}; })[0];
}

RunReport haar_average(const ProtocolConfig& config) {
  const auto* spec = std::get_if<HaarSpec>(&config.input);
  if (!spec) throw std::invalid_argument("input: haar_average needs a Haar spec");
  const Telecloner engine(config);
  const int d = config.d;
  const std::size_t n = spec->samples;

  std::vector<RunReport> runs(n);
  parallel_for(n, [&](std::size_t i) {
    const StateVector psi = haar_random_state(d, derive_seed(spec->seed, i));
    std::vector<cplx> alpha(psi.amps().data(), psi.amps().data() + psi.size());
    runs[i] = engine.run(alpha, false);
  });

  RunReport report;
  report.config = config;
  const std::size_t nb = runs.front().branches.size();
  report.branches.resize(nb);
  std::vector<double> branch_p(nb, 0.0), branch_pf(nb, 0.0);
  std::vector<std::vector<double>> branch_clone_pf(nb, std::vector<double>(static_cast<std::size_t>(config.m_copies), 0.0));
  std::vector<double> avg;
  std::map<std::string, std::vector<double>> flag_f, flag_p;
  for (const auto& r : runs) {
    avg.push_back(r.average_fidelity);
    for (const auto& [name, fs] : r.by_flag) {
      flag_p[name].push_back(fs.probability);
      if (fs.probability > 0) flag_f[name].push_back(fs.fidelity);
    }
    for (std::size_t k = 0; k < nb; ++k) {
      const auto& b = r.branches[k];
      branch_p[k] += b.probability;
      if (!b.zero)
        for (std::size_t c = 0; c < b.clone_fidelities.size(); ++c)
          branch_clone_pf[k][c] += b.probability * b.clone_fidelities[c];
    }
  }
  // Per-branch entries carry the mean probability and the probability-weighted
  // mean fidelity of that branch.
  for (std::size_t k = 0; k < nb; ++k) {
    auto& b = report.branches[k];
    const auto& proto = runs.front().branches[k];
    b.m = proto.m;
    b.n = proto.n;
    b.flag = proto.flag;
    b.probability = branch_p[k] / static_cast<double>(n);
    b.zero = b.probability < kZeroProbability;
    if (!b.zero)
      for (double pf : branch_clone_pf[k]) b.clone_fidelities.push_back(pf / branch_p[k]);
  }

  HaarSummary h;
  h.spec = *spec;
  h.average_fidelity = statistic(avg);
  for (auto& [name, xs] : flag_p) h.flag_probability[name] = statistic(xs);
  for (auto& [name, xs] : flag_f) h.flag_fidelity[name] = statistic(xs);
  for (const auto& [name, st] : h.flag_probability)
    if (!h.flag_fidelity.count(name)) h.flag_fidelity[name] = statistic({});

  // Exact quadrature: [average, p_flag..., p_flag F_flag...] per flag.
  std::vector<std::string> names;
  for (const auto& [name, st] : h.flag_probability) names.push_back(name);
  const auto exact = haar_exact_many(d, 1 + 2 * names.size(), [&](std::span<const cplx> a) {
    const RunReport r = engine.run(a, false);
    std::vector<double> out{r.average_fidelity};
    for (const auto& name : names) {
      auto it = r.by_flag.find(name);
      const double p = it == r.by_flag.end() ? 0.0 : it->second.probability;
      out.push_back(p);
      out.push_back(p > 0 ? p * it->second.fidelity : 0.0);
    }
    return out;
  });
  h.exact_average_fidelity = exact[0];
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double p = exact[1 + 2 * i];
    h.exact_flag_probability[names[i]] = p;
    h.exact_flag_fidelity[names[i]] = p > kZeroProbability ? exact[2 + 2 * i] / p : kNaN;
  }
  if (config.strategy.kind == Strategy::Kind::kUsd && h.flag_fidelity.count("fail")) {
    const auto& s = h.flag_fidelity.at("fail");
    if (s.count > 0) h.fail_within_3sigma_of_inverse_d = std::abs(s.mean - 1.0 / d) <= 3.0 * s.stderr_;
  }

  report.average_fidelity = h.average_fidelity.mean;
  for (const auto& name : names)
    report.by_flag[name] = {h.exact_flag_probability[name], h.flag_fidelity[name].mean};
  report.haar = std::move(h);
  return report;
}

}  // namespace qtc
