#include "qtc/report_io.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#ifndef QTC_VERSION
#define QTC_VERSION "0.0.0"
#endif

namespace qtc {

using nlohmann::json;

namespace {

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double get_num(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json complex_list(std::span<const cplx> v) {
  json a = json::array();
  for (const auto& z : v) a.push_back({z.real(), z.imag()});
  return a;
}

std::vector<cplx> complex_list_from(const json& j) {
  std::vector<cplx> v;
  for (const auto& z : j) v.emplace_back(z.at(0).get<double>(), z.at(1).get<double>());
  return v;
}

const char* kind_name(Strategy::Kind k) {
  switch (k) {
    case Strategy::Kind::kNone: return "none";
    case Strategy::Kind::kUsd: return "usd";
    case Strategy::Kind::kMinError: return "minerror";
    case Strategy::Kind::kSeparation: return "sep";
    case Strategy::Kind::kMaxConfidence: return "maxconf";
  }
  return "none";
}

Strategy::Kind kind_from(const std::string& s) {
  for (auto k : {Strategy::Kind::kNone, Strategy::Kind::kUsd, Strategy::Kind::kMinError,
                 Strategy::Kind::kSeparation, Strategy::Kind::kMaxConfidence})
    if (s == kind_name(k)) return k;
  throw std::invalid_argument("strategy: unknown kind '" + s + "'");
}

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  CMatrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& z = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c));
      m(r, c) = {z.at(0).get<double>(), z.at(1).get<double>()};
    }
  return m;
}

json statistic_to_json(const Statistic& s) {
  return {{"mean", num(s.mean)}, {"stderr", num(s.stderr_)}, {"count", s.count}};
}

Statistic statistic_from_json(const json& j) {
  return {get_num(j.at("mean")), get_num(j.at("stderr")), j.at("count").get<std::size_t>()};
}

template <class T, class Fn>
json map_to_json(const std::map<std::string, T>& m, Fn fn) {
  json o = json::object();
  for (const auto& [k, v] : m) o[k] = fn(v);
  return o;
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

bool same(const Statistic& a, const Statistic& b) {
  return same(a.mean, b.mean) && same(a.stderr_, b.stderr_) && a.count == b.count;
}

template <class T>
bool same_map(const std::map<std::string, T>& a, const std::map<std::string, T>& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end() || !same(v, it->second)) return false;
  }
  return true;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_num(double x) {
  if (!std::isfinite(x)) return "";
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

std::string version() { return QTC_VERSION; }

json config_to_json(const ProtocolConfig& c) {
  json j;
  j["d"] = c.d;
  j["M"] = c.m_copies;
  j["channel"] = c.channel.coeffs();
  j["flow"] = to_string(c.flow);
  j["strategy"] = {{"kind", kind_name(c.strategy.kind)}, {"target", c.strategy.target}};
  j["recon"] = to_string(c.recon);
  if (const auto* v = std::get_if<std::vector<cplx>>(&c.input))
    j["input"] = {{"amplitudes", complex_list(*v)}};
  else {
    const auto& h = std::get<HaarSpec>(c.input);
    j["input"] = {{"haar", {{"seed", h.seed}, {"samples", h.samples}}}};
  }
  return j;
}

ProtocolConfig config_from_json(const json& j) {
  ProtocolConfig c;
  c.d = j.at("d").get<int>();
  c.m_copies = j.at("M").get<int>();
  c.channel = Channel(j.at("channel").get<std::vector<double>>());
  c.flow = parse_flow(j.at("flow").get<std::string>());
  c.strategy.kind = kind_from(j.at("strategy").at("kind").get<std::string>());
  c.strategy.target = j.at("strategy").at("target").get<std::vector<double>>();
  c.recon = parse_recon_variant(j.at("recon").get<std::string>());
  const auto& in = j.at("input");
  if (in.contains("haar"))
    c.input = HaarSpec{in["haar"].at("seed").get<std::uint64_t>(), in["haar"].at("samples").get<std::size_t>()};
  else
    c.input = complex_list_from(in.at("amplitudes"));
  return c;
}

json report_to_json(const RunReport& r) {
  json j;
  j["tool"] = "qtc";
  j["version"] = version();
  j["config"] = config_to_json(r.config);
  j["input"] = complex_list(r.input);

  json branches = json::array();
  for (const auto& b : r.branches) {
    json jb;
    jb["m"] = b.m;
    jb["n"] = b.n ? json(*b.n) : json(nullptr);
    jb["flag"] = to_string(b.flag);
    jb["probability"] = b.probability;
    jb["zero"] = b.zero;
    jb["fidelity"] = num(b.fidelity());
    jb["clone_fidelities"] = b.clone_fidelities;
    if (b.clone_marginal) jb["clone_marginal"] = matrix_to_json(b.clone_marginal->matrix);
    branches.push_back(std::move(jb));
  }
  j["branches"] = std::move(branches);

  json by_flag = json::object();
  for (const auto& [k, v] : r.by_flag) by_flag[k] = {{"probability", v.probability}, {"fidelity", num(v.fidelity)}};
  j["averages"] = {{"average_fidelity", num(r.average_fidelity)},
                   {"total_probability", r.total_probability()},
                   {"by_flag", std::move(by_flag)}};

  json comps = json::array();
  for (const auto& c : r.comparisons) {
    comps.push_back({{"name", c.name},
                     {"simulated", num(c.simulated)},
                     {"closed_form", num(c.closed_form)},
                     {"abs_diff", num(c.abs_diff)},
                     {"ratio", num(c.ratio)},
                     {"status", to_string(c.status)},
                     {"branch", c.branch ? json(*c.branch) : json(nullptr)}});
  }
  j["comparisons"] = std::move(comps);
  j["discrepancy"] = r.has_discrepancy();

  if (r.sampling) {
    const auto& s = *r.sampling;
    j["sampling"] = {{"samples", s.samples},
                     {"seed", s.seed},
                     {"counts", s.counts},
                     {"frequency", s.frequency},
                     {"frequency_stderr", s.frequency_stderr},
                     {"fidelity", statistic_to_json(s.fidelity)}};
  }
  if (r.haar) {
    const auto& h = *r.haar;
    json jh;
    jh["seed"] = h.spec.seed;
    jh["samples"] = h.spec.samples;
    jh["average_fidelity"] = statistic_to_json(h.average_fidelity);
    jh["flag_fidelity"] = map_to_json(h.flag_fidelity, statistic_to_json);
    jh["flag_probability"] = map_to_json(h.flag_probability, statistic_to_json);
    jh["exact_average_fidelity"] = num(h.exact_average_fidelity);
    jh["exact_flag_fidelity"] = map_to_json(h.exact_flag_fidelity, num);
    jh["exact_flag_probability"] = map_to_json(h.exact_flag_probability, num);
    jh["fail_within_3sigma_of_inverse_d"] =
        h.fail_within_3sigma_of_inverse_d ? json(*h.fail_within_3sigma_of_inverse_d) : json(nullptr);
    j["haar"] = std::move(jh);
  }
  return j;
}

RunReport report_from_json(const json& j) {
  RunReport r;
  r.config = config_from_json(j.at("config"));
  r.input = complex_list_from(j.at("input"));
  const int d = r.config.d;
  for (const auto& jb : j.at("branches")) {
    BranchResult b;
    b.m = jb.at("m").get<int>();
    if (!jb.at("n").is_null()) b.n = jb.at("n").get<int>();
    b.flag = parse_branch_flag(jb.at("flag").get<std::string>());
    b.probability = jb.at("probability").get<double>();
    b.zero = jb.at("zero").get<bool>();
    b.clone_fidelities = jb.at("clone_fidelities").get<std::vector<double>>();
    if (jb.contains("clone_marginal"))
      b.clone_marginal = DensityMatrix{{d}, {"C1"}, matrix_from_json(jb["clone_marginal"])};
    r.branches.push_back(std::move(b));
  }
  const auto& av = j.at("averages");
  r.average_fidelity = get_num(av.at("average_fidelity"));
  for (const auto& [k, v] : av.at("by_flag").items())
    r.by_flag[k] = {v.at("probability").get<double>(), get_num(v.at("fidelity"))};
  for (const auto& jc : j.at("comparisons")) {
    Comparison c;
    c.name = jc.at("name").get<std::string>();
    c.simulated = get_num(jc.at("simulated"));
    c.closed_form = get_num(jc.at("closed_form"));
    c.abs_diff = get_num(jc.at("abs_diff"));
    c.ratio = get_num(jc.at("ratio"));
    c.status = parse_comparison_status(jc.at("status").get<std::string>());
    if (!jc.at("branch").is_null()) c.branch = jc.at("branch").get<std::size_t>();
    r.comparisons.push_back(std::move(c));
  }
  if (j.contains("sampling")) {
    const auto& js = j["sampling"];
    SamplingSummary s;
    s.samples = js.at("samples").get<std::size_t>();
    s.seed = js.at("seed").get<std::uint64_t>();
    s.counts = js.at("counts").get<std::vector<std::size_t>>();
    s.frequency = js.at("frequency").get<std::vector<double>>();
    s.frequency_stderr = js.at("frequency_stderr").get<std::vector<double>>();
    s.fidelity = statistic_from_json(js.at("fidelity"));
    r.sampling = std::move(s);
  }
  if (j.contains("haar")) {
    const auto& jh = j["haar"];
    HaarSummary h;
    h.spec = {jh.at("seed").get<std::uint64_t>(), jh.at("samples").get<std::size_t>()};
    h.average_fidelity = statistic_from_json(jh.at("average_fidelity"));
    for (const auto& [k, v] : jh.at("flag_fidelity").items()) h.flag_fidelity[k] = statistic_from_json(v);
    for (const auto& [k, v] : jh.at("flag_probability").items()) h.flag_probability[k] = statistic_from_json(v);
    h.exact_average_fidelity = get_num(jh.at("exact_average_fidelity"));
    for (const auto& [k, v] : jh.at("exact_flag_fidelity").items()) h.exact_flag_fidelity[k] = get_num(v);
    for (const auto& [k, v] : jh.at("exact_flag_probability").items()) h.exact_flag_probability[k] = get_num(v);
    if (!jh.at("fail_within_3sigma_of_inverse_d").is_null())
      h.fail_within_3sigma_of_inverse_d = jh["fail_within_3sigma_of_inverse_d"].get<bool>();
    r.haar = std::move(h);
  }
  return r;
}

bool equivalent(const RunReport& a, const RunReport& b) {
  if (!(a.config == b.config) || a.input != b.input || !same(a.average_fidelity, b.average_fidelity)) return false;
  if (a.branches.size() != b.branches.size() || a.comparisons.size() != b.comparisons.size()) return false;
  for (std::size_t i = 0; i < a.branches.size(); ++i) {
    const auto& x = a.branches[i];
    const auto& y = b.branches[i];
    if (x.m != y.m || x.n != y.n || x.flag != y.flag || x.probability != y.probability || x.zero != y.zero ||
        x.clone_fidelities != y.clone_fidelities || x.clone_marginal.has_value() != y.clone_marginal.has_value())
      return false;
    if (x.clone_marginal && x.clone_marginal->matrix != y.clone_marginal->matrix) return false;
  }
  for (std::size_t i = 0; i < a.comparisons.size(); ++i) {
    const auto& x = a.comparisons[i];
    const auto& y = b.comparisons[i];
    if (x.name != y.name || !same(x.simulated, y.simulated) || !same(x.closed_form, y.closed_form) ||
        !same(x.abs_diff, y.abs_diff) || !same(x.ratio, y.ratio) || x.status != y.status || x.branch != y.branch)
      return false;
  }
  if (a.by_flag.size() != b.by_flag.size()) return false;
  for (const auto& [k, v] : a.by_flag) {
    auto it = b.by_flag.find(k);
    if (it == b.by_flag.end() || !same(v.probability, it->second.probability) ||
        !same(v.fidelity, it->second.fidelity))
      return false;
  }
  if (a.sampling.has_value() != b.sampling.has_value() || a.haar.has_value() != b.haar.has_value()) return false;
  if (a.sampling) {
    const auto& x = *a.sampling;
    const auto& y = *b.sampling;
    if (x.samples != y.samples || x.seed != y.seed || x.counts != y.counts || x.frequency != y.frequency ||
        x.frequency_stderr != y.frequency_stderr || !same(x.fidelity, y.fidelity))
      return false;
  }
  if (a.haar) {
    const auto& x = *a.haar;
    const auto& y = *b.haar;
    if (!(x.spec == y.spec) || !same(x.average_fidelity, y.average_fidelity) ||
        !same_map(x.flag_fidelity, y.flag_fidelity) || !same_map(x.flag_probability, y.flag_probability) ||
        !same(x.exact_average_fidelity, y.exact_average_fidelity) ||
        !same_map(x.exact_flag_fidelity, y.exact_flag_fidelity) ||
        !same_map(x.exact_flag_probability, y.exact_flag_probability) ||
        x.fail_within_3sigma_of_inverse_d != y.fail_within_3sigma_of_inverse_d)
      return false;
  }
  return true;
}

const char* const kCsvHeader =
    "run_id,d,M,channel,strategy,branch_m,branch_n,flag,probability,fidelity,formula_name,formula_value,abs_diff";

void write_csv(std::ostream& os, const RunReport& r, const std::string& run_id, bool header) {
  if (header) os << kCsvHeader << '\n';
  const std::string prefix = csv_quote(run_id) + "," + std::to_string(r.config.d) + "," +
                             std::to_string(r.config.m_copies) + "," + csv_quote(to_string(r.config.channel)) +
                             "," + csv_quote(to_string(r.config.strategy)) + ",";
  for (std::size_t i = 0; i < r.branches.size(); ++i) {
    const auto& b = r.branches[i];
    os << prefix << b.m << "," << (b.n ? std::to_string(*b.n) : "") << "," << to_string(b.flag) << ","
       << csv_num(b.probability) << "," << csv_num(b.fidelity()) << ",";
    const Comparison* c = nullptr;
    for (const auto& x : r.comparisons)
      if (x.branch == i) {
        c = &x;
        break;
      }
    if (c)
      os << csv_quote(c->name) << "," << csv_num(c->closed_form) << "," << csv_num(c->abs_diff);
    else
      os << ",,";
    os << '\n';
  }
  for (const auto& c : r.comparisons) {
    if (c.branch) continue;
    os << prefix << ",,summary," << "," << csv_num(c.simulated) << "," << csv_quote(c.name) << ","
       << csv_num(c.closed_form) << "," << csv_num(c.abs_diff) << '\n';
  }
}

}  // namespace qtc
