#include "qtc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "qtc/formulas.hpp"
#include "qtc/parallel.hpp"
#include "qtc/protocol.hpp"
#include "qtc/report_io.hpp"

namespace qtc::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

double parse_real(const std::string& token, const std::string& field) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(field + ": cannot parse '" + token + "' as a number");
  }
  if (used != token.size()) throw std::invalid_argument(field + ": cannot parse '" + token + "' as a number");
  return v;
}

int parse_int(const std::string& token, const std::string& field) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(token, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(field + ": cannot parse '" + token + "' as an integer");
  }
  if (used != token.size()) throw std::invalid_argument(field + ": cannot parse '" + token + "' as an integer");
  return v;
}

std::uint64_t parse_u64(const std::string& token, const std::string& field) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    if (!token.empty() && token[0] == '-') throw std::invalid_argument("negative");
    v = std::stoull(token, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(field + ": cannot parse '" + token + "' as a non-negative integer");
  }
  if (used != token.size())
    throw std::invalid_argument(field + ": cannot parse '" + token + "' as a non-negative integer");
  return v;
}

struct Options {
  int d = 2;
  int m_copies = 2;
  std::string channel = "maximal";
  std::string strategy = "none";
  std::string input;
  std::string recon = "s4";
  std::string format;
  std::string out;
  double tol = 1e-8;
  std::uint64_t seed = 42;
  std::size_t samples = 10000;
  std::size_t mc_samples = 0;
  // sweep
  std::string dims = "2";
  std::string cmin2;
};

InputSpec parse_input(const std::string& text, int d, std::ostream& err) {
  if (text.empty()) {
    std::vector<cplx> v(static_cast<std::size_t>(std::max(d, 1)), 0.0);
    v[0] = 1.0;
    return v;
  }
  if (text.rfind("haar", 0) == 0) {
    const auto parts = split(text, ':');
    if (parts.size() != 3 || parts[0] != "haar")
      throw std::invalid_argument("input: expected haar:SEED:N, got '" + text + "'");
    HaarSpec h;
    h.seed = parse_u64(parts[1], "input");
    h.samples = static_cast<std::size_t>(parse_u64(parts[2], "input"));
    return h;
  }
  return parse_amplitudes(text, &err);
}

ProtocolConfig build_config(const Options& o, const InputSpec& input, std::ostream& err) {
  Channel channel = parse_channel(o.channel, o.d, &err);
  Strategy strategy = parse_strategy(o.strategy, o.d, &err);
  auto cfg = ProtocolConfig::make(o.d, o.m_copies, std::move(channel), std::move(strategy), input,
                                  parse_recon_variant(o.recon));
  cfg.validate();
  return cfg;
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw std::runtime_error("out: cannot open '" + path + "' for writing");
    os_ = &file_;
  }
  std::ostream& stream() { return *os_; }
  void close(const std::string& path) {
    if (path.empty()) return;
    file_.close();
    if (!file_) throw std::runtime_error("out: failed writing '" + path + "'");
  }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

std::string run_id(const ProtocolConfig& cfg) {
  std::ostringstream os;
  os << "d" << cfg.d << "-M" << cfg.m_copies << "-" << to_string(cfg.strategy);
  return os.str();
}

std::string resolve_format(const std::string& f, const std::string& fallback) {
  const std::string v = f.empty() ? fallback : f;
  if (v != "json" && v != "csv") throw std::invalid_argument("format: expected json or csv, got '" + v + "'");
  return v;
}

int emit_report(const RunReport& report, const Options& o, std::ostream& out) {
  const std::string format = resolve_format(o.format, "json");
  Output sink(o.out, out);
  if (format == "json")
    sink.stream() << report_to_json(report).dump(2) << '\n';
  else
    write_csv(sink.stream(), report, run_id(report.config));
  sink.close(o.out);
  return report.has_discrepancy() ? kExitDiscrepancy : kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  const InputSpec input = parse_input(o.input, o.d, err);
  const ProtocolConfig cfg = build_config(o, input, err);
  RunReport report;
  if (std::holds_alternative<HaarSpec>(cfg.input))
    report = haar_average(cfg);
  else if (o.mc_samples > 0)
    report = monte_carlo(cfg, o.mc_samples, o.seed);
  else
    report = run_exact(cfg);
  return emit_report(compare_to_formulas(std::move(report), o.tol), o, out);
}

int cmd_haar(const Options& o, std::ostream& out, std::ostream& err) {
  InputSpec input = HaarSpec{o.seed, o.samples};
  if (!o.input.empty()) {
    input = parse_input(o.input, o.d, err);
    if (!std::holds_alternative<HaarSpec>(input))
      throw std::invalid_argument("input: haar expects haar:SEED:N");
  }
  const ProtocolConfig cfg = build_config(o, input, err);
  return emit_report(compare_to_formulas(haar_average(cfg), o.tol), o, out);
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const auto dims = parse_int_list(o.dims);
  std::vector<std::pair<int, double>> grid;
  if (!o.cmin2.empty()) {
    if (o.cmin2 == "threshold") {
      for (int d : dims) grid.emplace_back(d, formulas::cmin2_threshold(d));
    } else {
      const auto values = parse_real_grid(o.cmin2);
      for (int d : dims)
        for (double v : values) grid.emplace_back(d, v);
    }
  } else if (o.channel == "maximal") {
    for (int d : dims) grid.emplace_back(d, 1.0 / d);
  } else {
    throw std::invalid_argument("channel: sweep takes --cmin2 or --channel maximal");
  }
  const auto rows = sweep(grid, o.m_copies, &err);
  if (rows.empty()) throw std::invalid_argument("cmin2: the sweep grid is empty");

  const std::string format = resolve_format(o.format, "csv");
  Output sink(o.out, out);
  auto& os = sink.stream();
  bool discrepancy = false;
  for (const auto& r : rows) discrepancy = discrepancy || !(r.abs_diff <= o.tol);
  if (format == "csv") {
    os.precision(17);
    os << "d,M,cmin2,p_d,F_av,F_est,F_av_minus_F_est,above_threshold,F_av_simulated,abs_diff\n";
    for (const auto& r : rows)
      os << r.d << "," << r.m_copies << "," << r.cmin2 << "," << r.p_d << "," << r.f_av << "," << r.f_est << ","
         << r.f_av - r.f_est << "," << (r.above_threshold ? "true" : "false") << "," << r.f_av_simulated << ","
         << r.abs_diff << "\n";
  } else {
    nlohmann::json j;
    j["tool"] = "qtc";
    j["version"] = version();
    j["M"] = o.m_copies;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows)
      j["rows"].push_back({{"d", r.d},
                           {"M", r.m_copies},
                           {"cmin2", r.cmin2},
                           {"p_d", r.p_d},
                           {"F_av", r.f_av},
                           {"F_est", r.f_est},
                           {"above_threshold", r.above_threshold},
                           {"F_av_simulated", r.f_av_simulated},
                           {"abs_diff", r.abs_diff}});
    j["discrepancy"] = discrepancy;
    os << j.dump(2) << '\n';
  }
  sink.close(o.out);
  return discrepancy ? kExitDiscrepancy : kExitOk;
}

void add_run_options(CLI::App* sub, Options& o) {
  sub->add_option("--d", o.d, "qudit dimension");
  sub->add_option("--m-copies", o.m_copies, "number of clones M");
  sub->add_option("--channel", o.channel, "maximal | rank1 | c=[...]");
  sub->add_option("--strategy", o.strategy, "none | usd | minerror | sep:<channel> | maxconf");
  sub->add_option("--input", o.input, "a,b,... | haar:SEED:N");
  sub->add_option("--recon", o.recon, "s2 | s4");
  sub->add_option("--format", o.format, "json | csv");
  sub->add_option("--out", o.out, "output path (stdout when omitted)");
  sub->add_option("--tol", o.tol, "comparison tolerance");
  sub->add_option("--seed", o.seed, "seed for sampling");
}

}  // namespace

cplx parse_complex(const std::string& raw) {
  const std::string t = trim(raw);
  if (t.empty()) throw std::invalid_argument("input: empty amplitude");
  if (t.back() != 'i') return {parse_real(t, "input"), 0.0};
  const std::string body = t.substr(0, t.size() - 1);
  std::size_t split_at = std::string::npos;
  for (std::size_t k = body.size(); k-- > 1;)
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      split_at = k;
      break;
    }
  const std::string re = split_at == std::string::npos ? "" : body.substr(0, split_at);
  const std::string im = split_at == std::string::npos ? body : body.substr(split_at);
  double imag = 0;
  if (im.empty() || im == "+")
    imag = 1;
  else if (im == "-")
    imag = -1;
  else
    imag = parse_real(im, "input");
  return {re.empty() ? 0.0 : parse_real(re, "input"), imag};
}

std::vector<cplx> parse_amplitudes(const std::string& text, std::ostream* warn) {
  std::vector<cplx> v;
  for (const auto& tok : split(text, ',')) v.push_back(parse_complex(tok));
  double n2 = 0;
  for (const auto& a : v) n2 += std::norm(a);
  if (!(n2 > 0) || !std::isfinite(n2)) throw std::invalid_argument("input: amplitudes have zero norm");
  const double norm = std::sqrt(n2);
  if (std::abs(norm - 1.0) > 1e-6 && warn)
    *warn << "warning: input: amplitudes renormalized (norm was " << norm << ")\n";
  for (auto& a : v) a /= norm;
  return v;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  const auto range = text.find("..");
  if (range != std::string::npos) {
    const int lo = parse_int(trim(text.substr(0, range)), "d");
    const int hi = parse_int(trim(text.substr(range + 2)), "d");
    for (int v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  for (const auto& tok : split(text, ','))
    if (!tok.empty()) out.push_back(parse_int(tok, "d"));
  return out;
}

std::vector<double> parse_real_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw std::invalid_argument("cmin2: expected start:stop:step");
    const double lo = parse_real(parts[0], "cmin2");
    const double hi = parse_real(parts[1], "cmin2");
    const double step = parse_real(parts[2], "cmin2");
    if (!(step > 0)) throw std::invalid_argument("cmin2: step must be positive");
    // Points are lo + k step, so grid values do not accumulate rounding.
    for (long k = 0;; ++k) {
      const double v = lo + static_cast<double>(k) * step;
      if (v > hi + 1e-9 * step) break;
      out.push_back(v);
    }
    return out;
  }
  for (const auto& tok : split(text, ','))
    if (!tok.empty()) out.push_back(parse_real(tok, "cmin2"));
  return out;
}

std::vector<double> sweep_channel(int d, double cmin2) {
  std::vector<double> c(static_cast<std::size_t>(d), std::sqrt((1.0 - cmin2) / (d - 1)));
  c[0] = std::sqrt(cmin2);
  return c;
}

std::vector<SweepRow> sweep(const std::vector<std::pair<int, double>>& grid, int m_copies, std::ostream* warn) {
  std::vector<std::pair<int, double>> valid;
  for (const auto& [d, v] : grid) {
    if (d < 2) throw std::invalid_argument("d: must be >= 2");
    if (!(v > 0) || v > 1.0 / d + 1e-12) {
      if (warn) *warn << "warning: cmin2: skipping " << v << " at d = " << d << " (needs 0 < cmin2 <= 1/d)\n";
      continue;
    }
    valid.emplace_back(d, std::min(v, 1.0 / d));
  }
  std::vector<SweepRow> rows(valid.size());
  parallel_for(valid.size(), [&](std::size_t i) {
    const auto [d, v] = valid[i];
    Channel channel = Channel::normalized(sweep_channel(d, v));
    SweepRow r;
    r.d = d;
    r.m_copies = m_copies;
    r.cmin2 = v;
    r.p_d = formulas::p_usd(channel.coeffs());
    r.f_av = formulas::f_av(d, r.p_d, m_copies);
    r.f_est = formulas::f_est(d);
    r.above_threshold = v >= formulas::cmin2_threshold(d);
    const auto cfg = ProtocolConfig::make(d, m_copies, channel, Strategy::usd());
    const Telecloner engine(cfg);
    r.f_av_simulated = haar_exact(d, [&](std::span<const cplx> a) { return engine.run(a, false).average_fidelity; });
    r.abs_diff = std::abs(r.f_av_simulated - r.f_av);
    rows[i] = r;
  });
  return rows;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Universal symmetric telecloning of qudits through partially entangled channels", "qtc"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "exact branch enumeration with closed-form comparisons");
  add_run_options(simulate, o);
  simulate->add_option("--mc-samples", o.mc_samples, "also sample this many outcomes");

  auto* haar = app.add_subcommand("haar", "averages over Haar-random inputs");
  add_run_options(haar, o);
  haar->add_option("--samples", o.samples, "number of Haar samples");

  auto* sw = app.add_subcommand("sweep", "threshold sweep over dimension and c_min^2");
  sw->add_option("--d", o.dims, "dimension list or range, e.g. 2..6");
  sw->add_option("--m-copies", o.m_copies, "number of clones M");
  sw->add_option("--cmin2", o.cmin2, "list, start:stop:step, or 'threshold'");
  sw->add_option("--channel", o.channel, "maximal (instead of --cmin2)");
  sw->add_option("--format", o.format, "csv | json");
  sw->add_option("--out", o.out, "output path (stdout when omitted)");
  sw->add_option("--tol", o.tol, "tolerance for the simulated column");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o, out, err);
    if (haar->parsed()) return cmd_haar(o, out, err);
    return cmd_sweep(o, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace qtc::cli
