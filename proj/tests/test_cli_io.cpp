#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "qtc/cli.hpp"
#include "qtc/protocol.hpp"
#include "qtc/report_io.hpp"

using namespace qtc;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir() {
  const fs::path p = fs::temp_directory_path() / ("qtc_cli_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Parse, ComplexTokens) {
  EXPECT_EQ(cli::parse_complex("0.5"), cplx(0.5, 0));
  EXPECT_EQ(cli::parse_complex("-i"), cplx(0, -1));
  EXPECT_EQ(cli::parse_complex("i"), cplx(0, 1));
  EXPECT_EQ(cli::parse_complex("0.5+0.25i"), cplx(0.5, 0.25));
  EXPECT_EQ(cli::parse_complex("1e-3-2i"), cplx(1e-3, -2));
  EXPECT_EQ(cli::parse_complex("2e-1i"), cplx(0, 0.2));
  EXPECT_THROW(cli::parse_complex("abc"), std::invalid_argument);
  EXPECT_THROW(cli::parse_complex(""), std::invalid_argument);
}

TEST(Parse, AmplitudesRenormalizeWithWarning) {
  std::ostringstream warn;
  const auto v = cli::parse_amplitudes("1,1", &warn);
  EXPECT_NEAR(std::abs(v[0]), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NE(warn.str().find("renormalized"), std::string::npos);
  std::ostringstream quiet;
  cli::parse_amplitudes("0.6,0.8i", &quiet);
  EXPECT_TRUE(quiet.str().empty());
  EXPECT_THROW(cli::parse_amplitudes("0,0"), std::invalid_argument);
}

TEST(Parse, Grids) {
  EXPECT_EQ(cli::parse_int_list("2..6"), (std::vector<int>{2, 3, 4, 5, 6}));
  EXPECT_EQ(cli::parse_int_list("2,3,5"), (std::vector<int>{2, 3, 5}));
  const auto g = cli::parse_real_grid("0.05:0.5:0.05");
  ASSERT_EQ(g.size(), 10u);
  EXPECT_NEAR(g.back(), 0.5, 1e-15);
  EXPECT_EQ(cli::parse_real_grid("0.1,0.2").size(), 2u);
  EXPECT_THROW(cli::parse_real_grid("0.1:0.2"), std::invalid_argument);
}

TEST(Simulate, OptimalQubitReport) {
  const auto r = run_cli({"simulate", "--d", "2", "--m-copies", "2", "--channel", "maximal", "--strategy", "none",
                          "--input", "1,0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("version"), version());
  EXPECT_EQ(j.at("config").at("d"), 2);
  for (const auto& b : j.at("branches")) EXPECT_NEAR(b.at("fidelity").get<double>(), 5.0 / 6.0, 1e-12);
}

TEST(Simulate, UsdSuccessColumnInCsv) {
  const auto r = run_cli({"simulate", "--d", "3", "--channel", "c=[0.8,0.5,0.33]", "--strategy", "usd", "--format",
                          "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);  // channel renormalized
  std::istringstream is(r.out);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, kCsvHeader);
  const double n = std::sqrt(0.64 + 0.25 + 0.33 * 0.33);
  const double cmin2 = (0.33 / n) * (0.33 / n);
  bool found = false;
  while (std::getline(is, line))
    if (line.find("p_success = d c_min^2") != std::string::npos) {
      found = true;
      EXPECT_NE(line.find("summary"), std::string::npos);
      const auto comma = line.rfind(',');
      const auto prev = line.rfind(',', comma - 1);
      EXPECT_NEAR(std::stod(line.substr(prev + 1, comma - prev - 1)), 3 * cmin2, 1e-12);
    }
  EXPECT_TRUE(found);
}

TEST(Simulate, MinErrorExitsWithDiscrepancy) {
  for (const char* d : {"2", "3"}) {
    const auto r = run_cli({"simulate", "--d", d, "--channel", std::string(d) == "2" ? "c=[0.8,0.6]" : "c=[0.7,0.5,0.5099019513592785]",
                            "--strategy", "minerror", "--input", std::string(d) == "2" ? "0.6,0.8" : "0.6,0.8,0"});
    EXPECT_EQ(r.code, cli::kExitDiscrepancy) << r.err;
  }
}

TEST(Simulate, ErrorsAreSingleLineAndNameField) {
  struct Case {
    std::vector<std::string> args;
    std::string field;
  };
  const std::vector<Case> cases = {
      {{"simulate", "--d", "3", "--channel", "c=[0.6,0.8,0]", "--strategy", "usd"}, "strategy"},
      {{"simulate", "--d", "2", "--channel", "c=[0.6,x]"}, "channel"},
      {{"simulate", "--d", "2", "--input", "1,0,0"}, "input"},
      {{"simulate", "--d", "2", "--strategy", "guess"}, "strategy"},
      {{"simulate", "--d", "2", "--format", "xml"}, "format"},
      {{"simulate", "--d", "2", "--recon", "s3"}, "recon"},
      {{"simulate", "--d", "2", "--out", "/nonexistent/dir/x.json"}, "out"},
      {{"simulate", "--d", "1"}, "d"},
  };
  for (const auto& c : cases) {
    const auto r = run_cli(c.args);
    EXPECT_EQ(r.code, cli::kExitError) << c.field;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
    EXPECT_NE(r.err.find(c.field), std::string::npos) << r.err;
  }
  EXPECT_EQ(run_cli({}).code, cli::kExitError);
  EXPECT_EQ(run_cli({"simulate", "--bogus"}).code, cli::kExitError);
}

TEST(Simulate, WritesFileAndRoundTrips) {
  const auto dir = temp_dir();
  const auto path = (dir / "report.json").string();
  const auto r = run_cli({"simulate", "--d", "3", "--channel", "c=[0.7,0.5,0.5099019513592785]", "--strategy",
                          "usd", "--input", "0.5,0.5+0.5i,-0.5", "--out", path, "--mc-samples", "500", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const auto j = nlohmann::json::parse(slurp(path));
  const RunReport back = report_from_json(j);
  EXPECT_EQ(report_to_json(back).dump(), j.dump());
  EXPECT_TRUE(back.sampling.has_value());
  back.config.validate();
  // The resolved config re-runs to the same report.
  RunReport rerun = compare_to_formulas(monte_carlo(back.config, 500, 3));
  EXPECT_TRUE(equivalent(report_from_json(report_to_json(rerun)), back));
  fs::remove_all(dir);
}

TEST(Report, JsonRoundTripAllStrategies) {
  std::mt19937_64 rng(3);
  const std::vector<Strategy> strategies{Strategy::none(), Strategy::usd(), Strategy::min_error(),
                                         Strategy::separation(Channel({0.6, 0.8}))};
  for (const auto& s : strategies) {
    auto cfg = ProtocolConfig::make(2, 2, Channel({0.8, 0.6}), s, std::vector<cplx>{0.6, cplx(0, 0.8)});
    const auto report = compare_to_formulas(run_exact(cfg));
    const auto back = report_from_json(nlohmann::json::parse(report_to_json(report).dump()));
    EXPECT_TRUE(equivalent(report, back)) << to_string(s);
  }
  auto mc = ProtocolConfig::make(3, 2, Channel({0.8, 0.6, 0.0}), Strategy::max_confidence(),
                                 std::vector<cplx>{1.0, 0.0, 0.0});
  const auto zero_branches = compare_to_formulas(run_exact(mc));
  EXPECT_TRUE(equivalent(zero_branches, report_from_json(report_to_json(zero_branches))));
  auto haar = ProtocolConfig::make(2, 2, Channel({0.8, 0.6}), Strategy::usd(), HaarSpec{1, 50});
  const auto h = compare_to_formulas(haar_average(haar));
  EXPECT_TRUE(equivalent(h, report_from_json(nlohmann::json::parse(report_to_json(h).dump()))));
}

TEST(Haar, FixedSeedIsByteIdentical) {
  const std::vector<std::string> args{"haar", "--d", "2", "--channel", "c=[0.894427190999916,0.447213595499958]",
                                      "--strategy", "usd", "--samples", "3000", "--seed", "42"};
  const auto a = run_cli(args);
  const auto b = run_cli(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_TRUE(j.at("haar").at("fail_within_3sigma_of_inverse_d").get<bool>());
}

TEST(Haar, MaximalChannelZeroVariance) {
  const auto r = run_cli({"haar", "--d", "2", "--channel", "maximal", "--input", "haar:9:300"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["haar"]["average_fidelity"]["mean"].get<double>(), 5.0 / 6.0, 1e-12);
  EXPECT_LT(j["haar"]["average_fidelity"]["stderr"].get<double>(), 1e-12);
  EXPECT_EQ(run_cli({"haar", "--d", "2", "--input", "1,0"}).code, cli::kExitError);
}

TEST(Sweep, ThresholdCrossingAtQuarter) {
  const auto rows = cli::sweep({{2, 0.2}, {2, 0.25}, {2, 0.3}}, 2);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_FALSE(rows[0].above_threshold);
  EXPECT_LT(rows[0].f_av, rows[0].f_est);
  EXPECT_TRUE(rows[1].above_threshold);
  EXPECT_NEAR(rows[1].f_av, rows[1].f_est, 1e-12);
  EXPECT_GT(rows[2].f_av, rows[2].f_est);
  for (const auto& r : rows) EXPECT_LT(r.abs_diff, 1e-10);
}

TEST(Sweep, CliCsvAndEmptyGrid) {
  const auto r = run_cli({"sweep", "--d", "2", "--cmin2", "0.05:0.5:0.05"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream is(r.out);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line.rfind("d,M,cmin2,p_d,F_av,F_est", 0), 0u);
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 10);
  const auto maximal = run_cli({"sweep", "--d", "2..6", "--channel", "maximal", "--format", "json"});
  ASSERT_EQ(maximal.code, 0) << maximal.err;
  for (const auto& row : nlohmann::json::parse(maximal.out)["rows"])
    EXPECT_NEAR(row["F_av"].get<double>(), (2.0 * 2 + row["d"].get<int>() - 1) / (2.0 + 2.0 * row["d"].get<int>()), 1e-12);
  const auto empty = run_cli({"sweep", "--d", "3", "--cmin2", "0.9"});
  EXPECT_EQ(empty.code, cli::kExitError);
  EXPECT_NE(empty.err.find("error: cmin2"), std::string::npos);
}
