// Command-line front end: simulate, haar and sweep subcommands.
//
// Exit codes: 0 success, 2 when a comparison is flagged DISCREPANCY, 1 on any
// error (one diagnostic line on stderr naming the offending field).
#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "qtc/linalg.hpp"

namespace qtc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitDiscrepancy = 2;

int run(int argc, char** argv);
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "0.5", "-i", "0.5+0.5i", "1e-3-2i".
cplx parse_complex(const std::string& token);
/// Comma-separated amplitudes, normalized (warning on `warn` when the norm is
/// off by more than 1e-6).
std::vector<cplx> parse_amplitudes(const std::string& text, std::ostream* warn = nullptr);
/// "3", "2,3,5" or the inclusive range "2..6".
std::vector<int> parse_int_list(const std::string& text);
/// "0.1,0.2" or the inclusive range "start:stop:step".
std::vector<double> parse_real_grid(const std::string& text);

struct SweepRow {
  int d = 0;
  int m_copies = 2;
  double cmin2 = 0.0;
  double p_d = 0.0;
  double f_av = 0.0;
  double f_est = 0.0;
  bool above_threshold = false;
  /// Exact Haar average of the USD run.
  double f_av_simulated = 0.0;
  double abs_diff = 0.0;
};

/// Channel with c_0^2 = cmin2 and the remaining weight spread evenly.
std::vector<double> sweep_channel(int d, double cmin2);

/// One row per (d, cmin2) point; points with cmin2 outside (0, 1/d] are
/// skipped with a warning.
std::vector<SweepRow> sweep(const std::vector<std::pair<int, double>>& grid, int m_copies,
                            std::ostream* warn = nullptr);

}  // namespace qtc::cli
