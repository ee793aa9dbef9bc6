// JSON and CSV serialization of run reports.
//
// JSON carries the tool version, the resolved config, every branch with its
// clone fidelities and C1 marginal, the flag averages and the comparisons.
// Whole-register post states are not serialized. Non-finite numbers are
// written as null and read back as NaN.
#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "qtc/protocol.hpp"

namespace qtc {

std::string version();

nlohmann::json config_to_json(const ProtocolConfig& config);
ProtocolConfig config_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);

/// Field-by-field equality of everything the JSON form carries (NaN == NaN).
bool equivalent(const RunReport& a, const RunReport& b);

/// Header: run_id,d,M,channel,strategy,branch_m,branch_n,flag,probability,
/// fidelity,formula_name,formula_value,abs_diff
extern const char* const kCsvHeader;

/// One row per branch (with its first attached comparison), then one row per
/// report-level comparison with flag "summary".
void write_csv(std::ostream& os, const RunReport& report, const std::string& run_id,
               bool header = true);

}  // namespace qtc
