#pragma once

// Validation of report JSON against the published schema
// (schemas/report.schema.json, embedded at build time).

#include <string>
#include <vector>

namespace causalreg::tools {

const std::string& report_schema_text();

/// Empty when `json_text` is a valid report; otherwise one message per
/// violation found (rapidjson stops at the first).
std::vector<std::string> validate_report(const std::string& json_text);

}  // namespace causalreg::tools
