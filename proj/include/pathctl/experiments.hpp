#pragma once

#include <string>
#include <vector>

namespace pathctl {

/// Result of one experiment run: a CSV table with a fixed header, summary
/// lines and whether every property checked by the run held.
struct Report {
  std::string experiment;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> summary;
  bool passed = true;

  /// LF line endings, no trailing spaces.
  std::string csv() const;
  std::string summary_text() const;
};

struct ExperimentInfo {
  std::string name;
  std::string description;
  /// Default configuration as JSON; running with "{}" uses exactly these values.
  std::string preset;
};

const std::vector<ExperimentInfo>& experiments();

/// Runs the named experiment on a JSON config. `overrides` are "dotted.key=value"
/// strings applied before validation; values parse as JSON, otherwise as strings.
/// Throws Config on unknown experiments, malformed JSON, unknown keys or
/// out-of-range values, naming the offending key.
Report run_experiment(const std::string& name, const std::string& config_json,
                      const std::vector<std::string>& overrides = {});

/// "%.17g"
std::string format_double(double v);

}  // namespace pathctl
