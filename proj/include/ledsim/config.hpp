#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ledsim/harness.hpp"

namespace ledsim {

/// Parse or validation failure; `line()` is 0 when the problem is not tied
/// to a line of the file (e.g. a bad command-line override).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct ConfigKey {
  const char* section;
  const char* name;
  const char* flag;  // command-line spelling, without the leading dashes
  const char* default_value;  // empty: unset unless given
  const char* help;
};

/// Every recognized key, in echo order.
const std::vector<ConfigKey>& config_keys();

/// Flat key=value document with [section] headers. Unknown keys are rejected.
///
///   [hyperparams]
///   alpha = 0.05
///   tau = 10   # trailing comments are allowed
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in, const std::string& source = "<config>");
  static ConfigFile load(const std::string& path);

  /// `qualified` is "section.name".
  void set(const std::string& qualified, const std::string& value);
  bool has(const std::string& qualified) const;
  /// Explicit value, else the key's default, else nullopt.
  std::optional<std::string> get(const std::string& qualified) const;

  double get_double(const std::string& qualified) const;
  long long get_int(const std::string& qualified) const;
  bool get_bool(const std::string& qualified) const;
  std::string get_string(const std::string& qualified) const;

  /// "section.name=value" for every key with a value, explicit or default.
  std::vector<std::string> echo() const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::string source_ = "<config>";
};

GraphSpec graph_spec_from(const ConfigFile& cfg);
ProblemSpec problem_spec_from(const ConfigFile& cfg);
HyperParams hyperparams_from(const ConfigFile& cfg);
RunSettings run_settings_from(const ConfigFile& cfg);
/// Topology size defaults to the problem's node count and must agree with it.
ExperimentConfig experiment_from(const ConfigFile& cfg);

}  // namespace ledsim
