#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "evodyn/engine.hpp"
#include "evodyn/payoffs.hpp"
#include "evodyn/rules.hpp"
#include "evodyn/simplex.hpp"

namespace evodyn {

/// One weighted component of a configured rule. User rules cannot be
/// expressed in a config file.
struct TermConfig {
  double weight = 0.0;
  std::variant<ImitationRule, ComparisonRule, ExcessRule> component;

  bool operator==(const TermConfig&) const = default;
};

/// Either a named preset or an explicit list of terms.
struct RuleConfig {
  std::string name;
  std::optional<std::string> preset;
  std::vector<TermConfig> terms;

  bool operator==(const RuleConfig&) const = default;
};

struct FilterConfig {
  double lambda = 0.0;
  double k = 0.0;
  Matrix A;
  Vector b;

  bool operator==(const FilterConfig& o) const { return lambda == o.lambda && k == o.k && A == o.A && b == o.b; }
};

struct AnalysisConfig {
  double speed_tol = 1e-3;
  double dist_tol = 1e-3;
  double correlation_tol = 1e-6;
  double drift_threshold = 1e-3;
  /// Zero threshold shared by the correlation, field-norm and best-response
  /// tests of the property samplers.
  double zero_tol = 1e-9;
  /// Horizon of the certification falsifier; <= 0 means the integrator t_max.
  double ccw_horizon = 0.0;
  std::size_t samples = 10000;
  std::uint64_t seed = 1;

  bool operator==(const AnalysisConfig&) const = default;
};

struct OutputConfig {
  std::string csv_dir;
  std::string svg_path;
  std::string report_path;
  std::string certify_path;

  bool operator==(const OutputConfig&) const = default;
};

struct ScenarioConfig {
  std::string name;
  std::string description;
  std::size_t n = 0;
  Matrix game_A;
  Vector game_b;
  std::optional<FilterConfig> filter;
  std::vector<RuleConfig> rules;
  std::vector<std::pair<std::string, Vector>> initial;
  IntegratorConfig integrator;
  AnalysisConfig analysis;
  OutputConfig output;

  bool operator==(const ScenarioConfig& o) const;
};

/// Parses the sectioned `key = value` format. `source` names the input in
/// error messages. Throws ConfigError with a line number on any problem.
ScenarioConfig parse_scenario(const std::string& text, const std::string& source = "<config>");
ScenarioConfig load_scenario(const std::string& path);

/// Canonical text form; parse_scenario(serialize_scenario(c)) == c.
std::string serialize_scenario(const ScenarioConfig& cfg);

/// Builds the runtime objects. Errors surface as ConfigError naming the
/// offending block.
MemorylessGame build_game(const ScenarioConfig& cfg);
/// With `validate_filter` false the kA <= 0 requirement is not enforced, which
/// lets certification report on mechanisms outside the certified class.
PayoffMechanism build_mechanism(const ScenarioConfig& cfg, bool validate_filter = true);
RuleSpec build_rule(const RuleConfig& rule, bool allow_pure_imitation = false);
std::vector<RuleSpec> build_rules(const ScenarioConfig& cfg, bool allow_pure_imitation = false);
std::vector<PopulationState> build_initial_states(const ScenarioConfig& cfg);

}  // namespace evodyn
