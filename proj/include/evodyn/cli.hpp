#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "evodyn/scenario.hpp"

namespace evodyn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitIntegratorFailure = 3;

/// $EVODYN_SCENARIO_DIR when set and nonempty, else the bundled directory.
std::string scenario_dir();

/// `arg` itself when it names a file, else <scenario_dir>/<arg>.cfg. Throws
/// ConfigError when neither exists.
std::string resolve_config(const std::string& arg);

/// Orthographic map of the 2-simplex onto the triangle (0,0), (1,0),
/// (0.5, sqrt(3)/2); strategies 1, 2, 3 land on those vertices.
std::pair<double, double> ternary_coordinates(const Vector& x);

struct TernaryPath {
  std::string label;
  /// Colour slot; paths sharing a slot share a colour.
  std::size_t group = 0;
  std::vector<Vector> points;
};

/// Deterministic SVG: one polyline per path, a red square at each start and a
/// black circle at each end. Throws InvalidParameter for non-3-strategy points.
void write_ternary_svg(const std::vector<TernaryPath>& paths, const std::vector<std::string>& legend,
                       std::ostream& out);

/// `property: verdict witness...`
std::string report_line(const std::string& property, const std::string& verdict, const std::string& witness = {});

struct CommandOptions {
  /// Overrides every [output] path: <dir>/csv, <dir>/trajectories.svg, <dir>/report.txt.
  std::string output_dir;
  /// Builds rules outside the hybrid cone instead of rejecting them.
  bool allow_pure_imitation = false;
};

/// The commands return process exit codes and write diagnostics to `err`.
int cmd_simulate(const std::string& config, const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_certify(const std::string& config, const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_list_scenarios(bool verbose, std::ostream& out, std::ostream& err);

}  // namespace evodyn
