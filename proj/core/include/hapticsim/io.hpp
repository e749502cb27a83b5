#pragma once

#include "hapticsim/mannequin.hpp"
#include "hapticsim/recorder.hpp"
#include "hapticsim/robot.hpp"
#include "hapticsim/runtime.hpp"
#include "hapticsim/session.hpp"
#include "hapticsim/stylus_script.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hapticsim::io {

/// One problem found in an input file; `pointer` is an RFC 6901 JSON pointer.
struct Diagnostic {
  std::string file;
  std::string pointer;
  std::string message;

  std::string to_string() const;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Dotted-path overrides ("rates.clock" -> "simulated"). Values are parsed as JSON when
/// possible and kept as strings otherwise. Applied on top of the file; overrides win.
using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Parses "1s", "250ms", "2.5" (seconds). Throws std::invalid_argument.
double parse_duration(const std::string& text);

geometry::Scene load_scene(const std::filesystem::path& path);
entities::RobotModel load_robot(const std::filesystem::path& path);
entities::MannequinModel load_mannequin(const std::filesystem::path& path);
protocol::StylusScript load_script(const std::filesystem::path& path, const mapping::DeviceSpec& spec = {},
                                   int haptic_hz = 1000);

struct Scenario {
  std::filesystem::path path;
  runtime::SessionConfig session;
  runtime::RateConfig rates;
  double duration = 1.0;
  std::optional<protocol::StylusScript> stylus;  // empty: external (live) input
  std::optional<runtime::RecordMode> record;
  std::optional<std::filesystem::path> report_path;
  std::optional<std::filesystem::path> trajectory_path;
};

/// Loads a scenario and every file it references. Throws ValidationError with all problems.
Scenario load_scenario(const std::filesystem::path& path, const Overrides& overrides = {});

/// Schema and cross-reference checks on any hapticsim file (kind taken from its "format").
/// Returns every problem found; an empty list means the file is valid.
std::vector<Diagnostic> validate_file(const std::filesystem::path& path, const Overrides& overrides = {});

/// RunReport as a JSON document.
std::string report_json(const runtime::RunReport& report, const std::string& scenario_name = {});

/// One JSON object per line: {"t", "entity_id", "position": [3], "quaternion": [w, x, y, z]}.
std::string trajectory_jsonl(const runtime::Trajectory& trajectory);

/// Parses trajectory_jsonl output back.
runtime::Trajectory parse_trajectory_jsonl(const std::string& text);

/// Writes `content` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& content);

std::string_view to_string(forcefield::ForceClass c);
std::optional<forcefield::ForceClass> parse_force_class(std::string_view s);

}  // namespace hapticsim::io
