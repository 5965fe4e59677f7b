#pragma once

// Experiment configuration: one declarative file with [experiment],
// [channel], [strain], [detector], [detector_oss], [schedule], [[events]],
// [[targets]], [agent] and [output] tables. Unknown keys are errors.
// IPS_SNMP_COMMUNITY and IPS_TARGET_<ID>_ADDR env vars override target
// credentials/addresses only.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ips/changepoint.hpp"
#include "ips/channel_model.hpp"
#include "ips/collector.hpp"
#include "ips/mock_agent.hpp"
#include "ips/simulator.hpp"
#include "ips/strain_model.hpp"
#include "ips/trace_io.hpp"

namespace ips::config {

class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error("config: " + what) {}
  config_error(const std::string& what, std::size_t line)
      : std::runtime_error("config: " + what + " (line " + std::to_string(line) + ")") {}
};

// Parses the TOML subset used by the config file (tables, arrays of tables,
// scalar and array values) into a JSON tree.
nlohmann::json parse_toml(const std::string& text);

struct OutputConfig {
  std::filesystem::path out_dir = "out";
  io::TraceFormat format = io::TraceFormat::csv;
};

struct ExperimentConfig {
  std::uint64_t seed = 42;
  std::string link_id = "sim-0";
  channel::ChannelParams channel;
  strain::FiberGeometry fiber;
  strain::PhotoelasticConstant photoelastic;
  detect::DetectorConfig detector_ber;  // [detector]; bandwidth in errors/s
  detect::DetectorConfig detector_oss;  // [detector_oss]; bandwidth in dB
  std::string schedule_name = "bend_sweep";        // canonical schedule, or
  std::optional<sim::StressSchedule> schedule;     // inline [[events]] schedule
  std::vector<collect::PollTarget> targets;
  sim::AgentConfig agent;
  OutputConfig output;

  static ExperimentConfig defaults();
  static ExperimentConfig from_file(const std::filesystem::path& path);
  static ExperimentConfig from_json(const nlohmann::json& root);

  // The schedule to run: the inline one when present, else the named
  // canonical schedule.
  sim::StressSchedule resolve_schedule() const;

  detect::DetectorConfig& detector(detect::SignalField field) {
    return field == detect::SignalField::ber ? detector_ber : detector_oss;
  }
  const detect::DetectorConfig& detector(detect::SignalField field) const {
    return field == detect::SignalField::ber ? detector_ber : detector_oss;
  }

  nlohmann::json to_json() const;
  std::uint64_t hash() const;  // FNV-1a over the canonical JSON form
};

}  // namespace ips::config
