#pragma once

// Plot-ready report output: per link, a two-panel SVG (error rate above,
// OSS below) with event markers, a per-window KL divergence series and a
// summary CSV. Pure file output.

#include <filesystem>
#include <string>
#include <vector>

#include "ips/changepoint.hpp"
#include "ips/sample.hpp"

namespace ips::report {

struct ReportFiles {
  std::vector<std::filesystem::path> plots;
  std::vector<std::filesystem::path> kld_series;
  std::filesystem::path summary;
};

/**
 * Write report files for every link in the trace. Events must reference
 * links present in the trace. The KL series is recomputed from the trace
 * with the given detector configs (ber/oss).
 */
ReportFiles write_report(const std::vector<SignalSample>& trace,
                         const std::vector<detect::DetectionEvent>& events,
                         const detect::DetectorConfig& ber_config,
                         const detect::DetectorConfig& oss_config,
                         const std::filesystem::path& out_dir);

}  // namespace ips::report
