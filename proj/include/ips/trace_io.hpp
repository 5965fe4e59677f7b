#pragma once

// Sample trace persistence (CSV and JSON-lines) and detection event output.
// Real numbers are written with shortest round-trip precision so that
// persist -> load is lossless.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ips/changepoint.hpp"
#include "ips/sample.hpp"

namespace ips::io {

enum class TraceFormat { csv, jsonl };

// Column set for CSV output: simulation traces carry the core columns
// (timestamp_ms, link_id, oss_dbm, ber, loss_of_signal); collector traces
// add transport_error and poll_latency_ms. Extras always follow.
enum class TraceStyle { simulation, collector };

TraceFormat parse_format(const std::string& name);  // "csv" | "jsonl"
std::string format_extension(TraceFormat format);

class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/**
 * Streaming trace writer with one serialized output file. The header (CSV)
 * is emitted on the first sample. Throws std::runtime_error on I/O failure.
 */
class TraceWriter {
 public:
  TraceWriter(const std::filesystem::path& path, TraceFormat format,
              TraceStyle style = TraceStyle::simulation);
  ~TraceWriter();
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  void write(const SignalSample& sample);
  void close();  // flush and release; implied by destruction
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  TraceFormat format_;
  TraceStyle style_;
  std::unique_ptr<std::ofstream> out_;
  bool header_written_ = false;
  std::vector<std::string> extras_columns_;
};

void write_trace(const std::filesystem::path& path, TraceFormat format,
                 const std::vector<SignalSample>& samples,
                 TraceStyle style = TraceStyle::simulation);

struct LoadResult {
  std::vector<SignalSample> samples;  // sorted by (link_id-preserving) timestamp
  std::vector<std::string> warnings;
};

/**
 * Load a trace, sorting by timestamp when needed (with a warning) and
 * rejecting duplicate (link_id, timestamp) pairs. Malformed rows raise
 * parse_error carrying the line number.
 */
LoadResult load_trace(const std::filesystem::path& path, TraceFormat format);

// Detection events as JSON-lines records
// {signal_id, t_start, t_end, kld, threshold, kind}.
void write_events(const std::filesystem::path& path, const std::vector<detect::DetectionEvent>& events);
std::vector<detect::DetectionEvent> load_events(const std::filesystem::path& path);

// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace ips::io
