#pragma once

// SNMP polling client: queries configured OIDs on a schedule, normalizes
// readings into SignalSamples and hands them to a serialized sink.

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ips/sample.hpp"

namespace ips::collect {

// How to turn a varbind value into a number.
struct DecodeSpec {
  enum class Kind { int_scaled, string_decimal };
  Kind kind = Kind::int_scaled;
  double scale = 1.0;
};

struct PollTarget {
  std::string address;  // host:port
  std::string community = "public";
  std::string link_id;
  double poll_interval_s = 1.0;  // >= 0.05 (20 Hz cap)
  double timeout_s = 2.0;        // per attempt; one retry after a timeout
  // Named OIDs; must contain at least one of "oss" / "ber". Other names are
  // collected as opaque extras.
  std::map<std::string, std::string> oids;
  std::map<std::string, DecodeSpec> decode;  // per-name overrides

  void validate() const;
};

inline constexpr double kMinPollIntervalS = 0.05;

class collector_decode_error : public std::runtime_error {
 public:
  collector_decode_error(const std::string& oid_name, const std::string& detail)
      : std::runtime_error("decode error for OID '" + oid_name + "': " + detail) {}
};

/**
 * One GET covering all of the target's OIDs. Timeouts yield a sample with
 * both fields absent and transport_error set; a value the decode spec cannot
 * interpret raises collector_decode_error naming the OID. noSuchInstance on
 * oss/ber marks loss of signal.
 */
SignalSample poll_once(const PollTarget& target);

struct TargetStats {
  std::string link_id;
  std::uint64_t ok = 0;
  std::uint64_t timeout = 0;
  std::uint64_t decode_errors = 0;
  double achieved_rate_hz = 0.0;
};

struct CollectorSummary {
  std::vector<TargetStats> targets;
  bool sink_failed = false;
  std::string error;
};

using SampleSink = std::function<void(const SignalSample&)>;

/**
 * Poll every target at its own interval (one loop per target, absolute
 * deadlines, no catch-up bursts) until stop becomes true. Sink calls are
 * serialized; a sink exception stops all loops and is reported in the
 * summary. Per-link sample order is strictly increasing in timestamp.
 */
CollectorSummary run_collector(const std::vector<PollTarget>& targets, const SampleSink& sink,
                               const std::atomic<bool>& stop);

}  // namespace ips::collect
