#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace ips {

/**
 * One timestamped observation of a link, either produced by the simulator
 * or decoded from an SNMP poll.
 *
 * oss_dbm and ber are absent during loss of signal and after transport
 * failures; loss_of_signal marks the former, transport_error the latter.
 * ber is a dimensionless rate (errors per bit).
 */
struct SignalSample {
  std::int64_t timestamp_ms = 0;
  std::string link_id;
  std::optional<double> oss_dbm;
  std::optional<double> ber;
  bool loss_of_signal = false;
  bool transport_error = false;
  std::optional<double> poll_latency_ms;
  std::map<std::string, std::string> extras;  // opaque named readings

  bool operator==(const SignalSample&) const = default;
};

}  // namespace ips
