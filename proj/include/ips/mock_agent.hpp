#pragma once

// SNMP v2c mock agent backed by a precomputed simulation trace. Simulation
// time advances against the wall clock (optionally accelerated), so a GET
// always reads one consistent (OSS, BER) sample.
//
// Wire encodings (documented contract):
//   oss            INTEGER, hundredths of dBm (-723 means -7.23 dBm)
//   ber            OCTET STRING, decimal scientific notation ("1.00e-06")
//   corrected_bits INTEGER, error count in the last sample tick
//   any OID        noSuchObject when unknown, noSuchInstance during
//                  loss of signal

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "ips/sample.hpp"
#include "ips/snmp.hpp"

namespace ips::sim {

struct AgentConfig {
  std::string bind_host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks an ephemeral port
  std::string community = "public";
  // Named OIDs the agent serves; must contain "oss" and "ber".
  std::map<std::string, std::string> oids;
  double time_scale = 1.0;      // simulated seconds per wall-clock second
  double bit_rate_bps = 100e9;  // converts ber rates to corrected-bit counts
};

// Default enterprise OID assignments for the mock agent. Real deployments
// substitute the vendor's dotted-decimal values in the config.
std::map<std::string, std::string> default_oid_map();

class MockAgent {
 public:
  // trace: samples at fixed sample_rate ticks, as produced by simulate().
  MockAgent(AgentConfig config, std::vector<SignalSample> trace, double sample_rate_hz);
  ~MockAgent();
  MockAgent(const MockAgent&) = delete;
  MockAgent& operator=(const MockAgent&) = delete;

  void start();  // binds and spawns the request loop; throws on bind failure
  void stop();

  std::uint16_t port() const noexcept { return bound_port_; }
  std::uint64_t request_count() const noexcept { return requests_.load(); }
  bool finished() const noexcept;  // wall clock ran past the trace end

 private:
  void serve_loop();
  snmp::Value value_for(const snmp::Oid& oid, const SignalSample& sample) const;
  const SignalSample& current_sample() const;

  AgentConfig config_;
  std::vector<SignalSample> trace_;
  double sample_rate_hz_;
  std::map<snmp::Oid, std::string> oid_names_;
  int fd_ = -1;
  std::uint16_t bound_port_ = 0;
  std::thread thread_;
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> requests_{0};
  std::chrono::steady_clock::time_point started_at_;
};

}  // namespace ips::sim
