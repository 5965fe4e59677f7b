#include "ips/mock_agent.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace ips::sim {

std::map<std::string, std::string> default_oid_map() {
  // Private-enterprise subtree; mirrors the metric names a transport MIB
  // exposes (corrected zeros/ones/bits/words, Q factor, pre-FEC BER, ...).
  const std::string base = "1.3.6.1.4.1.54321.1.";
  return {
      {"oss", base + "1.0"},
      {"ber", base + "2.0"},  // pre-FEC bit error rate
      {"corrected_zeros", base + "3.0"},
      {"corrected_ones", base + "4.0"},
      {"corrected_bits", base + "5.0"},
      {"corrected_words", base + "6.0"},
      {"q_factor", base + "7.0"},
      {"chromatic_dispersion", base + "8.0"},
      {"channel_q", base + "9.0"},
  };
}

MockAgent::MockAgent(AgentConfig config, std::vector<SignalSample> trace, double sample_rate_hz)
    : config_(std::move(config)), trace_(std::move(trace)), sample_rate_hz_(sample_rate_hz) {
  if (trace_.empty()) throw std::invalid_argument("mock agent needs a non-empty trace");
  if (!(sample_rate_hz_ > 0)) throw std::invalid_argument("mock agent sample rate must be > 0");
  if (!(config_.time_scale > 0)) throw std::invalid_argument("mock agent time_scale must be > 0");
  if (!config_.oids.count("oss") || !config_.oids.count("ber")) {
    throw std::invalid_argument("mock agent oid map must name 'oss' and 'ber'");
  }
  for (const auto& [name, dotted] : config_.oids) {
    oid_names_.emplace(snmp::Oid::parse(dotted), name);
  }
}

MockAgent::~MockAgent() { stop(); }

void MockAgent::start() {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw std::runtime_error("mock agent: socket() failed");

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(config_.port);
  if (::inet_pton(AF_INET, config_.bind_host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    fd_ = -1;
    throw std::runtime_error("mock agent: bad bind address '" + config_.bind_host + "'");
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw std::runtime_error("mock agent: cannot bind " + config_.bind_host + ":" +
                             std::to_string(config_.port));
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  bound_port_ = ntohs(bound.sin_port);

  started_at_ = std::chrono::steady_clock::now();
  running_ = true;
  thread_ = std::thread([this] { serve_loop(); });
}

void MockAgent::stop() {
  running_ = false;
  if (thread_.joinable()) thread_.join();
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

const SignalSample& MockAgent::current_sample() const {
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started_at_;
  const double sim_seconds = elapsed.count() * config_.time_scale;
  auto idx = static_cast<std::size_t>(sim_seconds * sample_rate_hz_);
  if (idx >= trace_.size()) idx = trace_.size() - 1;
  return trace_[idx];
}

bool MockAgent::finished() const noexcept {
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started_at_;
  return elapsed.count() * config_.time_scale * sample_rate_hz_ >= static_cast<double>(trace_.size());
}

snmp::Value MockAgent::value_for(const snmp::Oid& oid, const SignalSample& sample) const {
  auto it = oid_names_.find(oid);
  if (it == oid_names_.end()) return snmp::Value::no_such_object();
  const std::string& name = it->second;

  if (sample.loss_of_signal) return snmp::Value::no_such_instance();

  if (name == "oss") {
    if (!sample.oss_dbm) return snmp::Value::no_such_instance();
    return snmp::Value::make_integer(std::llround(*sample.oss_dbm * 100.0));
  }
  if (name == "ber") {
    if (!sample.ber) return snmp::Value::no_such_instance();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9e", *sample.ber);
    return snmp::Value::make_string(buf);
  }
  if (name == "corrected_bits" || name == "corrected_zeros" || name == "corrected_ones") {
    if (!sample.ber) return snmp::Value::no_such_instance();
    // Error counts over one sample tick; zeros/ones split evenly.
    const double count = *sample.ber * config_.bit_rate_bps / sample_rate_hz_;
    const double share = (name == "corrected_bits") ? 1.0 : 0.5;
    return snmp::Value::make_integer(std::llround(count * share));
  }
  // Remaining catalog entries are served as placeholder integers.
  return snmp::Value::make_integer(0);
}

void MockAgent::serve_loop() {
  std::uint8_t buf[4096];
  while (running_) {
    pollfd pfd{fd_, POLLIN, 0};
    const int rv = ::poll(&pfd, 1, 50);
    if (rv <= 0) continue;

    sockaddr_in peer{};
    socklen_t peer_len = sizeof(peer);
    const ssize_t n =
        ::recvfrom(fd_, buf, sizeof(buf), 0, reinterpret_cast<sockaddr*>(&peer), &peer_len);
    if (n <= 0) continue;

    snmp::Message request;
    try {
      request = snmp::decode(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
    } catch (const snmp::decode_error&) {
      continue;  // not SNMP; drop
    }
    if (request.community != config_.community) continue;  // v2c: silently drop
    if (request.pdu.type != snmp::PduType::get_request) continue;

    requests_.fetch_add(1);
    const SignalSample& sample = current_sample();

    snmp::Message response = request;
    response.pdu.type = snmp::PduType::response;
    response.pdu.error_status = 0;
    response.pdu.error_index = 0;
    for (snmp::VarBind& vb : response.pdu.bindings) {
      vb.value = value_for(vb.oid, sample);
    }
    const std::vector<std::uint8_t> wire = snmp::encode(response);
    ::sendto(fd_, wire.data(), wire.size(), 0, reinterpret_cast<sockaddr*>(&peer), peer_len);
  }
}

}  // namespace ips::sim
