#include "ips/collector.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <mutex>
#include <thread>

#include "ips/snmp.hpp"
#include "ips/trace_io.hpp"

namespace ips::collect {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t wall_ms_now() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

struct Endpoint {
  sockaddr_in addr{};
};

Endpoint resolve(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon + 1 >= address.size()) {
    throw std::invalid_argument("target address must be host:port, got '" + address + "'");
  }
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr) {
    throw std::runtime_error("cannot resolve target '" + address + "'");
  }
  Endpoint ep;
  std::memcpy(&ep.addr, res->ai_addr, sizeof(ep.addr));
  ::freeaddrinfo(res);
  return ep;
}

// UDP socket with a request/response helper; one per polling loop.
class SnmpClient {
 public:
  explicit SnmpClient(const PollTarget& target) : target_(target), endpoint_(resolve(target.address)) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw std::runtime_error("collector: socket() failed");
  }
  ~SnmpClient() {
    if (fd_ >= 0) ::close(fd_);
  }
  SnmpClient(const SnmpClient&) = delete;
  SnmpClient& operator=(const SnmpClient&) = delete;

  // Sends one GET and waits for the matching response. Empty optional on timeout.
  std::optional<snmp::Message> get(const std::vector<snmp::Oid>& oids) {
    snmp::Message request;
    request.community = target_.community;
    request.pdu.type = snmp::PduType::get_request;
    request.pdu.request_id = ++request_id_;
    for (const snmp::Oid& oid : oids) {
      request.pdu.bindings.push_back({oid, snmp::Value::make_null()});
    }
    const std::vector<std::uint8_t> wire = snmp::encode(request);
    if (::sendto(fd_, wire.data(), wire.size(), 0, reinterpret_cast<const sockaddr*>(&endpoint_.addr),
                 sizeof(endpoint_.addr)) < 0) {
      return std::nullopt;
    }

    const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                             std::chrono::duration<double>(target_.timeout_s));
    std::uint8_t buf[4096];
    while (true) {
      const auto remaining =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (remaining.count() <= 0) return std::nullopt;
      pollfd pfd{fd_, POLLIN, 0};
      if (::poll(&pfd, 1, static_cast<int>(remaining.count())) <= 0) return std::nullopt;
      const ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
      if (n <= 0) continue;
      try {
        snmp::Message response = snmp::decode(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
        if (response.pdu.type == snmp::PduType::response &&
            response.pdu.request_id == request_id_) {
          return response;
        }
      } catch (const snmp::decode_error&) {
        // stray datagram; keep waiting
      }
    }
  }

 private:
  const PollTarget& target_;
  Endpoint endpoint_;
  int fd_ = -1;
  std::int32_t request_id_ = 0;
};

DecodeSpec spec_for(const PollTarget& target, const std::string& name) {
  auto it = target.decode.find(name);
  if (it != target.decode.end()) return it->second;
  if (name == "oss") return {DecodeSpec::Kind::int_scaled, 0.01};
  if (name == "ber") return {DecodeSpec::Kind::string_decimal, 1.0};
  return {DecodeSpec::Kind::int_scaled, 1.0};
}

double decode_number(const std::string& name, const DecodeSpec& spec, const snmp::Value& value) {
  if (spec.kind == DecodeSpec::Kind::int_scaled) {
    if (value.type != snmp::ValueType::integer) {
      throw collector_decode_error(name, "expected INTEGER");
    }
    return static_cast<double>(value.int_value) * spec.scale;
  }
  if (value.type != snmp::ValueType::octet_string) {
    throw collector_decode_error(name, "expected OCTET STRING");
  }
  double parsed = 0.0;
  const char* begin = value.bytes.data();
  const char* end = begin + value.bytes.size();
  auto [ptr, ec] = std::from_chars(begin, end, parsed);
  if (ec != std::errc() || ptr != end) {
    throw collector_decode_error(name, "unparseable decimal '" + value.bytes + "'");
  }
  return parsed * spec.scale;
}

SignalSample poll_with(SnmpClient& client, const PollTarget& target) {
  std::vector<std::string> names;
  std::vector<snmp::Oid> oids;
  for (const auto& [name, dotted] : target.oids) {
    names.push_back(name);
    oids.push_back(snmp::Oid::parse(dotted));
  }

  const auto t0 = Clock::now();
  std::optional<snmp::Message> response = client.get(oids);
  if (!response) response = client.get(oids);  // one retry
  const double latency_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

  SignalSample sample;
  sample.timestamp_ms = wall_ms_now();
  sample.link_id = target.link_id;
  sample.poll_latency_ms = latency_ms;

  if (!response) {
    sample.transport_error = true;
    return sample;
  }

  bool loss_seen = false;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string& name = names[i];
    const snmp::VarBind* vb = nullptr;
    for (const snmp::VarBind& cand : response->pdu.bindings) {
      if (cand.oid == oids[i]) {
        vb = &cand;
        break;
      }
    }
    if (!vb) throw collector_decode_error(name, "missing from response");
    if (vb->value.type == snmp::ValueType::no_such_instance) {
      // Object exists but carries no value: loss of signal on oss/ber.
      if (name == "oss" || name == "ber") loss_seen = true;
      continue;
    }
    if (vb->value.type == snmp::ValueType::no_such_object) {
      throw collector_decode_error(name, "agent answered noSuchObject");
    }
    const double v = decode_number(name, spec_for(target, name), vb->value);
    if (name == "oss") sample.oss_dbm = v;
    else if (name == "ber") sample.ber = v;
    else sample.extras[name] = io::format_double(v);
  }
  if (loss_seen) {
    sample.loss_of_signal = true;
    sample.oss_dbm.reset();
    sample.ber.reset();
  }
  return sample;
}

}  // namespace

void PollTarget::validate() const {
  auto fail = [this](const std::string& msg) {
    throw std::invalid_argument("target '" + link_id + "': " + msg);
  };
  if (link_id.empty()) fail("link_id must not be empty");
  if (address.find(':') == std::string::npos) fail("address must be host:port");
  if (poll_interval_s < kMinPollIntervalS) fail("poll_interval below the 20 Hz cap (0.05 s)");
  if (!(timeout_s > 0)) fail("timeout must be > 0");
  if (!oids.count("oss") && !oids.count("ber")) fail("oid map must name 'oss' or 'ber'");
  for (const auto& [name, dotted] : oids) snmp::Oid::parse(dotted);  // throws on bad OIDs
}

SignalSample poll_once(const PollTarget& target) {
  target.validate();
  SnmpClient client(target);
  return poll_with(client, target);
}

CollectorSummary run_collector(const std::vector<PollTarget>& targets, const SampleSink& sink,
                               const std::atomic<bool>& stop) {
  if (targets.empty()) throw std::invalid_argument("run_collector: need at least one target");
  for (const PollTarget& t : targets) t.validate();

  CollectorSummary summary;
  summary.targets.resize(targets.size());

  std::mutex sink_mutex;
  std::atomic<bool> abort{false};
  std::string first_error;
  std::mutex error_mutex;

  auto loop = [&](std::size_t index) {
    const PollTarget& target = targets[index];
    TargetStats& stats = summary.targets[index];
    stats.link_id = target.link_id;
    std::int64_t last_ts = 0;

    SnmpClient client(target);
    const auto interval =
        std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(target.poll_interval_s));
    const auto started = Clock::now();
    auto deadline = started;
    std::uint64_t polls = 0;
    Clock::time_point first_poll, last_poll;

    while (!stop.load(std::memory_order_relaxed) && !abort.load(std::memory_order_relaxed)) {
      last_poll = Clock::now();
      if (polls == 0) first_poll = last_poll;
      SignalSample sample;
      bool decode_failed = false;
      try {
        sample = poll_with(client, target);
      } catch (const collector_decode_error&) {
        decode_failed = true;
        sample = SignalSample{};
        sample.timestamp_ms = wall_ms_now();
        sample.link_id = target.link_id;
        sample.transport_error = true;
      }
      if (decode_failed) ++stats.decode_errors;
      else if (sample.transport_error) ++stats.timeout;
      else ++stats.ok;

      if (sample.timestamp_ms <= last_ts) sample.timestamp_ms = last_ts + 1;
      last_ts = sample.timestamp_ms;
      ++polls;

      try {
        std::lock_guard<std::mutex> hold(sink_mutex);
        sink(sample);
      } catch (const std::exception& e) {
        abort = true;
        std::lock_guard<std::mutex> hold(error_mutex);
        if (first_error.empty()) first_error = e.what();
        break;
      }

      // Absolute schedule; when late, skip forward instead of bursting.
      deadline += interval;
      const auto now = Clock::now();
      if (deadline < now) {
        const auto behind = now - deadline;
        deadline += interval * (behind / interval + 1);
      }
      while (!stop.load(std::memory_order_relaxed) && !abort.load(std::memory_order_relaxed)) {
        const auto now2 = Clock::now();
        if (now2 >= deadline) break;
        std::this_thread::sleep_for(std::min<Clock::duration>(deadline - now2,
                                                              std::chrono::milliseconds(50)));
      }
    }
    // n polls span n-1 intervals.
    const double span = std::chrono::duration<double>(last_poll - first_poll).count();
    stats.achieved_rate_hz = (polls > 1 && span > 0) ? static_cast<double>(polls - 1) / span : 0.0;
  };

  std::vector<std::thread> threads;
  threads.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) threads.emplace_back(loop, i);
  for (std::thread& t : threads) t.join();

  if (abort) {
    summary.sink_failed = true;
    summary.error = first_error;
  }
  return summary;
}

}  // namespace ips::collect
