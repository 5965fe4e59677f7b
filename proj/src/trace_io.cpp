#include "ips/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ips::io {

using nlohmann::json;

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

TraceFormat parse_format(const std::string& name) {
  if (name == "csv") return TraceFormat::csv;
  if (name == "jsonl") return TraceFormat::jsonl;
  throw std::invalid_argument("unknown trace format '" + name + "' (expected csv or jsonl)");
}

std::string format_extension(TraceFormat format) {
  return format == TraceFormat::csv ? ".csv" : ".jsonl";
}

namespace {

constexpr const char* kCoreColumns[] = {"timestamp_ms", "link_id", "oss_dbm", "ber",
                                        "loss_of_signal"};

double parse_double_field(std::string_view text, std::size_t line, const std::string& column) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw parse_error("bad value '" + std::string(text) + "' in column " + column, line);
  }
  return value;
}

std::vector<std::string> split_csv(const std::string& row) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : row) {
    if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

TraceWriter::TraceWriter(const std::filesystem::path& path, TraceFormat format, TraceStyle style)
    : path_(path), format_(format), style_(style), out_(std::make_unique<std::ofstream>(path)) {
  if (!*out_) {
    throw std::runtime_error("cannot open trace file for writing: " + path.string());
  }
}

TraceWriter::~TraceWriter() {
  try {
    close();
  } catch (...) {
  }
}

void TraceWriter::close() {
  if (out_ && out_->is_open()) {
    out_->flush();
    out_->close();
    if (out_->fail()) throw std::runtime_error("write failure on " + path_.string());
  }
}

void TraceWriter::write(const SignalSample& sample) {
  std::ostream& os = *out_;
  if (format_ == TraceFormat::csv) {
    if (!header_written_) {
      os << "timestamp_ms,link_id,oss_dbm,ber,loss_of_signal";
      if (style_ == TraceStyle::collector) os << ",transport_error,poll_latency_ms";
      for (const auto& [name, _] : sample.extras) {
        extras_columns_.push_back(name);
        os << ",extra_" << name;
      }
      os << '\n';
      header_written_ = true;
    }
    os << sample.timestamp_ms << ',' << sample.link_id << ',';
    if (sample.oss_dbm) os << format_double(*sample.oss_dbm);
    os << ',';
    if (sample.ber) os << format_double(*sample.ber);
    os << ',' << (sample.loss_of_signal ? 1 : 0);
    if (style_ == TraceStyle::collector) {
      os << ',' << (sample.transport_error ? 1 : 0) << ',';
      if (sample.poll_latency_ms) os << format_double(*sample.poll_latency_ms);
    }
    for (const auto& name : extras_columns_) {
      auto it = sample.extras.find(name);
      os << ',' << (it != sample.extras.end() ? it->second : "");
    }
    os << '\n';
  } else {
    json j;
    j["timestamp_ms"] = sample.timestamp_ms;
    j["link_id"] = sample.link_id;
    j["oss_dbm"] = sample.oss_dbm ? json(*sample.oss_dbm) : json(nullptr);
    j["ber"] = sample.ber ? json(*sample.ber) : json(nullptr);
    j["loss_of_signal"] = sample.loss_of_signal;
    if (sample.transport_error) j["transport_error"] = true;
    if (sample.poll_latency_ms) j["poll_latency_ms"] = *sample.poll_latency_ms;
    if (!sample.extras.empty()) j["extras"] = sample.extras;
    os << j.dump() << '\n';
  }
  if (os.fail()) throw std::runtime_error("write failure on " + path_.string());
}

void write_trace(const std::filesystem::path& path, TraceFormat format,
                 const std::vector<SignalSample>& samples, TraceStyle style) {
  TraceWriter writer(path, format, style);
  for (const SignalSample& s : samples) writer.write(s);
  writer.close();
}

namespace {

SignalSample sample_from_csv_row(const std::string& row, const std::vector<std::string>& header,
                                 std::size_t line) {
  const std::vector<std::string> fields = split_csv(row);
  if (fields.size() != header.size()) {
    throw parse_error("expected " + std::to_string(header.size()) + " fields, got " +
                          std::to_string(fields.size()),
                      line);
  }
  SignalSample s;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& col = header[i];
    const std::string& text = fields[i];
    if (col == "timestamp_ms") {
      s.timestamp_ms = static_cast<std::int64_t>(parse_double_field(text, line, col));
    } else if (col == "link_id") {
      if (text.empty()) throw parse_error("empty link_id", line);
      s.link_id = text;
    } else if (col == "oss_dbm") {
      if (!text.empty()) s.oss_dbm = parse_double_field(text, line, col);
    } else if (col == "ber") {
      if (!text.empty()) s.ber = parse_double_field(text, line, col);
    } else if (col == "loss_of_signal") {
      s.loss_of_signal = parse_double_field(text, line, col) != 0;
    } else if (col == "transport_error") {
      s.transport_error = parse_double_field(text, line, col) != 0;
    } else if (col == "poll_latency_ms") {
      if (!text.empty()) s.poll_latency_ms = parse_double_field(text, line, col);
    } else if (col.starts_with("extra_")) {
      if (!text.empty()) s.extras[col.substr(6)] = text;
    } else {
      throw parse_error("unknown column '" + col + "'", line);
    }
  }
  return s;
}

SignalSample sample_from_json_row(const std::string& row, std::size_t line) {
  json j;
  try {
    j = json::parse(row);
  } catch (const json::exception& e) {
    throw parse_error(std::string("bad JSON: ") + e.what(), line);
  }
  SignalSample s;
  try {
    s.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    s.link_id = j.at("link_id").get<std::string>();
    if (j.contains("oss_dbm") && !j["oss_dbm"].is_null()) s.oss_dbm = j["oss_dbm"].get<double>();
    if (j.contains("ber") && !j["ber"].is_null()) s.ber = j["ber"].get<double>();
    s.loss_of_signal = j.value("loss_of_signal", false);
    s.transport_error = j.value("transport_error", false);
    if (j.contains("poll_latency_ms") && !j["poll_latency_ms"].is_null())
      s.poll_latency_ms = j["poll_latency_ms"].get<double>();
    if (j.contains("extras")) s.extras = j["extras"].get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw parse_error(std::string("bad sample record: ") + e.what(), line);
  }
  if (s.link_id.empty()) throw parse_error("empty link_id", line);
  return s;
}

}  // namespace

LoadResult load_trace(const std::filesystem::path& path, TraceFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path.string());

  LoadResult result;
  std::string row;
  std::size_t line = 0;
  std::vector<std::string> header;
  while (std::getline(in, row)) {
    ++line;
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row.empty()) continue;
    if (format == TraceFormat::csv && header.empty()) {
      header = split_csv(row);
      for (const char* col : kCoreColumns) {
        if (std::find(header.begin(), header.end(), col) == header.end()) {
          throw parse_error("header misses required column '" + std::string(col) + "'", line);
        }
      }
      continue;
    }
    result.samples.push_back(format == TraceFormat::csv ? sample_from_csv_row(row, header, line)
                                                        : sample_from_json_row(row, line));
  }
  if (result.samples.empty()) {
    result.warnings.push_back("trace " + path.string() + " holds no samples");
    return result;
  }

  // No value exists during loss of signal; drop any that slipped into the file.
  std::size_t sanitized = 0;
  for (SignalSample& s : result.samples) {
    if (s.loss_of_signal && (s.oss_dbm || s.ber)) {
      s.oss_dbm.reset();
      s.ber.reset();
      ++sanitized;
    }
  }
  if (sanitized > 0) {
    result.warnings.push_back(std::to_string(sanitized) +
                              " loss-of-signal sample(s) carried values; values dropped");
  }

  bool sorted = std::is_sorted(result.samples.begin(), result.samples.end(),
                               [](const SignalSample& a, const SignalSample& b) {
                                 return a.timestamp_ms < b.timestamp_ms;
                               });
  if (!sorted) {
    std::stable_sort(result.samples.begin(), result.samples.end(),
                     [](const SignalSample& a, const SignalSample& b) {
                       return a.timestamp_ms < b.timestamp_ms;
                     });
    result.warnings.push_back("trace " + path.string() + " was not sorted by timestamp; sorted");
  }
  std::set<std::pair<std::string, std::int64_t>> seen;
  for (const SignalSample& s : result.samples) {
    if (!seen.emplace(s.link_id, s.timestamp_ms).second) {
      throw std::runtime_error("duplicate sample for link '" + s.link_id + "' at t=" +
                               std::to_string(s.timestamp_ms) + " ms in " + path.string());
    }
  }
  return result;
}

namespace {

constexpr const char* kind_name(detect::EventKind kind) {
  return kind == detect::EventKind::kl_change ? "kl_change" : "signal_lost";
}

}  // namespace

void write_events(const std::filesystem::path& path,
                  const std::vector<detect::DetectionEvent>& events) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open events file for writing: " + path.string());
  for (const detect::DetectionEvent& ev : events) {
    json j;
    j["signal_id"] = ev.signal_id;
    j["t_start"] = ev.t_start_ms;
    j["t_end"] = ev.t_end_ms;
    j["kld"] = ev.kind == detect::EventKind::kl_change ? json(ev.kl_divergence) : json(nullptr);
    j["threshold"] = ev.threshold;
    j["kind"] = kind_name(ev.kind);
    if (ev.kind == detect::EventKind::kl_change) {
      j["window_a"] = {ev.window_a_first, ev.window_a_last};
      j["window_b"] = {ev.window_b_first, ev.window_b_last};
    }
    out << j.dump() << '\n';
  }
  if (out.fail()) throw std::runtime_error("write failure on " + path.string());
}

std::vector<detect::DetectionEvent> load_events(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open events file: " + path.string());
  std::vector<detect::DetectionEvent> events;
  std::string row;
  std::size_t line = 0;
  while (std::getline(in, row)) {
    ++line;
    if (row.empty()) continue;
    json j;
    try {
      j = json::parse(row);
    } catch (const json::exception& e) {
      throw parse_error(std::string("bad JSON: ") + e.what(), line);
    }
    detect::DetectionEvent ev;
    try {
      ev.signal_id = j.at("signal_id").get<std::string>();
      ev.t_start_ms = j.at("t_start").get<std::int64_t>();
      ev.t_end_ms = j.at("t_end").get<std::int64_t>();
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "kl_change") ev.kind = detect::EventKind::kl_change;
      else if (kind == "signal_lost") ev.kind = detect::EventKind::signal_lost;
      else throw parse_error("unknown event kind '" + kind + "'", line);
      if (!j.at("kld").is_null()) ev.kl_divergence = j["kld"].get<double>();
      ev.threshold = j.value("threshold", 0.0);
      if (j.contains("window_a")) {
        ev.window_a_first = j["window_a"][0].get<std::size_t>();
        ev.window_a_last = j["window_a"][1].get<std::size_t>();
        ev.window_b_first = j["window_b"][0].get<std::size_t>();
        ev.window_b_last = j["window_b"][1].get<std::size_t>();
      }
    } catch (const json::exception& e) {
      throw parse_error(std::string("bad event record: ") + e.what(), line);
    }
    events.push_back(std::move(ev));
  }
  return events;
}

}  // namespace ips::io
