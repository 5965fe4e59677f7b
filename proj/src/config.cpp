#include "ips/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace ips::config {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- TOML subset

struct TomlParser {
  std::string_view text;
  std::size_t pos = 0;
  std::size_t line = 1;

  [[noreturn]] void fail(const std::string& msg) const { throw config_error(msg, line); }

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }

  void skip_inline_ws() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos;
  }

  void skip_ws_and_comments() {
    while (!done()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r') {
        ++pos;
      } else if (c == '\n') {
        ++pos;
        ++line;
      } else if (c == '#') {
        while (!done() && peek() != '\n') ++pos;
      } else {
        break;
      }
    }
  }

  void expect_line_end() {
    skip_inline_ws();
    if (!done() && peek() == '#') {
      while (!done() && peek() != '\n') ++pos;
    }
    if (done()) return;
    if (peek() == '\r') ++pos;
    if (done()) return;
    if (peek() != '\n') fail("unexpected trailing characters");
    ++pos;
    ++line;
  }

  std::string bare_key() {
    const std::size_t start = pos;
    while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
      ++pos;
    }
    if (pos == start) fail("expected a key");
    return std::string(text.substr(start, pos - start));
  }

  std::string quoted_string() {
    ++pos;  // opening quote
    std::string out;
    while (true) {
      if (done() || peek() == '\n') fail("unterminated string");
      char c = text[pos++];
      if (c == '"') break;
      if (c == '\\') {
        if (done()) fail("unterminated escape");
        const char esc = text[pos++];
        switch (esc) {
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          default: fail(std::string("unsupported escape \\") + esc);
        }
      } else {
        out.push_back(c);
      }
    }
    return out;
  }

  json number() {
    const std::size_t start = pos;
    if (!done() && (peek() == '+' || peek() == '-')) ++pos;
    bool is_float = false;
    while (!done()) {
      const char c = peek();
      if (std::isdigit(static_cast<unsigned char>(c))) {
        ++pos;
      } else if (c == '.' || c == 'e' || c == 'E') {
        is_float = true;
        ++pos;
        if (!done() && (peek() == '+' || peek() == '-')) ++pos;
      } else {
        break;
      }
    }
    const std::string_view slice = text.substr(start, pos - start);
    if (slice.empty() || slice == "+" || slice == "-") fail("expected a number");
    if (!is_float) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(slice.data(), slice.data() + slice.size(), v);
      if (ec == std::errc() && p == slice.data() + slice.size()) return json(v);
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(slice.data(), slice.data() + slice.size(), v);
    if (ec != std::errc() || p != slice.data() + slice.size()) {
      fail("bad number '" + std::string(slice) + "'");
    }
    return json(v);
  }

  json value() {
    skip_inline_ws();
    if (done()) fail("expected a value");
    const char c = peek();
    if (c == '"') return json(quoted_string());
    if (c == '[') {
      ++pos;
      json arr = json::array();
      skip_inline_ws();
      if (!done() && peek() == ']') {
        ++pos;
        return arr;
      }
      while (true) {
        arr.push_back(value());
        skip_inline_ws();
        if (done()) fail("unterminated array");
        if (peek() == ',') {
          ++pos;
          continue;
        }
        if (peek() == ']') {
          ++pos;
          return arr;
        }
        fail("expected ',' or ']' in array");
      }
    }
    if (text.compare(pos, 4, "true") == 0) {
      pos += 4;
      return json(true);
    }
    if (text.compare(pos, 5, "false") == 0) {
      pos += 5;
      return json(false);
    }
    return number();
  }

  json parse() {
    json root = json::object();
    json* current = &root;
    while (true) {
      skip_ws_and_comments();
      if (done()) break;
      if (peek() == '[') {
        ++pos;
        const bool array_of_tables = !done() && peek() == '[';
        if (array_of_tables) ++pos;
        skip_inline_ws();
        const std::string name = bare_key();
        skip_inline_ws();
        if (done() || peek() != ']') fail("expected ']' after table name");
        ++pos;
        if (array_of_tables) {
          if (done() || peek() != ']') fail("expected ']]' after array-of-tables name");
          ++pos;
          if (root.contains(name) && !root[name].is_array()) fail("'" + name + "' is not an array of tables");
          root[name].push_back(json::object());
          current = &root[name].back();
        } else {
          if (root.contains(name)) fail("duplicate table [" + name + "]");
          root[name] = json::object();
          current = &root[name];
        }
        expect_line_end();
        continue;
      }
      const std::string key = bare_key();
      skip_inline_ws();
      if (done() || peek() != '=') fail("expected '=' after key '" + key + "'");
      ++pos;
      json v = value();
      if (current->contains(key)) fail("duplicate key '" + key + "'");
      (*current)[key] = std::move(v);
      expect_line_end();
    }
    return root;
  }
};

// ----------------------------------------------------------- strict mapping

// Reads keys out of one JSON table and rejects any that are never consumed.
class TableReader {
 public:
  TableReader(const json& table, std::string where) : table_(table), where_(std::move(where)) {
    if (!table.is_object()) throw config_error(where_ + " must be a table");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return table_.contains(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <typename T>
  T require(const std::string& key) {
    if (!has(key)) throw config_error(where_ + ": missing required key '" + key + "'");
    return convert<T>(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return table_.at(key);
  }

  void finish() const {
    for (auto it = table_.begin(); it != table_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw config_error(where_ + ": unknown key '" + it.key() + "'");
      }
    }
  }

  const std::string& where() const { return where_; }

 private:
  template <typename T>
  T convert(const std::string& key) {
    const json& v = table_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw config_error("");
        return v.get<double>();
      } else if constexpr (std::is_same_v<T, std::int64_t> || std::is_same_v<T, int> ||
                           std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_integer()) throw config_error("");
        return v.get<T>();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw config_error("");
        return v.get<bool>();
      } else {
        if (!v.is_string()) throw config_error("");
        return v.get<T>();
      }
    } catch (...) {
      throw config_error(where_ + ": bad value type for '" + key + "'");
    }
  }

  const json& table_;
  std::string where_;
  std::set<std::string> seen_;
};

void check_power_bounds(double dbm, const std::string& what) {
  if (dbm < channel::kMinConfigOssDbm || dbm > channel::kMaxConfigOssDbm) {
    throw config_error(what + " = " + std::to_string(dbm) + " dBm outside operating range [" +
                       std::to_string(channel::kMinConfigOssDbm) + ", " +
                       std::to_string(channel::kMaxConfigOssDbm) + "]");
  }
}

void read_channel(const json& table, channel::ChannelParams& p) {
  TableReader r(table, "[channel]");
  p.baseline_oss_dbm = r.get("baseline_oss_dbm", p.baseline_oss_dbm);
  p.noise_floor_dbm = r.get("noise_floor_dbm", p.noise_floor_dbm);
  p.oss_noise_std_db = r.get("oss_noise_std_db", p.oss_noise_std_db);
  p.pre_fec_floor_ber = r.get("pre_fec_floor_ber", p.pre_fec_floor_ber);
  p.bit_rate_bps = r.get("bit_rate_bps", p.bit_rate_bps);
  p.attenuation_slope_db_per_g = r.get("attenuation_slope_db_per_g", p.attenuation_slope_db_per_g);
  p.attenuation_offset_load_g = r.get("attenuation_offset_load_g", p.attenuation_offset_load_g);
  p.pull_base_drop_db = r.get("pull_base_drop_db", p.pull_base_drop_db);
  p.recovery_time_constant_s = r.get("recovery_time_constant_s", p.recovery_time_constant_s);
  p.attack_time_constant_s = r.get("attack_time_constant_s", p.attack_time_constant_s);
  p.ramp_seconds = r.get("ramp_seconds", p.ramp_seconds);
  if (r.has("bend_table")) {
    const json& rows = r.raw("bend_table");
    if (!rows.is_array()) throw config_error("[channel].bend_table must be an array of rows");
    p.bend_table.clear();
    for (const json& row : rows) {
      if (!row.is_array() || row.size() != 4) {
        throw config_error("[channel].bend_table rows are [radius_cm, oss_drop_db, ber_multiplier, loss01]");
      }
      p.bend_table.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>(),
                              row[3].get<double>() != 0.0});
    }
  }
  r.finish();
  check_power_bounds(p.baseline_oss_dbm, "[channel].baseline_oss_dbm");
  check_power_bounds(p.noise_floor_dbm, "[channel].noise_floor_dbm");
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
}

void read_detector(const json& table, const std::string& where, detect::DetectorConfig& d) {
  TableReader r(table, where);
  d.window_size = static_cast<int>(r.get<std::int64_t>("window_size", d.window_size));
  const std::string kernel = r.get<std::string>("kernel", "gaussian");
  if (kernel != "gaussian") throw config_error(where + ": unsupported kernel '" + kernel + "'");
  d.bandwidth = r.get("bandwidth", d.bandwidth);
  if (r.has("grid_min")) d.grid_min = r.get("grid_min", 0.0);
  if (r.has("grid_max")) d.grid_max = r.get("grid_max", 0.0);
  d.grid_points = static_cast<int>(r.get<std::int64_t>("grid_points", d.grid_points));
  d.epsilon_floor = r.get("epsilon_floor", d.epsilon_floor);
  d.threshold = r.get("threshold", d.threshold);
  d.symmetric = r.get("symmetric", d.symmetric);
  d.ber_scale = r.get("ber_scale", d.ber_scale);
  r.finish();
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
}

void read_strain(const json& table, strain::FiberGeometry& g, strain::PhotoelasticConstant& k) {
  TableReader r(table, "[strain]");
  g.bare_diameter_um = r.get("fiber_diameter_um", g.bare_diameter_um);
  g.youngs_modulus_pa = r.get("youngs_modulus_pa", g.youngs_modulus_pa);
  k.nstrain_m_per_rad = r.get("photoelastic_k", k.nstrain_m_per_rad);
  r.finish();
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  if (!(k.nstrain_m_per_rad > 0)) throw config_error("[strain].photoelastic_k must be > 0");
}

sim::StressEvent read_event(const json& table, std::size_t index) {
  TableReader r(table, "[[events]] #" + std::to_string(index));
  sim::StressEvent ev;
  const std::string kind = r.require<std::string>("kind");
  if (kind == "bend") ev.kind = sim::StressKind::bend;
  else if (kind == "pull") ev.kind = sim::StressKind::pull;
  else throw config_error(r.where() + ": kind must be 'bend' or 'pull', got '" + kind + "'");
  ev.magnitude = r.require<double>("magnitude");
  ev.onset_s = r.require<double>("onset_s");
  ev.duration_s = r.require<double>("duration_s");
  r.finish();
  return ev;
}

collect::PollTarget read_target(const json& table, std::size_t index) {
  TableReader r(table, "[[targets]] #" + std::to_string(index));
  collect::PollTarget t;
  t.address = r.require<std::string>("address");
  t.link_id = r.require<std::string>("link_id");
  t.community = r.get<std::string>("community", t.community);
  t.poll_interval_s = r.get("poll_interval_s", t.poll_interval_s);
  t.timeout_s = r.get("timeout_s", t.timeout_s);
  // OIDs appear as oid_<name> keys, decode overrides as decode_<name>
  // ("int[:scale]" or "string[:scale]").
  for (auto it = table.begin(); it != table.end(); ++it) {
    const std::string& key = it.key();
    if (key.starts_with("oid_")) {
      t.oids[key.substr(4)] = r.require<std::string>(key);
    } else if (key.starts_with("decode_")) {
      const std::string spec = r.require<std::string>(key);
      collect::DecodeSpec ds;
      std::string kind = spec;
      const auto colon = spec.find(':');
      if (colon != std::string::npos) {
        kind = spec.substr(0, colon);
        ds.scale = std::stod(spec.substr(colon + 1));
      }
      if (kind == "int") ds.kind = collect::DecodeSpec::Kind::int_scaled;
      else if (kind == "string") ds.kind = collect::DecodeSpec::Kind::string_decimal;
      else throw config_error(r.where() + ": decode spec must be int[:scale] or string[:scale]");
      t.decode[key.substr(7)] = ds;
    }
  }
  r.finish();
  if (t.oids.empty()) t.oids = sim::default_oid_map();
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  return t;
}

void read_agent(const json& table, sim::AgentConfig& a) {
  TableReader r(table, "[agent]");
  a.bind_host = r.get<std::string>("bind_host", a.bind_host);
  a.port = static_cast<std::uint16_t>(r.get<std::int64_t>("port", a.port));
  a.community = r.get<std::string>("community", a.community);
  a.time_scale = r.get("time_scale", a.time_scale);
  for (auto it = table.begin(); it != table.end(); ++it) {
    if (it.key().starts_with("oid_")) {
      a.oids[it.key().substr(4)] = r.require<std::string>(it.key());
    }
  }
  r.finish();
  if (!(a.time_scale > 0)) throw config_error("[agent].time_scale must be > 0");
}

void read_output(const json& table, OutputConfig& o) {
  TableReader r(table, "[output]");
  o.out_dir = r.get<std::string>("out_dir", o.out_dir.string());
  o.format = io::parse_format(r.get<std::string>("format", "csv"));
  r.finish();
}

std::string env_var_id(const std::string& link_id) {
  std::string id;
  for (char c : link_id) {
    id.push_back(std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::toupper(c)) : '_');
  }
  return id;
}

void apply_env_overrides(ExperimentConfig& cfg) {
  if (const char* community = std::getenv("IPS_SNMP_COMMUNITY")) {
    cfg.agent.community = community;
    for (auto& t : cfg.targets) t.community = community;
  }
  for (auto& t : cfg.targets) {
    const std::string var = "IPS_TARGET_" + env_var_id(t.link_id) + "_ADDR";
    if (const char* addr = std::getenv(var.c_str())) t.address = addr;
  }
}

}  // namespace

json parse_toml(const std::string& text) {
  TomlParser parser{text};
  return parser.parse();
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig cfg;
  cfg.detector_ber.bandwidth = 20.0;  // errors per second
  cfg.detector_ber.threshold = 2.0;
  cfg.detector_oss.bandwidth = 0.05;  // dB
  cfg.detector_oss.threshold = 0.5;
  cfg.agent.oids = sim::default_oid_map();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json(const json& root) {
  ExperimentConfig cfg = defaults();
  if (!root.is_object()) throw config_error("top level must be a set of tables");

  static const std::set<std::string> known = {"experiment", "channel", "strain",   "detector",
                                              "detector_oss", "schedule", "events", "targets",
                                              "agent",      "output"};
  for (auto it = root.begin(); it != root.end(); ++it) {
    if (!known.count(it.key())) throw config_error("unknown table [" + it.key() + "]");
  }

  if (root.contains("experiment")) {
    TableReader r(root["experiment"], "[experiment]");
    cfg.seed = r.get<std::uint64_t>("seed", cfg.seed);
    cfg.link_id = r.get<std::string>("link_id", cfg.link_id);
    r.finish();
    if (cfg.link_id.empty()) throw config_error("[experiment].link_id must not be empty");
  }
  if (root.contains("channel")) read_channel(root["channel"], cfg.channel);
  if (root.contains("strain")) read_strain(root["strain"], cfg.fiber, cfg.photoelastic);
  if (root.contains("detector")) read_detector(root["detector"], "[detector]", cfg.detector_ber);
  if (root.contains("detector_oss"))
    read_detector(root["detector_oss"], "[detector_oss]", cfg.detector_oss);

  double schedule_total = 0.0, schedule_rate = 1.0, schedule_fiber = 12.1;
  bool have_schedule_table = false;
  if (root.contains("schedule")) {
    have_schedule_table = true;
    TableReader r(root["schedule"], "[schedule]");
    cfg.schedule_name = r.get<std::string>("name", cfg.schedule_name);
    schedule_total = r.get("total_duration_s", 0.0);
    schedule_rate = r.get("sample_rate_hz", 1.0);
    schedule_fiber = r.get("fiber_length_m", 12.1);
    r.finish();
  }
  if (root.contains("events")) {
    const json& events = root["events"];
    if (!events.is_array()) throw config_error("[[events]] must be an array of tables");
    sim::StressSchedule s;
    s.name = "inline";
    s.total_duration_s = schedule_total;
    s.sample_rate_hz = schedule_rate;
    s.fiber_length_m = schedule_fiber;
    for (std::size_t i = 0; i < events.size(); ++i) s.events.push_back(read_event(events[i], i));
    if (s.total_duration_s <= 0 && !s.events.empty()) {
      const auto& last = s.events.back();
      s.total_duration_s = last.onset_s + last.duration_s + 300.0;  // trailing rest
    }
    try {
      s.validate();
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());
    }
    cfg.schedule = std::move(s);
  } else if (have_schedule_table && schedule_total > 0) {
    // A stress-free schedule: quiescent trace of the given length.
    sim::StressSchedule s;
    s.name = "quiescent";
    s.total_duration_s = schedule_total;
    s.sample_rate_hz = schedule_rate;
    s.fiber_length_m = schedule_fiber;
    try {
      s.validate();
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());
    }
    cfg.schedule = std::move(s);
  }

  if (root.contains("targets")) {
    const json& targets = root["targets"];
    if (!targets.is_array()) throw config_error("[[targets]] must be an array of tables");
    for (std::size_t i = 0; i < targets.size(); ++i) cfg.targets.push_back(read_target(targets[i], i));
  }
  if (root.contains("agent")) read_agent(root["agent"], cfg.agent);
  if (root.contains("output")) read_output(root["output"], cfg.output);

  apply_env_overrides(cfg);
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(parse_toml(buf.str()));
}

sim::StressSchedule ExperimentConfig::resolve_schedule() const {
  if (schedule) return *schedule;
  auto schedules = sim::canonical_schedules();
  auto it = schedules.find(schedule_name);
  if (it == schedules.end()) {
    std::string names;
    for (const auto& [name, _] : schedules) names += names.empty() ? name : ", " + name;
    throw config_error("unknown schedule '" + schedule_name + "' (canonical: " + names + ")");
  }
  return it->second;
}

json ExperimentConfig::to_json() const {
  json j;
  j["experiment"] = {{"seed", seed}, {"link_id", link_id}};
  json bend = json::array();
  for (const auto& row : channel.bend_table) {
    bend.push_back({row.radius_cm, row.oss_drop_db, row.ber_multiplier, row.loss_of_signal ? 1 : 0});
  }
  j["channel"] = {{"baseline_oss_dbm", channel.baseline_oss_dbm},
                  {"noise_floor_dbm", channel.noise_floor_dbm},
                  {"oss_noise_std_db", channel.oss_noise_std_db},
                  {"pre_fec_floor_ber", channel.pre_fec_floor_ber},
                  {"bit_rate_bps", channel.bit_rate_bps},
                  {"attenuation_slope_db_per_g", channel.attenuation_slope_db_per_g},
                  {"attenuation_offset_load_g", channel.attenuation_offset_load_g},
                  {"pull_base_drop_db", channel.pull_base_drop_db},
                  {"recovery_time_constant_s", channel.recovery_time_constant_s},
                  {"attack_time_constant_s", channel.attack_time_constant_s},
                  {"ramp_seconds", channel.ramp_seconds},
                  {"bend_table", bend}};
  j["strain"] = {{"fiber_diameter_um", fiber.bare_diameter_um},
                 {"youngs_modulus_pa", fiber.youngs_modulus_pa},
                 {"photoelastic_k", photoelastic.nstrain_m_per_rad}};
  auto detector_json = [](const detect::DetectorConfig& d) {
    json dj = {{"window_size", d.window_size}, {"bandwidth", d.bandwidth},
               {"grid_points", d.grid_points}, {"epsilon_floor", d.epsilon_floor},
               {"threshold", d.threshold},     {"symmetric", d.symmetric},
               {"ber_scale", d.ber_scale}};
    if (d.grid_min) dj["grid_min"] = *d.grid_min;
    if (d.grid_max) dj["grid_max"] = *d.grid_max;
    return dj;
  };
  j["detector"] = detector_json(detector_ber);
  j["detector_oss"] = detector_json(detector_oss);
  if (schedule) {
    json events = json::array();
    for (const auto& ev : schedule->events) {
      events.push_back({{"kind", ev.kind == sim::StressKind::bend ? "bend" : "pull"},
                        {"magnitude", ev.magnitude},
                        {"onset_s", ev.onset_s},
                        {"duration_s", ev.duration_s}});
    }
    j["schedule"] = {{"name", schedule->name},
                     {"total_duration_s", schedule->total_duration_s},
                     {"sample_rate_hz", schedule->sample_rate_hz},
                     {"fiber_length_m", schedule->fiber_length_m},
                     {"events", events}};
  } else {
    j["schedule"] = {{"name", schedule_name}};
  }
  return j;
}

std::uint64_t ExperimentConfig::hash() const {
  const std::string canon = to_json().dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace ips::config
