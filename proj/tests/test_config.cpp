#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ips/config.hpp"

using namespace ips;
using config::ExperimentConfig;

namespace {

ExperimentConfig parse(const std::string& text) {
  return ExperimentConfig::from_json(config::parse_toml(text));
}

}  // namespace

TEST_CASE("toml subset: tables, arrays of tables, scalars, arrays") {
  const auto j = config::parse_toml(R"(
# experiment file
[experiment]
seed = 42
link_id = "lab-1"   # inline comment

[channel]
baseline_oss_dbm = -7.0
bend_table = [[3.0, 1.0, 1.0, 0], [2.0, 2.0, 1.0, 0]]

[[events]]
kind = "pull"
magnitude = 1.0e2
onset_s = 300.0
duration_s = 300.0

[[events]]
kind = "bend"
magnitude = 0.5
onset_s = 900.0
duration_s = 120.0
flag = true
)");
  CHECK(j["experiment"]["seed"] == 42);
  CHECK(j["experiment"]["link_id"] == "lab-1");
  CHECK(j["channel"]["bend_table"][1][1] == 2.0);
  REQUIRE(j["events"].size() == 2);
  CHECK(j["events"][0]["magnitude"] == 100.0);
  CHECK(j["events"][1]["flag"] == true);
}

TEST_CASE("toml subset errors carry line numbers") {
  CHECK_THROWS_WITH_AS(config::parse_toml("[experiment]\nseed 42\n"),
                       doctest::Contains("line 2"), config::config_error);
  CHECK_THROWS_AS(config::parse_toml("key = \"unterminated\n"), config::config_error);
  CHECK_THROWS_AS(config::parse_toml("[t]\nx = [1, 2\n"), config::config_error);
  CHECK_THROWS_AS(config::parse_toml("[t]\nx = 1\nx = 2\n"), config::config_error);
}

TEST_CASE("defaults are valid and complete") {
  const ExperimentConfig cfg = ExperimentConfig::defaults();
  CHECK_NOTHROW(cfg.channel.validate());
  CHECK_NOTHROW(cfg.detector_ber.validate());
  CHECK_NOTHROW(cfg.detector_oss.validate());
  CHECK(cfg.detector_ber.bandwidth == 20.0);
  CHECK(cfg.detector_ber.window_size == 200);
  CHECK(cfg.detector_oss.bandwidth < 1.0);
  const auto schedule = cfg.resolve_schedule();
  CHECK(schedule.name == "bend_sweep");
}

TEST_CASE("unknown keys are rejected everywhere") {
  CHECK_THROWS_WITH_AS(parse("[experiment]\nsede = 1\n"), doctest::Contains("unknown key 'sede'"),
                       config::config_error);
  CHECK_THROWS_WITH_AS(parse("[chanel]\nbaseline_oss_dbm = -7.0\n"),
                       doctest::Contains("unknown table"), config::config_error);
  CHECK_THROWS_WITH_AS(parse("[detector]\nbandwith = 20\n"), doctest::Contains("bandwith"),
                       config::config_error);
}

TEST_CASE("channel power bounds are enforced at parse time") {
  CHECK_THROWS_WITH_AS(parse("[channel]\nbaseline_oss_dbm = -75.0\n"),
                       doctest::Contains("operating range"), config::config_error);
  CHECK_THROWS_WITH_AS(parse("[channel]\nnoise_floor_dbm = 20.0\n"),
                       doctest::Contains("operating range"), config::config_error);
  CHECK_NOTHROW(parse("[channel]\nbaseline_oss_dbm = -10.0\n"));
}

TEST_CASE("inline schedules validate their events") {
  const std::string good = R"(
[schedule]
total_duration_s = 1000.0
sample_rate_hz = 1.0

[[events]]
kind = "pull"
magnitude = 100.0
onset_s = 100.0
duration_s = 50.0
)";
  const ExperimentConfig cfg = parse(good);
  REQUIRE(cfg.schedule.has_value());
  CHECK(cfg.schedule->events.size() == 1);
  CHECK(cfg.resolve_schedule().name == "inline");

  const std::string overlapping = R"(
[[events]]
kind = "pull"
magnitude = 100.0
onset_s = 100.0
duration_s = 50.0

[[events]]
kind = "pull"
magnitude = 120.0
onset_s = 120.0
duration_s = 50.0
)";
  CHECK_THROWS_WITH_AS(parse(overlapping), doctest::Contains("overlaps"), config::config_error);
}

TEST_CASE("named schedules resolve and unknown names fail") {
  ExperimentConfig cfg = parse("[schedule]\nname = \"load_sweep\"\n");
  CHECK(cfg.resolve_schedule().events.size() == 10);
  cfg = parse("[schedule]\nname = \"no_such\"\n");
  CHECK_THROWS_WITH_AS(cfg.resolve_schedule(), doctest::Contains("unknown schedule"),
                       config::config_error);
}

TEST_CASE("targets parse oid_ and decode_ keys") {
  const ExperimentConfig cfg = parse(R"(
[[targets]]
address = "127.0.0.1:16100"
link_id = "lab-1"
community = "research"
poll_interval_s = 0.5
oid_oss = "1.3.6.1.4.1.54321.1.1.0"
oid_ber = "1.3.6.1.4.1.54321.1.2.0"
oid_q_factor = "1.3.6.1.4.1.54321.1.7.0"
decode_q_factor = "int:0.01"
)");
  REQUIRE(cfg.targets.size() == 1);
  const auto& t = cfg.targets[0];
  CHECK(t.community == "research");
  CHECK(t.poll_interval_s == 0.5);
  CHECK(t.oids.at("q_factor") == "1.3.6.1.4.1.54321.1.7.0");
  CHECK(t.decode.at("q_factor").scale == 0.01);
  CHECK(t.decode.at("q_factor").kind == collect::DecodeSpec::Kind::int_scaled);
}

TEST_CASE("environment variables override community and addresses only") {
  ::setenv("IPS_SNMP_COMMUNITY", "from-env", 1);
  ::setenv("IPS_TARGET_LAB_1_ADDR", "10.0.0.9:161", 1);
  const ExperimentConfig cfg = parse(R"(
[[targets]]
address = "127.0.0.1:16100"
link_id = "lab-1"
community = "file-value"
oid_oss = "1.3.6.1.4.1.54321.1.1.0"
)");
  ::unsetenv("IPS_SNMP_COMMUNITY");
  ::unsetenv("IPS_TARGET_LAB_1_ADDR");
  REQUIRE(cfg.targets.size() == 1);
  CHECK(cfg.targets[0].community == "from-env");
  CHECK(cfg.targets[0].address == "10.0.0.9:161");
  CHECK(cfg.agent.community == "from-env");
}

TEST_CASE("config hash is stable and schedule-sensitive") {
  const ExperimentConfig a = parse("[experiment]\nseed = 1\n");
  const ExperimentConfig b = parse("[experiment]\nseed = 1\n");
  const ExperimentConfig c = parse("[experiment]\nseed = 2\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
}

TEST_CASE("detector sections configure both fields independently") {
  const ExperimentConfig cfg = parse(R"(
[detector]
bandwidth = 25.0
threshold = 1.5

[detector_oss]
bandwidth = 0.08
threshold = 0.4
grid_min = -60.0
grid_max = 10.0
)");
  CHECK(cfg.detector_ber.bandwidth == 25.0);
  CHECK(cfg.detector_ber.threshold == 1.5);
  CHECK(cfg.detector_oss.bandwidth == 0.08);
  REQUIRE(cfg.detector_oss.grid_min.has_value());
  CHECK(*cfg.detector_oss.grid_min == -60.0);
  CHECK_THROWS_AS(parse("[detector]\nkernel = \"box\"\n"), config::config_error);
  CHECK_THROWS_AS(parse("[detector]\ngrid_min = 1.0\n"), config::config_error);
}

TEST_CASE("the shipped example config parses and validates") {
  const ExperimentConfig cfg =
      ExperimentConfig::from_file(std::filesystem::path(IPS_SOURCE_DIR) / "configs/experiment.toml");
  CHECK(cfg.seed == 42);
  CHECK(cfg.link_id == "lab-1");
  CHECK(cfg.resolve_schedule().name == "load_sweep");
  REQUIRE(cfg.targets.size() == 1);
  CHECK(cfg.targets[0].oids.count("corrected_bits") == 1);
  CHECK(cfg.agent.port == 16161);
  CHECK(cfg.detector_oss.bandwidth == 0.05);
}

TEST_CASE("from_file reads a real file") {
  const auto path = std::filesystem::temp_directory_path() / "ips_cfg_test.toml";
  {
    std::ofstream out(path);
    out << "[experiment]\nseed = 777\nlink_id = \"file-link\"\n";
  }
  const ExperimentConfig cfg = ExperimentConfig::from_file(path);
  CHECK(cfg.seed == 777);
  CHECK(cfg.link_id == "file-link");
  std::filesystem::remove(path);
  CHECK_THROWS_AS(ExperimentConfig::from_file(path), config::config_error);
}
