#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ips/simulator.hpp"
#include "support/oracles.hpp"

using namespace ips::sim;
using ips::SignalSample;
using ips::channel::ChannelParams;

namespace {

std::vector<double> oss_between(const std::vector<SignalSample>& trace, double t0_s, double t1_s) {
  std::vector<double> out;
  for (const auto& s : trace) {
    const double t = static_cast<double>(s.timestamp_ms) / 1000.0;
    if (t >= t0_s && t < t1_s && s.oss_dbm) out.push_back(*s.oss_dbm);
  }
  return out;
}

}  // namespace

TEST_CASE("canonical schedules match the experiment captions") {
  auto schedules = canonical_schedules();
  REQUIRE(schedules.count("bend_sweep"));
  REQUIRE(schedules.count("load_sweep"));
  REQUIRE(schedules.count("duration_sweep"));
  REQUIRE(schedules.count("rest_sweep"));

  const StressSchedule& bend = schedules["bend_sweep"];
  REQUIRE(bend.events.size() == 4);
  const double radii[] = {3.0, 2.0, 1.0, 0.5};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(bend.events[i].kind == StressKind::bend);
    CHECK(bend.events[i].magnitude == radii[i]);
    CHECK(bend.events[i].duration_s == 120.0);
  }

  const StressSchedule& load = schedules["load_sweep"];
  REQUIRE(load.events.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(load.events[i].kind == StressKind::pull);
    CHECK(load.events[i].magnitude == 50.0 + 10.0 * static_cast<double>(i));
    CHECK(load.events[i].duration_s == 300.0);  // 5 min load
    if (i > 0) {  // 15 min rest between consecutive loads
      CHECK(load.events[i].onset_s - (load.events[i - 1].onset_s + 300.0) == 900.0);
    }
  }

  const StressSchedule& dur = schedules["duration_sweep"];
  REQUIRE(dur.events.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(dur.events[i].magnitude == 100.0);
    CHECK(dur.events[i].duration_s == 10.0 + 10.0 * static_cast<double>(i));
    if (i > 0) {
      CHECK(dur.events[i].onset_s - (dur.events[i - 1].onset_s + dur.events[i - 1].duration_s) ==
            900.0);
    }
  }

  const StressSchedule& rest = schedules["rest_sweep"];
  REQUIRE(rest.events.size() == 11);
  for (std::size_t i = 0; i < 11; ++i) {
    CHECK(rest.events[i].magnitude == 100.0);
    CHECK(rest.events[i].duration_s == 900.0);  // 15 min load period
    if (i > 0) {  // rests grow 1..10 min
      CHECK(rest.events[i].onset_s - (rest.events[i - 1].onset_s + 900.0) ==
            60.0 * static_cast<double>(i));
    }
  }
}

TEST_CASE("schedule validation lists offending events") {
  StressSchedule s;
  s.name = "bad";
  s.total_duration_s = 100.0;
  s.events.push_back({StressKind::pull, 100.0, 10.0, 30.0});
  s.events.push_back({StressKind::pull, 100.0, 20.0, 30.0});  // overlaps
  s.events.push_back({StressKind::pull, -5.0, 60.0, 10.0});   // bad magnitude
  try {
    s.validate();
    FAIL("expected validation error");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("overlaps") != std::string::npos);
    CHECK(msg.find("event 1") != std::string::npos);
    CHECK(msg.find("event 2") != std::string::npos);
    CHECK(msg.find("magnitude") != std::string::npos);
  }
}

TEST_CASE("simulation is deterministic for a fixed seed") {
  auto schedules = canonical_schedules();
  const ChannelParams params;
  const auto a = simulate(schedules["bend_sweep"], params, 1234, "L");
  const auto b = simulate(schedules["bend_sweep"], params, 1234, "L");
  REQUIRE(a.size() == b.size());
  CHECK(a == b);
  const auto c = simulate(schedules["bend_sweep"], params, 1235, "L");
  CHECK(a != c);
}

TEST_CASE("quiescent trace stays near baseline") {
  StressSchedule quiet;
  quiet.name = "quiet";
  quiet.total_duration_s = 120.0;
  const ChannelParams params;
  const auto trace = simulate(quiet, params, 20250401, "L");
  REQUIRE(trace.size() == 120);
  for (const auto& s : trace) {
    REQUIRE(s.oss_dbm.has_value());
    CHECK(std::abs(*s.oss_dbm - params.baseline_oss_dbm) < 3.0 * params.oss_noise_std_db);
    CHECK_FALSE(s.loss_of_signal);
  }
}

TEST_CASE("a 0.5 cm bend is a flagged gap with no values") {
  StressSchedule s;
  s.name = "tight-bend";
  s.total_duration_s = 300.0;
  s.events.push_back({StressKind::bend, 0.5, 60.0, 120.0});
  const auto trace = simulate(s, ChannelParams{}, 7, "L");
  for (const auto& sample : trace) {
    const double t = static_cast<double>(sample.timestamp_ms) / 1000.0;
    if (t >= 60.0 && t < 180.0) {
      CHECK(sample.loss_of_signal);
      CHECK_FALSE(sample.oss_dbm.has_value());
      CHECK_FALSE(sample.ber.has_value());
    } else {
      CHECK_FALSE(sample.loss_of_signal);
      CHECK(sample.oss_dbm.has_value());
      CHECK(sample.ber.has_value());
    }
  }
}

TEST_CASE("a 10 s pull leaves mean OSS within one noise std") {
  StressSchedule s;
  s.name = "short-pull";
  s.total_duration_s = 120.0;
  s.events.push_back({StressKind::pull, 100.0, 60.0, 10.0});
  const ChannelParams params;
  const auto trace = simulate(s, params, 99, "L");
  const std::vector<double> stressed = oss_between(trace, 60.0, 70.0);
  REQUIRE(stressed.size() == 10);
  CHECK(std::abs(oracles::mean(stressed) - params.baseline_oss_dbm) < params.oss_noise_std_db);
}

TEST_CASE("a 5 min pull shows a clear drop that then recovers") {
  StressSchedule s;
  s.name = "long-pull";
  s.total_duration_s = 1800.0;
  s.events.push_back({StressKind::pull, 100.0, 300.0, 300.0});
  const ChannelParams params;
  const auto trace = simulate(s, params, 99, "L");
  const double quiescent = oracles::mean(oss_between(trace, 0.0, 300.0));
  const double late_stress = oracles::mean(oss_between(trace, 500.0, 600.0));
  const double recovered = oracles::mean(oss_between(trace, 1500.0, 1800.0));
  CHECK(quiescent - late_stress > 1.0);  // 100 g ~ 1.9 dB at full build-up
  CHECK(std::abs(recovered - params.baseline_oss_dbm) < 0.1);
}

TEST_CASE("stress never raises OSS above baseline in expectation") {
  auto schedules = canonical_schedules();
  const ChannelParams params;
  const auto trace = simulate(schedules["load_sweep"], params, 31337, "L");
  const std::vector<double> all = oss_between(trace, 0.0, 1e18);
  REQUIRE(all.size() > 100);
  double acc = 0.0;
  for (double v : all) acc += v;
  CHECK(acc / static_cast<double>(all.size()) <=
        params.baseline_oss_dbm + 3.0 * params.oss_noise_std_db);
  for (const auto& s : trace) {
    if (s.oss_dbm) CHECK(*s.oss_dbm <= params.baseline_oss_dbm + 6.0 * params.oss_noise_std_db);
  }
}

TEST_CASE("mean OSS drop grows strictly with load across the sweep") {
  auto schedules = canonical_schedules();
  const StressSchedule& sweep = schedules["load_sweep"];
  const ChannelParams params;
  const auto trace = simulate(sweep, params, 4242, "L");
  double prev_drop = -1.0;
  for (const auto& ev : sweep.events) {
    const auto window = oss_between(trace, ev.onset_s, ev.onset_s + ev.duration_s);
    const double drop = params.baseline_oss_dbm - oracles::mean(window);
    CHECK(drop > prev_drop);
    prev_drop = drop;
  }
}

TEST_CASE("pull loads leave BER statistically flat") {
  auto schedules = canonical_schedules();
  const StressSchedule& sweep = schedules["load_sweep"];
  const ChannelParams params;
  const auto trace = simulate(sweep, params, 1812, "L");
  auto ber_between = [&](double t0, double t1) {
    std::vector<double> out;
    for (const auto& s : trace) {
      const double t = static_cast<double>(s.timestamp_ms) / 1000.0;
      if (t >= t0 && t < t1 && s.ber) out.push_back(*s.ber);
    }
    return out;
  };
  const auto quiescent = ber_between(0.0, sweep.events[0].onset_s);
  for (const auto& ev : sweep.events) {
    const auto loaded = ber_between(ev.onset_s, ev.onset_s + ev.duration_s);
    CHECK_FALSE(oracles::welch_z(quiescent, loaded).distinguishable_1pct);
  }
}

TEST_CASE("bend BER response: flat at 3/2 cm, two orders of magnitude at 1 cm") {
  auto schedules = canonical_schedules();
  const StressSchedule& sweep = schedules["bend_sweep"];
  const ChannelParams params;
  const auto trace = simulate(sweep, params, 2024, "L");

  auto ber_between = [&](double t0, double t1) {
    std::vector<double> out;
    for (const auto& s : trace) {
      const double t = static_cast<double>(s.timestamp_ms) / 1000.0;
      if (t >= t0 && t < t1 && s.ber) out.push_back(*s.ber);
    }
    return out;
  };

  const std::vector<double> quiescent = ber_between(0.0, 180.0);
  const std::vector<double> at3cm = ber_between(sweep.events[0].onset_s, sweep.events[0].onset_s + 120);
  const std::vector<double> at2cm = ber_between(sweep.events[1].onset_s, sweep.events[1].onset_s + 120);
  const std::vector<double> at1cm = ber_between(sweep.events[2].onset_s, sweep.events[2].onset_s + 120);

  CHECK_FALSE(oracles::welch_z(quiescent, at3cm).distinguishable_1pct);
  CHECK_FALSE(oracles::welch_z(quiescent, at2cm).distinguishable_1pct);
  const double ratio = oracles::mean(at1cm) / oracles::mean(quiescent);
  CHECK(ratio >= 50.0);
  CHECK(ratio <= 200.0);
}

TEST_CASE("recovery_fraction anchors") {
  const ChannelParams params;  // tau = 180 s
  CHECK(recovery_fraction(0.0, params) == 0.0);
  CHECK(recovery_fraction(900.0, params) == doctest::Approx(0.993262).epsilon(1e-5));
  CHECK(recovery_fraction(900.0, params) >= 0.99);
  CHECK(recovery_fraction(420.0, params) == doctest::Approx(0.903028).epsilon(1e-5));
  CHECK(recovery_fraction(420.0, params) >= 0.85);
  CHECK(recovery_fraction(420.0, params) <= 0.95);
  CHECK_THROWS_AS(recovery_fraction(-1.0, params), std::invalid_argument);
}

TEST_CASE("short rests leave the next pre-stress OSS below baseline") {
  auto schedules = canonical_schedules();
  const StressSchedule& sweep = schedules["rest_sweep"];
  const ChannelParams params;
  const auto trace = simulate(sweep, params, 555, "L");
  // Cycles n+1 preceded by rests shorter than 7 min: rest after event i is
  // 60*(i+1) seconds, so events 1..6 qualify.
  for (std::size_t i = 1; i <= 6; ++i) {
    const double onset = sweep.events[i].onset_s;
    const auto pre = oss_between(trace, onset - 20.0, onset);
    REQUIRE(pre.size() == 20);
    const double margin = 3.0 * params.oss_noise_std_db / std::sqrt(20.0);
    CHECK(oracles::mean(pre) < params.baseline_oss_dbm - margin);
  }
}
