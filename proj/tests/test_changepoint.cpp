#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ips/changepoint.hpp"
#include "ips/config.hpp"
#include "ips/simulator.hpp"
#include "support/oracles.hpp"

using namespace ips::detect;
using ips::SignalSample;

namespace {

DetectorConfig base_config() {
  DetectorConfig cfg;
  cfg.window_size = 200;
  cfg.bandwidth = 20.0;
  cfg.grid_points = 512;
  cfg.threshold = 2.0;
  return cfg;
}

// Exact normal density discretized on [lo, hi].
DensityEstimate discretized_gaussian(double mu, double sigma, double lo, double hi, int points) {
  DensityEstimate est;
  est.sample_count = points;
  est.grid.resize(points);
  est.density.resize(points);
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    est.grid[i] = x;
    est.density[i] = oracles::normal_pdf((x - mu) / sigma) / sigma;
  }
  return est;
}

std::vector<SignalSample> stream_of(const std::vector<double>& values, const std::string& link = "L") {
  std::vector<SignalSample> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    SignalSample s;
    s.timestamp_ms = static_cast<std::int64_t>(i) * 1000;
    s.link_id = link;
    s.ber = values[i];
    s.oss_dbm = values[i];
    out.push_back(std::move(s));
  }
  return out;
}

double trapz(const DensityEstimate& d) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < d.grid.size(); ++i) {
    acc += 0.5 * (d.density[i] + d.density[i + 1]) * (d.grid[i + 1] - d.grid[i]);
  }
  return acc;
}

}  // namespace

TEST_CASE("kde of a single point peaks at the standard normal mode") {
  DetectorConfig cfg = base_config();
  cfg.bandwidth = 1.0;
  const std::vector<double> samples{0.0};
  const DensityEstimate est = kde_estimate(samples, cfg, -6.0, 6.0);
  const auto peak = std::max_element(est.density.begin(), est.density.end());
  const std::size_t peak_idx = static_cast<std::size_t>(peak - est.density.begin());
  CHECK(std::abs(est.grid[peak_idx]) < 6.0 / 511.0 * 2.0);
  CHECK(*peak == doctest::Approx(0.3989422804).epsilon(2e-3));
  CHECK(trapz(est) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("kde symmetry about the sample center") {
  DetectorConfig cfg = base_config();
  cfg.bandwidth = 0.7;
  cfg.grid_points = 401;
  const std::vector<double> samples{4.0, 6.0, 5.0, 3.5, 6.5};  // symmetric about 5
  const DensityEstimate est = kde_estimate(samples, cfg, 5.0 - 8.0, 5.0 + 8.0);
  const std::size_t n = est.grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(est.density[i] == doctest::Approx(est.density[n - 1 - i]).epsilon(1e-9));
  }
}

TEST_CASE("kde integral is ~1 when the grid spans the data by 6 bandwidths") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(100.0, 20.0);
  DetectorConfig cfg = base_config();
  std::vector<double> samples(400);
  for (double& v : samples) v = noise(rng);
  const DensityEstimate est = kde_estimate(samples, cfg);  // auto grid
  const double mass = trapz(est);
  CHECK(mass > 0.95);
  CHECK(mass <= 1.0001);
}

TEST_CASE("kde input validation") {
  const DetectorConfig cfg = base_config();
  CHECK_THROWS_AS(kde_estimate(std::vector<double>{}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(kde_estimate(std::vector<double>{1.0, std::nan("")}, cfg), std::invalid_argument);
}

TEST_CASE("kl of a density with itself is zero") {
  const DensityEstimate p = discretized_gaussian(0.0, 1.0, -10.0, 10.0, 1024);
  CHECK(kl_divergence(p, p) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("kl matches the Gaussian closed form") {
  // N(0,1) vs N(1,1): (mu1-mu2)^2 / (2 sigma^2) = 0.5
  const DensityEstimate p = discretized_gaussian(0.0, 1.0, -12.0, 13.0, 2048);
  const DensityEstimate q = discretized_gaussian(1.0, 1.0, -12.0, 13.0, 2048);
  CHECK(kl_divergence(p, q) == doctest::Approx(0.5).epsilon(0.05));

  // Asymmetry, checked in both directions against the closed form.
  const DensityEstimate a = discretized_gaussian(0.0, 1.0, -20.0, 20.0, 2048);
  const DensityEstimate b = discretized_gaussian(0.0, 2.0, -20.0, 20.0, 2048);
  const double forward = kl_divergence(a, b);
  const double backward = kl_divergence(b, a);
  CHECK(forward == doctest::Approx(oracles::gaussian_kl(0, 1, 0, 2)).epsilon(0.05));
  CHECK(backward == doctest::Approx(oracles::gaussian_kl(0, 2, 0, 1)).epsilon(0.05));
  CHECK(forward != backward);
}

TEST_CASE("kl over 20 random Gaussian pairs stays within 5% of closed form") {
  // Overlapping pairs: when the densities are nearly disjoint the epsilon
  // floor rightly dominates and the closed form no longer applies.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> sigmas(0.8, 1.8);
  std::uniform_real_distribution<double> ratios(0.67, 1.5);
  std::uniform_real_distribution<double> gaps(0.3, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double s1 = sigmas(rng), s2 = std::clamp(s1 * ratios(rng), 0.8, 1.8);
    const double mu1 = 0.0, mu2 = gaps(rng) * std::max(s1, s2);
    const double lo = std::min(mu1, mu2) - 12.0 * std::max(s1, s2);
    const double hi = std::max(mu1, mu2) + 12.0 * std::max(s1, s2);
    const DensityEstimate p = discretized_gaussian(mu1, s1, lo, hi, 4096);
    const DensityEstimate q = discretized_gaussian(mu2, s2, lo, hi, 4096);
    const double expected = oracles::gaussian_kl(mu1, s1, mu2, s2);
    CHECK(kl_divergence(p, q) == doctest::Approx(expected).epsilon(0.05));
  }
}

TEST_CASE("kl rejects mismatched grids") {
  const DensityEstimate p = discretized_gaussian(0.0, 1.0, -10.0, 10.0, 512);
  const DensityEstimate q = discretized_gaussian(0.0, 1.0, -10.0, 10.5, 512);
  CHECK_THROWS_AS(kl_divergence(p, q), std::invalid_argument);
}

TEST_CASE("kl is nonnegative on random density pairs") {
  std::mt19937_64 rng(29);
  DetectorConfig cfg = base_config();
  std::normal_distribution<double> noise(0.0, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(200), b(200);
    for (double& v : a) v = noise(rng);
    for (double& v : b) v = noise(rng) + (trial % 3) * 10.0;
    double mn = 1e300, mx = -1e300;
    for (double v : a) { mn = std::min(mn, v); mx = std::max(mx, v); }
    for (double v : b) { mn = std::min(mn, v); mx = std::max(mx, v); }
    const DensityEstimate pa = kde_estimate(a, cfg, mn - 120.0, mx + 120.0);
    const DensityEstimate pb = kde_estimate(b, cfg, mn - 120.0, mx + 120.0);
    CHECK(kl_divergence(pa, pb) >= 0.0);
  }
}

TEST_CASE("shift equivariance of window KLs") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(50.0, 5.0);
  DetectorConfig cfg = base_config();
  cfg.bandwidth = 5.0;
  std::vector<double> values(1000);
  for (double& v : values) v = noise(rng);
  std::vector<double> shifted = values;
  const double c = 137.25;
  for (double& v : shifted) v += c;
  const std::vector<double> k1 = adjacent_window_kls(values, cfg);
  const std::vector<double> k2 = adjacent_window_kls(shifted, cfg);
  REQUIRE(k1.size() == k2.size());
  for (std::size_t i = 0; i < k1.size(); ++i) {
    CHECK(std::abs(k1[i] - k2[i]) < 1e-9);
  }
}

TEST_CASE("constant signal produces no events at the default threshold") {
  const std::vector<double> flat(800, 42.0);
  const DetectResult r = detect_changes(stream_of(flat), SignalField::oss, base_config());
  CHECK(r.events.empty());
  CHECK(r.warnings.empty());
}

TEST_CASE("a clear mean step yields exactly one event at the window boundary") {
  std::mt19937_64 rng(41);
  std::vector<double> values;
  std::normal_distribution<double> before(100.0, 20.0), after(300.0, 20.0);
  for (int i = 0; i < 200; ++i) values.push_back(before(rng));
  for (int i = 0; i < 200; ++i) values.push_back(after(rng));

  DetectorConfig cfg = base_config();
  cfg.threshold = 1.0;  // anywhere inside (0, KL_step/2); KL_step ~ 12 here
  const DetectResult r = detect_changes(stream_of(values), SignalField::oss, cfg);
  REQUIRE(r.events.size() == 1);
  const DetectionEvent& ev = r.events[0];
  CHECK(ev.kind == EventKind::kl_change);
  CHECK(ev.window_a_first == 0);
  CHECK(ev.window_a_last == 199);
  CHECK(ev.window_b_first == 200);
  CHECK(ev.window_b_last == 399);
  CHECK(ev.kl_divergence >= 2.0);  // far above threshold
  CHECK(ev.t_end_ms == 399 * 1000);
}

TEST_CASE("detector is deterministic") {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> noise(0.0, 20.0);
  std::vector<double> values(1200);
  for (double& v : values) v = noise(rng);
  auto stream = stream_of(values);
  DetectorConfig cfg = base_config();
  cfg.threshold = 0.0;  // emit every pair
  cfg.ber_scale = 1.0;  // the synthetic values are already in signal units
  const DetectResult r1 = detect_changes(stream, SignalField::ber, cfg);
  const DetectResult r2 = detect_changes(stream, SignalField::ber, cfg);
  REQUIRE(r1.events.size() == r2.events.size());
  for (std::size_t i = 0; i < r1.events.size(); ++i) {
    CHECK(r1.events[i].kl_divergence == r2.events[i].kl_divergence);
    CHECK(r1.events[i].t_start_ms == r2.events[i].t_start_ms);
    CHECK(r1.events[i].t_end_ms == r2.events[i].t_end_ms);
  }
}

TEST_CASE("short streams warn instead of failing") {
  const std::vector<double> values(150, 1.0);
  const DetectResult r = detect_changes(stream_of(values), SignalField::oss, base_config());
  CHECK(r.events.empty());
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("usable samples") != std::string::npos);
}

TEST_CASE("loss runs surface as signal_lost events and stay out of windows") {
  std::vector<double> values(900, 10.0);
  auto stream = stream_of(values);
  // Two loss runs: [100, 140) and a single sample at 600.
  for (int i = 100; i < 140; ++i) {
    stream[i].loss_of_signal = true;
    stream[i].ber.reset();
    stream[i].oss_dbm.reset();
  }
  stream[600].loss_of_signal = true;
  stream[600].ber.reset();
  stream[600].oss_dbm.reset();

  DetectorConfig cfg = base_config();
  cfg.ber_scale = 1.0;
  const DetectResult r = detect_changes(stream, SignalField::ber, cfg);
  std::vector<DetectionEvent> lost;
  for (const auto& ev : r.events) {
    if (ev.kind == EventKind::signal_lost) lost.push_back(ev);
  }
  REQUIRE(lost.size() == 2);
  CHECK(lost[0].t_start_ms == 100 * 1000);
  CHECK(lost[0].t_end_ms == 139 * 1000);
  CHECK(lost[1].t_start_ms == 600 * 1000);
  CHECK(lost[1].t_end_ms == 600 * 1000);
  // The remaining 859 usable samples form 4 windows; all identical values,
  // so no kl_change events at a positive threshold.
  for (const auto& ev : r.events) {
    if (ev.kind == EventKind::kl_change) FAIL("unexpected kl_change event");
  }
}

TEST_CASE("non-monotone timestamps are rejected") {
  std::vector<double> values(10, 1.0);
  auto stream = stream_of(values);
  stream[5].timestamp_ms = stream[4].timestamp_ms;
  CHECK_THROWS_AS(detect_changes(stream, SignalField::ber, base_config()), std::invalid_argument);
}

TEST_CASE("multi-link streams are partitioned per link") {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> noise(100.0, 20.0), stepped(300.0, 20.0);
  std::vector<SignalSample> stream;
  for (int i = 0; i < 400; ++i) {
    SignalSample a;
    a.timestamp_ms = i * 1000;
    a.link_id = "steady";
    a.ber = noise(rng);
    stream.push_back(a);
    SignalSample b;
    b.timestamp_ms = i * 1000 + 1;
    b.link_id = "stepping";
    b.ber = (i < 200) ? noise(rng) : stepped(rng);
    stream.push_back(b);
  }
  DetectorConfig cfg = base_config();
  cfg.threshold = 1.0;
  cfg.ber_scale = 1.0;
  const DetectResult r = detect_changes(stream, SignalField::ber, cfg);
  REQUIRE(r.events.size() == 1);
  CHECK(r.events[0].signal_id == "stepping");
}

TEST_CASE("calibrate_threshold returns the requested quantile") {
  std::mt19937_64 rng(61);
  std::normal_distribution<double> noise(500.0, 20.0);
  std::vector<double> values(200 * 101);  // 101 windows -> 100 pairs
  for (double& v : values) v = noise(rng);
  DetectorConfig cfg = base_config();
  const double threshold = calibrate_threshold(std::span<const double>(values), cfg, 0.05);
  const std::vector<double> kls = adjacent_window_kls(values, cfg);
  std::size_t above = 0;
  for (double k : kls) {
    if (k > threshold) ++above;
  }
  CHECK(static_cast<double>(above) / static_cast<double>(kls.size()) <= 0.05);
  CHECK(threshold > 0.0);
}

TEST_CASE("calibrate_threshold on a constant stream is zero") {
  const std::vector<double> flat(200 * 25, 3.0);
  CHECK(calibrate_threshold(std::span<const double>(flat), base_config(), 0.05) == 0.0);
}

TEST_CASE("calibrate_threshold needs 20 windows") {
  const std::vector<double> flat(200 * 19, 3.0);
  CHECK_THROWS_AS(calibrate_threshold(std::span<const double>(flat), base_config(), 0.05),
                  std::invalid_argument);
  CHECK_THROWS_AS(calibrate_threshold(std::span<const double>(flat), base_config(), 0.0),
                  std::invalid_argument);
}

TEST_CASE("quiescent trace with a cross-calibrated threshold yields no events") {
  const auto cfg = ips::config::ExperimentConfig::defaults();
  ips::sim::StressSchedule quiet;
  quiet.name = "quiet";
  quiet.total_duration_s = 40000.0;
  const auto calib = ips::sim::simulate(quiet, cfg.channel, 1001, "calib");
  const double threshold =
      calibrate_threshold(calib, SignalField::oss, cfg.detector_oss, 0.005);

  quiet.total_duration_s = 2000.0;
  const auto fresh = ips::sim::simulate(quiet, cfg.channel, 2002, "link");
  DetectorConfig detector = cfg.detector_oss;
  detector.threshold = threshold;
  const DetectResult r = detect_changes(fresh, SignalField::oss, detector);
  for (const auto& ev : r.events) {
    CHECK(ev.kind != EventKind::kl_change);
  }
}

TEST_CASE("every load application in the pull sweep is detected on the OSS stream") {
  const auto cfg = ips::config::ExperimentConfig::defaults();
  auto schedules = ips::sim::canonical_schedules();
  const ips::sim::StressSchedule& sweep = schedules.at("load_sweep");

  ips::sim::StressSchedule quiet;
  quiet.name = "quiet";
  quiet.total_duration_s = 40000.0;
  const auto calib = ips::sim::simulate(quiet, cfg.channel, 1001, "calib");
  DetectorConfig detector = cfg.detector_oss;
  detector.threshold = calibrate_threshold(calib, SignalField::oss, cfg.detector_oss, 0.05);

  const auto trace = ips::sim::simulate(sweep, cfg.channel, 60606, "pull");
  const DetectResult r = detect_changes(trace, SignalField::oss, detector);
  for (const auto& load : sweep.events) {
    bool hit = false;
    for (const auto& ev : r.events) {
      if (ev.kind != EventKind::kl_change) continue;
      const double t0 = static_cast<double>(ev.t_start_ms) / 1000.0;
      const double t1 = static_cast<double>(ev.t_end_ms) / 1000.0;
      if (t1 >= load.onset_s && t0 <= load.onset_s + load.duration_s) {
        hit = true;
        break;
      }
    }
    CHECK_MESSAGE(hit, "no kl_change event overlaps the ", load.magnitude, " g load");
  }
}

TEST_CASE("symmetric option averages both directions") {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> tight(0.0, 10.0), wide(0.0, 30.0);
  std::vector<double> values;
  for (int i = 0; i < 200; ++i) values.push_back(tight(rng));
  for (int i = 0; i < 200; ++i) values.push_back(wide(rng));
  DetectorConfig cfg = base_config();
  const double forward = adjacent_window_kls(values, cfg)[0];
  std::vector<double> reversed(values.rbegin(), values.rend());
  const double backward_windows = adjacent_window_kls(reversed, cfg)[0];
  cfg.symmetric = true;
  const double sym = adjacent_window_kls(values, cfg)[0];
  // Windows reversed sample-by-sample estimate the same densities.
  CHECK(sym == doctest::Approx(0.5 * (forward + backward_windows)).epsilon(0.05));
}
