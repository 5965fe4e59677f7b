#include "ips/changepoint.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ips::detect {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;
// Kernel contributions beyond this many bandwidths are below the epsilon
// floor and are skipped.
constexpr double kKernelCutoff = 8.5;

double trapezoid(const std::vector<double>& grid, const std::vector<double>& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    acc += 0.5 * (f[i] + f[i + 1]) * (grid[i + 1] - grid[i]);
  }
  return acc;
}

struct LinkSeries {
  std::string link_id;
  std::vector<double> values;             // usable field values, stream order
  std::vector<std::size_t> value_index;   // per-link sample index of each value
  std::vector<std::int64_t> value_ts_ms;  // timestamp of each value
  // Contiguous loss runs as (t_first, t_last) pairs.
  std::vector<std::pair<std::int64_t, std::int64_t>> loss_runs;
  std::size_t sample_count = 0;
  std::int64_t last_ts = 0;
  bool loss_open = false;
};

double field_value(const SignalSample& s, SignalField field, const DetectorConfig& cfg,
                   bool& present) {
  const std::optional<double>& v = (field == SignalField::ber) ? s.ber : s.oss_dbm;
  present = v.has_value();
  if (!present) return 0.0;
  return (field == SignalField::ber) ? *v * cfg.ber_scale : *v;
}

// Split a (possibly multi-link) stream into per-link series, checking the
// per-link timestamp ordering contract.
std::vector<LinkSeries> split_links(std::span<const SignalSample> stream, SignalField field,
                                    const DetectorConfig& cfg) {
  std::vector<LinkSeries> links;
  auto find = [&links](const std::string& id) -> LinkSeries& {
    for (auto& l : links) {
      if (l.link_id == id) return l;
    }
    links.emplace_back();
    links.back().link_id = id;
    return links.back();
  };
  for (const SignalSample& s : stream) {
    LinkSeries& link = find(s.link_id);
    if (link.sample_count > 0 && s.timestamp_ms <= link.last_ts) {
      throw std::invalid_argument("detector input: timestamps not strictly increasing for link '" +
                                  s.link_id + "'");
    }
    link.last_ts = s.timestamp_ms;
    const std::size_t idx = link.sample_count++;
    if (s.loss_of_signal) {
      if (!link.loss_runs.empty() && link.loss_open) {
        link.loss_runs.back().second = s.timestamp_ms;
      } else {
        link.loss_runs.emplace_back(s.timestamp_ms, s.timestamp_ms);
        link.loss_open = true;
      }
      continue;
    }
    link.loss_open = false;
    bool present = false;
    const double v = field_value(s, field, cfg, present);
    if (!present) continue;  // transport gap: excluded, not an event
    if (!std::isfinite(v)) {
      throw std::invalid_argument("detector input: non-finite sample value for link '" + s.link_id +
                                  "'");
    }
    link.values.push_back(v);
    link.value_index.push_back(idx);
    link.value_ts_ms.push_back(s.timestamp_ms);
  }
  return links;
}

}  // namespace

void DetectorConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("detector config: " + msg); };
  if (window_size < 2) fail("window_size must be >= 2");
  if (!(bandwidth > 0)) fail("bandwidth must be > 0");
  if (grid_points < 16) fail("grid_points must be >= 16");
  if (grid_min.has_value() != grid_max.has_value()) fail("grid_min and grid_max must be set together");
  if (grid_min && !(*grid_max > *grid_min)) fail("grid_max must be > grid_min");
  if (!(epsilon_floor > 0)) fail("epsilon_floor must be > 0");
  if (threshold < 0) fail("threshold must be >= 0");
  if (!(ber_scale > 0)) fail("ber_scale must be > 0");
}

DensityEstimate kde_estimate(std::span<const double> samples, const DetectorConfig& config,
                             double grid_min, double grid_max) {
  config.validate();
  if (samples.empty()) throw std::invalid_argument("kde_estimate: empty sample set");
  for (double x : samples) {
    if (!std::isfinite(x)) throw std::invalid_argument("kde_estimate: non-finite sample");
  }
  if (!(grid_max > grid_min)) throw std::invalid_argument("kde_estimate: grid_max must be > grid_min");

  const int n_grid = config.grid_points;
  const double h = config.bandwidth;
  const double step = (grid_max - grid_min) / (n_grid - 1);

  DensityEstimate est;
  est.sample_count = static_cast<int>(samples.size());
  est.grid.resize(n_grid);
  est.density.assign(n_grid, 0.0);
  for (int i = 0; i < n_grid; ++i) est.grid[i] = grid_min + i * step;

  const double reach = kKernelCutoff * h;
  for (double x : samples) {
    const int lo = std::max(0, static_cast<int>(std::ceil((x - reach - grid_min) / step)));
    const int hi = std::min(n_grid - 1, static_cast<int>(std::floor((x + reach - grid_min) / step)));
    for (int i = lo; i <= hi; ++i) {
      const double u = (est.grid[i] - x) / h;
      est.density[i] += std::exp(-0.5 * u * u);
    }
  }
  const double scale = kInvSqrt2Pi / (static_cast<double>(samples.size()) * h);
  for (double& d : est.density) d *= scale;
  return est;
}

DensityEstimate kde_estimate(std::span<const double> samples, const DetectorConfig& config) {
  config.validate();
  if (samples.empty()) throw std::invalid_argument("kde_estimate: empty sample set");
  double lo, hi;
  if (config.grid_min) {
    lo = *config.grid_min;
    hi = *config.grid_max;
  } else {
    auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    lo = *mn - 6.0 * config.bandwidth;
    hi = *mx + 6.0 * config.bandwidth;
  }
  return kde_estimate(samples, config, lo, hi);
}

double kl_divergence(const DensityEstimate& p, const DensityEstimate& q, double epsilon_floor) {
  if (p.grid != q.grid) {
    throw std::invalid_argument("kl_divergence: density estimates must share an identical grid");
  }
  if (!(epsilon_floor > 0)) throw std::invalid_argument("kl_divergence: epsilon_floor must be > 0");

  const std::size_t n = p.grid.size();
  std::vector<double> pf(n), qf(n);
  for (std::size_t i = 0; i < n; ++i) {
    pf[i] = std::max(p.density[i], epsilon_floor);
    qf[i] = std::max(q.density[i], epsilon_floor);
  }
  const double pz = trapezoid(p.grid, pf);
  const double qz = trapezoid(p.grid, qf);
  std::vector<double> integrand(n);
  for (std::size_t i = 0; i < n; ++i) {
    pf[i] /= pz;
    qf[i] /= qz;
    integrand[i] = pf[i] * std::log(pf[i] / qf[i]);
  }
  return std::max(0.0, trapezoid(p.grid, integrand));
}

namespace {

// KLs of adjacent windows over a raw value series. With a fixed grid each
// window's KDE is computed once and reused for both pairs it belongs to.
std::vector<double> window_kls_impl(std::span<const double> values, const DetectorConfig& cfg) {
  const std::size_t w = static_cast<std::size_t>(cfg.window_size);
  const std::size_t n_windows = values.size() / w;
  std::vector<double> kls;
  if (n_windows < 2) return kls;
  kls.reserve(n_windows - 1);

  auto window = [&](std::size_t k) { return values.subspan(k * w, w); };
  auto kl_pair = [&](const DensityEstimate& a, const DensityEstimate& b) {
    const double forward = kl_divergence(a, b, cfg.epsilon_floor);
    if (!cfg.symmetric) return forward;
    return 0.5 * (forward + kl_divergence(b, a, cfg.epsilon_floor));
  };

  if (cfg.grid_min) {
    DensityEstimate prev = kde_estimate(window(0), cfg);
    for (std::size_t k = 1; k < n_windows; ++k) {
      DensityEstimate cur = kde_estimate(window(k), cfg);
      kls.push_back(kl_pair(prev, cur));
      prev = std::move(cur);
    }
  } else {
    for (std::size_t k = 0; k + 1 < n_windows; ++k) {
      auto a = window(k);
      auto b = window(k + 1);
      double mn = a[0], mx = a[0];
      for (double v : a) { mn = std::min(mn, v); mx = std::max(mx, v); }
      for (double v : b) { mn = std::min(mn, v); mx = std::max(mx, v); }
      const double lo = mn - 6.0 * cfg.bandwidth;
      const double hi = mx + 6.0 * cfg.bandwidth;
      kls.push_back(kl_pair(kde_estimate(a, cfg, lo, hi), kde_estimate(b, cfg, lo, hi)));
    }
  }
  return kls;
}

}  // namespace

std::vector<double> adjacent_window_kls(std::span<const double> values,
                                        const DetectorConfig& config) {
  config.validate();
  return window_kls_impl(values, config);
}

DetectResult detect_changes(std::span<const SignalSample> stream, SignalField field,
                            const DetectorConfig& config) {
  config.validate();
  DetectResult result;
  const std::size_t w = static_cast<std::size_t>(config.window_size);

  for (LinkSeries& link : split_links(stream, field, config)) {
    for (auto [t0, t1] : link.loss_runs) {
      DetectionEvent ev;
      ev.signal_id = link.link_id;
      ev.kind = EventKind::signal_lost;
      ev.t_start_ms = t0;
      ev.t_end_ms = t1;
      ev.threshold = config.threshold;
      result.events.push_back(std::move(ev));
    }
    if (link.values.size() < 2 * w) {
      result.warnings.push_back("link '" + link.link_id + "': " + std::to_string(link.values.size()) +
                                " usable samples < two windows of " + std::to_string(w) +
                                "; no divergence computed");
      continue;
    }
    const std::vector<double> kls = window_kls_impl(link.values, config);
    for (std::size_t k = 0; k < kls.size(); ++k) {
      if (kls[k] < config.threshold) continue;
      DetectionEvent ev;
      ev.signal_id = link.link_id;
      ev.kind = EventKind::kl_change;
      ev.window_a_first = link.value_index[k * w];
      ev.window_a_last = link.value_index[(k + 1) * w - 1];
      ev.window_b_first = link.value_index[(k + 1) * w];
      ev.window_b_last = link.value_index[(k + 2) * w - 1];
      ev.t_start_ms = link.value_ts_ms[k * w];
      ev.t_end_ms = link.value_ts_ms[(k + 2) * w - 1];
      ev.kl_divergence = kls[k];
      ev.threshold = config.threshold;
      result.events.push_back(std::move(ev));
    }
  }
  std::stable_sort(result.events.begin(), result.events.end(),
                   [](const DetectionEvent& a, const DetectionEvent& b) {
                     return a.t_end_ms < b.t_end_ms;
                   });
  return result;
}

double calibrate_threshold(std::span<const double> values, const DetectorConfig& config,
                           double target_false_rate) {
  config.validate();
  if (!(target_false_rate > 0) || !(target_false_rate < 1)) {
    throw std::invalid_argument("calibrate_threshold: target_false_rate must be in (0, 1)");
  }
  if (values.size() < 20 * static_cast<std::size_t>(config.window_size)) {
    throw std::invalid_argument("calibrate_threshold: need at least 20 windows of quiescent data, got " +
                                std::to_string(values.size()) + " samples");
  }
  std::vector<double> kls = window_kls_impl(values, config);
  std::sort(kls.begin(), kls.end());
  const std::size_t n = kls.size();
  const std::size_t rank =
      std::min(n - 1, static_cast<std::size_t>(std::ceil((1.0 - target_false_rate) * n)) - 1);
  return kls[rank];
}

double calibrate_threshold(std::span<const SignalSample> quiescent, SignalField field,
                           const DetectorConfig& config, double target_false_rate) {
  config.validate();
  std::vector<LinkSeries> links = split_links(quiescent, field, config);
  if (links.size() != 1) {
    throw std::invalid_argument("calibrate_threshold: expected one link, got " +
                                std::to_string(links.size()));
  }
  return calibrate_threshold(std::span<const double>(links[0].values), config, target_false_rate);
}

}  // namespace ips::detect
