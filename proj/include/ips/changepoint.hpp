#pragma once

// Streaming change-point detection: kernel density estimates of adjacent
// non-overlapping sample windows, flagged when their Kullback-Leibler
// divergence exceeds a threshold. Loss-of-signal runs surface as their own
// events and never enter the density windows.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ips/sample.hpp"

namespace ips::detect {

enum class Kernel { gaussian };

struct DetectorConfig {
  int window_size = 200;
  Kernel kernel = Kernel::gaussian;
  double bandwidth = 20.0;  // in signal units; default suits errors-per-second
  // Fixed evaluation grid; when unset the grid is recomputed per window pair
  // as [min - 6h, max + 6h].
  std::optional<double> grid_min;
  std::optional<double> grid_max;
  int grid_points = 512;
  double epsilon_floor = 1e-12;
  double threshold = 2.0;
  // Mean of both KL directions instead of KL(previous || next).
  bool symmetric = false;
  // Trace ber values are dimensionless rates; the detector works in
  // errors per second, so rates are scaled by this factor (bit rate).
  double ber_scale = 100e9;

  void validate() const;
};

// A probability density discretized over an ordered evaluation grid.
struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> density;
  int sample_count = 0;
};

enum class SignalField { ber, oss };
enum class EventKind { kl_change, signal_lost };

struct DetectionEvent {
  std::string signal_id;
  EventKind kind = EventKind::kl_change;
  std::int64_t t_start_ms = 0;  // first sample of window A (or of the loss run)
  std::int64_t t_end_ms = 0;    // last sample of window B (or of the loss run)
  // Per-link sample indices [first, last] of each window; meaningful for
  // kl_change events only.
  std::size_t window_a_first = 0, window_a_last = 0;
  std::size_t window_b_first = 0, window_b_last = 0;
  double kl_divergence = 0.0;
  double threshold = 0.0;
};

struct DetectResult {
  std::vector<DetectionEvent> events;
  std::vector<std::string> warnings;
};

/**
 * Gaussian KDE evaluated on the config grid (fixed bounds when configured,
 * otherwise [min - 6h, max + 6h] of the input).
 */
DensityEstimate kde_estimate(std::span<const double> samples, const DetectorConfig& config);

// KDE on explicit grid bounds, ignoring any fixed bounds in the config.
DensityEstimate kde_estimate(std::span<const double> samples, const DetectorConfig& config,
                             double grid_min, double grid_max);

/**
 * Trapezoidal KL(p || q) over the shared grid. Both densities are floored
 * at epsilon_floor and renormalized first; tiny negative results from the
 * quadrature are clamped to zero.
 */
double kl_divergence(const DensityEstimate& p, const DensityEstimate& q,
                     double epsilon_floor = 1e-12);

/**
 * KL divergences of adjacent non-overlapping windows of a value series,
 * in stream order. values.size() / window_size windows are formed; the
 * remainder is dropped.
 */
std::vector<double> adjacent_window_kls(std::span<const double> values,
                                        const DetectorConfig& config);

/**
 * Run the windowed detector over an ordered sample stream. Streams holding
 * several links are partitioned by link_id and processed per link. Returns
 * kl_change events for every adjacent window pair at or above the threshold
 * and a signal_lost event per contiguous loss run.
 */
DetectResult detect_changes(std::span<const SignalSample> stream, SignalField field,
                            const DetectorConfig& config);

/**
 * Threshold selection on a quiescent stream: the (1 - target_false_rate)
 * empirical quantile of KL values over its adjacent window pairs.
 * Requires at least 20 * window_size usable samples.
 */
double calibrate_threshold(std::span<const SignalSample> quiescent, SignalField field,
                           const DetectorConfig& config, double target_false_rate);

// Same, over a raw value series.
double calibrate_threshold(std::span<const double> values, const DetectorConfig& config,
                           double target_false_rate);

}  // namespace ips::detect
