#pragma once

// Synthetic OSS/BER sample streams driven by mechanical stress schedules,
// plus the canonical bend/pull experiment schedules.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ips/channel_model.hpp"
#include "ips/sample.hpp"

namespace ips::sim {

enum class StressKind { bend, pull };

// One timed stress application: a bend to a radius (cm) or a hanging pull
// load (grams).
struct StressEvent {
  StressKind kind = StressKind::pull;
  double magnitude = 0.0;   // cm for bends, grams for pulls
  double onset_s = 0.0;     // seconds from experiment start
  double duration_s = 0.0;
};

struct StressSchedule {
  std::string name;
  std::vector<StressEvent> events;  // sorted by onset, non-overlapping
  double total_duration_s = 0.0;
  double fiber_length_m = 12.1;
  double sample_rate_hz = 1.0;  // capped at 20 Hz

  // Throws std::invalid_argument listing every offending event.
  void validate() const;
};

inline constexpr double kMaxSampleRateHz = 20.0;

// Evolving pull-attenuation state of a simulated link.
struct ChannelState {
  double residual_attenuation_db = 0.0;
  double last_release_time_s = 0.0;
  bool under_stress = false;
};

/**
 * Run a schedule against a channel and emit one sample per tick.
 *
 * OSS = baseline - bend drop - residual pull attenuation + gaussian noise.
 * The observed error rate is the pre-FEC floor times the bend multiplier
 * plus the AWGN QPSK term, sampled as Poisson error counts at the bit rate.
 * Pull attenuation builds up with the attack time constant while the load
 * is held and decays with the recovery time constant at rest; bends act
 * through the short mechanical ramp only. Bend rows flagged loss_of_signal
 * produce flagged gap samples with no OSS/BER values.
 *
 * Deterministic for a fixed (schedule, params, seed).
 */
std::vector<SignalSample> simulate(const StressSchedule& schedule,
                                   const channel::ChannelParams& params, std::uint64_t seed,
                                   const std::string& link_id = "sim-0");

/**
 * The four canonical experiment schedules:
 *   bend_sweep     - bends of 3, 2, 1, 0.5 cm, 2 min each, 3 min rests
 *   load_sweep     - pulls of 50..140 g in 10 g steps, 5 min load / 15 min rest
 *   duration_sweep - 100 g pulls held 10..50 s in 10 s steps, 15 min rests
 *   rest_sweep     - 15 min 100 g pulls separated by rests of 1..10 min
 */
std::map<std::string, StressSchedule> canonical_schedules();

// Fraction of full OSS recovery after resting: 1 - exp(-t / tau).
double recovery_fraction(double rest_elapsed_s, const channel::ChannelParams& params);

}  // namespace ips::sim
