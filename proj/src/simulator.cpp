#include "ips/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace ips::sim {

void StressSchedule::validate() const {
  std::ostringstream issues;
  auto describe = [](std::size_t i, const StressEvent& ev) {
    std::ostringstream s;
    s << "event " << i << " (" << (ev.kind == StressKind::bend ? "bend " : "pull ") << ev.magnitude
      << (ev.kind == StressKind::bend ? " cm" : " g") << " at " << ev.onset_s << "s for "
      << ev.duration_s << "s)";
    return s.str();
  };
  if (!(total_duration_s > 0)) issues << "total_duration must be > 0; ";
  if (!(sample_rate_hz > 0) || sample_rate_hz > kMaxSampleRateHz)
    issues << "sample_rate must be in (0, 20] Hz; ";
  if (!(fiber_length_m > 0)) issues << "fiber_length must be > 0; ";
  for (std::size_t i = 0; i < events.size(); ++i) {
    const StressEvent& ev = events[i];
    if (!(ev.magnitude > 0)) issues << describe(i, ev) << ": magnitude must be > 0; ";
    if (!(ev.duration_s > 0)) issues << describe(i, ev) << ": duration must be > 0; ";
    if (ev.onset_s < 0) issues << describe(i, ev) << ": onset must be >= 0; ";
    if (ev.onset_s + ev.duration_s > total_duration_s)
      issues << describe(i, ev) << ": extends past total_duration; ";
    if (i > 0) {
      const StressEvent& prev = events[i - 1];
      if (ev.onset_s < prev.onset_s) issues << describe(i, ev) << ": not sorted by onset; ";
      else if (ev.onset_s < prev.onset_s + prev.duration_s)
        issues << describe(i, ev) << ": overlaps " << describe(i - 1, prev) << "; ";
    }
  }
  const std::string all = issues.str();
  if (!all.empty()) {
    throw std::invalid_argument("invalid schedule '" + name + "': " + all);
  }
}

double recovery_fraction(double rest_elapsed_s, const channel::ChannelParams& params) {
  if (!(rest_elapsed_s >= 0)) {
    throw std::invalid_argument("recovery_fraction: rest time must be >= 0");
  }
  return 1.0 - std::exp(-rest_elapsed_s / params.recovery_time_constant_s);
}

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

const StressEvent* active_event(const std::vector<StressEvent>& events, double t,
                                std::size_t& cursor) {
  while (cursor < events.size() && t >= events[cursor].onset_s + events[cursor].duration_s) ++cursor;
  if (cursor < events.size() && t >= events[cursor].onset_s) return &events[cursor];
  return nullptr;
}

}  // namespace

std::vector<SignalSample> simulate(const StressSchedule& schedule,
                                   const channel::ChannelParams& params, std::uint64_t seed,
                                   const std::string& link_id) {
  schedule.validate();
  params.validate();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> oss_noise(0.0, params.oss_noise_std_db);

  const double dt = 1.0 / schedule.sample_rate_hz;
  const double decay = std::exp(-dt / params.recovery_time_constant_s);
  const double attack = 1.0 - std::exp(-dt / params.attack_time_constant_s);
  const auto n_ticks = static_cast<std::size_t>(std::llround(schedule.total_duration_s *
                                                             schedule.sample_rate_hz));
  const auto noise_floor = channel::OpticalPower::from_dbm(params.noise_floor_dbm);
  const double bits_per_tick = params.bit_rate_bps * dt;

  std::vector<SignalSample> out;
  out.reserve(n_ticks);
  ChannelState state;
  std::size_t cursor = 0;

  for (std::size_t k = 0; k < n_ticks; ++k) {
    const double t = static_cast<double>(k) * dt;
    const StressEvent* ev = active_event(schedule.events, t, cursor);

    const bool pulling = ev && ev->kind == StressKind::pull;
    if (pulling) {
      const double ramp = params.ramp_seconds > 0 ? clamp01((t - ev->onset_s) / params.ramp_seconds) : 1.0;
      const double target = channel::pull_attenuation_db(ev->magnitude, params) * ramp;
      if (target >= state.residual_attenuation_db) {
        state.residual_attenuation_db += (target - state.residual_attenuation_db) * attack;
      } else {
        state.residual_attenuation_db = std::max(target, state.residual_attenuation_db * decay);
      }
      state.under_stress = true;
    } else {
      state.residual_attenuation_db *= decay;
      if (state.under_stress) state.last_release_time_s = t;
      state.under_stress = false;
    }

    SignalSample sample;
    sample.timestamp_ms = std::llround(t * 1000.0);
    sample.link_id = link_id;

    double bend_drop = 0.0;
    double ber_multiplier = 1.0;
    if (ev && ev->kind == StressKind::bend) {
      const channel::BendResponse resp = channel::bend_response(ev->magnitude, params);
      if (resp.loss_of_signal) {
        sample.loss_of_signal = true;
        out.push_back(std::move(sample));
        continue;
      }
      const double ramp = params.ramp_seconds > 0 ? clamp01((t - ev->onset_s) / params.ramp_seconds) : 1.0;
      bend_drop = resp.oss_drop_db * ramp;
      ber_multiplier = resp.ber_multiplier;
    }

    const double oss_dbm = params.baseline_oss_dbm - bend_drop - state.residual_attenuation_db +
                           oss_noise(rng);
    const double awgn_ber =
        channel::qpsk_ber(channel::snr_from_oss(channel::OpticalPower::from_dbm(oss_dbm), noise_floor))
            .value;
    const double model_ber = std::min(1.0, params.pre_fec_floor_ber * ber_multiplier + awgn_ber);

    std::poisson_distribution<long long> error_counts(model_ber * bits_per_tick);
    sample.oss_dbm = oss_dbm;
    sample.ber = static_cast<double>(error_counts(rng)) / bits_per_tick;
    out.push_back(std::move(sample));
  }
  return out;
}

std::map<std::string, StressSchedule> canonical_schedules() {
  std::map<std::string, StressSchedule> schedules;

  {  // Bends of 3, 2, 1 and 0.5 cm radius, 2 minutes each, 3 minute rests.
    StressSchedule s;
    s.name = "bend_sweep";
    s.fiber_length_m = 7.0;
    const double bend_s = 120.0, rest_s = 180.0;
    double t = rest_s;  // lead-in rest for a quiescent reference window
    for (double radius : {3.0, 2.0, 1.0, 0.5}) {
      s.events.push_back({StressKind::bend, radius, t, bend_s});
      t += bend_s + rest_s;
    }
    s.total_duration_s = t;
    schedules.emplace(s.name, std::move(s));
  }

  {  // Pull loads 50..140 g in 10 g increments; 5 min load, 15 min rest.
    StressSchedule s;
    s.name = "load_sweep";
    s.fiber_length_m = 12.1;
    const double load_s = 300.0, rest_s = 900.0;
    double t = 300.0;
    for (double load = 50.0; load <= 140.0; load += 10.0) {
      s.events.push_back({StressKind::pull, load, t, load_s});
      t += load_s + rest_s;
    }
    s.total_duration_s = t;
    schedules.emplace(s.name, std::move(s));
  }

  {  // 100 g held for 10..50 s in 10 s increments; 15 min rests.
    StressSchedule s;
    s.name = "duration_sweep";
    s.fiber_length_m = 12.1;
    const double rest_s = 900.0;
    double t = 300.0;
    for (double hold = 10.0; hold <= 50.0; hold += 10.0) {
      s.events.push_back({StressKind::pull, 100.0, t, hold});
      t += hold + rest_s;
    }
    s.total_duration_s = t;
    schedules.emplace(s.name, std::move(s));
  }

  {  // 15 min 100 g loads separated by rests of 1..10 min in 1 min steps.
    StressSchedule s;
    s.name = "rest_sweep";
    s.fiber_length_m = 12.1;
    const double load_s = 900.0;
    double t = 300.0;
    s.events.push_back({StressKind::pull, 100.0, t, load_s});
    t += load_s;
    for (int rest_min = 1; rest_min <= 10; ++rest_min) {
      t += 60.0 * rest_min;
      s.events.push_back({StressKind::pull, 100.0, t, load_s});
      t += load_s;
    }
    s.total_duration_s = t + 300.0;
    schedules.emplace(s.name, std::move(s));
  }

  for (auto& [name, s] : schedules) s.validate();
  return schedules;
}

}  // namespace ips::sim
