#include "ips/channel_model.hpp"

#include <algorithm>
#include <cmath>

namespace ips::channel {

OpticalPower OpticalPower::from_dbm(double dbm) {
  if (!std::isfinite(dbm)) {
    throw std::invalid_argument("optical power must be finite, got " + std::to_string(dbm));
  }
  return OpticalPower(dbm, false);
}

double OpticalPower::dbm() const {
  if (lost_) throw signal_lost_error();
  return dbm_;
}

std::vector<BendPoint> ChannelParams::default_bend_table() {
  return {
      {3.0, 1.0, 1.0, false},
      {2.0, 2.0, 1.0, false},
      {1.0, 6.0, 100.0, false},
      {0.5, 40.0, 100.0, true},
  };
}

void ChannelParams::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("channel params: " + msg); };
  if (!std::isfinite(baseline_oss_dbm) || !std::isfinite(noise_floor_dbm)) fail("power constants must be finite");
  if (oss_noise_std_db < 0) fail("oss_noise_std must be >= 0");
  if (pre_fec_floor_ber < 0 || pre_fec_floor_ber > 1) fail("pre_fec_floor_ber must be in [0, 1]");
  if (bit_rate_bps <= 0) fail("bit_rate must be > 0");
  if (attenuation_slope_db_per_g < 0) fail("attenuation_slope must be >= 0");
  if (attenuation_offset_load_g < 0) fail("attenuation_offset_load must be >= 0");
  if (pull_base_drop_db < 0) fail("pull_base_drop must be >= 0");
  if (recovery_time_constant_s <= 0) fail("recovery_time_constant must be > 0");
  if (attack_time_constant_s <= 0) fail("attack_time_constant must be > 0");
  if (ramp_seconds < 0) fail("ramp_seconds must be >= 0");
  if (bend_table.empty()) fail("bend_table must not be empty");
  bool loss_seen = false;
  for (std::size_t i = 0; i < bend_table.size(); ++i) {
    const BendPoint& row = bend_table[i];
    if (row.radius_cm <= 0) fail("bend_table radius must be > 0");
    if (row.oss_drop_db < 0) fail("bend_table oss_drop must be >= 0");
    if (row.ber_multiplier < 1) fail("bend_table ber_multiplier must be >= 1");
    if (i > 0) {
      if (row.radius_cm >= bend_table[i - 1].radius_cm) fail("bend_table radii must be strictly decreasing");
      if (row.oss_drop_db < bend_table[i - 1].oss_drop_db)
        fail("bend_table oss_drop must be nondecreasing as radius decreases");
    }
    if (loss_seen && !row.loss_of_signal) fail("loss_of_signal rows must be the smallest radii");
    loss_seen = loss_seen || row.loss_of_signal;
  }
}

double q_function(double x) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("q_function: argument must be finite");
  }
  return 0.5 * std::erfc(x / std::sqrt(2.0));
}

BitErrorRate qpsk_ber(SnrLinear snr) {
  if (!(snr.value >= 0)) {
    throw std::invalid_argument("qpsk_ber: SNR must be >= 0");
  }
  return BitErrorRate{q_function(std::sqrt(2.0 * snr.value))};
}

SnrLinear snr_from_oss(OpticalPower oss, OpticalPower noise_floor) {
  // dbm() raises signal_lost_error on a lost input; the caller maps that to
  // "no BER measured" rather than a numeric value.
  const double gap_db = oss.dbm() - noise_floor.dbm();
  return SnrLinear{std::pow(10.0, gap_db / 10.0)};
}

double pull_attenuation_db(double load_g, const ChannelParams& params) {
  if (!(load_g >= 0)) {
    throw std::invalid_argument("pull_attenuation: load must be >= 0");
  }
  if (load_g < params.attenuation_offset_load_g) return 0.0;
  return params.pull_base_drop_db +
         params.attenuation_slope_db_per_g * (load_g - params.attenuation_offset_load_g);
}

BendResponse bend_response(double radius_cm, const ChannelParams& params) {
  if (!(radius_cm > 0)) {
    throw std::invalid_argument("bend_response: radius must be > 0");
  }
  const auto& table = params.bend_table;  // sorted by strictly decreasing radius
  if (radius_cm >= table.front().radius_cm) {
    const BendPoint& row = table.front();
    return {row.oss_drop_db, row.ber_multiplier, row.loss_of_signal};
  }
  if (radius_cm <= table.back().radius_cm) {
    const BendPoint& row = table.back();
    return {row.oss_drop_db, row.ber_multiplier, row.loss_of_signal};
  }
  // Bracketing rows: hi has the smallest radius >= query, lo the next row.
  std::size_t i = 0;
  while (i + 1 < table.size() && table[i + 1].radius_cm >= radius_cm) ++i;
  const BendPoint& hi = table[i];
  const BendPoint& lo = table[i + 1];
  if (radius_cm == hi.radius_cm) return {hi.oss_drop_db, hi.ber_multiplier, hi.loss_of_signal};
  const double frac = (hi.radius_cm - radius_cm) / (hi.radius_cm - lo.radius_cm);
  const double drop = hi.oss_drop_db + frac * (lo.oss_drop_db - hi.oss_drop_db);
  return {drop, hi.ber_multiplier, hi.loss_of_signal};
}

}  // namespace ips::channel
