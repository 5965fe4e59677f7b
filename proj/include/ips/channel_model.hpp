#pragma once

// Pure channel math: received optical power -> SNR -> bit error rate under
// an AWGN / QPSK model, plus the attenuation responses of a stressed fiber
// (pull load in grams, bend radius in cm).

#include <stdexcept>
#include <string>
#include <vector>

namespace ips::channel {

// Thrown when a computation needs a power value but the signal is lost.
class signal_lost_error : public std::runtime_error {
 public:
  signal_lost_error() : std::runtime_error("signal lost: no optical power value") {}
};

// Operating bounds for configured power constants, enforced at config parse.
inline constexpr double kMinConfigOssDbm = -60.0;
inline constexpr double kMaxConfigOssDbm = +10.0;

/**
 * Received optical power in dBm, or the explicit loss-of-signal state.
 * Loss of signal is a distinct state, never encoded as NaN or a magic dBm.
 */
class OpticalPower {
 public:
  static OpticalPower from_dbm(double dbm);  // rejects non-finite values
  static OpticalPower signal_lost() noexcept { return OpticalPower(0.0, true); }

  bool lost() const noexcept { return lost_; }
  double dbm() const;  // throws signal_lost_error when lost

 private:
  OpticalPower(double dbm, bool lost) : dbm_(dbm), lost_(lost) {}
  double dbm_;
  bool lost_;
};

// Linear (dimensionless) signal-to-noise power ratio, >= 0.
struct SnrLinear {
  double value = 0.0;
};

// Probability of bit error. The AWGN/QPSK model emits values in [0, 0.5];
// measured values from hardware may span [0, 1].
struct BitErrorRate {
  double value = 0.0;
};

// One row of the bend response table.
struct BendPoint {
  double radius_cm;
  double oss_drop_db;
  double ber_multiplier;
  bool loss_of_signal;
};

// Bend response for a queried radius.
struct BendResponse {
  double oss_drop_db;
  double ber_multiplier;
  bool loss_of_signal;
};

/**
 * Static calibration constants of one simulated fiber link.
 *
 * Defaults are chosen so that the pull sweep 50..140 g spans an OSS drop of
 * 0.5..3.0 dB, the pre-FEC error floor masks AWGN error-rate changes for
 * drops up to ~6 dB, and a 1 cm bend multiplies the observed error rate by
 * about 100. Everything is overridable from the experiment config.
 */
struct ChannelParams {
  double baseline_oss_dbm = -7.0;
  double noise_floor_dbm = -25.0;
  double oss_noise_std_db = 0.1;

  // Observed quiescent error rate: FEC-era floor plus counting noise.
  double pre_fec_floor_ber = 1e-6;
  double bit_rate_bps = 100e9;

  // Pull response: 0 below the offset load, then base + slope * (load - offset).
  double attenuation_slope_db_per_g = 2.5 / 90.0;
  double attenuation_offset_load_g = 50.0;
  double pull_base_drop_db = 0.5;

  // Attenuation dynamics (seconds). Attack: first-order build-up while the
  // load is held; recovery: exponential decay once released; ramp: the
  // mechanical on-ramp of the stress rig.
  double recovery_time_constant_s = 180.0;
  double attack_time_constant_s = 120.0;
  double ramp_seconds = 2.0;

  std::vector<BendPoint> bend_table = default_bend_table();

  static std::vector<BendPoint> default_bend_table();

  // Throws std::invalid_argument with a description of the first violation.
  void validate() const;
};

/**
 * Standard normal tail probability Q(x) = P(Z > x), computed via the
 * complementary error function: Q(x) = erfc(x / sqrt(2)) / 2.
 */
double q_function(double x);

// BER of QPSK over AWGN: Q(sqrt(2 * snr)). Strictly decreasing in snr.
BitErrorRate qpsk_ber(SnrLinear snr);

// Linear SNR from the dB gap between received power and the noise floor.
SnrLinear snr_from_oss(OpticalPower oss, OpticalPower noise_floor);

// OSS drop in dB for a static pull load. Zero below the offset load,
// linear above it.
double pull_attenuation_db(double load_g, const ChannelParams& params);

/**
 * Bend response lookup. oss_drop is linearly interpolated between table
 * radii (clamped at the ends); ber_multiplier and the loss flag come from
 * the table row with the smallest radius >= the query.
 */
BendResponse bend_response(double radius_cm, const ChannelParams& params);

}  // namespace ips::channel
