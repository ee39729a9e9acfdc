#pragma once

// Energy-detector sensing statistics under the Gaussian approximation of the
// accumulated energy. Thresholds are expressed normalized by the noise power.

#include <variant>

#include "rsop/model.hpp"

namespace rsop {

/// How the SNR seen at sensing stage n >= 3 is modelled.
enum class SnrMode {
  kStage2Approx,   // stage n >= 3 reuses the stage-2 SNR
  kExactPerStage,  // accumulate the expected SU power of every earlier stage
};

struct DetectorConfig {
  double threshold_norm = 1.0;  // lambda / sigma_z^2
  SnrMode snr_mode = SnrMode::kStage2Approx;
};

/// Sensing error probabilities pinned directly, bypassing the detector.
struct FixedSensing {
  double p_fa = 0.0;
  double p_d = 1.0;
};

using SensingModel = std::variant<DetectorConfig, FixedSensing>;

/// Standard normal upper tail.
double q_function(double x);
double q_inverse(double prob);

double false_alarm_prob(double lambda_norm, double tau, double sampling_freq);
double misdetection_prob(double lambda_norm, double tau, double sampling_freq, double snr);

/// Threshold that makes misdetection_prob(...) == 1 - p_d_target.
double threshold_for_detection(double snr, double tau, double sampling_freq, double p_d_target);

/// Shortest sensing time meeting both P_fa <= p_fa_max and P_d >= p_d_min at the given SNR.
double min_sensing_time(double snr, double sampling_freq, double p_fa_max, double p_d_min);

/// Mean-field SNR of channel m (1-based) at stage n, stage-2 formula reused for n >= 3.
/// q1 is the stage-1 probability that a sensing SU moves on from channel m.
double stage_snr(const NetworkConfig& config, double p, int m, int n, double q1);

/// Threshold for a scenario: fixed once at the minimum sensing time of the weakest
/// channel so that stage-1 detection equals p_d_min there (and P_fa equals p_fa_max).
DetectorConfig calibrate_detector(const NetworkConfig& config, const QosConstraints& qos,
                                  SnrMode mode = SnrMode::kStage2Approx);

/// Weakest stage-1 SNR over the channels.
double min_pu_snr(const NetworkConfig& config);

}  // namespace rsop
