#include "rsop/detector.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>

#include "rsop/error.hpp"

namespace rsop {

namespace {

double sample_count(double tau, double sampling_freq) {
  const double w = tau * sampling_freq;
  if (!(w >= 1.0)) throw Error(ErrorCode::kTooFewSamples, "tau * f_s must be >= 1");
  return w;
}

}  // namespace

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double q_inverse(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw Error(ErrorCode::kInvalidConfig, "q_inverse needs (0, 1)");
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * prob);
}

double false_alarm_prob(double lambda_norm, double tau, double sampling_freq) {
  const double w = sample_count(tau, sampling_freq);
  return q_function((lambda_norm - 1.0) * std::sqrt(w));
}

double misdetection_prob(double lambda_norm, double tau, double sampling_freq, double snr) {
  if (snr < 0.0) throw Error(ErrorCode::kInvalidConfig, "snr must be >= 0");
  const double w = sample_count(tau, sampling_freq);
  // 1 - Q(x) == Q(-x), evaluated directly to keep the small tail accurate.
  return q_function(-(lambda_norm - 1.0 - snr) * std::sqrt(w / (1.0 + 2.0 * snr)));
}

double threshold_for_detection(double snr, double tau, double sampling_freq, double p_d_target) {
  const double w = tau * sampling_freq;
  if (!(w > 0.0)) throw Error(ErrorCode::kTooFewSamples, "tau * f_s must be > 0");
  return 1.0 + snr + q_inverse(p_d_target) * std::sqrt((1.0 + 2.0 * snr) / w);
}

double min_sensing_time(double snr, double sampling_freq, double p_fa_max, double p_d_min) {
  if (!(snr > 0.0)) throw Error(ErrorCode::kDegenerateSnr, "minimum sensing time unbounded at zero SNR");
  const double gap = q_inverse(p_fa_max) - q_inverse(p_d_min) * std::sqrt(1.0 + 2.0 * snr);
  return gap * gap / (snr * snr * sampling_freq);
}

double stage_snr(const NetworkConfig& config, double p, int m, int n, double q1) {
  if (n < 1) throw Error(ErrorCode::kStageOutOfRange, "stage must be >= 1");
  const int idx = m - 1;
  if (n == 1) return config.pu_snr(idx);
  const double stage1_transmitters =
      config.n_su * p / config.n_pu * (1.0 - q1);
  return (config.presence(idx) * config.pu_power[static_cast<std::size_t>(idx)] +
          stage1_transmitters * config.su_power) /
         config.noise_power;
}

double min_pu_snr(const NetworkConfig& config) {
  double snr = config.pu_snr(0);
  for (int m = 1; m < config.n_pu; ++m) snr = std::min(snr, config.pu_snr(m));
  return snr;
}

DetectorConfig calibrate_detector(const NetworkConfig& config, const QosConstraints& qos,
                                  SnrMode mode) {
  const double snr = min_pu_snr(config);
  const double tau = min_sensing_time(snr, config.sampling_freq, qos.p_fa_max, qos.p_d_min);
  // Degenerate limits put tau below one sample; calibrate on a single sample instead.
  const double tau_cal = std::max(tau, 1.0 / config.sampling_freq);
  return DetectorConfig{threshold_for_detection(snr, tau_cal, config.sampling_freq, qos.p_d_min),
                        mode};
}

}  // namespace rsop
