#include <doctest.h>

#include <cmath>

#include "../oracles.hpp"
#include "rsop/detector.hpp"
#include "rsop/error.hpp"
#include "rsop/model.hpp"

using namespace rsop;

TEST_SUITE("detector") {

TEST_CASE("q function values") {
  CHECK(q_function(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(q_function(1.2816) - 0.1) < 1e-4);
  CHECK(std::abs(q_function(2.0) - 0.02275) < 1e-5);
  for (double x = -4.0; x <= 4.0; x += 0.37) {
    CHECK(q_function(x) == doctest::Approx(oracle::q_func(x)).epsilon(1e-12));
    CHECK(q_inverse(q_function(x)) == doctest::Approx(x).epsilon(1e-9));
  }
}

TEST_CASE("false alarm") {
  CHECK(false_alarm_prob(1.0, 1e-3, 6.857e6) == doctest::Approx(0.5));
  CHECK(false_alarm_prob(1.0, 3e-4, 1e5) == doctest::Approx(0.5));
  // tau * fs = 100
  CHECK(std::abs(false_alarm_prob(1.2, 1e-4, 1e6) - 0.02275) < 1e-5);
  CHECK(false_alarm_prob(1.2, 2e-4, 1e6) < false_alarm_prob(1.2, 1e-4, 1e6));
}

TEST_CASE("misdetection") {
  CHECK(misdetection_prob(1.3, 1e-3, 1e6, 0.3) == doctest::Approx(0.5));
  CHECK(misdetection_prob(1.05, 1e-4, 1e6, 0.0) ==
        doctest::Approx(1.0 - false_alarm_prob(1.05, 1e-4, 1e6)).epsilon(1e-12));
  // tau * fs = 400
  CHECK(std::abs(misdetection_prob(1.1, 4e-4, 1e6, 0.2) - 0.0455) < 1e-3);
  const double oracle = 1.0 - oracle::q_func(-0.1 * 20.0 / std::sqrt(1.4));
  CHECK(misdetection_prob(1.1, 4e-4, 1e6, 0.2) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("threshold for a target detection probability") {
  CHECK(threshold_for_detection(0.2, 1e-3, 1e6, 0.5) == doctest::Approx(1.2));
  const double lam = threshold_for_detection(0.1, 685.7 / 6.857e6, 6.857e6, 0.9);
  CHECK(std::abs(lam - (1.1 - 1.2816 * std::sqrt(1.2 / 685.7))) < 1e-3);
  CHECK(std::abs(lam - 1.0464) < 1e-3);
  for (double snr : {0.01, 0.1, 0.5, 2.0}) {
    for (double tau : {1e-5, 1e-4, 1e-3}) {
      const double l = threshold_for_detection(snr, tau, 6.857e6, 0.9);
      CHECK(misdetection_prob(l, tau, 6.857e6, snr) == doctest::Approx(0.1).epsilon(1e-9));
    }
  }
}

TEST_CASE("minimum sensing time") {
  CHECK(min_sensing_time(0.1, 6.857e6, 0.5, 0.5) == doctest::Approx(0.0));
  CHECK(std::abs(min_sensing_time(0.1, 6.857e6, 0.1, 0.9) - 1.052e-4) < 1e-7);
  CHECK(min_sensing_time(0.1, 2 * 6.857e6, 0.1, 0.9) ==
        doctest::Approx(0.5 * min_sensing_time(0.1, 6.857e6, 0.1, 0.9)).epsilon(1e-12));
  // At tau_min with the matching threshold both limits are met with equality.
  const double tau = min_sensing_time(0.1, 6.857e6, 0.1, 0.9);
  const double lam = threshold_for_detection(0.1, tau, 6.857e6, 0.9);
  CHECK(false_alarm_prob(lam, tau, 6.857e6) == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("stage snr") {
  NetworkConfig c = symmetric_config(20, 10, 0.5, 0.1);
  CHECK(stage_snr(c, 0.8, 1, 1, 0.3) == doctest::Approx(0.1));
  c.su_power = 0.0;
  CHECK(stage_snr(c, 0.8, 1, 2, 0.3) == doctest::Approx(0.5 * 0.1));
  c.su_power = 0.1;
  CHECK(stage_snr(c, 0.0, 1, 2, 0.3) == doctest::Approx(0.5 * 0.1));
  // sigma_p^2 = sigma_s^2, q1 = 0.3: (0.05 + 20 * 0.8 / 10 * 0.7 * 0.1) = 0.162
  CHECK(stage_snr(c, 0.8, 2, 2, 0.3) == doctest::Approx(0.162));
  CHECK(stage_snr(c, 0.8, 2, 5, 0.3) == doctest::Approx(0.162));
}

TEST_CASE("calibration") {
  const NetworkConfig c = symmetric_config(3, 7, 0.5, 0.1);
  const QosConstraints qos;
  const DetectorConfig det = calibrate_detector(c, qos);
  CHECK(det.threshold_norm > 1.0);
  const double tau = min_sensing_time(0.1, c.sampling_freq, qos.p_fa_max, qos.p_d_min);
  CHECK(misdetection_prob(det.threshold_norm, tau, c.sampling_freq, 0.1) ==
        doctest::Approx(0.1).epsilon(1e-6));
  CHECK(false_alarm_prob(det.threshold_norm, tau, c.sampling_freq) ==
        doctest::Approx(0.1).epsilon(1e-6));
  CHECK(min_pu_snr(c) == doctest::Approx(0.1));
}

}  // TEST_SUITE
