#include <doctest.h>

#include <array>
#include <random>
#include <vector>

#include "rsop/error.hpp"
#include "rsop/model.hpp"
#include "rsop/rng.hpp"

using namespace rsop;

TEST_SUITE("model") {

TEST_CASE("sensing stages") {
  CHECK(max_sensing_stages(10e-3, 10e-3, 0.1e-6, 5) == 1);
  CHECK(max_sensing_stages(10e-3, 1e-3, 0.1e-6, 5) == 5);
  CHECK(max_sensing_stages(10e-3, 1e-3, 0.1e-6, 20) == 9);
  CHECK(max_sensing_stages(10e-3, 1e-3, 0.1e-6, 1) == 1);
}

TEST_CASE("remaining time") {
  CHECK(remaining_time(1, 10e-3, 1e-3, 0.1e-6) == doctest::Approx(9e-3));
  CHECK(remaining_time(3, 10e-3, 1e-3, 0.1e-6) == doctest::Approx(6.9998e-3).epsilon(1e-12));
  for (double tau : {1e-4, 3e-4, 1e-3, 4.9e-3}) {
    const int delta = max_sensing_stages(10e-3, tau, 0.1e-6, 100);
    CHECK(remaining_time(delta, 10e-3, tau, 0.1e-6) > 0.0);
  }
}

TEST_CASE("upper bound") {
  CHECK(upper_bound_throughput(5, std::vector<double>(5, 1.0)) == 0.0);
  CHECK(upper_bound_throughput(5, std::vector<double>(5, 0.5)) == doctest::Approx(2.5));
  CHECK(upper_bound_throughput(1, std::vector<double>(100, 0.0)) == doctest::Approx(1.0));
}

TEST_CASE("sensing order") {
  std::mt19937_64 rng(3);
  const SensingOrder one = draw_sensing_order(rng, 1, 3);
  CHECK(one.channels == std::vector<int>{1, 1, 1});

  constexpr int kDraws = 1000000;
  std::array<std::array<int, 5>, 3> count{};
  for (int i = 0; i < kDraws; ++i) {
    const SensingOrder o = draw_sensing_order(rng, 5, 3);
    REQUIRE(o.channels.size() == 3);
    for (int n = 0; n < 3; ++n) {
      REQUIRE(o.channels[static_cast<std::size_t>(n)] >= 1);
      REQUIRE(o.channels[static_cast<std::size_t>(n)] <= 5);
      ++count[static_cast<std::size_t>(n)][static_cast<std::size_t>(o.channels[static_cast<std::size_t>(n)] - 1)];
    }
  }
  for (const auto& row : count) {
    for (int c : row) CHECK(std::abs(c / double(kDraws) - 0.2) < 0.002);
  }

  std::mt19937_64 a(42), b(42);
  CHECK(draw_sensing_order(a, 7, 5).channels == draw_sensing_order(b, 7, 5).channels);
}

TEST_CASE("validation") {
  NetworkConfig c = symmetric_config(3, 7, 0.5, 0.1);
  CHECK_NOTHROW(c.validate());
  c.presence_prob[2] = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = symmetric_config(3, 7, 0.5, 0.1);
  c.n_su = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = symmetric_config(3, 7, 0.5, 0.1);
  CHECK_THROWS_AS((SensingParams{20e-3, 0.5}.validate(c)), Error);
  CHECK_THROWS_AS((SensingParams{1e-3, 1.5}.validate(c)), Error);
}

TEST_CASE("rng helpers") {
  Rng rng(9);
  int hits = 0;
  for (int i = 0; i < 200000; ++i) hits += bernoulli(rng, 0.3) ? 1 : 0;
  CHECK(std::abs(hits / 200000.0 - 0.3) < 0.005);
  for (int i = 0; i < 1000; ++i) CHECK(uniform_index(rng, 7) < 7);
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

}  // TEST_SUITE
