#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "rsop/error.hpp"
#include "rsop/output.hpp"
#include "rsop/runner.hpp"
#include "rsop/scenario.hpp"

using namespace rsop;
namespace fs = std::filesystem;

namespace {

std::string scenario(const std::string& name) {
  return std::string(RSOP_SCENARIO_DIR) + "/" + name + ".yaml";
}

fs::path scratch(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("rsop_unit_" + tag);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string parse_error(const std::string& text) {
  try {
    parse_scenario(text, "test.yaml");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfigParse);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("quantities") {
  CHECK(parse_quantity("10ms") == doctest::Approx(0.01));
  CHECK(parse_quantity("0.1us") == doctest::Approx(1e-7));
  CHECK(parse_quantity("0.1µs") == doctest::Approx(1e-7));
  CHECK(parse_quantity("250ns") == doctest::Approx(2.5e-7));
  CHECK(parse_quantity("6.857MHz") == doctest::Approx(6.857e6));
  CHECK(parse_quantity("2 GHz") == doctest::Approx(2e9));
  CHECK(parse_quantity("0.5") == 0.5);
  CHECK_THROWS_AS(parse_quantity("ten"), Error);
  CHECK_THROWS_AS(parse_quantity("5 parsecs"), Error);
}

TEST_CASE("parse errors carry line and field") {
  const std::string bad_value = "name: x\nnetwork:\n  n_su: 3\n  n_pu: lots\n";
  const std::string msg = parse_error(bad_value);
  CHECK(msg.find("test.yaml:4") != std::string::npos);
  CHECK(msg.find("network.n_pu") != std::string::npos);

  const std::string unknown = parse_error("name: x\nnetwork:\n  n_su: 3\n  n_sus: 4\n");
  CHECK(unknown.find("unknown key") != std::string::npos);
  CHECK(unknown.find("network.n_sus") != std::string::npos);

  CHECK(parse_error("name: x\nbogus: 1\n").find("bogus") != std::string::npos);
  CHECK(parse_error("network: [1, 2\n") != "");
  CHECK(parse_error("network:\n  presence_prob: 1.5\n") != "");
}

TEST_CASE("slot-relative times") {
  const Scenario s = parse_scenario("network:\n  slot_duration: 20ms\nsensing:\n  tau: 0.1T\n  p: 0.8\n");
  CHECK(s.sensing.tau == doctest::Approx(2e-3));
  CHECK(s.network.slot_duration == doctest::Approx(0.02));
}

TEST_CASE("bundled scenarios load") {
  for (const char* name : {"table5_3x7", "table5_5x7", "table5_7x3", "table5_7x5", "table6_3x7",
                           "fig4_access_probability", "fig5_sensing_time", "fig6_false_alarm",
                           "fig7_primary_channels", "table2_detection", "fig9_subgradient_field",
                           "upper_bound"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_scenario(scenario(name)));
  }
  const Scenario fig5 = load_scenario(scenario("fig5_sensing_time"));
  CHECK(fig5.network.n_su == 3);
  CHECK(fig5.network.n_pu == 7);
  const Scenario t2 = load_scenario(scenario("table2_detection"));
  CHECK(t2.network.n_su == 20);
  CHECK(t2.network.n_pu == 10);
  CHECK(t2.sensing.tau == doctest::Approx(0.1 * t2.network.slot_duration));
  CHECK(t2.sensing.p == doctest::Approx(0.8));
  CHECK(t2.network.su_power == t2.network.pu_power[0]);
  const Scenario fig4 = load_scenario(scenario("fig4_access_probability"));
  CHECK(fig4.network.n_su == 20);
  CHECK(fig4.network.n_pu == 5);
}

TEST_CASE("sweep fields") {
  const NetworkConfig base = symmetric_config(3, 7, 0.4, 0.2);
  const NetworkConfig wide = with_field(base, "n_pu", 12);
  CHECK(wide.n_pu == 12);
  CHECK(wide.presence_prob.size() == 12);
  CHECK(wide.pu_power[11] == 0.2);
  CHECK(with_field(base, "n_su", 9).n_su == 9);
  CHECK_THROWS_AS(with_field(base, "colour", 1), Error);
}

TEST_CASE("csv tables") {
  CsvTable t("upper_bound");
  t.add({std::int64_t{5}, std::int64_t{5}, 2.5, 2.5});
  CHECK_NOTHROW(t.validate());
  const std::string text = t.render({0xabcULL, 7});
  CHECK(text.rfind("# rsop 0.1.0 scenario_hash=0000000000000abc seed=7\n", 0) == 0);
  CHECK(text.find("n_su,n_pu,free_channels,upper_bound\n5,5,2.5,2.5\n") != std::string::npos);

  CsvTable narrow("upper_bound");
  narrow.add({1.0, 2.0});
  CHECK_THROWS_AS(narrow.validate(), Error);
  CsvTable nan("upper_bound");
  nan.add({std::int64_t{1}, std::int64_t{1}, std::numeric_limits<double>::quiet_NaN(), 1.0});
  CHECK_THROWS_AS(nan.validate(), Error);
  CsvTable comma("upper_bound");
  comma.add({std::string("a,b"), std::int64_t{1}, 1.0, 1.0});
  CHECK_THROWS_AS(comma.validate(), Error);
  CHECK_THROWS_AS(CsvTable("no_such_table"), Error);
  CHECK(format_cell(-0.0) == "0");
  for (const std::string& name : csv_schema_names()) CHECK_FALSE(csv_schema(name).empty());
}

TEST_CASE("upper-bound experiment") {
  ExperimentSpec spec;
  spec.scenario_path = scenario("upper_bound");
  spec.out_dir = scratch("ub");
  const ExperimentResult r = run_experiment(spec);
  CHECK(r.kind == "upper-bound");
  const std::string csv = slurp(spec.out_dir / "upper_bound.csv");
  CHECK(csv.find("\n5,5,2.5,2.5\n") != std::string::npos);
  CHECK(fs::exists(spec.out_dir / "manifest.json"));
}

TEST_CASE("reruns are byte identical") {
  for (const char* kind : {"simulate", "analyze"}) {
    CAPTURE(kind);
    ExperimentSpec spec;
    spec.kind = kind;
    spec.scenario_path = scenario("table6_3x7");
    spec.slots = 2000;
    spec.reps = 2;
    spec.out_dir = scratch(std::string("a_") + kind);
    const ExperimentResult first = run_experiment(spec);
    spec.out_dir = scratch(std::string("b_") + kind);
    spec.parallelism = 2;
    const ExperimentResult second = run_experiment(spec);
    REQUIRE(first.files.size() == second.files.size());
    for (std::size_t i = 0; i < first.files.size(); ++i) {
      CHECK(first.files[i].filename() == second.files[i].filename());
      CHECK(slurp(first.files[i]) == slurp(second.files[i]));
    }
  }
}

TEST_CASE("unwritable output") {
  const fs::path file = scratch("blocker");
  { std::ofstream(file) << "x"; }
  ExperimentSpec spec;
  spec.scenario_path = scenario("upper_bound");
  spec.out_dir = file / "inside";
  try {
    run_experiment(spec);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnwritableOutput);
  }
  fs::remove(file);
}

TEST_CASE("overrides") {
  Scenario s = load_scenario(scenario("table5_3x7"));
  ExperimentSpec spec;
  spec.seed = 99;
  spec.reps = 3;
  spec.grid = 10;
  spec.protocol = Protocol::kConventional;
  const Scenario o = apply_overrides(s, spec);
  CHECK(o.sim.seed == 99);
  CHECK(o.sim.reps == 3);
  CHECK(o.grid.tau_steps == 10);
  CHECK(o.sim.protocol == Protocol::kConventional);
}

}  // TEST_SUITE
