#include "doctest.h"

#include "pathctl/error.hpp"
#include "pathctl/experiments.hpp"
#include "support.hpp"

#include <string>

using namespace pathctl;
using testsupport::error_kind;

namespace {

std::string config_message(const std::string& name, const std::string& cfg, const std::vector<std::string>& ov = {}) {
  try {
    run_experiment(name, cfg, ov);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    return e.what();
  }
  return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("registry lists every experiment with a parseable preset") {
  const std::vector<std::string> expected = {"gauge-suite",    "ito-check",       "bp-demo",
                                             "value",          "dpp",             "markov-compare",
                                             "viscosity-probe", "bshjb-check",    "comparison-demo"};
  REQUIRE(experiments().size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(experiments()[i].name == expected[i]);
    CHECK(!experiments()[i].description.empty());
    CHECK(experiments()[i].preset.front() == '{');
  }
}

TEST_CASE("config errors name the offending key") {
  CHECK(contains(config_message("dpp", ""), "config is empty"));
  CHECK(contains(config_message("dpp", "  \n"), "config is empty"));
  CHECK(contains(config_message("dpp", "{"), "not valid JSON"));
  CHECK(contains(config_message("dpp", "[1]"), "JSON object"));
  CHECK(contains(config_message("dpp", R"({"sead": 1})"), "'sead': unknown key"));
  CHECK(contains(config_message("dpp", R"({"grid": {"stepz": 3}})"), "'grid.stepz': unknown key"));
  CHECK(contains(config_message("dpp", R"({"grid": {"steps": 0}})"), "'grid.steps': must lie in"));
  CHECK(contains(config_message("dpp", R"({"grid": {"steps": 2.5}})"), "'grid.steps': expected an integer"));
  CHECK(contains(config_message("dpp", R"({"tolerance": "small"})"), "'tolerance': expected a number"));
  CHECK(contains(config_message("dpp", R"({"problem": "nope"})"), "unknown preset 'nope'"));
  CHECK(contains(config_message("dpp", R"({"problem": {"drift": ["u"], "tilt": 1}})"), "'problem.tilt': unknown key"));
  CHECK(contains(config_message("dpp", R"({"problem": {"terminal": "x1 +"}})"), "unexpected end of input"));
  CHECK(contains(config_message("dpp", R"({"t_index": 3})"), "'t_index': leaves no intermediate time"));
  CHECK(contains(config_message("value", R"({"mode": "other"})"), "'mode': expected"));
  CHECK(contains(config_message("gauge-suite", R"({"M": [2.0]})"), "'M': must lie in"));
  CHECK(contains(config_message("markov-compare", R"({"dx": [0.1]})"), "'dx': needs one entry"));
  CHECK(contains(config_message("nope", "{}"), "unknown experiment 'nope'"));
  CHECK(contains(config_message("dpp", "{}", {"grid.steps"}), "expected key=value"));
  CHECK(contains(config_message("dpp", "{}", {"grid..steps=3"}), "empty key component"));
  CHECK(contains(config_message("dpp", "{}", {"grid.stepz=3"}), "'grid.stepz': unknown key"));
}

TEST_CASE("overrides replace config values") {
  const Report a = run_experiment("dpp", R"({"paths": 1})", {"paths=2", "grid.steps=3"});
  CHECK(a.rows.size() == 2);
  const Report b = run_experiment("dpp", "{}", {"problem=lookback"});
  CHECK(b.passed);
  // Non-JSON override values are taken as strings.
  const Report c = run_experiment("value", "{}", {"mode=oracle", "paths=1"});
  CHECK(c.rows.size() == 1);
}

TEST_CASE("reports are deterministic and formatted with 17 digits") {
  const std::string cfg = R"({"pairs": 20, "m": [2], "M": [3.0]})";
  const Report a = run_experiment("gauge-suite", cfg);
  const Report b = run_experiment("gauge-suite", cfg);
  CHECK(a.csv() == b.csv());
  CHECK(a.summary_text() == b.summary_text());
  CHECK(a.csv().rfind("pair_id,m,M,s0_lower_slack,s0_upper_slack,subadd_gap\n", 0) == 0);
  CHECK(a.rows.size() == 20);
  CHECK(run_experiment("gauge-suite", cfg, {"seed=2"}).csv() != a.csv());
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(3.0) == "3");
  CHECK(a.csv().find('\r') == std::string::npos);
}

TEST_CASE("inline problems") {
  const std::string cfg = R"({"problem": {"controls": [0.0, 1.0], "drift": "u", "diffusion": [["1"]],
                                          "generator": "-0.5*u", "terminal": "x1"}, "paths": 1})";
  const Report r = run_experiment("value", cfg);
  REQUIRE(r.rows.size() == 1);
  // Drift u earns u per unit time at cost u / 2, so u = 1 wins: V = x + 0.5 T.
  CHECK(r.rows[0][5] == "0");
  CHECK(contains(config_message("value", R"({"problem": {"preset": "lq", "random_seed": 2}})"), "exclusive"));
}

TEST_CASE("contract violations surface as core errors") {
  CHECK(error_kind([] { run_experiment("markov-compare", R"({"problem": "lookback"})"); }) == ErrorKind::Contract);
  CHECK(error_kind([] {
          run_experiment("value", R"({"leaf_budget": 1, "paths": 1})");
        }) == ErrorKind::CapExceeded);
}

TEST_CASE("passing runs of the small presets") {
  CHECK(run_experiment("dpp", "{}").passed);
  CHECK(run_experiment("bshjb-check", R"({"instances": 3})").passed);
  CHECK(run_experiment("bp-demo", R"({"objectives": 5, "candidates": 40})").passed);
  CHECK(run_experiment("viscosity-probe", R"({"paths": 5, "cloud": {"size": 50}})").passed);
  const Report ito = run_experiment("ito-check", R"({"paths": 200, "levels": 2})");
  CHECK(ito.rows.size() == 4);
}
