#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "heislab/scenario.hpp"
#include "json.hpp"

using namespace heislab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("heislab-test-" + name);
  fs::remove_all(p);
  return p;
}

const char* kSmall = R"({
  "schema_version": 1,
  "id": "small",
  "seed": 3,
  "density": {"bumps": [{"center": [0.2, 0, 0], "width": 0.5, "mass": 0.3}]},
  "families": {"f": {"policy": "random_in_region", "count": 4, "r_min": 0.2, "r_max": 0.8}},
  "pairs": {"p": {"count": 2, "sep_min": 0.2, "sep_max": 1}},
  "experiments": [
    {"id": "ap", "type": "check-ap", "family": "f", "p": 2},
    {"id": "field", "type": "eval-field", "random": 3},
    {"id": "scan", "type": "check-strong-ainfty", "pairs": "p"}
  ]
})";

bool has_error(const ValidationResult& v, const std::string& needle, int line = -1) {
  for (const auto& d : v.diagnostics) {
    if (d.severity == Diagnostic::Severity::error && d.message.find(needle) != std::string::npos &&
        (line < 0 || d.line == line)) {
      return true;
    }
  }
  return false;
}

std::string with(const std::string& base, const std::string& from, const std::string& to) {
  std::string s = base;
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

TEST_CASE("shipped scenarios validate") {
  for (const auto& e : fs::directory_iterator(HEISLAB_SCENARIO_DIR)) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    const ValidationResult v = validate_config_file(e.path());
    CHECK(v.ok());
  }
  CHECK(validate_config_text(kSmall).ok());
}

TEST_CASE("schema errors carry line numbers") {
  CHECK(has_error(validate_config_text("{\n  \"id\": 1,\n"), "not valid JSON"));
  CHECK(has_error(validate_config_text(with(kSmall, "\"schema_version\": 1", "\"schema_version\": 7")),
                  "unsupported schema version", 2));
  CHECK(has_error(validate_config_text(with(kSmall, "\"type\": \"eval-field\"", "\"type\": \"magic\"")),
                  "unknown experiment type", 10));
  CHECK(has_error(validate_config_text(with(kSmall, "\"family\": \"f\"", "\"family\": \"g\"")),
                  "unresolved family", 9));
  CHECK(has_error(validate_config_text(with(kSmall, "\"id\": \"field\"", "\"id\": \"ap\"")), "duplicate"));
  CHECK(has_error(validate_config_text(with(kSmall, "\"width\": 0.5", "\"width\": -0.5")), "width"));
  CHECK(has_error(validate_config_text(with(kSmall, "\"policy\": \"random_in_region\"", "\"policy\": \"spiral\"")),
                  "spiral"));
}

TEST_CASE("unknown fields are warnings") {
  const ValidationResult v = validate_config_text(with(kSmall, "\"seed\": 3,", "\"seed\": 3, \"colour\": 1,"));
  CHECK(v.ok());
  bool warned = false;
  for (const auto& d : v.diagnostics) warned = warned || (d.severity == Diagnostic::Severity::warning && d.line == 4);
  CHECK(warned);
}

TEST_CASE("hypothesis checks") {
  const std::string strong = with(kSmall, "\"seed\": 3,", "\"seed\": 3, \"a1_admissible\": true,");
  CHECK(validate_config_text(strong).ok());
  CHECK(has_error(validate_config_text(with(strong, "\"mass\": 0.3", "\"mass\": 1.2")), "alpha", 4));
  const auto exp = [&](const std::string& e) {
    return validate_config_text(with(kSmall, "{\"id\": \"ap\", \"type\": \"check-ap\", \"family\": \"f\", \"p\": 2}", e));
  };
  CHECK(has_error(exp(R"({"id": "s", "type": "sobolev", "p": 4})"), "p < 4"));
  CHECK(has_error(exp(R"({"id": "c", "type": "cartan", "epsilon": 0.1})"), "1/20"));
  CHECK(has_error(exp(R"({"id": "w", "type": "sw-probe", "family": "f", "s": 1.5})"), "(0, 1)"));
  CHECK(has_error(exp(R"({"id": "b", "type": "balance", "family": "f", "p": 2})"), "nested_pairs"));
  CHECK(has_error(exp(R"({"id": "a", "type": "check-ap", "family": "f", "weight": "omega_minus_aux"})"), "epsilon"));
  CHECK(has_error(exp(R"({"id": "a", "type": "check-ap", "family": "f", "weight": "sideways"})"), "unknown weight"));
  CHECK(has_error(exp(R"({"id": "a", "type": "check-ap", "family": "f", "p": 1})"), "p > 1"));
  CHECK(exp(R"({"id": "a", "type": "check-ap", "family": "f", "weight": "omega_minus_aux", "aux_p": 3})").ok());
}

TEST_CASE("runs are byte-identical and seeds matter") {
  const fs::path a = scratch("a"), b = scratch("b"), c = scratch("c");
  RunOptions oa, ob, oc;
  oa.out_dir = a;
  ob.out_dir = b;
  ob.workers = 3;
  oc.out_dir = c;
  oc.seed = 99;
  const RunOutcome ra = run_config_text(kSmall, oa), rb = run_config_text(kSmall, ob), rc = run_config_text(kSmall, oc);
  CHECK(ra.exit_code == kExitOk);
  CHECK(ra.scenario_hash == rb.scenario_hash);
  CHECK(ra.scenario_hash != rc.scenario_hash);
  for (const char* f : {"summary.json", "ap.csv", "field.csv", "scan.csv"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / "small" / f));
    CHECK(slurp(a / "small" / f) == slurp(b / "small" / f));
  }
  CHECK(slurp(a / "small" / "field.csv") != slurp(c / "small" / "field.csv"));
  const auto summary = nlohmann::json::parse(slurp(a / "small" / "summary.json"));
  CHECK(summary["schema_version"] == 1);
  CHECK(summary["passed"] == true);
  CHECK(summary["experiments"].size() == 3);
  CHECK(slurp(a / "small" / "ap.csv").rfind("scenario_id,estimator,p_or_r,family_id,value,std_error_proxy\n", 0) == 0);
}

TEST_CASE("exit codes") {
  RunOptions o;
  o.out_dir = scratch("codes");
  CHECK(run_config_text("{", o).exit_code == kExitConfig);
  const std::string on_atom = R"({"schema_version": 1, "id": "atom",
    "density": {"atoms": [{"location": [1, 0, 0], "mass": 0.1}]},
    "experiments": [{"id": "e", "type": "eval-field", "points": [[1, 0, 0]]}]})";
  const RunOutcome r = run_config_text(on_atom, o);
  CHECK(r.exit_code == kExitNumerical);
  REQUIRE(r.experiments.size() == 1);
  CHECK(r.experiments[0].status == "error");
  CHECK(r.experiments[0].error.find(r.scenario_hash) != std::string::npos);
  const std::string coarse = R"({"schema_version": 1, "id": "coarse",
    "optimizer": {"segments": 8, "restarts": 1, "max_iterations": 2, "penalty_schedule": [10]},
    "experiments": [{"id": "cc", "type": "cc-calibrate"}]})";
  const RunOutcome rc = run_config_text(coarse, o);
  CHECK(rc.exit_code == kExitAssertion);
  CHECK(fs::exists(o.out_dir / "coarse" / "summary.json"));
  CHECK(run_config_file(o.out_dir / "missing.json", o).exit_code == kExitConfig);
}
