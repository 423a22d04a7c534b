#include "heislab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <limits>
#include <regex>
#include <set>
#include <sstream>

#include "heislab/analysis.hpp"
#include "heislab/error.hpp"
#include "heislab/parallel.hpp"
#include "heislab/paths.hpp"
#include "heislab/potential.hpp"
#include "heislab/random.hpp"
#include "heislab/weights.hpp"
#include "json.hpp"
#include "report.hpp"

namespace heislab {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
using detail::fmt_int;
using detail::fmt_num;

bool ValidationResult::ok() const {
  return std::none_of(diagnostics.begin(), diagnostics.end(),
                      [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::error; });
}

namespace {

struct SchemaError : std::runtime_error {
  SchemaError(const std::string& m, int l) : std::runtime_error(m), line(l) {}
  int line;
};

// Best-effort source line of a quoted key or value.
class LineIndex {
 public:
  explicit LineIndex(const std::string& text) : text_(text) {}
  int line_of(const std::string& token, std::size_t from = 0) const {
    auto pos = text_.find("\"" + token + "\"", from);
    if (pos == std::string::npos && from > 0) pos = text_.find("\"" + token + "\"");
    if (pos == std::string::npos) return 0;
    return line_at(pos);
  }
  // Position of the object whose "id" is the given value, or 0.
  std::size_t id_position(const std::string& id) const {
    const std::regex re("\"id\"\\s*:\\s*\"" + std::regex_replace(id, std::regex(R"([.^$|()\[\]{}*+?\\])"), R"(\$&)") + "\"");
    std::smatch m;
    return std::regex_search(text_, m, re) ? static_cast<std::size_t>(m.position(0)) : 0;
  }
  int line_at(std::size_t pos) const {
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<long>(std::min(pos, text_.size())), '\n'));
  }

 private:
  const std::string& text_;
};

const std::set<std::string> kExperimentTypes{
    "eval-field", "check-ap", "check-a1", "check-doubling", "check-strong-ainfty", "cartan",
    "projection-claim", "balance", "sobolev", "sw-probe", "cc-calibrate"};

struct Experiment {
  std::string id;
  std::string type;
  json params;
  std::uint64_t seed = 0;
};

struct Scenario {
  std::string id;
  std::uint64_t seed = 1;
  Density density;
  Point region_center = kIdentity;
  double region_radius = 2.0;
  QuadratureScheme scheme = default_weight_scheme();
  PathOptimizerConfig optimizer;
  std::map<std::string, FamilySpec> families;
  std::map<std::string, PairSpec> pairs;
  std::vector<Experiment> experiments;
  std::string hash;
};

class Reader {
 public:
  explicit Reader(const LineIndex& lines) : lines_(lines) {}

  // Reader whose line lookups start at the object with the given id.
  Reader scoped(const std::string& id) const {
    Reader r(lines_);
    r.from_ = lines_.id_position(id);
    return r;
  }

  [[noreturn]] void fail(const std::string& path, const std::string& msg, const std::string& token) const {
    throw SchemaError(path + ": " + msg, lines_.line_of(token, from_));
  }

  const json& require(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.is_object() || !obj.contains(key)) fail(path, "missing required field '" + key + "'", key);
    return obj.at(key);
  }

  double number(const json& obj, const std::string& key, double def, const std::string& path) const {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number", key);
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path + "." + key, "must be finite", key);
    return d;
  }

  std::int64_t integer(const json& obj, const std::string& key, std::int64_t def, const std::string& path) const {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer", key);
    return v.get<std::int64_t>();
  }

  std::uint64_t seed(const json& obj, const std::string& key, std::uint64_t def, const std::string& path) const {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(path + "." + key, "expected a non-negative integer", key);
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const json& obj, const std::string& key, bool def, const std::string& path) const {
    if (!obj.contains(key)) return def;
    if (!obj.at(key).is_boolean()) fail(path + "." + key, "expected true or false", key);
    return obj.at(key).get<bool>();
  }

  std::string string(const json& obj, const std::string& key, const std::string& def, const std::string& path) const {
    if (!obj.contains(key)) return def;
    if (!obj.at(key).is_string()) fail(path + "." + key, "expected a string", key);
    return obj.at(key).get<std::string>();
  }

  Point point(const json& v, const std::string& path, const std::string& token) const {
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number()) {
      fail(path, "expected [x, y, t]", token);
    }
    const Point p{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.t)) fail(path, "must be finite", token);
    return p;
  }

  Point point(const json& obj, const std::string& key, const Point& def, const std::string& path) const {
    if (!obj.contains(key)) return def;
    return point(obj.at(key), path + "." + key, key);
  }

  std::vector<double> numbers(const json& obj, const std::string& key, const std::vector<double>& def,
                              const std::string& path) const {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array() || v.empty()) fail(path + "." + key, "expected a number or a non-empty array", key);
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(path + "." + key, "expected numbers", key);
      out.push_back(e.get<double>());
    }
    return out;
  }

  void known_keys(const json& obj, const std::set<std::string>& keys, const std::string& path,
                  std::vector<Diagnostic>* diags) const {
    if (!diags || !obj.is_object()) return;
    for (const auto& [k, v] : obj.items()) {
      if (!keys.count(k)) {
        diags->push_back({Diagnostic::Severity::warning, path + ": unknown field '" + k + "' ignored", lines_.line_of(k)});
      }
    }
  }

  int line_of(const std::string& token) const { return lines_.line_of(token, from_); }

 private:
  const LineIndex& lines_;
  std::size_t from_ = 0;
};

Density parse_density(const Reader& rd, const json& j, double c1, bool a1) {
  Density d;
  d.c1_prime = c1;
  d.a1_admissible = a1;
  if (j.is_null()) return d;
  if (!j.is_object()) rd.fail("density", "expected an object", "density");
  if (j.contains("bumps")) {
    const json& bs = j.at("bumps");
    if (!bs.is_array()) rd.fail("density.bumps", "expected an array", "bumps");
    for (std::size_t i = 0; i < bs.size(); ++i) {
      const std::string path = "density.bumps[" + std::to_string(i) + "]";
      const json& b = bs[i];
      Bump bump;
      bump.center = rd.point(rd.require(b, "center", path), path + ".center", "center");
      const std::string prof = rd.string(b, "profile", "poly_bump", path);
      try {
        bump.profile = profile_from_string(prof);
      } catch (const DomainError& e) {
        rd.fail(path + ".profile", e.what(), prof);
      }
      bump.width = rd.number(b, "width", 1.0, path);
      if (!rd.require(b, "mass", path).is_number()) rd.fail(path + ".mass", "expected a number", "mass");
      bump.mass = b.at("mass").get<double>();
      if (!(bump.width > 0.0)) rd.fail(path + ".width", "must be positive", "width");
      d.bumps.push_back(bump);
    }
  }
  if (j.contains("atoms")) {
    const json& as = j.at("atoms");
    if (!as.is_array()) rd.fail("density.atoms", "expected an array", "atoms");
    for (std::size_t i = 0; i < as.size(); ++i) {
      const std::string path = "density.atoms[" + std::to_string(i) + "]";
      Atom a;
      a.location = rd.point(rd.require(as[i], "location", path), path + ".location", "location");
      if (!rd.require(as[i], "mass", path).is_number()) rd.fail(path + ".mass", "expected a number", "mass");
      a.mass = as[i].at("mass").get<double>();
      d.atoms.push_back(a);
    }
  }
  try {
    d.validate();
  } catch (const DomainError& e) {
    rd.fail("density", e.what(), "density");
  }
  return d;
}

Scenario parse_scenario(const std::string& text, std::optional<std::uint64_t> seed_override,
                        std::vector<Diagnostic>* diags) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    LineIndex li(text);
    throw SchemaError(std::string("config is not valid JSON: ") + e.what(), li.line_at(e.byte > 0 ? e.byte - 1 : 0));
  }
  LineIndex lines(text);
  Reader rd(lines);
  if (!root.is_object()) throw SchemaError("config: top level must be an object", 1);
  rd.known_keys(root,
                {"schema_version", "id", "description", "seed", "c1_prime", "a1_admissible", "density", "region",
                 "quadrature", "optimizer", "families", "pairs", "experiments"},
                "config", diags);
  const json& ver = rd.require(root, "schema_version", "config");
  if (!ver.is_number_integer() || ver.get<int>() != kSchemaVersion) {
    rd.fail("config.schema_version", "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")",
            "schema_version");
  }
  Scenario sc;
  sc.id = rd.string(root, "id", "scenario", "config");
  if (sc.id.empty() || sc.id.find_first_of("/\\ ") != std::string::npos || sc.id == "." || sc.id == "..") {
    rd.fail("config.id", "must be a non-empty name without spaces or path separators", "id");
  }
  sc.seed = rd.seed(root, "seed", 1, "config");
  if (seed_override) {
    sc.seed = *seed_override;
    root["seed"] = *seed_override;
  }
  const double c1 = rd.number(root, "c1_prime", 1.0, "config");
  if (!(c1 > 0.0)) rd.fail("config.c1_prime", "must be positive", "c1_prime");
  const bool a1 = rd.boolean(root, "a1_admissible", false, "config");
  sc.density = parse_density(rd, root.value("density", json()), c1, a1);

  if (root.contains("region")) {
    const json& r = root.at("region");
    sc.region_center = rd.point(r, "center", kIdentity, "region");
    sc.region_radius = rd.number(r, "radius", 2.0, "region");
    if (!(sc.region_radius > 0.0)) rd.fail("region.radius", "must be positive", "radius");
  }
  if (root.contains("quadrature")) {
    const json& q = root.at("quadrature");
    rd.known_keys(q, {"kind", "budget", "seed", "target_rel_error"}, "quadrature", diags);
    const std::string kind = rd.string(q, "kind", "tensor_grid", "quadrature");
    try {
      sc.scheme.kind = scheme_kind_from_string(kind);
    } catch (const DomainError& e) {
      rd.fail("quadrature.kind", e.what(), kind);
    }
    sc.scheme.sample_budget = rd.integer(q, "budget", sc.scheme.sample_budget, "quadrature");
    sc.scheme.target_rel_error = rd.number(q, "target_rel_error", sc.scheme.target_rel_error, "quadrature");
    sc.scheme.seed = rd.seed(q, "seed", mix_seed(sc.seed, 0x71), "quadrature");
    try {
      sc.scheme.validate();
    } catch (const DomainError& e) {
      rd.fail("quadrature", e.what(), "quadrature");
    }
  } else {
    sc.scheme.seed = mix_seed(sc.seed, 0x71);
  }
  if (seed_override) sc.scheme.seed = mix_seed(sc.seed, 0x71);
  sc.optimizer.seed = mix_seed(sc.seed, 0x6f);
  if (root.contains("optimizer")) {
    const json& o = root.at("optimizer");
    rd.known_keys(o, {"segments", "restarts", "max_iterations", "step_tolerance", "penalty_schedule", "containment_weight", "seed"},
                  "optimizer", diags);
    sc.optimizer.segments = static_cast<int>(rd.integer(o, "segments", sc.optimizer.segments, "optimizer"));
    sc.optimizer.restarts = static_cast<int>(rd.integer(o, "restarts", sc.optimizer.restarts, "optimizer"));
    sc.optimizer.max_iterations = static_cast<int>(rd.integer(o, "max_iterations", sc.optimizer.max_iterations, "optimizer"));
    sc.optimizer.step_tolerance = rd.number(o, "step_tolerance", sc.optimizer.step_tolerance, "optimizer");
    sc.optimizer.penalty_schedule = rd.numbers(o, "penalty_schedule", sc.optimizer.penalty_schedule, "optimizer");
    sc.optimizer.containment_weight = rd.number(o, "containment_weight", sc.optimizer.containment_weight, "optimizer");
    if (!seed_override) sc.optimizer.seed = rd.seed(o, "seed", sc.optimizer.seed, "optimizer");
    try {
      sc.optimizer.validate();
    } catch (const DomainError& e) {
      rd.fail("optimizer", e.what(), "optimizer");
    }
  }

  std::uint64_t idx = 0;
  if (root.contains("families")) {
    const json& fs = root.at("families");
    if (!fs.is_object()) rd.fail("families", "expected an object keyed by family id", "families");
    for (const auto& [name, f] : fs.items()) {
      const std::string path = "families." + name;
      rd.known_keys(f, {"policy", "count", "radii", "r_min", "r_max", "center", "radius", "seed"}, path, diags);
      FamilySpec s;
      s.id = name;
      const std::string pol = rd.string(f, "policy", "random_in_region", path);
      try {
        s.policy = family_policy_from_string(pol);
      } catch (const DomainError& e) {
        rd.fail(path + ".policy", e.what(), pol);
      }
      s.count = static_cast<int>(rd.integer(f, "count", s.count, path));
      s.radii = static_cast<int>(rd.integer(f, "radii", s.radii, path));
      s.r_min = rd.number(f, "r_min", s.r_min, path);
      s.r_max = rd.number(f, "r_max", s.r_max, path);
      s.region_center = rd.point(f, "center", sc.region_center, path);
      s.region_radius = rd.number(f, "radius", sc.region_radius, path);
      s.seed = seed_override ? mix_seed(sc.seed, 0x1000 + idx) : rd.seed(f, "seed", mix_seed(sc.seed, 0x1000 + idx), path);
      ++idx;
      try {
        s.validate();
      } catch (const DomainError& e) {
        rd.fail(path, e.what(), name);
      }
      sc.families[name] = s;
    }
  }
  idx = 0;
  if (root.contains("pairs")) {
    const json& ps = root.at("pairs");
    if (!ps.is_object()) rd.fail("pairs", "expected an object keyed by pair-sample id", "pairs");
    for (const auto& [name, p] : ps.items()) {
      const std::string path = "pairs." + name;
      rd.known_keys(p, {"count", "sep_min", "sep_max", "center", "radius", "seed"}, path, diags);
      PairSpec s;
      s.id = name;
      s.count = static_cast<int>(rd.integer(p, "count", s.count, path));
      s.sep_min = rd.number(p, "sep_min", s.sep_min, path);
      s.sep_max = rd.number(p, "sep_max", s.sep_max, path);
      s.region_center = rd.point(p, "center", sc.region_center, path);
      s.region_radius = rd.number(p, "radius", sc.region_radius, path);
      s.seed = seed_override ? mix_seed(sc.seed, 0x2000 + idx) : rd.seed(p, "seed", mix_seed(sc.seed, 0x2000 + idx), path);
      ++idx;
      try {
        s.validate();
      } catch (const DomainError& e) {
        rd.fail(path, e.what(), name);
      }
      sc.pairs[name] = s;
    }
  }
  if (root.contains("experiments")) {
    const json& es = root.at("experiments");
    if (!es.is_array()) rd.fail("experiments", "expected an array", "experiments");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < es.size(); ++i) {
      const std::string path = "experiments[" + std::to_string(i) + "]";
      const json& e = es[i];
      if (!e.is_object()) rd.fail(path, "expected an object", "experiments");
      Experiment ex;
      (void)rd.require(e, "type", path);
      ex.type = rd.string(e, "type", "", path);
      ex.id = rd.string(e, "id", ex.type + "-" + std::to_string(i), path);
      if (!kExperimentTypes.count(ex.type)) rd.fail(path + ".type", "unknown experiment type '" + ex.type + "'", ex.type);
      if (ex.id.empty() || ex.id.find_first_of("/\\ ") != std::string::npos) {
        rd.fail(path + ".id", "must be a non-empty name without spaces or path separators", ex.id);
      }
      if (!seen.insert(ex.id).second) rd.fail(path + ".id", "duplicate experiment id '" + ex.id + "'", ex.id);
      ex.params = e;
      ex.seed = mix_seed(sc.seed, 0x3000 + i);
      sc.experiments.push_back(std::move(ex));
    }
  }
  sc.hash = detail::fnv1a_hex(root.dump());
  return sc;
}

// Experiment-level parameter access with reference resolution.
struct Ctx {
  const Scenario& sc;
  const Experiment& ex;
  Reader rd;
  std::string path() const { return "experiment '" + ex.id + "'"; }

  const FamilySpec& family(const std::string& key = "family") const {
    const std::string name = rd.string(ex.params, key, "", path());
    if (name.empty()) rd.fail(path(), "missing required field '" + key + "'", ex.id);
    const auto it = sc.families.find(name);
    if (it == sc.families.end()) rd.fail(path() + "." + key, "unresolved family '" + name + "'", name);
    return it->second;
  }
  const PairSpec& pairs(const std::string& key = "pairs") const {
    const std::string name = rd.string(ex.params, key, "", path());
    if (name.empty()) rd.fail(path(), "missing required field '" + key + "'", ex.id);
    const auto it = sc.pairs.find(name);
    if (it == sc.pairs.end()) rd.fail(path() + "." + key, "unresolved pair sample '" + name + "'", name);
    return it->second;
  }
  double num(const std::string& key, double def) const { return rd.number(ex.params, key, def, path()); }
  std::int64_t integer(const std::string& key, std::int64_t def) const { return rd.integer(ex.params, key, def, path()); }
  std::vector<double> nums(const std::string& key, const std::vector<double>& def) const {
    return rd.numbers(ex.params, key, def, path());
  }
  std::string str(const std::string& key, const std::string& def) const { return rd.string(ex.params, key, def, path()); }
};

struct WeightChoice {
  std::string kind;
  double exponent = 4.0;
  bool from_negative = false;
  bool from_positive = false;
};

WeightChoice weight_choice(const Ctx& c) {
  WeightChoice w;
  w.kind = c.str("weight", "omega");
  if (w.kind == "omega") return w;
  if (w.kind == "omega_plus") {
    w.from_positive = true;
    return w;
  }
  if (w.kind == "omega_minus_aux") {
    w.from_negative = true;
    double eps = c.num("epsilon", 0.0);
    if (!c.ex.params.contains("epsilon")) {
      if (!c.ex.params.contains("aux_p")) {
        c.rd.fail(c.path(), "weight 'omega_minus_aux' needs 'epsilon' or 'aux_p'", c.ex.id);
      }
      try {
        eps = epsilon_from_p(c.num("aux_p", 0.0));
      } catch (const DomainError& e) {
        c.rd.fail(c.path() + ".aux_p", e.what(), "aux_p");
      }
    }
    if (!(eps > 0.0)) c.rd.fail(c.path() + ".epsilon", "must be positive", "epsilon");
    w.exponent = -4.0 * eps;
    return w;
  }
  c.rd.fail(c.path() + ".weight", "unknown weight '" + w.kind + "' (omega, omega_plus, omega_minus_aux)", w.kind);
}

WeightField make_weight(const Scenario& sc, const WeightChoice& w) {
  PotentialField u(sc.density, sc.scheme);
  if (w.from_positive) return WeightField(u.positive_part(), w.exponent);
  if (w.from_negative) return WeightField(u.negative_part(), w.exponent);
  return WeightField(u, w.exponent);
}

// Experiment-level hypothesis checks shared by validate and run.
void check_hypotheses(const Scenario& sc, const Reader& rd, std::vector<Diagnostic>& diags) {
  const AlphaBeta ab = alpha_beta(sc.density);
  const double c1 = sc.density.c1_prime;
  if (sc.density.a1_admissible && ab.alpha >= c1) {
    diags.push_back({Diagnostic::Severity::error,
                     "alpha = " + fmt_num(ab.alpha) + " >= c1' = " + fmt_num(c1) +
                         " breaks the A1-admissibility hypothesis alpha < c1' for mixed-sign densities",
                     rd.line_of("a1_admissible")});
  }
  if (!std::isfinite(ab.beta)) {
    diags.push_back({Diagnostic::Severity::error, "beta must be finite", 0});
  }
  for (const auto& ex : sc.experiments) {
    Ctx c{sc, ex, rd.scoped(ex.id)};
    try {
      if (ex.type == "check-ap" || ex.type == "check-a1" || ex.type == "check-doubling" || ex.type == "sw-probe" ||
          ex.type == "check-strong-ainfty") {
        const WeightChoice w = weight_choice(c);
        if (w.from_positive && ab.alpha >= c1) {
          diags.push_back({Diagnostic::Severity::warning,
                           c.path() + ": e^{4u+} is only known to be A1 when alpha < c1'", c.rd.line_of(ex.id)});
        }
      }
      if (ex.type == "check-ap" || ex.type == "check-a1" || ex.type == "check-doubling" || ex.type == "sw-probe") {
        (void)c.family();
      }
      if (ex.type == "check-ap") {
        for (double p : c.nums("p", {2.0})) {
          if (!(p > 1.0)) c.rd.fail(c.path() + ".p", "A_p needs p > 1", "p");
        }
      }
      if (ex.type == "check-doubling") {
        for (double r : c.nums("reverse_holder", {1.5})) {
          if (!(r >= 1.0)) c.rd.fail(c.path() + ".reverse_holder", "exponents must be >= 1", "reverse_holder");
        }
      }
      if (ex.type == "check-strong-ainfty") {
        (void)c.pairs();
        if (ab.alpha > 0.0 && ab.beta > 0.0 && !(ab.alpha < c1)) {
          diags.push_back({Diagnostic::Severity::warning,
                           c.path() + ": mixed-sign density with alpha >= c1' has no comparability guarantee",
                           c.rd.line_of(ex.id)});
        }
      }
      if (ex.type == "cc-calibrate" && ex.params.contains("pairs")) (void)c.pairs();
      if (ex.type == "cartan") {
        const double eps = c.num("epsilon", 0.05);
        if (!(eps > 0.0) || eps > 0.05) c.rd.fail(c.path() + ".epsilon", "must lie in (0, 1/20]", "epsilon");
      }
      if (ex.type == "projection-claim") {
        const double eps = c.num("epsilon", 0.05);
        if (!(eps > 0.0) || eps > 0.05) c.rd.fail(c.path() + ".epsilon", "must lie in (0, 1/20]", "epsilon");
        if (!(c.num("max_total_diameter", 0.5) <= 0.5)) {
          c.rd.fail(c.path() + ".max_total_diameter", "admissible covers need total diameter < 1/2", "max_total_diameter");
        }
      }
      if (ex.type == "sobolev" || ex.type == "balance") {
        const double p = c.num("p", 2.0);
        if (!(p < 4.0)) {
          c.rd.fail(c.path() + ".p", "p = " + fmt_num(p) + " >= 4 leaves the Sobolev exponent q = 4p/(4-p) undefined (need p < 4)", "p");
        }
        if (!(p >= 1.0)) c.rd.fail(c.path() + ".p", "p must be >= 1", "p");
        if (ex.type == "balance") {
          const FamilySpec& f = c.family();
          if (f.policy != FamilyPolicy::nested_pairs) {
            c.rd.fail(c.path() + ".family", "balance needs a nested_pairs family", f.id);
          }
          const double q = c.num("q", sobolev_exponent(p));
          if (!(q > p)) c.rd.fail(c.path() + ".q", "need q > p", "q");
        }
        if (ex.type == "sobolev") {
          for (const auto& fj : ex.params.value("functions", json::array({"x"}))) {
            if (!fj.is_string()) c.rd.fail(c.path() + ".functions", "expected names", "functions");
            (void)builtin_test_function(fj.get<std::string>());
          }
          for (double r : c.nums("radii", {0.5, 1.0, 2.0})) {
            if (!(r > 0.0)) c.rd.fail(c.path() + ".radii", "radii must be positive", "radii");
          }
        }
      }
      if (ex.type == "sw-probe") {
        const double s = c.num("s", (4.0 - c.num("p", 2.0)) / 4.0);
        if (!(s > 0.0 && s < 1.0)) c.rd.fail(c.path() + ".s", "s must lie in (0, 1)", "s");
      }
    } catch (const SchemaError& e) {
      diags.push_back({Diagnostic::Severity::error, e.what(), e.line});
    } catch (const DomainError& e) {
      diags.push_back({Diagnostic::Severity::error, c.path() + ": " + e.what(), c.rd.line_of(ex.id)});
    }
  }
}

struct Assertion {
  std::string name;
  bool pass = true;
  double value = 0.0;
  double threshold = 0.0;
};

struct ExperimentResult {
  std::string status = "pass";
  std::vector<Assertion> assertions;
  ojson metrics = ojson::object();
  std::string csv;
  std::string error;
};

void assert_le(ExperimentResult& r, const std::string& name, double value, double threshold) {
  r.assertions.push_back({name, value <= threshold && std::isfinite(value), value, threshold});
}
void assert_finite(ExperimentResult& r, const std::string& name, double value) {
  r.assertions.push_back({name, std::isfinite(value), value, 0.0});
}
void assert_true(ExperimentResult& r, const std::string& name, bool ok, double value = 0.0) {
  r.assertions.push_back({name, ok, value, 0.0});
}

std::vector<std::string> estimator_header() {
  return {"scenario_id", "estimator", "p_or_r", "family_id", "value", "std_error_proxy"};
}

ExperimentResult run_eval_field(const Ctx& c) {
  ExperimentResult r;
  const PotentialField u(c.sc.density, c.sc.scheme);
  std::vector<Point> pts;
  if (c.ex.params.contains("points")) {
    const json& ps = c.ex.params.at("points");
    if (!ps.is_array()) c.rd.fail(c.path() + ".points", "expected an array of [x, y, t]", "points");
    for (const auto& p : ps) pts.push_back(c.rd.point(p, c.path() + ".points", "points"));
  }
  const std::int64_t n_rand = c.integer("random", pts.empty() ? 16 : 0);
  Rng rng(mix_seed(c.ex.seed, 1));
  for (std::int64_t i = 0; i < n_rand; ++i) {
    const double rho = c.sc.region_radius * std::sqrt(std::sqrt(rng.uniform()));
    const Point dir = polar_point(1.0, rng.uniform(-0.5 * kPi, 0.5 * kPi), rng.uniform(0.0, 2.0 * kPi));
    pts.push_back(group_mul(c.sc.region_center, dilate(rho, dir)));
  }
  detail::CsvTable t({"scenario_id", "index", "x", "y", "t", "u", "std_error", "grad_x", "grad_y", "grad_t"});
  std::vector<std::vector<std::string>> rows(pts.size());
  std::vector<double> vals(pts.size());
  parallel_for(pts.size(), 1, [&](std::size_t i) {
    const PotentialSample s = u.sample(pts[i]);
    double v = s.value, se = 0.0;
    if (!c.sc.scheme.deterministic()) {
      const IntegralResult mc = eval_u(u.with_scheme(c.sc.scheme.with_seed(mix_seed(c.ex.seed, 100 + i))), pts[i]);
      v = mc.value;
      se = mc.std_error;
    }
    vals[i] = v;
    rows[i] = {c.sc.id, fmt_int(static_cast<std::int64_t>(i)), fmt_num(pts[i].x), fmt_num(pts[i].y), fmt_num(pts[i].t),
               fmt_num(v), fmt_num(se), fmt_num(s.grad[0]), fmt_num(s.grad[1]), fmt_num(s.grad[2])};
  });
  bool finite = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.add(rows[i]);
    finite = finite && std::isfinite(vals[i]);
  }
  assert_true(r, "values_finite", finite);
  r.metrics["points"] = pts.size();
  r.csv = t.str();
  return r;
}

bool flat(const Scenario& sc) { return sc.density.empty(); }

EstimatorOptions estimator_options(const Ctx& c, int workers) {
  EstimatorOptions o;
  o.scheme = c.sc.scheme.with_seed(mix_seed(c.ex.seed, 7));
  o.workers = workers;
  return o;
}

ExperimentResult run_check_ap(const Ctx& c, int workers) {
  ExperimentResult r;
  const FamilySpec& fs = c.family();
  const BallFamily fam = make_family(fs);
  const WeightChoice wc = weight_choice(c);
  const WeightField w = make_weight(c.sc, wc);
  std::vector<double> ps = c.nums("p", {2.0});
  std::sort(ps.begin(), ps.end());
  detail::CsvTable t(estimator_header());
  double prev = std::numeric_limits<double>::infinity();
  bool monotone = true, jensen = true, clamped = false;
  double worst_jensen = std::numeric_limits<double>::infinity();
  const EstimatorOptions opt = estimator_options(c, workers);
  for (double p : ps) {
    const FamilyEstimate e = ap_constant(w, fam, p, opt);
    t.add({c.sc.id, "ap_" + wc.kind, fmt_num(p), fam.id, fmt_num(e.value), fmt_num(e.std_error)});
    clamped = clamped || e.clamped;
    for (std::size_t i = 0; i < e.per_ball.size(); ++i) {
      const double tol = 1e-9 + 3.0 * e.per_ball_se[i];
      worst_jensen = std::min(worst_jensen, e.per_ball[i]);
      if (e.per_ball[i] < 1.0 - tol) jensen = false;
    }
    if (e.value > prev * (1.0 + 1e-12)) monotone = false;
    prev = e.value;
    assert_finite(r, "ap_finite_p" + fmt_num(p), e.value);
    if (flat(c.sc)) assert_le(r, "flat_ap_equals_1_p" + fmt_num(p), std::abs(e.value - 1.0), 0.02);
    r.metrics["ap_p" + fmt_num(p)] = e.value;
  }
  assert_true(r, "jensen_product_at_least_1", jensen, worst_jensen);
  if (ps.size() > 1) assert_true(r, "nonincreasing_in_p", monotone);
  r.metrics["clamped"] = clamped;
  r.csv = t.str();
  return r;
}

ExperimentResult run_check_a1(const Ctx& c, int workers) {
  ExperimentResult r;
  const BallFamily fam = make_family(c.family());
  const WeightChoice wc = weight_choice(c);
  const WeightField w = make_weight(c.sc, wc);
  const std::int64_t n = c.integer("probes", 32);
  std::vector<Point> probes;
  Rng rng(mix_seed(c.ex.seed, 3));
  for (std::int64_t i = 0; i < n; ++i) {
    const Ball& b = fam.balls[static_cast<std::size_t>(rng.next() % fam.balls.size())];
    const double rho = 0.5 * b.radius() * std::sqrt(std::sqrt(rng.uniform()));
    const Point dir = polar_point(1.0, rng.uniform(-0.5 * kPi, 0.5 * kPi), rng.uniform(0.0, 2.0 * kPi));
    probes.push_back(group_mul(b.center(), dilate(rho, dir)));
  }
  const FamilyEstimate e = a1_ratio(w, fam, probes, estimator_options(c, workers));
  detail::CsvTable t(estimator_header());
  t.add({c.sc.id, "a1_" + wc.kind, "1", fam.id, fmt_num(e.value), fmt_num(e.std_error)});
  assert_finite(r, "a1_finite", e.value);
  if (flat(c.sc)) assert_le(r, "flat_a1_equals_1", std::abs(e.value - 1.0), 0.02);
  r.metrics["a1_ratio"] = e.value;
  r.metrics["clamped"] = e.clamped;
  r.csv = t.str();
  return r;
}

ExperimentResult run_check_doubling(const Ctx& c, int workers) {
  ExperimentResult r;
  const BallFamily fam = make_family(c.family());
  const WeightChoice wc = weight_choice(c);
  const WeightField w = make_weight(c.sc, wc);
  const EstimatorOptions opt = estimator_options(c, workers);
  detail::CsvTable t(estimator_header());
  const FamilyEstimate d = doubling_constant(w, fam, opt);
  t.add({c.sc.id, "doubling_" + wc.kind, "2", fam.id, fmt_num(d.value), fmt_num(d.std_error)});
  assert_finite(r, "doubling_finite", d.value);
  if (flat(c.sc)) assert_le(r, "flat_doubling_equals_16", std::abs(d.value / 16.0 - 1.0), 0.03);
  r.metrics["doubling"] = d.value;
  std::vector<double> rs = c.nums("reverse_holder", {1.1, 1.5, 2.0});
  std::sort(rs.begin(), rs.end());
  double prev = 0.0;
  bool monotone = true;
  for (double s : rs) {
    const FamilyEstimate e = reverse_holder_probe(w, fam, s, opt);
    t.add({c.sc.id, "reverse_holder_" + wc.kind, fmt_num(s), fam.id, fmt_num(e.value), fmt_num(e.std_error)});
    assert_finite(r, "reverse_holder_finite_r" + fmt_num(s), e.value);
    if (flat(c.sc)) assert_le(r, "flat_reverse_holder_equals_1_r" + fmt_num(s), std::abs(e.value - 1.0), 0.02);
    if (e.value < prev * (1.0 - 1e-12)) monotone = false;
    prev = e.value;
    r.metrics["reverse_holder_r" + fmt_num(s)] = e.value;
  }
  if (rs.size() > 1) assert_true(r, "reverse_holder_nondecreasing_in_r", monotone);
  r.csv = t.str();
  return r;
}

ExperimentResult run_strong_ainfty(const Ctx& c, int workers) {
  ExperimentResult r;
  const PairSpec& ps = c.pairs();
  const auto pairs = make_pairs(ps);
  const WeightChoice wc = weight_choice(c);
  const WeightField w = make_weight(c.sc, wc);
  ScanOptions opt;
  opt.optimizer = c.sc.optimizer;
  opt.optimizer.seed = mix_seed(c.sc.optimizer.seed, mix_seed(c.ex.seed));
  opt.scheme = c.sc.scheme.with_seed(mix_seed(c.ex.seed, 5));
  opt.workers = workers;
  const ComparabilityReport rep = strong_ainfty_scan(w, pairs, opt);
  detail::CsvTable t({"scenario_id", "pair", "p_x", "p_y", "p_t", "q_x", "q_y", "q_t", "lambda", "delta_omega",
                      "delta_std_error", "d_omega", "delta_over_d", "endpoint_miss", "outside_fraction", "status"});
  double worst_flat = 0.0, worst_outside = 0.0;
  int completed = 0;
  for (std::size_t i = 0; i < rep.pairs.size(); ++i) {
    const PairSample& s = rep.pairs[i];
    t.add({c.sc.id, fmt_int(static_cast<std::int64_t>(i)), fmt_num(s.p.x), fmt_num(s.p.y), fmt_num(s.p.t),
           fmt_num(s.q.x), fmt_num(s.q.y), fmt_num(s.q.t), fmt_num(s.lambda), fmt_num(s.delta),
           fmt_num(s.delta_se), fmt_num(s.d), fmt_num(s.ok ? s.delta / s.d : 0.0), fmt_num(s.endpoint_miss),
           fmt_num(s.outside_fraction), s.ok ? "ok" : "failed"});
    if (!s.ok) continue;
    ++completed;
    worst_outside = std::max(worst_outside, s.outside_fraction);
    if (flat(c.sc)) {
      const Point x = dilate(s.lambda, s.p), y = dilate(s.lambda, s.q);
      const double dl = std::pow(kUnitBallVolume, 0.25) * ball_xy(x, y).radius();
      const double dd = cc_distance_closed_form(x, y);
      worst_flat = std::max({worst_flat, std::abs(s.delta / dl - 1.0), std::abs(s.d / dd - 1.0)});
    }
  }
  assert_true(r, "pairs_completed", completed > 0, completed);
  assert_finite(r, "sup_delta_over_d_finite", rep.sup_delta_over_d);
  assert_finite(r, "sup_d_over_delta_finite", rep.sup_d_over_delta);
  assert_le(r, "outside_fraction_below_1pct", worst_outside, 0.01);
  if (flat(c.sc)) assert_le(r, "flat_pairs_match_closed_form", worst_flat, 0.02);
  r.metrics["pairs"] = rep.pairs.size();
  r.metrics["failures"] = rep.failures;
  r.metrics["sup_delta_over_d"] = rep.sup_delta_over_d;
  r.metrics["sup_d_over_delta"] = rep.sup_d_over_delta;
  r.metrics["ratio_spread"] = rep.min_delta_over_d > 0.0 ? rep.sup_delta_over_d / rep.min_delta_over_d : 0.0;
  r.metrics["alpha"] = rep.alpha;
  r.metrics["beta"] = rep.beta;
  r.csv = t.str();
  return r;
}

ExperimentResult run_cartan(const Ctx& c, int workers) {
  ExperimentResult r;
  const double eps = c.num("epsilon", 0.05);
  const Point center = c.rd.point(c.ex.params, "center", kIdentity, c.path());
  const double radius = c.num("radius", 1.0);
  if (!(radius > 0.0)) c.rd.fail(c.path() + ".radius", "must be positive", "radius");
  const Ball b10(center, 10.0 * radius);
  CartanOptions co;
  co.pitch = c.num("pitch", co.pitch);
  co.dyadic_levels = static_cast<int>(c.integer("dyadic_levels", co.dyadic_levels));
  co.workers = workers;
  const SingularSet e = cartan_singular_set(c.sc.density, b10, eps, co);
  const int n_probes = static_cast<int>(c.integer("probes", 200));
  const auto probes = sample_nonsingular_probes(b10, e, n_probes, mix_seed(c.ex.seed, 9));
  const PotentialField u(c.sc.density, c.sc.scheme.with_seed(mix_seed(c.ex.seed, 10)));
  const BoundReport br = u_hat1_bound_check(u, b10, e, eps, probes, workers);
  detail::CsvTable t({"scenario_id", "kind", "index", "x", "y", "t", "radius_or_u_hat1", "std_error"});
  for (std::size_t i = 0; i < e.balls.size(); ++i) {
    const Point& p = e.balls[i].center();
    t.add({c.sc.id, "ball", fmt_int(static_cast<std::int64_t>(i)), fmt_num(p.x), fmt_num(p.y), fmt_num(p.t),
           fmt_num(e.balls[i].radius()), "0"});
  }
  for (std::size_t i = 0; i < br.probes.size(); ++i) {
    const auto& p = br.probes[i];
    t.add({c.sc.id, "probe", fmt_int(static_cast<std::int64_t>(i)), fmt_num(p.x.x), fmt_num(p.x.y), fmt_num(p.x.t),
           fmt_num(p.u_hat1), fmt_num(p.std_error)});
  }
  assert_le(r, "cover_diameter_below_10eps", e.total_diameter() - 10.0 * eps, -1e-15);
  assert_le(r, "outside_candidates_satisfy_bound", e.max_outside_ratio, 1.0);
  assert_true(r, "u_hat1_bound_at_all_probes", br.violations == 0, br.violations);
  r.metrics["epsilon"] = eps;
  r.metrics["beta"] = e.beta;
  r.metrics["balls"] = e.balls.size();
  r.metrics["total_diameter"] = e.total_diameter();
  r.metrics["candidates"] = e.candidates;
  r.metrics["violating_candidates"] = e.violating;
  r.metrics["c0"] = br.c0;
  r.metrics["bound"] = br.bound;
  r.metrics["max_abs_u_hat1"] = br.max_abs;
  r.csv = t.str();
  return r;
}

ExperimentResult run_projection(const Ctx& c) {
  ExperimentResult r;
  const int covers = static_cast<int>(c.integer("covers", 100));
  const double max_diam = c.num("max_total_diameter", 0.5);
  const int max_balls = static_cast<int>(std::max<std::int64_t>(1, c.integer("max_balls", 6)));
  Rng rng(mix_seed(c.ex.seed, 11));
  detail::CsvTable t({"scenario_id", "cover", "balls", "total_diameter", "path_length", "outside_length",
                      "projected_outside"});
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < covers; ++k) {
    const Point p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double th = rng.uniform(0.0, 2.0 * kPi);
    const HorizontalPath seg = straight_segment(p, th, 2.0, 1);
    const int nb = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(max_balls));
    // Total diameter strictly below max_diam, split at random.
    const double total = max_diam * (1.0 - 1e-9) * (0.5 + 0.5 * rng.uniform());
    std::vector<double> parts(static_cast<std::size_t>(nb));
    double sum = 0.0;
    for (auto& v : parts) sum += (v = -std::log(1.0 - rng.uniform()) + 1e-12);
    SingularSet e;
    for (double v : parts) {
      const double rad = 0.5 * total * v / sum;
      const double s = rng.uniform(0.0, 2.0);
      const Point on = group_mul(p, Point{s * std::cos(th), s * std::sin(th), 0.0});
      const double off = rad * rng.uniform();
      const Point dir = polar_point(1.0, rng.uniform(-0.5 * kPi, 0.5 * kPi), rng.uniform(0.0, 2.0 * kPi));
      e.balls.emplace_back(off > 0.0 ? group_mul(on, dilate(off, dir)) : on, rad);
    }
    const ProjectionReport pr = projection_length(seg, e);
    worst = std::min(worst, pr.outside_length);
    t.add({c.sc.id, fmt_int(k), fmt_int(nb), fmt_num(e.total_diameter()), fmt_num(pr.length),
           fmt_num(pr.outside_length), fmt_num(pr.projected_outside)});
  }
  assert_true(r, "outside_length_exceeds_3_2", worst > 1.5, worst);
  r.metrics["covers"] = covers;
  r.metrics["min_outside_length"] = worst;
  r.csv = t.str();
  return r;
}

ExperimentResult run_balance(const Ctx& c, int workers) {
  ExperimentResult r;
  const BallFamily fam = make_family(c.family());
  const double p = c.num("p", 2.0);
  const double q = c.num("q", sobolev_exponent(p));
  const PotentialField u(c.sc.density, c.sc.scheme);
  const WeightField mu(u, 4.0), nu(u, 4.0 - p);
  const BalanceReport br = balance_check(mu, nu, fam, p, q, estimator_options(c, workers));
  detail::CsvTable t(estimator_header());
  t.add({c.sc.id, "balance_max", fmt_num(p), fam.id, fmt_num(br.max_ratio), "0"});
  t.add({c.sc.id, "balance_min", fmt_num(p), fam.id, fmt_num(br.min_ratio), "0"});
  assert_finite(r, "balance_max_finite", br.max_ratio);
  if (flat(c.sc)) {
    assert_le(r, "flat_balance_max_equals_1", std::abs(br.max_ratio - 1.0), 0.02);
    assert_le(r, "flat_balance_min_equals_1", std::abs(br.min_ratio - 1.0), 0.02);
  }
  r.metrics["p"] = p;
  r.metrics["q"] = q;
  r.metrics["max_ratio"] = br.max_ratio;
  r.metrics["min_ratio"] = br.min_ratio;
  r.csv = t.str();
  return r;
}

ExperimentResult run_sobolev(const Ctx& c, int workers) {
  ExperimentResult r;
  const double p = c.num("p", 2.0);
  const Point center = c.rd.point(c.ex.params, "center", c.sc.region_center, c.path());
  const std::vector<double> radii = c.nums("radii", {0.5, 1.0, 2.0});
  std::vector<std::string> names;
  for (const auto& fj : c.ex.params.value("functions", json::array({"x", "y", "t", "gauge", "wave"}))) {
    names.push_back(fj.get<std::string>());
  }
  const PotentialField u(c.sc.density, c.sc.scheme);
  const std::size_t n = names.size() * radii.size();
  std::vector<SobolevResult> res(n);
  parallel_for(n, workers, [&](std::size_t k) {
    const TestFunction tf = builtin_test_function(names[k / radii.size()]);
    res[k] = sobolev_poincare_ratio(tf, Ball(center, radii[k % radii.size()]), u, p,
                                    c.sc.scheme.with_seed(mix_seed(c.ex.seed, 20 + k)));
  });
  detail::CsvTable t({"scenario_id", "function", "radius", "p", "q", "lhs", "rhs_without_c", "c_emp", "mean"});
  for (std::size_t i = 0; i < names.size(); ++i) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    bool finite = true;
    for (std::size_t j = 0; j < radii.size(); ++j) {
      const SobolevResult& s = res[i * radii.size() + j];
      t.add({c.sc.id, names[i], fmt_num(radii[j]), fmt_num(p), fmt_num(s.q), fmt_num(s.lhs), fmt_num(s.rhs_without_c),
             fmt_num(s.ratio), fmt_num(s.mean)});
      finite = finite && std::isfinite(s.ratio);
      if (s.ratio > 0.0) {
        lo = std::min(lo, s.ratio);
        hi = std::max(hi, s.ratio);
      }
    }
    assert_true(r, "c_emp_finite_" + names[i], finite);
    if (names[i] != "const" && hi > 0.0) {
      assert_le(r, "c_emp_stable_within_2x_" + names[i], hi / lo, 2.0);
      r.metrics["c_emp_spread_" + names[i]] = hi / lo;
    }
  }
  r.csv = t.str();
  return r;
}

ExperimentResult run_sw_probe(const Ctx& c, int workers) {
  ExperimentResult r;
  const BallFamily fam = make_family(c.family());
  const WeightChoice wc = weight_choice(c);
  const WeightField w = make_weight(c.sc, wc);
  const double s = c.num("s", (4.0 - c.num("p", 2.0)) / 4.0);
  const PowerMeanProbe pm = stromberg_wheeden_probe(w, s, fam, estimator_options(c, workers));
  detail::CsvTable t(estimator_header());
  t.add({c.sc.id, "sw_forward_" + wc.kind, fmt_num(s), fam.id, fmt_num(pm.forward_max), "0"});
  t.add({c.sc.id, "sw_backward_" + wc.kind, fmt_num(s), fam.id, fmt_num(pm.backward_max), "0"});
  assert_le(r, "forward_jensen", pm.forward_max, 1.0 + 1e-3);
  assert_finite(r, "backward_finite", pm.backward_max);
  if (flat(c.sc)) {
    assert_le(r, "flat_forward_equals_1", std::abs(pm.forward_max - 1.0), 0.01);
    assert_le(r, "flat_backward_equals_1", std::abs(pm.backward_max - 1.0), 0.01);
  }
  r.metrics["s"] = s;
  r.metrics["forward_max"] = pm.forward_max;
  r.metrics["backward_max"] = pm.backward_max;
  r.csv = t.str();
  return r;
}

ExperimentResult run_cc_calibrate(const Ctx& c, int workers) {
  ExperimentResult r;
  struct Item {
    std::string label;
    Point p, q;
  };
  std::vector<Item> items{{"horizontal_unit", kIdentity, {1.0, 0.0, 0.0}}, {"vertical_unit", kIdentity, {0.0, 0.0, 1.0}}};
  if (c.ex.params.contains("pairs")) {
    const auto ps = make_pairs(c.pairs());
    for (std::size_t i = 0; i < ps.size(); ++i) items.push_back({"pair_" + std::to_string(i), ps[i].first, ps[i].second});
  }
  std::vector<PathResult> res(items.size());
  PathOptimizerConfig cfg = c.sc.optimizer;
  parallel_for(items.size(), workers, [&](std::size_t i) {
    PathOptimizerConfig ci = cfg;
    ci.seed = mix_seed(cfg.seed, mix_seed(c.ex.seed, i));
    if (workers > 1) ci.workers = 1;
    res[i] = cc_distance(items[i].p, items[i].q, ci);
  });
  detail::CsvTable t({"scenario_id", "label", "p_x", "p_y", "p_t", "q_x", "q_y", "q_t", "cc_distance",
                      "closed_form", "gauge_distance", "rel_error", "endpoint_miss"});
  double worst = 0.0, kappa = 1.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    const double cf = cc_distance_closed_form(it.p, it.q);
    const double g = koranyi_dist(it.p, it.q);
    const double rel = std::abs(res[i].length / cf - 1.0);
    t.add({c.sc.id, it.label, fmt_num(it.p.x), fmt_num(it.p.y), fmt_num(it.p.t), fmt_num(it.q.x), fmt_num(it.q.y),
           fmt_num(it.q.t), fmt_num(res[i].length), fmt_num(cf), fmt_num(g), fmt_num(rel), fmt_num(res[i].endpoint_miss)});
    kappa = std::max({kappa, res[i].length / g, g / res[i].length});
    if (i == 0) assert_le(r, "horizontal_unit_within_1pct", std::abs(res[i].length - 1.0), 0.01);
    if (i == 1) assert_le(r, "vertical_unit_within_2pct", std::abs(res[i].length / std::sqrt(kPi) - 1.0), 0.02);
    if (i >= 2) worst = std::max(worst, rel);
  }
  if (items.size() > 2) assert_le(r, "pairs_match_closed_form_2pct", worst, 0.02);
  assert_le(r, "bilipschitz_kappa_below_4", kappa, 4.0);
  r.metrics["kappa"] = kappa;
  r.metrics["worst_rel_error"] = worst;
  r.csv = t.str();
  return r;
}

ExperimentResult run_experiment(const Ctx& c, int workers) {
  const std::string& ty = c.ex.type;
  if (ty == "eval-field") return run_eval_field(c);
  if (ty == "check-ap") return run_check_ap(c, workers);
  if (ty == "check-a1") return run_check_a1(c, workers);
  if (ty == "check-doubling") return run_check_doubling(c, workers);
  if (ty == "check-strong-ainfty") return run_strong_ainfty(c, workers);
  if (ty == "cartan") return run_cartan(c, workers);
  if (ty == "projection-claim") return run_projection(c);
  if (ty == "balance") return run_balance(c, workers);
  if (ty == "sobolev") return run_sobolev(c, workers);
  if (ty == "sw-probe") return run_sw_probe(c, workers);
  if (ty == "cc-calibrate") return run_cc_calibrate(c, workers);
  throw DomainError("unknown experiment type " + ty);
}

ojson json_num(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SchemaError("cannot read config file " + path.string(), 0);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

ValidationResult validate_config_text(const std::string& text) {
  ValidationResult out;
  LineIndex lines(text);
  Reader rd(lines);
  try {
    const Scenario sc = parse_scenario(text, std::nullopt, &out.diagnostics);
    check_hypotheses(sc, rd, out.diagnostics);
  } catch (const SchemaError& e) {
    out.diagnostics.push_back({Diagnostic::Severity::error, e.what(), e.line});
  }
  return out;
}

ValidationResult validate_config_file(const std::filesystem::path& path) {
  try {
    return validate_config_text(read_file(path));
  } catch (const SchemaError& e) {
    ValidationResult out;
    out.diagnostics.push_back({Diagnostic::Severity::error, e.what(), 0});
    return out;
  }
}

RunOutcome run_config_text(const std::string& text, const RunOptions& opt) {
  RunOutcome out;
  LineIndex lines(text);
  Reader rd(lines);
  Scenario sc;
  try {
    sc = parse_scenario(text, opt.seed, &out.diagnostics);
    check_hypotheses(sc, rd, out.diagnostics);
  } catch (const SchemaError& e) {
    out.diagnostics.push_back({Diagnostic::Severity::error, e.what(), e.line});
  }
  const bool bad = std::any_of(out.diagnostics.begin(), out.diagnostics.end(),
                               [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::error; });
  if (bad) {
    out.exit_code = kExitConfig;
    return out;
  }
  out.scenario_id = sc.id;
  out.scenario_hash = sc.hash;
  out.output_dir = opt.out_dir / sc.id;
  const int workers = std::max(1, opt.workers);
  const std::size_t n = sc.experiments.size();
  // Experiments run concurrently; each one then runs its own work serially.
  const int outer = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), std::max<std::size_t>(n, 1)));
  const int inner = outer > 1 ? 1 : workers;
  std::vector<ExperimentResult> results(n);
  parallel_for(n, outer, [&](std::size_t i) {
    const Experiment& ex = sc.experiments[i];
    ExperimentResult res;
    try {
      res = run_experiment(Ctx{sc, ex, rd.scoped(ex.id)}, inner);
      for (const auto& a : res.assertions) {
        if (!a.pass) res.status = "fail";
      }
    } catch (const SchemaError& e) {
      res = {};
      res.status = "error";
      res.error = std::string("config: ") + e.what();
    } catch (const std::exception& e) {
      res = {};
      res.status = "error";
      res.error = std::string(e.what()) + " [scenario " + sc.hash + "]";
    }
    if (!res.csv.empty()) detail::write_file_atomic(out.output_dir / (ex.id + ".csv"), res.csv);
    results[i] = std::move(res);
  });

  ojson summary;
  summary["schema_version"] = kSchemaVersion;
  summary["scenario_id"] = sc.id;
  summary["scenario_hash"] = sc.hash;
  summary["seed"] = sc.seed;
  const AlphaBeta ab = alpha_beta(sc.density);
  summary["alpha"] = ab.alpha;
  summary["beta"] = ab.beta;
  summary["c1_prime"] = sc.density.c1_prime;
  ojson exps = ojson::array();
  bool all_pass = true, any_error = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Experiment& ex = sc.experiments[i];
    const ExperimentResult& res = results[i];
    ojson e;
    e["id"] = ex.id;
    e["type"] = ex.type;
    e["status"] = res.status;
    if (!res.csv.empty()) e["csv"] = ex.id + ".csv";
    if (!res.error.empty()) e["error"] = res.error;
    ojson as = ojson::array();
    ExperimentOutcome eo{ex.id, ex.type, res.status, 0, 0, res.error};
    for (const auto& a : res.assertions) {
      ojson aj;
      aj["name"] = a.name;
      aj["pass"] = a.pass;
      aj["value"] = json_num(a.value);
      aj["threshold"] = json_num(a.threshold);
      as.push_back(aj);
      ++eo.assertions;
      if (!a.pass) ++eo.failed;
    }
    e["assertions"] = as;
    ojson metrics = ojson::object();
    for (const auto& [k, v] : res.metrics.items()) metrics[k] = v.is_number_float() ? json_num(v.get<double>()) : ojson(v);
    e["metrics"] = metrics;
    exps.push_back(e);
    all_pass = all_pass && res.status == "pass";
    any_error = any_error || res.status == "error";
    out.experiments.push_back(eo);
  }
  summary["experiments"] = exps;
  summary["passed"] = all_pass;
  detail::write_file_atomic(out.output_dir / "summary.json", summary.dump(2) + "\n");
  out.exit_code = any_error ? kExitNumerical : (all_pass ? kExitOk : kExitAssertion);
  return out;
}

RunOutcome run_config_file(const std::filesystem::path& path, const RunOptions& opt) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const SchemaError& e) {
    RunOutcome out;
    out.exit_code = kExitConfig;
    out.diagnostics.push_back({Diagnostic::Severity::error, e.what(), 0});
    return out;
  }
  return run_config_text(text, opt);
}

}  // namespace heislab
