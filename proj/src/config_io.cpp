// SPDX-License-Identifier: Apache-2.0
#include "radcom/config_io.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <set>

namespace radcom {

using nlohmann::json;

namespace {

const char* shape_name(PatternShape s) {
  switch (s) {
    case PatternShape::kDirectional: return "directional";
    case PatternShape::kRectangular: return "rectangular";
    case PatternShape::kCustom: return "custom";
  }
  return "?";
}

PatternShape parse_shape(const std::string& s, const std::string& path) {
  if (s == "directional") return PatternShape::kDirectional;
  if (s == "rectangular") return PatternShape::kRectangular;
  if (s == "custom") return PatternShape::kCustom;
  throw ConfigError(path + ": unknown shape '" + s +
                    "' (expected directional, rectangular or custom)");
}

// Reads the fields of one JSON object and rejects everything it did not read.
class Section {
 public:
  Section(const json& doc, std::string path) : path_(std::move(path)) {
    if (doc.is_null()) return;
    if (!doc.is_object()) throw ConfigError(path_ + ": expected an object");
    obj_ = &doc;
  }

  bool has(const std::string& key) const { return obj_ && obj_->contains(key); }
  std::string at(const std::string& key) const { return path_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!has(key)) return;
    try {
      out = (*obj_)[key].get<T>();
    } catch (const json::exception&) {
      throw ConfigError(at(key) + ": wrong type (got " + (*obj_)[key].dump() + ")");
    }
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return (*obj_)[key];
  }

  void finish() const {
    if (!obj_) return;
    for (auto it = obj_->begin(); it != obj_->end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()) + ": unknown key");
  }

 private:
  const json* obj_ = nullptr;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
auto with_path(const std::string& path, Fn fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void read_system(const json& doc, SystemConfig& s) {
  Section sec(doc, "system");
  sec.get("n_tx", s.n_tx);
  sec.get("n_users", s.n_users);
  if (sec.has("power_total_dbm") && sec.has("power_total_linear"))
    throw ConfigError("system.power_total_dbm: give either power_total_dbm or power_total_linear");
  if (sec.has("power_total_dbm")) {
    double dbm = 0.0;
    sec.get("power_total_dbm", dbm);
    s.power_total = dbm_to_linear(dbm);
  }
  sec.get("power_total_linear", s.power_total);
  sec.get("antenna_spacing", s.antenna_spacing);
  sec.get("user_weights", s.user_weights);
  sec.get("qos_threshold", s.qos_threshold);
  sec.get("reg_lambda", s.reg_lambda);
  sec.get("admm_penalty", s.admm_penalty);
  sec.get("admm_tolerance", s.admm_tolerance);
  sec.get("csit_exponent", s.csit_exponent);
  sec.get("channel_variances", s.channel_variances);
  sec.get("saa_samples", s.saa_samples);
  sec.get("max_admm_iters", s.max_admm_iters);
  sec.get("seed", s.rng_seed);
  std::string text;
  if (sec.has("access_mode")) {
    sec.get("access_mode", text);
    s.access_mode = with_path(sec.at("access_mode"), [&] { return parse_access_mode(text); });
  }
  if (sec.has("csit_mode")) {
    sec.get("csit_mode", text);
    s.csit_mode = with_path(sec.at("csit_mode"), [&] { return parse_csit_mode(text); });
  }
  sec.finish();
}

void read_beampattern(const json& doc, BeampatternConfig& b) {
  Section sec(doc, "beampattern");
  if (sec.has("shape")) {
    std::string text;
    sec.get("shape", text);
    b.shape = parse_shape(text, sec.at("shape"));
  }
  sec.get("target_deg", b.target_deg);
  sec.get("half_width_deg", b.half_width_deg);
  sec.get("grid_lo_deg", b.grid_lo_deg);
  sec.get("grid_hi_deg", b.grid_hi_deg);
  sec.get("grid_step_deg", b.grid_step_deg);
  sec.get("angles_deg", b.angles_deg);
  sec.get("desired", b.desired);
  sec.get("pattern_scale", b.pattern_scale);
  sec.finish();
}

void read_sweep(const json& doc, experiments::SweepPlan& p) {
  Section sec(doc, "sweep");
  sec.get("lambdas", p.lambdas);
  sec.get("realizations", p.n_realizations);
  sec.get("eval_samples", p.eval_samples);
  std::vector<std::string> names;
  if (sec.has("modes")) {
    sec.get("modes", names);
    p.access_modes.clear();
    for (const auto& n : names)
      p.access_modes.push_back(with_path(sec.at("modes"), [&] { return parse_access_mode(n); }));
  }
  if (sec.has("csit_modes")) {
    sec.get("csit_modes", names);
    p.csit_modes.clear();
    for (const auto& n : names)
      p.csit_modes.push_back(with_path(sec.at("csit_modes"), [&] { return parse_csit_mode(n); }));
  }
  if (sec.has("erbse_order")) {
    std::string text;
    sec.get("erbse_order", text);
    p.erbse_order =
        with_path(sec.at("erbse_order"), [&] { return experiments::parse_erbse_order(text); });
  }
  sec.finish();
}

void read_solver(const json& doc, SolverSettings& s) {
  Section sec(doc, "solver");
  sec.get("conic_tolerance", s.conic_tolerance);
  sec.get("conic_max_iters", s.conic_max_iters);
  sec.get("ao_max_iters", s.ao_max_iters);
  sec.get("ao_tolerance", s.ao_tolerance);
  sec.get("randomizations", s.randomizations);
  sec.get("rank1_threshold", s.rank1_threshold);
  sec.get("warm_start_common_fraction", s.warm_start_common_fraction);
  sec.get("sdr_tolerance", s.sdr_tolerance);
  sec.get("conic_dump_dir", s.conic_dump_dir);
  sec.finish();
}

json names_json(const std::vector<AccessMode>& modes) {
  json out = json::array();
  for (AccessMode m : modes) out.push_back(std::string(to_string(m)));
  return out;
}

json names_json(const std::vector<CsitMode>& modes) {
  json out = json::array();
  for (CsitMode m : modes) out.push_back(std::string(to_string(m)));
  return out;
}

}  // namespace

BeampatternSpec BeampatternConfig::build(const SystemConfig& system) const {
  BeampatternSpec spec;
  if (shape == PatternShape::kCustom) {
    spec.angles.resize(static_cast<Eigen::Index>(angles_deg.size()));
    spec.desired.resize(static_cast<Eigen::Index>(desired.size()));
    for (std::size_t i = 0; i < angles_deg.size(); ++i)
      spec.angles(static_cast<Eigen::Index>(i)) = deg_to_rad(angles_deg[i]);
    for (std::size_t i = 0; i < desired.size(); ++i)
      spec.desired(static_cast<Eigen::Index>(i)) = desired[i];
  } else {
    const Vector grid = with_path("beampattern.grid_step_deg", [&] {
      return angle_grid(deg_to_rad(grid_lo_deg), deg_to_rad(grid_hi_deg),
                        deg_to_rad(grid_step_deg));
    });
    if (shape == PatternShape::kDirectional)
      spec = directional_beam_pattern(grid, deg_to_rad(target_deg), system.n_tx,
                                      system.antenna_spacing);
    else
      spec = rectangular_pattern(grid, deg_to_rad(target_deg), deg_to_rad(half_width_deg));
  }
  spec.pattern_scale = pattern_scale;
  with_path("beampattern", [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

void Config::validate() const {
  try {
    system.validate();
    sweep.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (beampattern.shape != PatternShape::kCustom &&
      (!beampattern.angles_deg.empty() || !beampattern.desired.empty()))
    throw ConfigError("beampattern.angles_deg: only allowed with shape \"custom\"");
  beampattern.build(system);
  auto positive = [](double v, const char* path) {
    if (!(v > 0.0)) throw ConfigError(std::string(path) + ": must be > 0");
  };
  positive(solver.conic_tolerance, "solver.conic_tolerance");
  positive(solver.ao_tolerance, "solver.ao_tolerance");
  positive(solver.sdr_tolerance, "solver.sdr_tolerance");
  positive(solver.rank1_threshold, "solver.rank1_threshold");
  if (solver.conic_max_iters < 1) throw ConfigError("solver.conic_max_iters: must be >= 1");
  if (solver.ao_max_iters < 1) throw ConfigError("solver.ao_max_iters: must be >= 1");
  if (solver.randomizations < 0) throw ConfigError("solver.randomizations: must be >= 0");
  if (!(solver.warm_start_common_fraction >= 0.0 && solver.warm_start_common_fraction < 1.0))
    throw ConfigError("solver.warm_start_common_fraction: must lie in [0, 1)");
}

json to_json(const Config& c) {
  const SystemConfig& s = c.system;
  json sys = {{"n_tx", s.n_tx},
              {"n_users", s.n_users},
              {"power_total_linear", s.power_total},
              {"antenna_spacing", s.antenna_spacing},
              {"user_weights", s.user_weights},
              {"qos_threshold", s.qos_threshold},
              {"reg_lambda", s.reg_lambda},
              {"admm_penalty", s.admm_penalty},
              {"admm_tolerance", s.admm_tolerance},
              {"csit_exponent", s.csit_exponent},
              {"channel_variances", s.channel_variances},
              {"saa_samples", s.saa_samples},
              {"max_admm_iters", s.max_admm_iters},
              {"seed", s.rng_seed},
              {"access_mode", std::string(to_string(s.access_mode))},
              {"csit_mode", std::string(to_string(s.csit_mode))}};
  const BeampatternConfig& b = c.beampattern;
  json beam = {{"shape", shape_name(b.shape)},
               {"target_deg", b.target_deg},
               {"half_width_deg", b.half_width_deg},
               {"grid_lo_deg", b.grid_lo_deg},
               {"grid_hi_deg", b.grid_hi_deg},
               {"grid_step_deg", b.grid_step_deg},
               {"pattern_scale", b.pattern_scale}};
  if (b.shape == PatternShape::kCustom) {
    beam["angles_deg"] = b.angles_deg;
    beam["desired"] = b.desired;
  }
  const experiments::SweepPlan& p = c.sweep;
  json sweep = {{"lambdas", p.lambdas},
                {"realizations", p.n_realizations},
                {"modes", names_json(p.access_modes)},
                {"csit_modes", names_json(p.csit_modes)},
                {"eval_samples", p.eval_samples},
                {"erbse_order", std::string(experiments::to_string(p.erbse_order))}};
  const SolverSettings& v = c.solver;
  json solver = {{"conic_tolerance", v.conic_tolerance},
                 {"conic_max_iters", v.conic_max_iters},
                 {"ao_max_iters", v.ao_max_iters},
                 {"ao_tolerance", v.ao_tolerance},
                 {"randomizations", v.randomizations},
                 {"rank1_threshold", v.rank1_threshold},
                 {"warm_start_common_fraction", v.warm_start_common_fraction},
                 {"sdr_tolerance", v.sdr_tolerance},
                 {"conic_dump_dir", v.conic_dump_dir}};
  return {{"schema_version", kConfigSchemaVersion},
          {"system", sys},
          {"beampattern", beam},
          {"sweep", sweep},
          {"solver", solver}};
}

Config config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  Section top(doc, "config");
  int version = kConfigSchemaVersion;
  if (!top.has("schema_version")) throw ConfigError("schema_version: missing");
  top.get("schema_version", version);
  if (version != kConfigSchemaVersion)
    throw ConfigError("schema_version: unsupported version " + std::to_string(version) +
                      " (expected " + std::to_string(kConfigSchemaVersion) + ")");
  Config c;
  if (top.has("system")) read_system(top.raw("system"), c.system);
  if (top.has("beampattern")) read_beampattern(top.raw("beampattern"), c.beampattern);
  if (top.has("sweep")) read_sweep(top.raw("sweep"), c.sweep);
  if (top.has("solver")) read_solver(top.raw("solver"), c.solver);
  // The reader reports unknown top-level keys without the "config." prefix.
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& k = it.key();
    if (k != "schema_version" && k != "system" && k != "beampattern" && k != "sweep" &&
        k != "solver")
      throw ConfigError(k + ": unknown key");
  }
  c.validate();
  return c;
}

Override parse_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set " + assignment + ": expected key=value");
  std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  if (key.find('.') == std::string::npos && key != "schema_version") {
    const json defaults = to_json(Config{});
    std::vector<std::string> hits;
    for (const char* section : {"system", "beampattern", "sweep", "solver"})
      if (defaults[section].contains(key) ||
          (std::string(section) == "system" && key == "power_total_dbm") ||
          (std::string(section) == "beampattern" && (key == "angles_deg" || key == "desired")))
        hits.push_back(std::string(section) + "." + key);
    if (hits.empty()) throw ConfigError(key + ": unknown key");
    if (hits.size() > 1) throw ConfigError(key + ": ambiguous key, use a dotted path");
    key = hits.front();
  }
  Override o;
  o.path = key;
  o.value = json::parse(text, nullptr, false);
  if (o.value.is_discarded()) o.value = text;
  return o;
}

void apply_overrides(json& doc, const std::vector<Override>& overrides) {
  for (const Override& o : overrides) {
    json* node = &doc;
    std::size_t start = 0;
    std::string last;
    for (;;) {
      const auto dot = o.path.find('.', start);
      const std::string part = o.path.substr(start, dot - start);
      if (part.empty()) throw ConfigError(o.path + ": empty path component");
      if (dot == std::string::npos) {
        last = part;
        break;
      }
      if (!node->contains(part)) (*node)[part] = json::object();
      node = &(*node)[part];
      if (!node->is_object()) throw ConfigError(o.path + ": not an object");
      start = dot + 1;
    }
    if (last == "power_total_dbm") node->erase("power_total_linear");
    if (last == "power_total_linear") node->erase("power_total_dbm");
    (*node)[last] = o.value;
  }
}

json read_config_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError(path + ": not valid JSON");
  if (doc.is_object() && doc.value("kind", "") == "manifest") {
    if (!doc.contains("config")) throw ConfigError(path + ": manifest without config");
    return doc["config"];
  }
  return doc;
}

Config load_config(const std::string& path, const std::vector<Override>& overrides) {
  json doc = read_config_document(path);
  apply_overrides(doc, overrides);
  return config_from_json(doc);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json RunManifest::to_json() const {
  json ov = json::object();
  for (const Override& o : overrides) ov[o.path] = o.value;
  json out = {{"kind", "manifest"},
              {"artifact_version", kArtifactVersion},
              {"command", command},
              {"seed", config.system.rng_seed},
              {"created_utc", created_utc},
              {"overrides", ov},
              {"config", radcom::to_json(config)},
              {"outputs", outputs},
              {"status", status}};
  if (!finished_utc.empty()) out["finished_utc"] = finished_utc;
  return out;
}

}  // namespace radcom
