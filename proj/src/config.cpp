#include "langstep/config.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace langstep {

using nlohmann::json;

StepSchedule ScheduleSpec::make(std::size_t horizon) const {
  if (kind == ScheduleKind::polynomial) return StepSchedule::polynomial(gamma1, a, horizon);
  return StepSchedule::explicit_table(values);
}

DiffusionModel ExperimentConfig::make_model() const {
  auto get = [&](const std::string& key, double fallback) {
    auto it = model.params.find(key);
    return it == model.params.end() ? fallback : it->second;
  };
  if (model.name == "ou")
    return make_ou_model(get("alpha", 1.0), get("sigma", 1.0),
                         static_cast<int>(get("d", 1.0)));
  if (model.name == "heavytail")
    return make_heavy_tail_model(static_cast<int>(get("d", 1.0)), get("kappa", 1.0));
  throw std::invalid_argument("unknown builtin model '" + model.name + "'");
}

namespace {

const std::vector<std::string> kTopKeys = {
    "experiment", "model",  "schedule", "paths", "steps",        "seed",
    "checkpoints", "gammas", "substeps", "distance", "t_burn",   "bins",
    "x0",          "bel_t",  "record_every", "out",  "force"};

// near-miss aliases checked before edit distance
const std::map<std::string, std::string> kAliases = {
    {"stepsize", "schedule"}, {"step_size", "schedule"}, {"stepsizes", "schedule"},
    {"gamma", "schedule"},    {"nsteps", "steps"},       {"n", "steps"},
    {"npaths", "paths"},      {"output", "out"},         {"metric", "distance"},
    {"estimator", "distance"}};

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string suggest_key(const std::string& key, const std::vector<std::string>& known) {
  auto alias = kAliases.find(key);
  if (alias != kAliases.end()) return alias->second;
  std::string best;
  std::size_t best_d = 4;  // suggest only close misses
  for (const auto& k : known) {
    const std::size_t d = edit_distance(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

struct Validator {
  std::vector<ConfigError>& errors;

  void error(const std::string& path, const std::string& msg) { errors.push_back({path, msg}); }

  void check_keys(const json& obj, const std::string& path,
                  const std::vector<std::string>& known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
        std::string msg = "unknown key '" + it.key() + "'";
        const std::string sugg = suggest_key(it.key(), known);
        if (!sugg.empty()) msg += "; did you mean '" + sugg + "'?";
        error(path + "/" + it.key(), msg);
      }
    }
  }

  template <typename T>
  std::optional<T> get_number(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      error(path + "/" + key, "expected a number");
      return std::nullopt;
    }
    return v.get<T>();
  }
};

}  // namespace

ParseResult parse_config(const std::string& text) {
  ParseResult res;
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    res.errors.push_back({"/", "not valid JSON"});
    return res;
  }
  if (!doc.is_object()) {
    res.errors.push_back({"/", "top level must be an object"});
    return res;
  }

  Validator v{res.errors};
  ExperimentConfig cfg;
  v.check_keys(doc, "", kTopKeys);

  // experiment kind
  static const std::vector<std::string> kKinds = {
      "run", "oracle", "one-step-strong", "one-step-weak", "long-run", "check", "bel"};
  if (!doc.contains("experiment")) {
    v.error("/experiment", "missing required key");
  } else if (!doc["experiment"].is_string()) {
    v.error("/experiment", "expected a string");
  } else {
    cfg.kind = doc["experiment"].get<std::string>();
    if (std::find(kKinds.begin(), kKinds.end(), cfg.kind) == kKinds.end())
      v.error("/experiment", "unknown experiment kind '" + cfg.kind + "'");
  }

  // model
  if (!doc.contains("model")) {
    v.error("/model", "missing required key");
  } else if (doc["model"].is_string()) {
    try {
      cfg.model = parse_model_spec(doc["model"].get<std::string>());
    } catch (const std::exception& e) {
      v.error("/model", e.what());
    }
  } else if (doc["model"].is_object()) {
    const json& m = doc["model"];
    v.check_keys(m, "/model", {"name", "params"});
    if (!m.contains("name") || !m["name"].is_string())
      v.error("/model/name", "missing or non-string model name");
    else
      cfg.model.name = m["name"].get<std::string>();
    if (m.contains("params")) {
      if (!m["params"].is_object())
        v.error("/model/params", "expected an object");
      else
        for (auto it = m["params"].begin(); it != m["params"].end(); ++it) {
          if (!it.value().is_number())
            v.error("/model/params/" + it.key(), "expected a number");
          else
            cfg.model.params[it.key()] = it.value().get<double>();
        }
    }
  } else {
    v.error("/model", "expected a string tag or an object");
  }
  if (!cfg.model.name.empty() && cfg.model.name != "ou" && cfg.model.name != "heavytail")
    v.error("/model/name", "unknown builtin '" + cfg.model.name + "' (known: ou, heavytail)");
  if (cfg.model.name == "ou") {
    if (cfg.model.params.count("alpha") && !(cfg.model.params["alpha"] > 0.0))
      v.error("/model/params/alpha", "must be > 0");
    if (cfg.model.params.count("sigma") && !(cfg.model.params["sigma"] > 0.0))
      v.error("/model/params/sigma", "must be > 0");
  }
  if (cfg.model.name == "heavytail" && cfg.model.params.count("kappa") &&
      !(cfg.model.params["kappa"] > 0.0))
    v.error("/model/params/kappa", "must be > 0");

  // schedule (one-step sweeps and bel run on their own grids)
  const bool needs_schedule =
      cfg.kind == "run" || cfg.kind == "oracle" || cfg.kind == "long-run" || cfg.kind == "check";
  if (!doc.contains("schedule")) {
    if (needs_schedule) v.error("/schedule", "missing required key");
  } else if (doc["schedule"].is_string()) {
    try {
      cfg.schedule = parse_schedule_spec(doc["schedule"].get<std::string>());
    } catch (const std::exception& e) {
      v.error("/schedule", e.what());
    }
  } else if (doc["schedule"].is_object()) {
    const json& s = doc["schedule"];
    v.check_keys(s, "/schedule", {"kind", "gamma1", "a", "values"});
    const std::string kind = s.value("kind", "polynomial");
    if (kind == "polynomial") {
      cfg.schedule.kind = ScheduleKind::polynomial;
      if (auto g1 = v.get_number<double>(s, "gamma1", "/schedule")) {
        if (!(*g1 > 0.0))
          v.error("/schedule/gamma1", "must be > 0");
        else
          cfg.schedule.gamma1 = *g1;
      }
      if (auto a = v.get_number<double>(s, "a", "/schedule")) {
        if (!(*a >= 0.0))
          v.error("/schedule/a", "must be >= 0");
        else
          cfg.schedule.a = *a;
      }
    } else if (kind == "explicit") {
      cfg.schedule.kind = ScheduleKind::explicit_table;
      if (!s.contains("values") || !s["values"].is_array() || s["values"].empty()) {
        v.error("/schedule/values", "explicit schedule needs a non-empty array");
      } else {
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < s["values"].size(); ++i) {
          if (!s["values"][i].is_number()) {
            v.error("/schedule/values/" + std::to_string(i), "expected a number");
            continue;
          }
          const double g = s["values"][i].get<double>();
          if (!(g > 0.0)) v.error("/schedule/values/" + std::to_string(i), "must be > 0");
          if (g > prev)
            v.error("/schedule/values/" + std::to_string(i), "steps must be non-increasing");
          prev = g;
          cfg.schedule.values.push_back(g);
        }
      }
    } else {
      v.error("/schedule/kind", "unknown kind '" + kind + "' (polynomial or explicit)");
    }
  } else {
    v.error("/schedule", "expected a string spec or an object");
  }

  // scalars
  if (auto p = v.get_number<double>(doc, "paths", "")) {
    if (!(*p >= 1.0))
      v.error("/paths", "must be >= 1");
    else
      cfg.paths = static_cast<std::size_t>(*p);
  }
  if (auto sN = v.get_number<double>(doc, "steps", "")) {
    if (!(*sN >= 1.0))
      v.error("/steps", "must be >= 1");
    else
      cfg.steps = static_cast<std::size_t>(*sN);
  }
  if (auto sd = v.get_number<double>(doc, "seed", "")) {
    if (*sd < 0.0)
      v.error("/seed", "must be >= 0");
    else
      cfg.seed = static_cast<std::uint64_t>(*sd);
  }
  if (auto ss = v.get_number<double>(doc, "substeps", "")) {
    if (!(*ss >= 1.0))
      v.error("/substeps", "must be >= 1");
    else
      cfg.substeps = static_cast<std::size_t>(*ss);
  }
  if (auto tb = v.get_number<double>(doc, "t_burn", "")) cfg.t_burn = *tb;
  if (auto bn = v.get_number<double>(doc, "bins", "")) {
    if (*bn < 0.0)
      v.error("/bins", "must be >= 0");
    else
      cfg.bins = static_cast<std::size_t>(*bn);
  }
  if (auto bt = v.get_number<double>(doc, "bel_t", "")) {
    if (!(*bt > 0.0))
      v.error("/bel_t", "must be > 0");
    else
      cfg.bel_t = *bt;
  }
  if (auto re = v.get_number<double>(doc, "record_every", "")) {
    if (!(*re >= 1.0))
      v.error("/record_every", "must be >= 1");
    else
      cfg.record_every = static_cast<std::size_t>(*re);
  }

  if (doc.contains("checkpoints")) {
    if (!doc["checkpoints"].is_array()) {
      v.error("/checkpoints", "expected an array of step indices");
    } else {
      std::size_t prev = 0;
      for (std::size_t i = 0; i < doc["checkpoints"].size(); ++i) {
        const json& c = doc["checkpoints"][i];
        if (!c.is_number() || c.get<double>() < 1.0) {
          v.error("/checkpoints/" + std::to_string(i), "must be an integer >= 1");
          continue;
        }
        const auto n = static_cast<std::size_t>(c.get<double>());
        if (n <= prev)
          v.error("/checkpoints/" + std::to_string(i), "must be strictly increasing");
        prev = n;
        cfg.checkpoints.push_back(n);
      }
    }
  }
  if (doc.contains("gammas")) {
    if (!doc["gammas"].is_array()) {
      v.error("/gammas", "expected an array of step sizes");
    } else {
      for (std::size_t i = 0; i < doc["gammas"].size(); ++i) {
        const json& g = doc["gammas"][i];
        if (!g.is_number() || !(g.get<double>() > 0.0))
          v.error("/gammas/" + std::to_string(i), "must be > 0");
        else
          cfg.gammas.push_back(g.get<double>());
      }
    }
  }
  if (doc.contains("x0")) {
    if (doc["x0"].is_number()) {
      cfg.x0 = {doc["x0"].get<double>()};
    } else if (doc["x0"].is_array()) {
      for (const auto& c : doc["x0"]) {
        if (!c.is_number())
          v.error("/x0", "expected numbers");
        else
          cfg.x0.push_back(c.get<double>());
      }
    } else {
      v.error("/x0", "expected a number or array");
    }
  }
  if (doc.contains("distance")) {
    if (!doc["distance"].is_string()) {
      v.error("/distance", "expected a string");
    } else {
      try {
        cfg.distance = parse_estimator(doc["distance"].get<std::string>());
      } catch (const std::exception& e) {
        v.error("/distance", e.what());
      }
    }
  }
  if (doc.contains("out")) {
    if (!doc["out"].is_string())
      v.error("/out", "expected a string path");
    else
      cfg.out = doc["out"].get<std::string>();
  }
  if (doc.contains("force")) {
    if (!doc["force"].is_boolean())
      v.error("/force", "expected a boolean");
    else
      cfg.force = doc["force"].get<bool>();
  }

  if (cfg.out.empty() && !cfg.kind.empty() && cfg.kind != "check")
    v.error("/out", "missing required output path");
  if ((cfg.kind == "one-step-strong" || cfg.kind == "one-step-weak") && cfg.gammas.empty())
    v.error("/gammas", "one-step experiments need a step-size sweep");
  if (cfg.kind == "long-run" && cfg.checkpoints.empty())
    v.error("/checkpoints", "long-run experiments need checkpoints");

  if (res.errors.empty()) res.config = std::move(cfg);
  return res;
}

std::string ExperimentConfig::echo_json() const {
  json j;
  j["experiment"] = kind;
  j["model"] = {{"name", model.name}, {"params", json::object()}};
  for (const auto& [k, val] : model.params) j["model"]["params"][k] = val;
  if (schedule.kind == ScheduleKind::polynomial)
    j["schedule"] = {{"kind", "polynomial"}, {"gamma1", schedule.gamma1}, {"a", schedule.a}};
  else
    j["schedule"] = {{"kind", "explicit"}, {"values", schedule.values}};
  j["paths"] = paths;
  j["steps"] = steps;
  j["seed"] = seed;
  if (!checkpoints.empty()) j["checkpoints"] = checkpoints;
  if (!gammas.empty()) j["gammas"] = gammas;
  j["substeps"] = substeps;
  j["distance"] = estimator_name(distance);
  if (t_burn) j["t_burn"] = *t_burn;
  if (bins) j["bins"] = bins;
  if (!x0.empty()) j["x0"] = x0;
  j["bel_t"] = bel_t;
  j["record_every"] = record_every;
  j["out"] = out;
  j["force"] = force;
  return j.dump();  // nlohmann::json orders keys, so the echo is canonical
}

ModelSpec parse_model_spec(const std::string& text) {
  ModelSpec spec;
  const auto colon = text.find(':');
  spec.name = text.substr(0, colon);
  if (spec.name != "ou" && spec.name != "heavytail")
    throw std::invalid_argument("unknown builtin model '" + spec.name + "' (known: ou, heavytail)");
  if (colon == std::string::npos) return spec;
  std::stringstream ss(text.substr(colon + 1));
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("model parameter '" + part + "' must look like key=value");
    const std::string key = part.substr(0, eq);
    try {
      spec.params[key] = std::stod(part.substr(eq + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("model parameter '" + key + "' has a non-numeric value");
    }
  }
  return spec;
}

ScheduleSpec parse_schedule_spec(const std::string& text) {
  ScheduleSpec spec;
  if (text.rfind("poly:", 0) == 0) {
    spec.kind = ScheduleKind::polynomial;
    std::stringstream ss(text.substr(5));
    std::string g1, a;
    if (!std::getline(ss, g1, ':') || !std::getline(ss, a, ':'))
      throw std::invalid_argument("polynomial schedule spec must be poly:<gamma1>:<a>");
    spec.gamma1 = std::stod(g1);
    spec.a = std::stod(a);
    if (!(spec.gamma1 > 0.0)) throw std::invalid_argument("schedule gamma1 must be > 0");
    if (!(spec.a >= 0.0)) throw std::invalid_argument("schedule exponent a must be >= 0");
    return spec;
  }
  if (text.rfind("expl:", 0) == 0) {
    spec.kind = ScheduleKind::explicit_table;
    std::stringstream ss(text.substr(5));
    std::string part;
    while (std::getline(ss, part, ',')) spec.values.push_back(std::stod(part));
    if (spec.values.empty()) throw std::invalid_argument("explicit schedule spec has no values");
    return spec;
  }
  throw std::invalid_argument("schedule spec must start with poly: or expl:");
}

DistanceEstimator parse_estimator(const std::string& name) {
  if (name == "w1_exact_1d" || name == "w1") return DistanceEstimator::w1_exact_1d;
  if (name == "w1_sliced" || name == "sliced") return DistanceEstimator::w1_sliced;
  if (name == "tv_histogram" || name == "tv") return DistanceEstimator::tv_histogram;
  if (name == "tv_quadrature") return DistanceEstimator::tv_quadrature;
  throw std::invalid_argument("unknown distance estimator '" + name + "'");
}

}  // namespace langstep
