#include "annihilation/config.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace annihilation {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError("config: unknown key '" + (where.empty() ? k : where + "." + k) + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: key '" + where + "." + key + "' has the wrong type");
  }
}

json weight_json(const WeightPair& w) { return json::array({w.a, w.k}); }

WeightPair weight_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError("config: '" + where + "' entries must be [a, k] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace

json RunConfig::to_json() const {
  const SolverConfig& s = study.solver;
  json solver = {{"d", s.d},
                 {"n_particles", s.n_particles},
                 {"alpha", s.alpha},
                 {"dt", s.dt},
                 {"oversampling", s.oversampling},
                 {"v_maj", s.v_maj},
                 {"detection_window", s.detection_window},
                 {"detection_tolerance", s.detection_tolerance},
                 {"min_average_time", s.min_average_time},
                 {"t_max", s.t_max},
                 {"sub_windows", s.sub_windows},
                 {"snapshots_per_sub_window", s.snapshots_per_sub_window},
                 {"snapshot_pairs", s.snapshot_pairs},
                 {"n_bins", s.n_bins},
                 {"series_every", s.series_every},
                 {"seed", s.seed}};
  json weights = json::array();
  for (const auto& w : study.weights) weights.push_back(weight_json(w));
  json inits = json::array();
  for (const auto& i : study.uniqueness_inits) inits.push_back(i.str());
  json st = {{"alphas", study.alphas},
             {"weights", weights},
             {"floor_particles", study.floor_particles},
             {"floor_replicas", study.floor_replicas},
             {"uniqueness_alpha", study.uniqueness_alpha},
             {"uniqueness_inits", inits},
             {"spectral_sizes", study.spectral_sizes},
             {"gain_orders", {{"radial", study.orders.radial}, {"polar", study.orders.polar}, {"sigma", study.orders.sigma}}},
             {"tail_ratio_max", study.tail_ratio_max},
             {"tail_stability", study.tail_stability},
             {"nonlinear_weight", weight_json(study.nonlinear_weight)}};
  return {{"solver", solver},
          {"init", study.init.str()},
          {"study", st},
          {"validate",
           {{"filter", validate.filter},
            {"inject_fault", validate.inject_fault},
            {"carleman_samples", validate.carleman_samples}}},
          {"output", {{"dir", output.dir}, {"checkpoint", output.checkpoint}}},
          {"restore", restore},
          {"workers", study.workers}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  check_keys(j, "", {"solver", "init", "study", "validate", "output", "restore", "workers"});
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    check_keys(s, "solver",
               {"d", "n_particles", "alpha", "dt", "oversampling", "v_maj", "detection_window", "detection_tolerance",
                "min_average_time", "t_max", "sub_windows", "snapshots_per_sub_window", "snapshot_pairs", "n_bins",
                "series_every", "seed"});
    SolverConfig& o = c.study.solver;
    read(s, "d", o.d, "solver");
    read(s, "n_particles", o.n_particles, "solver");
    read(s, "alpha", o.alpha, "solver");
    read(s, "dt", o.dt, "solver");
    read(s, "oversampling", o.oversampling, "solver");
    read(s, "v_maj", o.v_maj, "solver");
    read(s, "detection_window", o.detection_window, "solver");
    read(s, "detection_tolerance", o.detection_tolerance, "solver");
    read(s, "min_average_time", o.min_average_time, "solver");
    read(s, "t_max", o.t_max, "solver");
    read(s, "sub_windows", o.sub_windows, "solver");
    read(s, "snapshots_per_sub_window", o.snapshots_per_sub_window, "solver");
    read(s, "snapshot_pairs", o.snapshot_pairs, "solver");
    read(s, "n_bins", o.n_bins, "solver");
    read(s, "series_every", o.series_every, "solver");
    read(s, "seed", o.seed, "solver");
  }
  if (j.contains("init")) {
    std::string text;
    read(j, "init", text, "");
    try {
      c.study.init = InitSpec::parse(text);
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("config: init: ") + e.what());
    }
  }
  if (j.contains("study")) {
    const json& s = j.at("study");
    check_keys(s, "study",
               {"alphas", "weights", "floor_particles", "floor_replicas", "uniqueness_alpha", "uniqueness_inits",
                "spectral_sizes", "gain_orders", "tail_ratio_max", "tail_stability", "nonlinear_weight"});
    StudyConfig& o = c.study;
    read(s, "alphas", o.alphas, "study");
    if (s.contains("weights")) {
      if (!s.at("weights").is_array()) throw ConfigError("config: 'study.weights' must be an array");
      o.weights.clear();
      for (const auto& w : s.at("weights")) o.weights.push_back(weight_from(w, "study.weights"));
    }
    read(s, "floor_particles", o.floor_particles, "study");
    read(s, "floor_replicas", o.floor_replicas, "study");
    read(s, "uniqueness_alpha", o.uniqueness_alpha, "study");
    if (s.contains("uniqueness_inits")) {
      std::vector<std::string> names;
      read(s, "uniqueness_inits", names, "study");
      o.uniqueness_inits.clear();
      try {
        for (const auto& n : names) o.uniqueness_inits.push_back(InitSpec::parse(n));
      } catch (const ValidationError& e) {
        throw ConfigError(std::string("config: study.uniqueness_inits: ") + e.what());
      }
    }
    read(s, "spectral_sizes", o.spectral_sizes, "study");
    if (s.contains("gain_orders")) {
      const json& g = s.at("gain_orders");
      check_keys(g, "study.gain_orders", {"radial", "polar", "sigma"});
      read(g, "radial", o.orders.radial, "study.gain_orders");
      read(g, "polar", o.orders.polar, "study.gain_orders");
      read(g, "sigma", o.orders.sigma, "study.gain_orders");
    }
    read(s, "tail_ratio_max", o.tail_ratio_max, "study");
    read(s, "tail_stability", o.tail_stability, "study");
    if (s.contains("nonlinear_weight")) o.nonlinear_weight = weight_from(s.at("nonlinear_weight"), "study.nonlinear_weight");
  }
  if (j.contains("validate")) {
    const json& v = j.at("validate");
    check_keys(v, "validate", {"filter", "inject_fault", "carleman_samples"});
    read(v, "filter", c.validate.filter, "validate");
    read(v, "inject_fault", c.validate.inject_fault, "validate");
    read(v, "carleman_samples", c.validate.carleman_samples, "validate");
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, "output", {"dir", "checkpoint"});
    read(o, "dir", c.output.dir, "output");
    read(o, "checkpoint", c.output.checkpoint, "output");
  }
  read(j, "restore", c.restore, "");
  read(j, "workers", c.study.workers, "");
  return c;
}

void RunConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json root = to_json();
  json* node = &root;
  std::string path;
  std::istringstream parts(key);
  std::string part;
  std::vector<std::string> names;
  while (std::getline(parts, part, '.')) names.push_back(part);
  for (std::size_t i = 0; i < names.size(); ++i) {
    path += (path.empty() ? "" : ".") + names[i];
    if (!node->is_object() || !node->contains(names[i])) throw ConfigError("config: unknown key '" + path + "'");
    node = &(*node)[names[i]];
  }
  // Strings stay strings even when they look like JSON (e.g. an init named "1").
  if (node->is_string() && !value.is_string()) value = text;
  *node = value;
  *this = from_json(root);
}

std::string RunConfig::hash() const {
  json j = to_json();
  j.erase("output");
  j.erase("workers");
  return fnv1a(j.dump());
}

void RunConfig::validate_all() const {
  study.validate();
  static const std::set<std::string> faults{"", "k3", "povzner", "collision"};
  if (!faults.count(validate.inject_fault))
    throw ConfigError("config: validate.inject_fault must be one of k3, povzner, collision");
  if (validate.carleman_samples < 10'000) throw ConfigError("config: validate.carleman_samples must be >= 10000");
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + " is not valid JSON (" + e.what() + ")");
  }
  return RunConfig::from_json(j);
}

}  // namespace annihilation
