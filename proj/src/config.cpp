#include "ddc/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "ddc/csv_io.hpp"
#include "ddc/errors.hpp"

namespace ddc {

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

class Reader {
 public:
  std::map<std::string, int> lines;

  void allow(const YAML::Node& map, const std::string& where, const std::set<std::string>& keys) {
    if (!map.IsMap()) throw ConfigError(where + " must be a mapping", line_of(map));
    lines[where] = line_of(map);
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!keys.count(key)) throw ConfigError("unknown key '" + key + "' in " + where, line_of(kv.first));
      lines[where + "." + key] = line_of(kv.second);
    }
  }

  double number(const YAML::Node& n, const std::string& what) {
    if (!n.IsScalar()) throw ConfigError(what + " must be a number", line_of(n));
    try {
      return n.as<double>();
    } catch (const YAML::Exception&) {
      throw ConfigError(what + " must be a number, got '" + n.Scalar() + "'", line_of(n));
    }
  }

  long long integer(const YAML::Node& n, const std::string& what) {
    if (!n.IsScalar()) throw ConfigError(what + " must be an integer", line_of(n));
    try {
      return n.as<long long>();
    } catch (const YAML::Exception&) {
      throw ConfigError(what + " must be an integer, got '" + n.Scalar() + "'", line_of(n));
    }
  }

  std::optional<double> optional_number(const YAML::Node& n, const std::string& what) {
    if (!n || n.IsNull()) return std::nullopt;
    return number(n, what);
  }

  Vector vector(const YAML::Node& n, const std::string& what) {
    if (!n.IsSequence() || n.size() == 0) throw ConfigError(what + " must be a nonempty list", line_of(n));
    Vector v(static_cast<Eigen::Index>(n.size()));
    for (std::size_t i = 0; i < n.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(n[i], what);
    return v;
  }

  Matrix matrix(const YAML::Node& n, const std::string& what) {
    if (!n.IsSequence() || n.size() == 0) throw ConfigError(what + " must be a nonempty list of rows", line_of(n));
    std::size_t cols = 0;
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (!n[i].IsSequence() || n[i].size() == 0) throw ConfigError(what + " rows must be nonempty lists", line_of(n[i]));
      if (i == 0) cols = n[i].size();
      if (n[i].size() != cols) throw ConfigError(what + " rows have different lengths", line_of(n[i]));
    }
    Matrix m(static_cast<Eigen::Index>(n.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < n.size(); ++i)
      for (std::size_t j = 0; j < cols; ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = number(n[i][j], what);
    return m;
  }

  const YAML::Node required(const YAML::Node& map, const std::string& key, const std::string& where) {
    const YAML::Node n = map[key];
    if (!n) throw ConfigError(where + "." + key + " is required", line_of(map));
    return n;
  }
};

void read_attack(Reader& rd, const YAML::Node& n, ExperimentConfig& cfg) {
  rd.allow(n, "attack", {"phi", "modes"});
  cfg.attack.phi = rd.optional_number(n["phi"], "attack.phi");
  const YAML::Node modes = rd.required(n, "modes", "attack");
  if (!modes.IsSequence() || modes.size() == 0) throw ConfigError("attack.modes must be a nonempty list", line_of(modes));
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const std::string where = "attack.modes." + std::to_string(k + 1);
    const YAML::Node m = modes[k];
    rd.allow(m, where, {"additive", "scale", "D", "Ka"});
    if (m["additive"]) {
      if (m["D"] || m["Ka"]) throw ConfigError(where + ": use either 'additive' or 'D'/'Ka'", line_of(m));
      const double scale = m["scale"] ? rd.number(m["scale"], where + ".scale") : 1.0;
      cfg.attack.modes.push_back(AttackMode::raw(scale * rd.matrix(m["additive"], where + ".additive")));
    } else {
      if (m["scale"]) throw ConfigError(where + ": 'scale' applies to additive modes only", line_of(m["scale"]));
      const Vector d = rd.vector(rd.required(m, "D", where), where + ".D");
      cfg.attack.modes.push_back(AttackMode::fdi(d.asDiagonal(), rd.matrix(rd.required(m, "Ka", where), where + ".Ka")));
    }
  }
}

void read_schedule(Reader& rd, const YAML::Node& n, ExperimentConfig& cfg) {
  rd.allow(n, "schedule", {"tau", "upsilon", "breakpoints", "generator"});
  if (n["tau"]) cfg.schedule.tau = rd.number(n["tau"], "schedule.tau");
  if (n["upsilon"]) cfg.schedule.upsilon = rd.number(n["upsilon"], "schedule.upsilon");
  if (n["breakpoints"] && n["generator"])
    throw ConfigError("schedule: use either 'breakpoints' or 'generator'", line_of(n));
  if (const YAML::Node g = n["generator"]) {
    rd.allow(g, "schedule.generator", {"seed", "mean_gap"});
    cfg.schedule.generator_seed =
        static_cast<std::uint64_t>(rd.integer(rd.required(g, "seed", "schedule.generator"), "schedule.generator.seed"));
    if (g["mean_gap"]) cfg.schedule.mean_gap = rd.number(g["mean_gap"], "schedule.generator.mean_gap");
    return;
  }
  const YAML::Node b = rd.required(n, "breakpoints", "schedule");
  if (!b.IsSequence() || b.size() == 0) throw ConfigError("schedule.breakpoints must be a nonempty list", line_of(b));
  for (const auto& e : b) {
    if (!e.IsSequence() || e.size() != 2) throw ConfigError("each breakpoint is [t, mode]", line_of(e));
    cfg.schedule.breakpoints.push_back({static_cast<int>(rd.integer(e[0], "breakpoint time")),
                                        static_cast<int>(rd.integer(e[1], "breakpoint mode"))});
  }
}

// Best line for a validation message: the longest recorded key it mentions.
int line_for_message(const Reader& rd, const std::string& msg) {
  int line = 0;
  std::size_t best = 0;
  for (const auto& [key, l] : rd.lines) {
    std::string k = key;
    if (msg.find(k) != std::string::npos && k.size() > best) {
      best = k.size();
      line = l;
    }
  }
  if (line == 0) {
    static const std::vector<std::pair<std::string, std::string>> hints = {
        {"attack mode ", "attack.modes"}, {"switch signal", "schedule"}, {"schedule", "schedule"},
        {"eps1", "controller.eps1"},      {"eps2", "controller.eps2"},    {"SystemModel", "system"}};
    for (const auto& [needle, key] : hints)
      if (msg.find(needle) != std::string::npos && rd.lines.count(key)) return rd.lines.at(key);
  }
  return line;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("YAML syntax error: " + e.msg, e.mark.line + 1);
  }
  if (!root || !root.IsMap()) throw ConfigError("config must be a mapping", 1);
  Reader rd;
  ExperimentConfig cfg;
  try {
    rd.allow(root, "config", {"name", "system", "offline", "controller", "attack", "schedule", "run", "solver"});
    if (root["name"]) cfg.name = root["name"].as<std::string>();

    const YAML::Node sys = rd.required(root, "system", "config");
    rd.allow(sys, "system", {"A", "B"});
    const Matrix A = rd.matrix(rd.required(sys, "A", "system"), "system.A");
    const Matrix B = rd.matrix(rd.required(sys, "B", "system"), "system.B");
    try {
      cfg.system = SystemModel(A, B);
    } catch (const InvalidInput& e) {
      throw ConfigError(e.what(), line_of(sys["B"]));
    }

    if (const YAML::Node off = root["offline"]) {
      rd.allow(off, "offline", {"T", "input_range", "x0", "noise_bound"});
      if (off["T"]) cfg.offline.T = static_cast<int>(rd.integer(off["T"], "offline.T"));
      if (off["input_range"]) {
        const Vector r = rd.vector(off["input_range"], "offline.input_range");
        if (r.size() != 2) throw ConfigError("offline.input_range must be [lo, hi]", line_of(off["input_range"]));
        cfg.offline.input_lo = r(0);
        cfg.offline.input_hi = r(1);
      }
      if (off["x0"]) cfg.offline.x0 = rd.vector(off["x0"], "offline.x0");
      cfg.offline.noise_bound = rd.optional_number(off["noise_bound"], "offline.noise_bound");
    }

    const YAML::Node ctl = rd.required(root, "controller", "config");
    rd.allow(ctl, "controller", {"delta", "eps1", "eps2", "noise_floor"});
    cfg.delta = rd.number(rd.required(ctl, "delta", "controller"), "controller.delta");
    if (ctl["eps1"]) cfg.synthesis.eps1 = rd.number(ctl["eps1"], "controller.eps1");
    if (ctl["eps2"]) cfg.synthesis.eps2 = rd.number(ctl["eps2"], "controller.eps2");
    if (ctl["noise_floor"]) cfg.noise_floor = rd.number(ctl["noise_floor"], "controller.noise_floor");

    read_attack(rd, rd.required(root, "attack", "config"), cfg);
    read_schedule(rd, rd.required(root, "schedule", "config"), cfg);

    const YAML::Node run = rd.required(root, "run", "config");
    rd.allow(run, "run", {"horizon", "seed", "x0", "u0", "noise_bound", "scenario", "baseline_gain"});
    if (run["horizon"]) cfg.horizon = static_cast<int>(rd.integer(run["horizon"], "run.horizon"));
    if (run["seed"]) cfg.seed = static_cast<std::uint64_t>(rd.integer(run["seed"], "run.seed"));
    cfg.x0 = rd.vector(rd.required(run, "x0", "run"), "run.x0");
    if (run["u0"]) cfg.u0 = rd.vector(run["u0"], "run.u0");
    cfg.noise_bound = rd.optional_number(run["noise_bound"], "run.noise_bound");
    if (run["scenario"]) {
      try {
        cfg.scenario = scenario_from_string(run["scenario"].as<std::string>());
      } catch (const InvalidInput& e) {
        throw ConfigError(e.what(), line_of(run["scenario"]));
      }
    }
    if (run["baseline_gain"] && !run["baseline_gain"].IsNull())
      cfg.baseline_gain = rd.matrix(run["baseline_gain"], "run.baseline_gain");

    if (const YAML::Node sol = root["solver"]) {
      rd.allow(sol, "solver", {"feasibility_tol", "gap_tol", "box_radius", "max_newton_steps"});
      if (sol["feasibility_tol"]) cfg.solver.feasibility_tol = rd.number(sol["feasibility_tol"], "solver.feasibility_tol");
      if (sol["gap_tol"]) cfg.solver.gap_tol = rd.number(sol["gap_tol"], "solver.gap_tol");
      if (sol["box_radius"]) cfg.solver.box_radius = rd.number(sol["box_radius"], "solver.box_radius");
      if (sol["max_newton_steps"])
        cfg.solver.max_newton_steps = static_cast<int>(rd.integer(sol["max_newton_steps"], "solver.max_newton_steps"));
      if (!(cfg.solver.feasibility_tol > 0.0 && cfg.solver.gap_tol > 0.0 && cfg.solver.box_radius > 0.0 &&
            cfg.solver.max_newton_steps > 0))
        throw ConfigError("solver settings must be positive", line_of(sol));
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), line_for_message(rd, e.what()));
  }
  return cfg;
}

std::vector<std::string> preset_names() { return {"power-generator", "power-generator-zoh", "f404"}; }

std::string preset_path(const std::string& name) {
  std::string file = name;
  for (auto& c : file)
    if (c == '-') c = '_';
  return std::string(DDC_PRESET_DIR) + "/" + file + ".yaml";
}

ExperimentConfig load_config(const std::string& path_or_preset) {
  std::string path = path_or_preset;
  for (const auto& p : preset_names())
    if (p == path_or_preset && !std::filesystem::exists(path_or_preset)) path = preset_path(p);
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config '" + path_or_preset + "'", 0);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

namespace {

void emit_number(YAML::Emitter& e, double v) { e << format_double(v); }

void emit_vector(YAML::Emitter& e, const Vector& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) emit_number(e, v(i));
  e << YAML::EndSeq;
}

void emit_matrix(YAML::Emitter& e, const Matrix& m) {
  e << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    e << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index j = 0; j < m.cols(); ++j) emit_number(e, m(i, j));
    e << YAML::EndSeq;
  }
  e << YAML::EndSeq;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << cfg.name;
  e << YAML::Key << "system" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "A" << YAML::Value;
  emit_matrix(e, cfg.system.A);
  e << YAML::Key << "B" << YAML::Value;
  emit_matrix(e, cfg.system.B);
  e << YAML::EndMap;

  e << YAML::Key << "offline" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "T" << YAML::Value << cfg.offline.T;
  e << YAML::Key << "input_range" << YAML::Value;
  emit_vector(e, Eigen::Vector2d(cfg.offline.input_lo, cfg.offline.input_hi));
  if (cfg.offline.x0.size()) {
    e << YAML::Key << "x0" << YAML::Value;
    emit_vector(e, cfg.offline.x0);
  }
  if (cfg.offline.noise_bound) {
    e << YAML::Key << "noise_bound" << YAML::Value;
    emit_number(e, *cfg.offline.noise_bound);
  }
  e << YAML::EndMap;

  e << YAML::Key << "controller" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "delta" << YAML::Value;
  emit_number(e, cfg.delta);
  e << YAML::Key << "eps1" << YAML::Value;
  emit_number(e, cfg.synthesis.eps1);
  e << YAML::Key << "eps2" << YAML::Value;
  emit_number(e, cfg.synthesis.eps2);
  e << YAML::Key << "noise_floor" << YAML::Value;
  emit_number(e, cfg.noise_floor);
  e << YAML::EndMap;

  e << YAML::Key << "attack" << YAML::Value << YAML::BeginMap;
  if (cfg.attack.phi) {
    e << YAML::Key << "phi" << YAML::Value;
    emit_number(e, *cfg.attack.phi);
  }
  e << YAML::Key << "modes" << YAML::Value << YAML::BeginSeq;
  for (const auto& m : cfg.attack.modes) {
    e << YAML::BeginMap;
    if (m.kind == AttackMode::Kind::RawAdditive) {
      e << YAML::Key << "additive" << YAML::Value;
      emit_matrix(e, m.additive);
    } else {
      e << YAML::Key << "D" << YAML::Value;
      emit_vector(e, m.D.diagonal());
      e << YAML::Key << "Ka" << YAML::Value;
      emit_matrix(e, m.Ka);
    }
    e << YAML::EndMap;
  }
  e << YAML::EndSeq << YAML::EndMap;

  e << YAML::Key << "schedule" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "tau" << YAML::Value;
  emit_number(e, cfg.schedule.tau);
  e << YAML::Key << "upsilon" << YAML::Value;
  emit_number(e, cfg.schedule.upsilon);
  if (cfg.schedule.generator_seed) {
    e << YAML::Key << "generator" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "seed" << YAML::Value << *cfg.schedule.generator_seed;
    e << YAML::Key << "mean_gap" << YAML::Value;
    emit_number(e, cfg.schedule.mean_gap);
    e << YAML::EndMap;
  } else {
    e << YAML::Key << "breakpoints" << YAML::Value << YAML::BeginSeq;
    for (const auto& b : cfg.schedule.breakpoints) e << YAML::Flow << YAML::BeginSeq << b.t << b.mode << YAML::EndSeq;
    e << YAML::EndSeq;
  }
  e << YAML::EndMap;

  e << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "horizon" << YAML::Value << cfg.horizon;
  e << YAML::Key << "seed" << YAML::Value << cfg.seed;
  e << YAML::Key << "x0" << YAML::Value;
  emit_vector(e, cfg.x0);
  if (cfg.u0.size()) {
    e << YAML::Key << "u0" << YAML::Value;
    emit_vector(e, cfg.u0);
  }
  if (cfg.noise_bound) {
    e << YAML::Key << "noise_bound" << YAML::Value;
    emit_number(e, *cfg.noise_bound);
  }
  e << YAML::Key << "scenario" << YAML::Value << to_string(cfg.scenario);
  if (cfg.baseline_gain) {
    e << YAML::Key << "baseline_gain" << YAML::Value;
    emit_matrix(e, *cfg.baseline_gain);
  }
  e << YAML::EndMap;

  e << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "feasibility_tol" << YAML::Value;
  emit_number(e, cfg.solver.feasibility_tol);
  e << YAML::Key << "gap_tol" << YAML::Value;
  emit_number(e, cfg.solver.gap_tol);
  e << YAML::Key << "box_radius" << YAML::Value;
  emit_number(e, cfg.solver.box_radius);
  e << YAML::Key << "max_newton_steps" << YAML::Value << cfg.solver.max_newton_steps;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

void set_parameter(ExperimentConfig& cfg, const std::string& name, double value) {
  if (name == "eps1") {
    if (!(value > 0.0 && value < 1.0)) throw InvalidInput("eps1 must lie in (0, 1)");
    cfg.synthesis.eps1 = value;
  } else if (name == "eps2") {
    if (!(value > 0.0)) throw InvalidInput("eps2 must be positive");
    cfg.synthesis.eps2 = value;
  } else if (name == "delta") {
    if (!(value >= 0.0)) throw InvalidInput("delta must be >= 0");
    cfg.delta = value;
  } else if (name == "tau") {
    if (!(value >= 2.0)) throw InvalidInput("tau must be >= 2");
    cfg.schedule.tau = value;
  } else if (name == "upsilon") {
    if (!(value >= 0.0)) throw InvalidInput("upsilon must be >= 0");
    cfg.schedule.upsilon = value;
  } else if (name == "noise_floor") {
    if (!(value >= 0.0)) throw InvalidInput("noise_floor must be >= 0");
    cfg.noise_floor = value;
  } else if (name == "seed") {
    if (!(value >= 0.0) || value != std::floor(value)) throw InvalidInput("seed must be a nonnegative integer");
    cfg.seed = static_cast<std::uint64_t>(value);
  } else {
    throw InvalidInput("unknown sweep parameter '" + name + "' (eps1, eps2, delta, tau, upsilon, noise_floor, seed)");
  }
}

void apply_env_overrides(sdp::SolverSettings& s) {
  auto read = [](const char* var, double& out) {
    if (const char* v = std::getenv(var)) {
      char* end = nullptr;
      const double d = std::strtod(v, &end);
      if (end == v || *end != '\0' || !(d > 0.0)) throw InvalidInput(std::string(var) + " must be a positive number");
      out = d;
    }
  };
  read("DDC_SDP_FEAS_TOL", s.feasibility_tol);
  read("DDC_SDP_GAP_TOL", s.gap_tol);
}

}  // namespace ddc
