#include "pfvm/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pfvm/errors.hpp"

namespace pfvm {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InputError("config key '" + path + "': " + what);
}

void require_keys(const json& node, const std::string& path, std::set<std::string> allowed) {
  if (!node.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : node.items())
    if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown key");
}

double get_number(const json& node, const std::string& path) {
  if (!node.is_number()) fail(path, "expected a number");
  return node.get<double>();
}

int get_int(const json& node, const std::string& path) {
  if (!node.is_number_integer()) fail(path, "expected an integer");
  return node.get<int>();
}

std::string get_string(const json& node, const std::string& path) {
  if (!node.is_string()) fail(path, "expected a string");
  return node.get<std::string>();
}

template <typename T, typename F>
std::array<T, 3> get_triple(const json& node, const std::string& path, F get) {
  if (!node.is_array() || node.size() != 3) fail(path, "expected an array of 3 values");
  return {get(node[0], path + "[0]"), get(node[1], path + "[1]"), get(node[2], path + "[2]")};
}

Vec3 get_vec3(const json& node, const std::string& path) {
  auto a = get_triple<double>(node, path, get_number);
  return {a[0], a[1], a[2]};
}

MeshSpec parse_mesh(const json& node) {
  MeshSpec spec;
  require_keys(node, "mesh", {"type", "extents", "cells", "spacings", "path"});
  std::string type = get_string(node.at("type"), "mesh.type");
  if (type == "box") {
    spec.kind = MeshSpec::Kind::Box;
    if (node.contains("path")) fail("mesh.path", "not allowed for box meshes");
    if (node.contains("extents")) spec.extents = get_triple<double>(node.at("extents"), "mesh.extents", get_number);
    if (node.contains("spacings")) {
      const json& sp = node.at("spacings");
      if (!sp.is_array() || sp.size() != 3) fail("mesh.spacings", "expected 3 coordinate lists");
      std::array<std::vector<double>, 3> lists;
      for (int a = 0; a < 3; ++a) {
        if (!sp[a].is_array()) fail("mesh.spacings", "expected 3 coordinate lists");
        for (const auto& v : sp[a]) lists[a].push_back(get_number(v, "mesh.spacings"));
      }
      spec.spacings = std::move(lists);
      if (node.contains("cells")) fail("mesh.cells", "give either cells or spacings, not both");
    } else if (node.contains("cells")) {
      spec.cells = get_triple<int>(node.at("cells"), "mesh.cells", get_int);
      for (int n : spec.cells)
        if (n < 1) fail("mesh.cells", "cell counts must be positive");
    }
  } else if (type == "file") {
    spec.kind = MeshSpec::Kind::File;
    if (node.contains("extents") || node.contains("cells") || node.contains("spacings"))
      fail("mesh", "file meshes take only a path");
    spec.path = get_string(node.at("path"), "mesh.path");
  } else {
    fail("mesh.type", "expected 'box' or 'file'");
  }
  return spec;
}

ModelParams parse_params(const json& node) {
  ModelParams p;
  require_keys(node, "params",
               {"latent_heat", "relax", "beta", "b", "xi", "limiter", "coupling_sign",
                "coupling_lipschitz", "g"});
  if (node.contains("latent_heat")) p.latent_heat = get_number(node.at("latent_heat"), "params.latent_heat");
  if (node.contains("relax")) p.relax = get_number(node.at("relax"), "params.relax");
  if (node.contains("beta")) p.beta = get_number(node.at("beta"), "params.beta");
  if (node.contains("b")) p.b = get_number(node.at("b"), "params.b");
  if (node.contains("xi")) p.xi = get_number(node.at("xi"), "params.xi");
  if (node.contains("limiter")) {
    const json& lim = node.at("limiter");
    require_keys(lim, "params.limiter", {"H_inf", "H0", "H1", "H_sup"});
    if (lim.contains("H_inf")) p.knots.h_inf = get_number(lim.at("H_inf"), "params.limiter.H_inf");
    if (lim.contains("H0")) p.knots.h0 = get_number(lim.at("H0"), "params.limiter.H0");
    if (lim.contains("H1")) p.knots.h1 = get_number(lim.at("H1"), "params.limiter.H1");
    if (lim.contains("H_sup")) p.knots.h_sup = get_number(lim.at("H_sup"), "params.limiter.H_sup");
  }
  if (node.contains("coupling_sign")) p.coupling_sign = get_int(node.at("coupling_sign"), "params.coupling_sign");
  if (node.contains("coupling_lipschitz"))
    p.coupling_lipschitz = get_number(node.at("coupling_lipschitz"), "params.coupling_lipschitz");
  if (node.contains("g")) {
    p.g_name = get_string(node.at("g"), "params.g");
    if (p.g_name == "u") {
      p.g = [](double u, double) { return u; };
    } else if (p.g_name == "u_minus_p") {
      p.g = [](double u, double pp) { return u - pp; };
    } else {
      fail("params.g", "unknown coupling drive (expected 'u' or 'u_minus_p')");
    }
  }
  try {
    p.validate();
  } catch (const InputError& e) {
    throw InputError(std::string("config params: ") + e.what());
  }
  return p;
}

InitialSpec parse_initial(const json& node) {
  InitialSpec spec;
  require_keys(node, "initial",
               {"type", "normal", "position", "center", "radius", "undercooling", "id"});
  std::string type = get_string(node.at("type"), "initial.type");
  auto forbid = [&](const char* key) {
    if (node.contains(key)) fail(std::string("initial.") + key, "not allowed for this initial type");
  };
  if (type == "planar-front") {
    spec.kind = InitialSpec::Kind::PlanarFront;
    forbid("center");
    forbid("radius");
    forbid("id");
    if (node.contains("normal")) spec.normal = get_vec3(node.at("normal"), "initial.normal");
    if (node.contains("position")) spec.position = get_number(node.at("position"), "initial.position");
    if (node.contains("undercooling"))
      spec.undercooling = get_number(node.at("undercooling"), "initial.undercooling");
  } else if (type == "spherical-nucleus") {
    spec.kind = InitialSpec::Kind::SphericalNucleus;
    forbid("normal");
    forbid("position");
    forbid("id");
    if (node.contains("center")) spec.center = get_vec3(node.at("center"), "initial.center");
    if (node.contains("radius")) spec.radius = get_number(node.at("radius"), "initial.radius");
    if (node.contains("undercooling"))
      spec.undercooling = get_number(node.at("undercooling"), "initial.undercooling");
    if (!(spec.radius > 0.0)) fail("initial.radius", "must be positive");
  } else if (type == "expression") {
    spec.kind = InitialSpec::Kind::Expression;
    forbid("normal");
    forbid("position");
    forbid("center");
    forbid("radius");
    forbid("undercooling");
    spec.expression_id = get_string(node.at("id"), "initial.id");
  } else {
    fail("initial.type", "expected 'planar-front', 'spherical-nucleus' or 'expression'");
  }
  return spec;
}

DtPolicy parse_dt(const json& node) {
  DtPolicy dt;
  require_keys(node, "dt", {"policy", "value", "safety"});
  std::string policy = get_string(node.at("policy"), "dt.policy");
  if (policy == "fixed") {
    dt.kind = DtPolicy::Kind::Fixed;
    dt.value = get_number(node.at("value"), "dt.value");
    if (node.contains("safety")) fail("dt.safety", "not allowed for fixed steps");
    if (!(dt.value > 0.0)) fail("dt.value", "must be positive");
  } else if (policy == "stable") {
    dt.kind = DtPolicy::Kind::Stable;
    if (node.contains("value")) fail("dt.value", "not allowed for the stable policy");
    if (node.contains("safety")) dt.safety = get_number(node.at("safety"), "dt.safety");
    if (!(dt.safety > 0.0 && dt.safety <= 1.0)) fail("dt.safety", "must be in (0, 1]");
  } else {
    fail("dt.policy", "expected 'fixed' or 'stable'");
  }
  return dt;
}

RunConfig parse_json(const json& root) {
  RunConfig cfg;
  require_keys(root, "",
               {"mesh", "params", "boundary", "initial", "T", "dt", "integrator", "forcing",
                "snapshot_cadence", "output_dir", "study_levels", "seed"});
  if (root.contains("mesh")) cfg.mesh = parse_mesh(root.at("mesh"));
  if (root.contains("params")) cfg.params = parse_params(root.at("params"));
  if (root.contains("boundary")) {
    cfg.boundary = get_string(root.at("boundary"), "boundary");
    if (cfg.boundary != "homogeneous") fail("boundary", "only 'homogeneous' is available");
  }
  if (root.contains("initial")) cfg.initial = parse_initial(root.at("initial"));
  if (root.contains("T")) cfg.end_time = get_number(root.at("T"), "T");
  if (!(cfg.end_time > 0.0)) fail("T", "must be positive");
  if (root.contains("dt")) cfg.dt = parse_dt(root.at("dt"));
  if (root.contains("integrator")) {
    std::string name = get_string(root.at("integrator"), "integrator");
    if (name == "rk4")
      cfg.integrator = Integrator::Rk4;
    else if (name == "explicit-euler")
      cfg.integrator = Integrator::ExplicitEuler;
    else
      fail("integrator", "expected 'rk4' or 'explicit-euler'");
  }
  if (root.contains("forcing")) {
    cfg.forcing = get_string(root.at("forcing"), "forcing");
    if (cfg.forcing != "none" && cfg.forcing != "mms-trig")
      fail("forcing", "expected 'none' or 'mms-trig'");
  }
  if (root.contains("snapshot_cadence")) {
    cfg.snapshot_cadence = get_int(root.at("snapshot_cadence"), "snapshot_cadence");
    if (cfg.snapshot_cadence < 1) fail("snapshot_cadence", "must be >= 1");
  }
  if (root.contains("output_dir")) cfg.output_dir = get_string(root.at("output_dir"), "output_dir");
  if (root.contains("study_levels")) {
    cfg.study_levels = get_int(root.at("study_levels"), "study_levels");
    if (cfg.study_levels < 1) fail("study_levels", "must be >= 1");
  }
  if (root.contains("seed")) {
    if (!root.at("seed").is_number_unsigned() && !root.at("seed").is_number_integer())
      fail("seed", "expected an integer");
    cfg.seed = root.at("seed").get<unsigned long long>();
  }
  if (cfg.initial.kind == InitialSpec::Kind::Expression && cfg.forcing != "none" &&
      cfg.forcing != cfg.initial.expression_id)
    fail("forcing", "forcing id must match the initial expression id");
  return cfg;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_json(root);
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
  json root;
  json mesh;
  if (cfg.mesh.kind == MeshSpec::Kind::Box) {
    mesh["type"] = "box";
    mesh["extents"] = cfg.mesh.extents;
    if (cfg.mesh.spacings) {
      mesh["spacings"] = *cfg.mesh.spacings;
    } else {
      mesh["cells"] = cfg.mesh.cells;
    }
  } else {
    mesh["type"] = "file";
    mesh["path"] = cfg.mesh.path;
  }
  root["mesh"] = mesh;

  json params;
  params["latent_heat"] = cfg.params.latent_heat;
  params["relax"] = cfg.params.relax;
  params["beta"] = cfg.params.beta;
  params["b"] = cfg.params.b;
  params["xi"] = cfg.params.xi;
  params["limiter"] = {{"H_inf", cfg.params.knots.h_inf},
                       {"H0", cfg.params.knots.h0},
                       {"H1", cfg.params.knots.h1},
                       {"H_sup", cfg.params.knots.h_sup}};
  params["coupling_sign"] = cfg.params.coupling_sign;
  params["coupling_lipschitz"] = cfg.params.coupling_lipschitz;
  params["g"] = cfg.params.g_name;
  root["params"] = params;

  root["boundary"] = cfg.boundary;

  json initial;
  switch (cfg.initial.kind) {
    case InitialSpec::Kind::PlanarFront:
      initial["type"] = "planar-front";
      initial["normal"] = {cfg.initial.normal.x, cfg.initial.normal.y, cfg.initial.normal.z};
      initial["position"] = cfg.initial.position;
      initial["undercooling"] = cfg.initial.undercooling;
      break;
    case InitialSpec::Kind::SphericalNucleus:
      initial["type"] = "spherical-nucleus";
      initial["center"] = {cfg.initial.center.x, cfg.initial.center.y, cfg.initial.center.z};
      initial["radius"] = cfg.initial.radius;
      initial["undercooling"] = cfg.initial.undercooling;
      break;
    case InitialSpec::Kind::Expression:
      initial["type"] = "expression";
      initial["id"] = cfg.initial.expression_id;
      break;
  }
  root["initial"] = initial;

  root["T"] = cfg.end_time;
  json dt;
  if (cfg.dt.kind == DtPolicy::Kind::Fixed) {
    dt["policy"] = "fixed";
    dt["value"] = cfg.dt.value;
  } else {
    dt["policy"] = "stable";
    dt["safety"] = cfg.dt.safety;
  }
  root["dt"] = dt;
  root["integrator"] = cfg.integrator == Integrator::Rk4 ? "rk4" : "explicit-euler";
  root["forcing"] = cfg.forcing;
  root["snapshot_cadence"] = cfg.snapshot_cadence;
  root["output_dir"] = cfg.output_dir;
  root["study_levels"] = cfg.study_levels;
  root["seed"] = cfg.seed;
  return root.dump(2) + "\n";
}

}  // namespace pfvm
