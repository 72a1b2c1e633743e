#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tetipc/sim.hpp"

namespace tetipc {

inline constexpr const char* kSceneSchema = "tetipc-scene-1";

struct ObjectSpec {
  std::string mesh_path;  // empty selects the box generator
  Eigen::Vector3i cells{1, 1, 1};
  Vec3<double> size{1, 1, 1};
  double density = 1000;
  MaterialModel model = MaterialModel::StableNeoHookean;
  double mu = 0, lambda = 0;
  Vec3<double> translate = Vec3<double>::Zero();
  Vec3<double> rot_axis = Vec3<double>::UnitZ();
  double rot_deg = 0;
  Vec3<double> velocity = Vec3<double>::Zero();
  bool fixed = false;
};

struct SceneSpec {
  std::string name;
  std::filesystem::path base_dir;
  Vec3<double> gravity{0, -9.8, 0};
  std::vector<ObjectSpec> objects;
  std::vector<GroundSpec<double>> grounds;
  std::vector<Script<double>> scripts;
  double h = 0.01;
  double d_hat = 0;  // 0 resolves from d_hat_fraction
  double d_hat_fraction = 0.5;
  double kappa = 1e5;
  double epsilon = 1e-4;
  int iter_max = 150;
  BetaVariant beta = BetaVariant::DaiKou;
  Splitting splitting = Splitting::Off;
  int frames = 100;
  std::string out_dir = "out";
};

namespace detail {

inline Vec3<double> parse_vec3(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw SceneError(std::string(what) + " must be a 3-array");
  return Vec3<double>(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline ObjectSpec parse_object(const nlohmann::json& j) {
  ObjectSpec o;
  if (j.contains("mesh")) {
    o.mesh_path = j.at("mesh").get<std::string>();
  } else if (j.contains("box")) {
    const auto& b = j.at("box");
    const auto& c = b.at("cells");
    if (!c.is_array() || c.size() != 3) throw SceneError("box.cells must be a 3-array");
    o.cells = Eigen::Vector3i(c[0].get<int>(), c[1].get<int>(), c[2].get<int>());
    if ((o.cells.array() < 1).any()) throw SceneError("box.cells must be positive");
    if (b.contains("size")) o.size = parse_vec3(b.at("size"), "box.size");
  } else {
    throw SceneError("object needs either 'mesh' or 'box'");
  }
  o.density = j.value("density", 1000.0);
  if (o.density <= 0) throw SceneError("density must be positive");

  const auto& m = j.at("material");
  o.model = material_model_from_string(m.at("model").get<std::string>());
  if (m.contains("mu") || m.contains("lambda")) {
    o.mu = m.at("mu").get<double>();
    o.lambda = m.at("lambda").get<double>();
  } else {
    const auto mat = material_from_youngs<double>(o.model, m.at("youngs").get<double>(),
                                                  m.at("poisson").get<double>());
    o.mu = mat.mu;
    o.lambda = mat.lambda;
  }

  if (j.contains("translate")) o.translate = parse_vec3(j.at("translate"), "translate");
  if (j.contains("rotate")) {
    o.rot_axis = parse_vec3(j.at("rotate").at("axis"), "rotate.axis");
    o.rot_deg = j.at("rotate").at("deg").get<double>();
  }
  if (j.contains("velocity")) o.velocity = parse_vec3(j.at("velocity"), "velocity");
  o.fixed = j.value("fixed", false);
  return o;
}

inline GroundSpec<double> parse_ground(const nlohmann::json& j) {
  GroundSpec<double> g;
  if (j.contains("normal")) g.n = parse_vec3(j.at("normal"), "ground.normal").normalized();
  g.offset = j.value("offset", 0.0);
  if (j.contains("keyframes")) {
    for (const auto& k : j.at("keyframes")) {
      if (!k.is_array() || k.size() != 2)
        throw SceneError("ground keyframe must be [time, offset]");
      g.keyframes.emplace_back(k[0].get<double>(), k[1].get<double>());
    }
    for (size_t i = 1; i < g.keyframes.size(); ++i)
      if (g.keyframes[i].first <= g.keyframes[i - 1].first)
        throw SceneError("ground keyframe times must be strictly increasing");
  }
  return g;
}

inline Script<double> parse_script(const nlohmann::json& j) {
  Script<double> s;
  s.kind = script_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("object")) {
    s.object = j.at("object").get<int>();
  } else {
    s.box_lo = parse_vec3(j.at("box_lo"), "script.box_lo");
    s.box_hi = parse_vec3(j.at("box_hi"), "script.box_hi");
  }
  s.t0 = j.value("t0", 0.0);
  s.t1 = j.value("t1", std::numeric_limits<double>::infinity());
  if (s.t1 < s.t0) throw SceneError("script window has t1 < t0");
  if (j.contains("velocity")) s.velocity = parse_vec3(j.at("velocity"), "script.velocity");
  if (j.contains("axis")) s.axis = parse_vec3(j.at("axis"), "script.axis");
  if (j.contains("center")) s.center = parse_vec3(j.at("center"), "script.center");
  s.deg_per_s = j.value("deg_per_s", 0.0);
  return s;
}

}  // namespace detail

inline SceneSpec load_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SceneError("cannot open scene file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SceneError("scene parse error in " + path.string() + ": " + e.what());
  }
  try {
    if (j.value("schema", "") != kSceneSchema)
      throw SceneError("scene file must declare \"schema\": \"" + std::string(kSceneSchema) +
                       "\"");
    SceneSpec s;
    s.base_dir = path.parent_path();
    s.name = j.value("name", path.stem().string());
    if (j.contains("gravity")) s.gravity = detail::parse_vec3(j.at("gravity"), "gravity");
    if (!j.contains("objects") || j.at("objects").empty())
      throw SceneError("scene has no objects");
    for (const auto& o : j.at("objects")) s.objects.push_back(detail::parse_object(o));
    if (j.contains("ground"))
      for (const auto& g : j.at("ground")) s.grounds.push_back(detail::parse_ground(g));
    if (j.contains("scripts"))
      for (const auto& sc : j.at("scripts")) s.scripts.push_back(detail::parse_script(sc));
    if (j.contains("solver")) {
      const auto& c = j.at("solver");
      s.h = c.value("h", s.h);
      if (s.h <= 0) throw SceneError("solver.h must be positive");
      s.d_hat = c.value("d_hat", s.d_hat);
      s.d_hat_fraction = c.value("d_hat_fraction", s.d_hat_fraction);
      s.kappa = c.value("kappa", s.kappa);
      s.epsilon = c.value("epsilon", s.epsilon);
      s.iter_max = c.value("iter_max", s.iter_max);
      if (c.contains("beta_variant"))
        s.beta = beta_variant_from_string(c.at("beta_variant").get<std::string>());
      if (c.contains("splitting"))
        s.splitting = splitting_from_string(c.at("splitting").get<std::string>());
    }
    if (j.contains("output")) {
      const auto& o = j.at("output");
      s.frames = o.value("frames", s.frames);
      s.out_dir = o.value("directory", s.out_dir);
      if (o.contains("formats")) {
        bool has_obj = false;
        for (const auto& f : o.at("formats")) has_obj |= f.get<std::string>() == "obj";
        if (!has_obj) throw SceneError("output.formats must include \"obj\"");
      }
    }
    if (s.frames < 1) throw SceneError("output.frames must be positive");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw SceneError("scene error in " + path.string() + ": " + e.what());
  }
}

template <class T>
Simulation<T> build_simulation(const SceneSpec& spec) {
  std::vector<TetMesh<T>> parts;
  std::vector<Material<T>> materials;
  parts.reserve(spec.objects.size());
  for (const auto& o : spec.objects) {
    TetMesh<T> part =
        o.mesh_path.empty()
            ? make_box_mesh<T>(o.cells[0], o.cells[1], o.cells[2], o.size.cast<T>().eval(),
                               T(o.density))
            : load_mesh<T>((spec.base_dir / o.mesh_path).string(), MeshFormat::Auto,
                           T(o.density));
    if (o.rot_deg != 0) {
      Vec3<T> c = Vec3<T>::Zero();
      for (const auto& v : part.vertices_rest) c += v;
      c /= T(part.num_vertices());
      const Mat3<T> R = Eigen::AngleAxis<T>(T(o.rot_deg) * T(EIGEN_PI) / T(180),
                                            o.rot_axis.cast<T>().normalized())
                            .toRotationMatrix();
      std::vector<Vec3<T>> verts = part.vertices_rest;
      for (auto& v : verts) v = c + R * (v - c) + o.translate.cast<T>();
      part = build_tet_mesh<T>(std::move(verts), part.tets, T(o.density));
    } else if (!o.translate.isZero()) {
      std::vector<Vec3<T>> verts = part.vertices_rest;
      for (auto& v : verts) v += o.translate.cast<T>();
      part = build_tet_mesh<T>(std::move(verts), part.tets, T(o.density));
    }
    parts.push_back(std::move(part));
    materials.push_back(Material<T>{o.model, T(o.mu), T(o.lambda)});
  }

  T dhat = T(spec.d_hat);
  if (dhat <= 0) {
    T sum = 0;
    index_t n = 0;
    for (const auto& p : parts) {
      sum += p.average_surface_edge_length() * T(p.surface_edges.size());
      n += static_cast<index_t>(p.surface_edges.size());
    }
    if (n == 0) throw SceneError("cannot resolve d_hat_fraction: no surface edges");
    dhat = T(spec.d_hat_fraction) * sum / T(n);
  }

  Simulation<T> sim;
  sim.world = make_world<T>(parts, materials, dhat);
  sim.gravity = spec.gravity.cast<T>();
  for (size_t i = 0; i < spec.objects.size(); ++i)
    if (spec.objects[i].fixed)
      for (index_t v = 0; v < sim.world.num_vertices(); ++v)
        if (sim.world.vertex_object[v] == static_cast<index_t>(i)) sim.world.fixed[v] = 1;

  for (const auto& sd : spec.scripts) {
    Script<T> s;
    s.kind = sd.kind;
    s.object = sd.object;
    s.box_lo = sd.box_lo.cast<T>();
    s.box_hi = sd.box_hi.cast<T>();
    s.t0 = T(sd.t0);
    s.t1 = T(sd.t1);
    s.velocity = sd.velocity.cast<T>();
    s.axis = sd.axis.cast<T>();
    s.center = sd.center.cast<T>();
    s.deg_per_s = T(sd.deg_per_s);
    sim.scripts.push_back(std::move(s));
  }
  for (const auto& gd : spec.grounds) {
    GroundSpec<T> g;
    g.n = gd.n.cast<T>();
    g.offset = T(gd.offset);
    for (const auto& [t, o] : gd.keyframes) g.keyframes.emplace_back(T(t), T(o));
    sim.grounds.push_back(std::move(g));
  }

  sim.solver.h = T(spec.h);
  sim.solver.dhat = dhat;
  sim.solver.kappa = T(spec.kappa);
  sim.solver.epsilon = T(spec.epsilon);
  sim.solver.iter_max = spec.iter_max;
  sim.solver.beta = spec.beta;
  sim.solver.splitting = spec.splitting;

  sim.init();
  for (size_t i = 0; i < spec.objects.size(); ++i)
    if (!spec.objects[i].velocity.isZero())
      for (index_t v = 0; v < sim.world.num_vertices(); ++v)
        if (sim.world.vertex_object[v] == static_cast<index_t>(i))
          sim.state.v[v] = spec.objects[i].velocity.cast<T>();
  return sim;
}

}  // namespace tetipc
