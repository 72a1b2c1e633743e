#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

#include "tetipc/sim.hpp"

using namespace tetipc;
using Catch::Approx;

namespace {

using V3 = Vec3<double>;

World<double> box_world(int cells, MaterialModel model, double mu, double lambda, double dhat,
                        V3 origin = V3::Zero()) {
  std::vector<TetMesh<double>> parts{
      make_box_mesh<double>(cells, cells, cells, V3{1, 1, 1}, 1000.0, origin)};
  std::vector<Material<double>> mats{Material<double>{model, mu, lambda}};
  return make_world<double>(parts, mats, dhat);
}

Simulation<double> box_sim(int cells, double dhat, V3 origin = V3::Zero()) {
  Simulation<double> sim;
  sim.world = box_world(cells, MaterialModel::ARAP, 1e4, 1e4, dhat, origin);
  sim.solver.dhat = dhat;
  return sim;
}

double min_ground_gap(const Simulation<double>& sim) {
  double dmin = std::numeric_limits<double>::infinity();
  for (const auto& g : sim.grounds_at(sim.state.t))
    for (index_t v : sim.world.mesh.surface_vertices)
      dmin = std::min(dmin, g.n.dot(sim.state.x[v]) - g.offset);
  return dmin;
}

}  // namespace

TEST_CASE("rest state is a fixed point of the step") {
  auto sim = box_sim(1, 0.05);
  sim.gravity.setZero();
  sim.init();
  const auto rest = sim.state.x;
  for (int k = 0; k < 3; ++k) {
    auto rec = sim.step();
    REQUIRE(rec.iterations == 0);
    REQUIRE(rec.converged);
  }
  REQUIRE(std::memcmp(sim.state.x.data(), rest.data(), rest.size() * sizeof(V3)) == 0);
  for (const auto& v : sim.state.v) REQUIRE(v.norm() == 0.0);
  REQUIRE(sim.state.frame == 3);
  REQUIRE(sim.state.t == Approx(3 * sim.solver.h).epsilon(1e-15));
}

TEST_CASE("free fall follows the ballistic predictor") {
  auto sim = box_sim(1, 0.05);
  sim.world.elasticity_enabled = false;
  sim.init();
  const V3 v0{0.3, 0.1, -0.2};
  for (auto& v : sim.state.v) v = v0;
  const auto x0 = sim.state.x;
  const double h = sim.solver.h;

  auto rec = sim.step();
  REQUIRE(rec.iterations == 1);
  const V3 dx = h * v0 + h * h * sim.gravity;
  for (size_t i = 0; i < x0.size(); ++i) {
    REQUIRE((sim.state.x[i] - x0[i] - dx).norm() < 1e-12);
    REQUIRE((sim.state.v[i] - (v0 + h * sim.gravity)).norm() < 1e-12);
  }
}

TEST_CASE("elastic free fall is a pure translation") {
  auto sim = box_sim(1, 0.05);
  sim.solver.epsilon = 1e-10;
  sim.init();
  const auto x0 = sim.state.x;
  sim.step();
  const V3 d0 = sim.state.x[0] - x0[0];
  const double h = sim.solver.h;
  REQUIRE((d0 - h * h * sim.gravity).norm() < 1e-7);
  for (size_t i = 1; i < x0.size(); ++i)
    REQUIRE((sim.state.x[i] - x0[i] - d0).norm() < 1e-7);
}

TEST_CASE("rotate script sweeps the scripted angle") {
  auto sim = box_sim(1, 0.05);
  sim.solver.h = 0.1;
  Script<double> s;
  s.kind = ScriptKind::Rotate;
  s.object = 0;
  s.axis = V3::UnitZ();
  s.center = V3::Zero();
  s.deg_per_s = 72.0;
  sim.scripts.push_back(s);
  sim.init();

  index_t corner = -1;
  for (index_t v = 0; v < sim.world.num_vertices(); ++v)
    if ((sim.world.mesh.vertices_rest[v] - V3{1, 0, 0}).norm() < 1e-12) corner = v;
  REQUIRE(corner >= 0);

  for (int k = 0; k < 25; ++k) {
    const double tprev = sim.state.t;
    auto rec = sim.step();
    REQUIRE(rec.iterations == 0);
    const V3 rest = sim.world.mesh.vertices_rest[corner];
    REQUIRE((sim.state.x[corner] - s.position(rest, sim.state.t)).norm() < 1e-13);
    const V3 vexp = (s.position(rest, sim.state.t) - s.position(rest, tprev)) / sim.solver.h;
    REQUIRE((sim.state.v[corner] - vexp).norm() < 1e-12);
  }
  REQUIRE(sim.state.t == Approx(2.5).epsilon(1e-14));
  REQUIRE((sim.state.x[corner] - V3{-1, 0, 0}).norm() < 1e-12);
}

TEST_CASE("translate script places vertices and releases cleanly") {
  auto sim = box_sim(1, 0.05);
  sim.world.elasticity_enabled = false;
  sim.gravity.setZero();
  sim.solver.h = 0.1;
  Script<double> s;
  s.kind = ScriptKind::Translate;
  s.object = 0;
  s.velocity = V3{0.1, 0.2, 0};
  s.t1 = 0.25;
  sim.scripts.push_back(s);
  sim.init();
  const auto rest = sim.world.mesh.vertices_rest;

  sim.step();
  sim.step();
  for (size_t i = 0; i < rest.size(); ++i) {
    REQUIRE((sim.state.x[i] - rest[i] - 0.2 * s.velocity).norm() < 1e-13);
    REQUIRE((sim.state.v[i] - s.velocity).norm() < 1e-13);
    REQUIRE(sim.world.fixed[i] == 2);
  }

  const auto x2 = sim.state.x;
  auto rec = sim.step();
  REQUIRE(rec.iterations == 1);
  for (size_t i = 0; i < rest.size(); ++i) {
    REQUIRE(sim.world.fixed[i] == 0);
    REQUIRE((sim.state.x[i] - x2[i] - sim.solver.h * s.velocity).norm() < 1e-12);
  }
}

TEST_CASE("fix script holds a selection against gravity") {
  auto sim = box_sim(2, 0.05);
  Script<double> s;
  s.kind = ScriptKind::Fix;
  s.box_lo = V3{-0.1, -0.1, -0.1};
  s.box_hi = V3{1.1, 0.01, 1.1};
  sim.scripts.push_back(s);
  sim.init();
  REQUIRE(sim.scripts[0].verts.size() == 9);
  const auto rest = sim.world.mesh.vertices_rest;

  for (int k = 0; k < 5; ++k) sim.step();
  double top_drop = 0;
  for (index_t v = 0; v < sim.world.num_vertices(); ++v) {
    if (std::binary_search(sim.scripts[0].verts.begin(), sim.scripts[0].verts.end(), v)) {
      REQUIRE(std::memcmp(sim.state.x[v].data(), rest[v].data(), sizeof(V3)) == 0);
      REQUIRE(sim.state.v[v].norm() == 0.0);
    } else if (rest[v][1] > 0.9) {
      top_drop = std::min(top_drop, sim.state.x[v][1] - rest[v][1]);
    }
  }
  REQUIRE(top_drop < -1e-6);
}

TEST_CASE("script selection validates its target") {
  auto w = box_world(1, MaterialModel::ARAP, 1e4, 1e4, 0.05);
  Script<double> s;
  s.box_lo = V3{5, 5, 5};
  s.box_hi = V3{6, 6, 6};
  REQUIRE_THROWS_AS(resolve_script_selection(s, w), SceneError);

  std::vector<TetMesh<double>> parts{
      make_box_mesh<double>(1, 1, 1, V3{1, 1, 1}, 1000.0, V3::Zero()),
      make_box_mesh<double>(1, 1, 1, V3{1, 1, 1}, 1000.0, V3{3, 0, 0})};
  std::vector<Material<double>> mats{Material<double>{MaterialModel::ARAP, 1e4, 1e4},
                                     Material<double>{MaterialModel::ARAP, 1e4, 1e4}};
  auto w2 = make_world<double>(parts, mats, 0.05);
  Script<double> s2;
  s2.object = 1;
  resolve_script_selection(s2, w2);
  REQUIRE(s2.verts.size() == 8);
  for (index_t v : s2.verts) REQUIRE(w2.vertex_object[v] == 1);
}

TEST_CASE("ground keyframes interpolate piecewise linearly") {
  GroundSpec<double> g;
  g.offset = 0.7;
  REQUIRE(g.offset_at(12.0) == 0.7);

  g.keyframes = {{0.0, 0.0}, {1.0, 0.5}, {3.0, 0.5}};
  REQUIRE(g.offset_at(-0.5) == 0.0);
  REQUIRE(g.offset_at(0.5) == Approx(0.25).epsilon(1e-15));
  REQUIRE(g.offset_at(1.0) == Approx(0.5).epsilon(1e-15));
  REQUIRE(g.offset_at(2.0) == Approx(0.5).epsilon(1e-15));
  REQUIRE(g.offset_at(5.0) == 0.5);
  REQUIRE(g.plane_at(0.5).offset == Approx(0.25).epsilon(1e-15));
  REQUIRE(g.plane_at(0.5).n == V3::UnitY());
}

TEST_CASE("a falling box settles on the ground without penetration") {
  auto sim = box_sim(1, 0.05, V3{0, 0.2, 0});
  sim.world = box_world(1, MaterialModel::ARAP, 1e5, 1e5, 0.05, V3{0, 0.2, 0});
  sim.grounds.push_back(GroundSpec<double>{});
  sim.solver.kappa = 1e4;
  sim.solver.epsilon = 1e-3;
  sim.init();

  for (int k = 0; k < 80; ++k) {
    sim.step();
    REQUIRE(min_ground_gap(sim) > 0.0);
  }
  REQUIRE(min_ground_gap(sim) < sim.solver.dhat);
  double vmax = 0;
  for (const auto& v : sim.state.v) vmax = std::max(vmax, v.norm());
  REQUIRE(vmax < 0.5);
}
