#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "tetipc/solver.hpp"

namespace tetipc {

enum class ScriptKind { Fix, Translate, Rotate };

inline ScriptKind script_kind_from_string(const std::string& s) {
  if (s == "fix") return ScriptKind::Fix;
  if (s == "translate") return ScriptKind::Translate;
  if (s == "rotate") return ScriptKind::Rotate;
  throw SceneError("unknown script kind '" + s + "'");
}

// A rigid motion of the selected vertices' rest positions over [t0, t1];
// outside the window the vertices are free.
template <class T>
struct Script {
  ScriptKind kind = ScriptKind::Fix;
  int object = -1;  // -1 selects by rest-position box instead
  Vec3<T> box_lo = Vec3<T>::Zero();
  Vec3<T> box_hi = Vec3<T>::Zero();
  T t0 = 0;
  T t1 = std::numeric_limits<T>::infinity();
  Vec3<T> velocity = Vec3<T>::Zero();  // Translate
  Vec3<T> axis = Vec3<T>::UnitZ();     // Rotate
  Vec3<T> center = Vec3<T>::Zero();
  T deg_per_s = 0;
  std::vector<index_t> verts;

  bool active(T t) const { return t >= t0 && t <= t1; }

  Vec3<T> position(const Vec3<T>& rest, T t) const {
    const T tc = std::clamp(t, t0, t1) - t0;
    switch (kind) {
      case ScriptKind::Fix: return rest;
      case ScriptKind::Translate: return rest + tc * velocity;
      case ScriptKind::Rotate: {
        const T ang = deg_per_s * tc * T(EIGEN_PI) / T(180);
        const Mat3<T> R = Eigen::AngleAxis<T>(ang, axis.normalized()).toRotationMatrix();
        return center + R * (rest - center);
      }
    }
    return rest;
  }
};

template <class T>
void resolve_script_selection(Script<T>& s, const World<T>& w) {
  s.verts.clear();
  for (index_t v = 0; v < w.num_vertices(); ++v) {
    if (s.object >= 0) {
      if (w.vertex_object[v] == s.object) s.verts.push_back(v);
    } else {
      const Vec3<T>& r = w.mesh.vertices_rest[v];
      if ((r.array() >= s.box_lo.array()).all() && (r.array() <= s.box_hi.array()).all())
        s.verts.push_back(v);
    }
  }
  if (s.verts.empty()) throw SceneError("script selects no vertices");
}

// Analytic half-space with an optional piecewise-linear offset track.
template <class T>
struct GroundSpec {
  Vec3<T> n = Vec3<T>::UnitY();
  T offset = 0;
  std::vector<std::pair<T, T>> keyframes;  // (time, offset), ascending times

  T offset_at(T t) const {
    if (keyframes.empty()) return offset;
    if (t <= keyframes.front().first) return keyframes.front().second;
    for (size_t i = 1; i < keyframes.size(); ++i) {
      if (t <= keyframes[i].first) {
        const auto& [ta, oa] = keyframes[i - 1];
        const auto& [tb, ob] = keyframes[i];
        return oa + (ob - oa) * (t - ta) / (tb - ta);
      }
    }
    return keyframes.back().second;
  }

  GroundPlane<T> plane_at(T t) const { return GroundPlane<T>{n, offset_at(t)}; }
};

template <class T>
struct SimState {
  std::vector<Vec3<T>> x;
  std::vector<Vec3<T>> v;
  T t = 0;
  int frame = 0;
};

// One implicit-Euler simulation: x_tilde predictor, kinematic scripts as
// masked vertices, per-step minimization, velocity update v' = (x' - x)/h.
template <class T>
struct Simulation {
  World<T> world;
  std::vector<std::uint8_t> base_fixed;
  std::vector<Script<T>> scripts;
  std::vector<GroundSpec<T>> grounds;
  SolverConfig<T> solver;
  Vec3<T> gravity{T(0), T(-9.8), T(0)};
  SimState<T> state;

  void init() {
    base_fixed = world.fixed;
    for (auto& s : scripts) resolve_script_selection(s, world);
    state.x = world.mesh.vertices_rest;
    state.v.assign(state.x.size(), Vec3<T>::Zero());
    state.t = 0;
    state.frame = 0;
  }

  std::vector<GroundPlane<T>> grounds_at(T t) const {
    std::vector<GroundPlane<T>> out;
    out.reserve(grounds.size());
    for (const auto& g : grounds) out.push_back(g.plane_at(t));
    return out;
  }

  ConvergenceRecord<T> step() {
    const index_t nv = world.num_vertices();
    const T h = solver.h;
    const T tn = state.t + h;

    world.fixed = base_fixed;
    for (const auto& s : scripts) {
      if (!s.active(tn)) continue;
      for (index_t v : s.verts) {
        const Vec3<T>& rest = world.mesh.vertices_rest[v];
        const Vec3<T> pn = s.position(rest, tn);
        state.v[v] = (pn - s.position(rest, state.t)) / h;
        state.x[v] = pn;
        world.fixed[v] = 2;
      }
    }

    const std::vector<Vec3<T>> xprev = state.x;
    std::vector<Vec3<T>> xt(static_cast<size_t>(nv));
    for (index_t v = 0; v < nv; ++v)
      xt[v] = world.fixed[v] ? state.x[v]
                             : state.x[v] + h * state.v[v] + h * h * gravity;

    auto rec = pncg_solve(world, xt, grounds_at(tn), state.x, solver);

    for (index_t v = 0; v < nv; ++v) {
      if (world.fixed[v] == 1)
        state.v[v].setZero();
      else if (!world.fixed[v])
        state.v[v] = (state.x[v] - xprev[v]) / h;
    }
    state.t = tn;
    ++state.frame;
    return rec;
  }
};

}  // namespace tetipc
