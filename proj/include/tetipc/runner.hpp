#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "tetipc/audit.hpp"
#include "tetipc/obj_io.hpp"
#include "tetipc/scene.hpp"

namespace tetipc {

struct RunOptions {
  int precision = 17;
  bool deterministic = false;  // the engine is deterministic by construction; explicit switch
  bool use_hash = true;        // broad phase for the per-frame audit
  bool write_frames = true;
  bool verbose = true;
  std::ostream* log = &std::cout;
};

template <class T>
struct FrameStat {
  int frame = 0;
  int iterations = 0;
  bool converged = false;
  double wall_ms = 0;
  T min_distance = std::numeric_limits<T>::infinity();
  index_t constraints_max = 0;
};

template <class T>
struct RunReport {
  std::string scene;
  int frames_requested = 0;
  int frames_done = 0;
  bool success = false;
  std::string failure;
  int failed_frame = -1;
  double total_wall_ms = 0;
  double avg_iterations = 0;
  double contacts_avg = 0;
  index_t contacts_max = 0;
  T min_distance = std::numeric_limits<T>::infinity();
  std::vector<FrameStat<T>> frames;
};

namespace detail {

inline nlohmann::json json_num(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

template <class T>
nlohmann::json report_to_json(const RunReport<T>& r) {
  nlohmann::json j;
  j["scene"] = r.scene;
  j["frames_requested"] = r.frames_requested;
  j["frames_done"] = r.frames_done;
  j["success"] = r.success;
  j["failure"] = r.failure;
  j["failed_frame"] = r.failed_frame;
  j["total_wall_ms"] = r.total_wall_ms;
  j["avg_iterations"] = r.avg_iterations;
  j["contacts_avg"] = r.contacts_avg;
  j["contacts_max"] = r.contacts_max;
  j["min_distance"] = json_num(double(r.min_distance));
  auto& frames = j["frames"] = nlohmann::json::array();
  for (const auto& f : r.frames)
    frames.push_back({{"frame", f.frame},
                      {"iterations", f.iterations},
                      {"converged", f.converged},
                      {"wall_ms", f.wall_ms},
                      {"min_distance", json_num(double(f.min_distance))},
                      {"constraints_max", f.constraints_max}});
  return j;
}

inline std::string frame_obj_name(int frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d.obj", frame);
  return buf;
}

template <class T>
void append_convergence_rows(std::ostream& csv, int frame, const ConvergenceRecord<T>& rec) {
  char buf[256];
  for (const auto& r : rec.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g,%d,%d,%.17g\n", frame, r.iter,
                  double(r.dE), double(r.alpha), double(r.grad_inf), int(r.n_constraints),
                  r.capped, double(r.max_disp));
    csv << buf;
  }
}

}  // namespace detail

inline constexpr const char* kRunCsvHeader =
    "frame,iter,dE,alpha,grad_inf,n_constraints,capped,max_disp";

template <class T>
AuditReport<T> audit_simulation_frame(const Simulation<T>& sim, bool use_hash) {
  return audit_distances(sim.state.x, sim.world, sim.grounds_at(sim.state.t), sim.solver.dhat,
                         use_hash);
}

// Steps the scene for its configured frame count, writing frame OBJs, the
// per-iteration convergence CSV, a JSON summary, and one audit line per
// frame. Solver aborts and audited penetration rethrow with the frame index
// after the summary is flushed, so partial artifacts survive failures.
template <class T>
RunReport<T> run_scene(const SceneSpec& spec, const RunOptions& opt = {}) {
  namespace fs = std::filesystem;
  Simulation<T> sim = build_simulation<T>(spec);
  const fs::path out_dir(spec.out_dir);
  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "convergence.csv");
  if (!csv) throw SceneError("cannot write " + (out_dir / "convergence.csv").string());
  csv << kRunCsvHeader << "\n";

  RunReport<T> rep;
  rep.scene = spec.name;
  rep.frames_requested = spec.frames;

  auto finish = [&](bool ok, const std::string& why, int frame) {
    rep.success = ok;
    rep.failure = why;
    rep.failed_frame = ok ? -1 : frame;
    long long iter_sum = 0, c_sum = 0;
    for (const auto& f : rep.frames) {
      iter_sum += f.iterations;
      c_sum += f.constraints_max;
      rep.contacts_max = std::max(rep.contacts_max, f.constraints_max);
      rep.min_distance = std::min(rep.min_distance, f.min_distance);
      rep.total_wall_ms += f.wall_ms;
    }
    if (!rep.frames.empty()) {
      rep.avg_iterations = double(iter_sum) / double(rep.frames.size());
      rep.contacts_avg = double(c_sum) / double(rep.frames.size());
    }
    std::ofstream js(out_dir / "report.json");
    js << detail::report_to_json(rep).dump(2) << "\n";
  };

  for (int f = 1; f <= spec.frames; ++f) {
    FrameStat<T> st;
    st.frame = f;
    const auto t0 = std::chrono::steady_clock::now();
    ConvergenceRecord<T> rec;
    try {
      rec = sim.step();
    } catch (const std::runtime_error& e) {
      finish(false, e.what(), f);
      csv.flush();
      throw;
    }
    st.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    st.iterations = rec.iterations;
    st.converged = rec.converged;
    for (const auto& row : rec.rows)
      st.constraints_max = std::max(st.constraints_max, row.n_constraints);
    detail::append_convergence_rows(csv, f, rec);
    csv.flush();
    if (opt.write_frames)
      write_surface_obj((out_dir / detail::frame_obj_name(f)).string(), sim.world.mesh,
                        sim.state.x, opt.precision);

    const AuditReport<T> audit = audit_simulation_frame(sim, opt.use_hash);
    st.min_distance = audit.min_distance();
    rep.frames.push_back(st);
    rep.frames_done = f;
    if (opt.verbose && opt.log) {
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "frame %4d: iters=%3d converged=%d contacts=%d min_pt=%.6g min_ee=%.6g "
                    "min_ground=%.6g inside=%d audit=%s\n",
                    f, st.iterations, int(st.converged), int(st.constraints_max),
                    double(audit.min_pt), double(audit.min_ee), double(audit.min_ground),
                    int(audit.inside_count), audit.penetrating() ? "PENETRATION" : "ok");
      *opt.log << buf;
    }
    if (audit.penetrating()) {
      finish(false, "penetration audit failed", f);
      throw PenetrationFault("frame " + std::to_string(f) + ": audited min distance " +
                             std::to_string(double(audit.min_distance())) + ", " +
                             std::to_string(int(audit.inside_count)) +
                             " vertices inside foreign tets");
    }
  }
  finish(true, "", -1);
  return rep;
}

struct AblationResult {
  std::vector<std::string> variants;
  std::vector<std::vector<int>> iterations;  // [variant][step]
  std::vector<double> mean_iterations;       // [variant]
};

// Shared-tolerance comparison of the beta variants over the first `steps`
// time steps of one scene; per-variant traces land next to the main run
// artifacts as ablation_<name>.csv.
template <class T>
AblationResult run_ablation(const SceneSpec& spec, const std::vector<BetaVariant>& variants,
                            int steps, const RunOptions& opt = {}) {
  namespace fs = std::filesystem;
  if (variants.size() < 2) throw SceneError("ablation needs at least 2 variants");
  const fs::path out_dir(spec.out_dir);
  fs::create_directories(out_dir);

  AblationResult res;
  for (BetaVariant v : variants) {
    SceneSpec s = spec;
    s.beta = v;
    Simulation<T> sim = build_simulation<T>(s);
    const std::string name = beta_variant_name(v);
    std::ofstream csv(out_dir / ("ablation_" + name + ".csv"));
    csv << kRunCsvHeader << "\n";
    std::vector<int> iters;
    iters.reserve(static_cast<size_t>(steps));
    for (int f = 1; f <= steps; ++f) {
      const ConvergenceRecord<T> rec = sim.step();
      detail::append_convergence_rows(csv, f, rec);
      iters.push_back(rec.iterations);
    }
    long long total = 0;
    for (int i : iters) total += i;
    res.variants.push_back(name);
    res.iterations.push_back(std::move(iters));
    res.mean_iterations.push_back(double(total) / double(steps));
  }

  if (opt.verbose && opt.log) {
    auto& os = *opt.log;
    os << "step";
    for (const auto& n : res.variants) os << "," << n;
    os << "\n";
    for (int f = 0; f < steps; ++f) {
      os << f + 1;
      for (const auto& it : res.iterations) os << "," << it[static_cast<size_t>(f)];
      os << "\n";
    }
    os << "mean";
    char buf[32];
    for (double m : res.mean_iterations) {
      std::snprintf(buf, sizeof(buf), ",%.3f", m);
      os << buf;
    }
    os << "\n";
  }
  return res;
}

// Re-audits previously written frame OBJs against the scene's topology and
// (time-keyed) grounds. Returns per-frame minima in frame order.
template <class T>
std::vector<AuditReport<T>> audit_frames(const SceneSpec& spec,
                                         const std::filesystem::path& frames_dir, bool use_hash,
                                         const RunOptions& opt = {}) {
  namespace fs = std::filesystem;
  Simulation<T> sim = build_simulation<T>(spec);
  const auto& m = sim.world.mesh;

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(frames_dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("frame_", 0) == 0 && e.path().extension() == ".obj") files.push_back(e.path());
  }
  if (files.empty()) throw SceneError("no frame_*.obj files in " + frames_dir.string());
  std::sort(files.begin(), files.end());

  std::vector<AuditReport<T>> out;
  std::vector<Vec3<T>> verts, x = sim.state.x;
  std::vector<Vec3i> faces;
  for (size_t i = 0; i < files.size(); ++i) {
    read_obj(files[i].string(), verts, faces);
    if (verts.size() != m.surface_vertices.size())
      throw SceneError(files[i].filename().string() + ": vertex count " +
                       std::to_string(verts.size()) + " does not match scene surface (" +
                       std::to_string(m.surface_vertices.size()) + ")");
    for (size_t k = 0; k < verts.size(); ++k) x[m.surface_vertices[k]] = verts[k];
    const int frame = std::stoi(files[i].stem().string().substr(6));
    const T t = T(frame) * sim.solver.h;
    // Frame OBJs carry no interior vertices, so tets are not reconstructible
    // here; the containment census uses the cross-object winding test instead.
    AuditReport<T> rep =
        audit_distances(x, sim.world, sim.grounds_at(t), sim.solver.dhat, use_hash, false);
    rep.inside_count =
        count_inside_by_winding(x, m.surface_faces, m.surface_vertices, sim.world.vertex_object);
    if (opt.verbose && opt.log) {
      char buf[224];
      std::snprintf(buf, sizeof(buf),
                    "%s: min_pt=%.6g min_ee=%.6g min_ground=%.6g inside=%d audit=%s\n",
                    files[i].filename().string().c_str(), double(rep.min_pt), double(rep.min_ee),
                    double(rep.min_ground), int(rep.inside_count),
                    rep.penetrating() ? "PENETRATION" : "ok");
      *opt.log << buf;
    }
    out.push_back(rep);
  }
  return out;
}

}  // namespace tetipc
