#pragma once

#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "tetipc/contact.hpp"
#include "tetipc/elasticity.hpp"
#include "tetipc/world.hpp"

namespace tetipc {

enum class BetaVariant { DaiKou, FletcherReeves, PolakRibierePlus };

inline BetaVariant beta_variant_from_string(const std::string& s) {
  if (s == "dai_kou" || s == "dk") return BetaVariant::DaiKou;
  if (s == "fletcher_reeves" || s == "fr") return BetaVariant::FletcherReeves;
  if (s == "polak_ribiere_plus" || s == "prp") return BetaVariant::PolakRibierePlus;
  throw SceneError("unknown beta variant '" + s + "'");
}

inline const char* beta_variant_name(BetaVariant b) {
  switch (b) {
    case BetaVariant::DaiKou: return "dk";
    case BetaVariant::FletcherReeves: return "fr";
    case BetaVariant::PolakRibierePlus: return "prp";
  }
  return "?";
}

enum class Splitting { Off, PerObject, CollisionPartition };

inline Splitting splitting_from_string(const std::string& s) {
  if (s == "off" || s == "none") return Splitting::Off;
  if (s == "object" || s == "per_object") return Splitting::PerObject;
  if (s == "collision" || s == "collision_partition") return Splitting::CollisionPartition;
  throw SceneError("unknown splitting mode '" + s + "'");
}

inline const char* splitting_name(Splitting s) {
  switch (s) {
    case Splitting::Off: return "off";
    case Splitting::PerObject: return "object";
    case Splitting::CollisionPartition: return "collision";
  }
  return "?";
}

template <class T>
struct SolverConfig {
  T h = T(0.01);
  T dhat = T(0.01);
  T kappa = T(1e5);
  T epsilon = T(1e-4);
  int iter_max = 150;
  BetaVariant beta = BetaVariant::DaiKou;
  Splitting splitting = Splitting::Off;
  T curvature_floor = T(1e-10);
  bool use_hash = true;
};

template <class T>
struct IterRow {
  int iter;
  T dE;
  T alpha;
  T grad_inf;
  index_t n_constraints;
  int capped;
  T max_disp;  // max over regions of alpha * |p|_inf this iteration
};

template <class T>
struct ConvergenceRecord {
  std::vector<IterRow<T>> rows;
  std::vector<std::vector<T>> region_alpha;  // per row: applied alpha per region, 0 if idle
  std::vector<int> object_region;            // object -> region (per-object splitting only)
  int iterations = 0;
  bool converged = false;
  T E0 = 0;
  // Per region: termination threshold base and the last evaluated dE (the
  // rejected candidate that deactivated the region; +inf while still active).
  std::vector<T> dE0, final_dE;

  void write_csv(std::ostream& os) const {
    os << "iter,dE,alpha,grad_inf,n_constraints,capped\n";
    char buf[224];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%d,%d\n", r.iter, double(r.dE),
                    double(r.alpha), double(r.grad_inf), int(r.n_constraints), r.capped);
      os << buf;
    }
  }
};

namespace detail {

struct UnionFind {
  std::vector<index_t> parent;
  explicit UnionFind(index_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  index_t find(index_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(index_t a, index_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);
    parent[b] = a;
  }
};

template <class T>
struct MaxAbs {
  T v = 0;
  MaxAbs& operator+=(const MaxAbs& o) {
    v = std::max(v, o.v);
    return *this;
  }
};

template <class T>
struct BetaDots {
  T gPg = 0, gPy = 0, yPy = 0, yTp = 0, pTg = 0, yy = 0, pp = 0;
  BetaDots& operator+=(const BetaDots& o) {
    gPg += o.gPg;
    gPy += o.gPy;
    yPy += o.yPy;
    yTp += o.yTp;
    pTg += o.pTg;
    yy += o.yy;
    pp += o.pp;
    return *this;
  }
};

template <class T>
struct QuadDots {
  T gTp = 0, pp = 0, pHp = 0;
  QuadDots& operator+=(const QuadDots& o) {
    gTp += o.gTp;
    pp += o.pp;
    pHp += o.pHp;
    return *this;
  }
};

template <class T>
T compute_beta(BetaVariant variant, const BetaDots<T>& d, T gPg_prev) {
  T beta = 0;
  switch (variant) {
    case BetaVariant::DaiKou:
      if (std::abs(d.yTp) >= T(1e-30) * std::sqrt(d.yy * d.pp))
        beta = d.gPy / d.yTp - (d.yPy / d.yTp) * (d.pTg / d.yTp);
      break;
    case BetaVariant::FletcherReeves:
      if (gPg_prev > T(0)) beta = d.gPg / gPg_prev;
      break;
    case BetaVariant::PolakRibierePlus:
      if (gPg_prev > T(0)) beta = std::max(T(0), d.gPy / gPg_prev);
      break;
  }
  return std::isfinite(beta) ? beta : T(0);
}

}  // namespace detail

// One implicit step: minimize
//   E(x) = 1/2 |x - x_tilde|_M^2 + h^2 Psi(x) + kappa * sum_k b(d_k(x))
// by preconditioned nonlinear CG with a one-pass quadratic-model line search.
// With splitting, each region gets its own beta, alpha, and termination from
// region-restricted reductions; regions are fixed at the first iteration.
template <class T>
ConvergenceRecord<T> pncg_solve(const World<T>& world, const std::vector<Vec3<T>>& x_tilde,
                                const std::vector<GroundPlane<T>>& grounds,
                                std::vector<Vec3<T>>& x, const SolverConfig<T>& cfg) {
  const index_t nv = world.num_vertices();
  const index_t nt = world.num_tets();
  const auto& mesh = world.mesh;
  const T h2 = cfg.h * cfg.h;
  const bool elastic = world.elasticity_enabled;

  if (static_cast<index_t>(x.size()) != nv || static_cast<index_t>(x_tilde.size()) != nv)
    throw SceneError("position array size does not match the world");

  ConvergenceRecord<T> rec;

  std::vector<ElementScratch<T>> scratch(elastic ? nt : 0);
  std::vector<Mat3<T>> pk1(elastic ? nt : 0);
  std::vector<Vec3<T>> g(nv, Vec3<T>::Zero()), gprev(nv, Vec3<T>::Zero());
  std::vector<Vec3<T>> diag(nv), P(nv), p(nv, Vec3<T>::Zero());
  std::vector<ContactConstraint<T>> cs;

  struct Region {
    std::vector<index_t> verts, elems, points;
    std::vector<index_t> cs_idx;
    T gPg_prev = 0;
    T E0 = 0;
    T dE0 = T(-1);
    bool active = true;
    bool restart = false;
  };
  std::vector<Region> regions;
  std::vector<int> region_of;

  for (int k = 1; k <= cfg.iter_max; ++k) {
    if (k > 1) {
      bool any = false;
      for (const Region& r : regions) any |= r.active;
      if (!any) {
        rec.converged = true;
        break;
      }
    }

    compute_constraints(x, mesh.surface_faces, mesh.surface_edges, mesh.surface_vertices,
                        world.exclusion, cfg.dhat, world.cell_size, cfg.use_hash, cs);

    if (k == 1) {
      region_of.assign(static_cast<size_t>(nv), 0);
      int R = 1;
      if (cfg.splitting == Splitting::PerObject && world.num_objects > 1) {
        detail::UnionFind uf(world.num_objects);
        for (const auto& kc : cs) {
          const index_t o0 = world.vertex_object[kc.v[0]];
          for (int i = 1; i < 4; ++i) uf.unite(o0, world.vertex_object[kc.v[i]]);
        }
        R = 0;
        std::vector<int> root_region(static_cast<size_t>(world.num_objects), -1);
        rec.object_region.resize(static_cast<size_t>(world.num_objects));
        for (index_t o = 0; o < world.num_objects; ++o) {
          const index_t rt = uf.find(o);
          if (root_region[rt] < 0) root_region[rt] = R++;
          rec.object_region[o] = root_region[rt];
        }
        for (index_t v = 0; v < nv; ++v) region_of[v] = rec.object_region[world.vertex_object[v]];
      } else if (cfg.splitting == Splitting::CollisionPartition) {
        std::vector<uint8_t> colored(static_cast<size_t>(nv), 0);
        for (const auto& kc : cs)
          for (int i = 0; i < 4; ++i) colored[kc.v[i]] = 1;
        for (index_t sp : mesh.surface_vertices)
          for (const auto& gp : grounds)
            if (ground_distance(gp, x[sp]) < cfg.dhat) colored[sp] = 1;
        std::vector<uint8_t> in_collision(colored);
        for (const Vec4i& tet : mesh.tets) {
          bool hit = false;
          for (int c = 0; c < 4; ++c) hit |= colored[tet[c]] != 0;
          if (hit)
            for (int c = 0; c < 4; ++c) in_collision[tet[c]] = 1;
        }
        index_t n1 = 0;
        for (index_t v = 0; v < nv; ++v) n1 += in_collision[v];
        if (n1 > 0 && n1 < nv) {
          R = 2;
          for (index_t v = 0; v < nv; ++v) region_of[v] = in_collision[v] ? 1 : 0;
        }
      }
      if (static_cast<index_t>(rec.object_region.size()) != world.num_objects)
        rec.object_region.assign(static_cast<size_t>(world.num_objects), 0);

      regions.assign(static_cast<size_t>(R), Region{});
      for (index_t v = 0; v < nv; ++v) regions[region_of[v]].verts.push_back(v);
      for (index_t t = 0; t < nt; ++t) {
        int rid[4];
        for (int c = 0; c < 4; ++c) rid[c] = region_of[mesh.tets[t][c]];
        for (int c = 0; c < 4; ++c) {
          bool seen = false;
          for (int j = 0; j < c; ++j) seen |= rid[j] == rid[c];
          if (!seen) regions[rid[c]].elems.push_back(t);
        }
      }
      for (index_t sp : mesh.surface_vertices) regions[region_of[sp]].points.push_back(sp);
    }

    for (Region& r : regions) r.cs_idx.clear();
    for (index_t ci = 0; ci < static_cast<index_t>(cs.size()); ++ci) {
      int rid[4];
      for (int i = 0; i < 4; ++i) rid[i] = region_of[cs[ci].v[i]];
      for (int i = 0; i < 4; ++i) {
        bool seen = false;
        for (int j = 0; j < i; ++j) seen |= rid[j] == rid[i];
        if (!seen) regions[rid[i]].cs_idx.push_back(ci);
      }
    }

    if (elastic) {
      parallel_for(nt, [&](index_t t) {
        const Mat3<T> F = compute_deformation_gradient(mesh, x, t);
        eval_element(world.material[t], F, t, scratch[t]);
        pk1[t] = element_pk1(scratch[t]);
      });
    }

    parallel_for(nv, [&](index_t v) {
      const T m = mesh.mass[v];
      Vec3<T> gv = m * (x[v] - x_tilde[v]);
      Vec3<T> dv = Vec3<T>::Constant(m);
      if (elastic) {
        for (index_t e = world.incidence_offsets[v]; e < world.incidence_offsets[v + 1]; ++e) {
          const index_t enc = world.incidence[e];
          const index_t t = enc / 4;
          const Vec3<T> w = mesh.dFdx_weights[t].row(enc % 4).transpose();
          const T s = h2 * mesh.rest_volume[t];
          gv += s * (pk1[t] * w);
          dv += s * element_hessian_diag(scratch[t], w);
        }
      }
      g[v] = gv;
      diag[v] = dv;
    });
    accumulate_barrier_gradient_diag(cs, x, cfg.dhat, cfg.kappa, g, diag);
    const index_t ground_active = accumulate_ground_gradient_diag(
        grounds, mesh.surface_vertices, x, cfg.dhat, cfg.kappa, g, diag);
    const index_t n_constraints = static_cast<index_t>(cs.size()) + ground_active;

    for (index_t v = 0; v < nv; ++v)
      if (world.fixed[v]) g[v].setZero();

    T grad_inf = 0;
    bool grad_finite = true;
    for (index_t v = 0; v < nv; ++v) {
      grad_inf = std::max(grad_inf, g[v].template lpNorm<Eigen::Infinity>());
      grad_finite &= g[v].allFinite();
    }
    if (!grad_finite) throw SolveAbort("gradient is not finite");

    // Lateral barrier curvature (b'/d < 0) can push a diagonal entry below the
    // vertex mass or negative; clamping at the mass keeps P positive and falls
    // back to inertia scaling exactly where the barrier exerts no force.
    parallel_for(nv, [&](index_t v) {
      const T floor_v = mesh.mass[v];
      for (int a = 0; a < 3; ++a) P[v][a] = T(1) / std::max(diag[v][a], floor_v);
    });

    if (k == 1) {
      for (size_t ri = 0; ri < regions.size(); ++ri) {
        Region& r = regions[ri];
        T e = parallel_sum<T>(static_cast<index_t>(r.verts.size()), [&](index_t i) {
          const index_t v = r.verts[static_cast<size_t>(i)];
          return T(0.5) * mesh.mass[v] * (x[v] - x_tilde[v]).squaredNorm();
        });
        if (elastic)
          e += h2 * parallel_sum<T>(static_cast<index_t>(r.elems.size()), [&](index_t i) {
                 const index_t t = r.elems[static_cast<size_t>(i)];
                 return region_of[mesh.tets[t][0]] == static_cast<int>(ri)
                            ? mesh.rest_volume[t] * scratch[t].d.psi
                            : T(0);
               });
        e += cfg.kappa * parallel_sum<T>(static_cast<index_t>(r.points.size()), [&](index_t i) {
               const index_t v = r.points[static_cast<size_t>(i)];
               T acc = 0;
               for (const auto& gp : grounds) {
                 const T d = ground_distance(gp, x[v]);
                 if (d < cfg.dhat) acc += barrier(d, cfg.dhat);
               }
               return acc;
             });
        r.E0 = e;
      }
      for (const auto& kc : cs)
        regions[region_of[kc.v[0]]].E0 += cfg.kappa * barrier(kc.d, cfg.dhat);
      rec.E0 = 0;
      for (const Region& r : regions) rec.E0 += r.E0;
      rec.dE0.assign(regions.size(), T(0));
      rec.final_dE.assign(regions.size(), std::numeric_limits<T>::infinity());
    }

    bool updated_any = false, any_capped = false;
    T sum_dE = 0, max_alpha = 0, max_disp = 0;
    std::vector<T> ralpha(regions.size(), T(0));

    for (size_t ri = 0; ri < regions.size(); ++ri) {
      Region& r = regions[ri];
      if (!r.active) continue;
      const int rid = static_cast<int>(ri);
      const index_t nrv = static_cast<index_t>(r.verts.size());

      const auto dots = parallel_sum<detail::BetaDots<T>>(nrv, [&](index_t i) {
        const index_t v = r.verts[static_cast<size_t>(i)];
        detail::BetaDots<T> o;
        const Vec3<T> y = g[v] - gprev[v];
        const Vec3<T> Pg = P[v].cwiseProduct(g[v]);
        o.gPg = g[v].dot(Pg);
        o.gPy = y.dot(Pg);
        o.yPy = y.dot(P[v].cwiseProduct(y));
        o.yTp = y.dot(p[v]);
        o.pTg = p[v].dot(g[v]);
        o.yy = y.squaredNorm();
        o.pp = p[v].squaredNorm();
        return o;
      });

      T beta = 0;
      if (k > 1 && !r.restart) beta = detail::compute_beta(cfg.beta, dots, r.gPg_prev);
      r.restart = false;
      r.gPg_prev = dots.gPg;

      parallel_for(nrv, [&](index_t i) {
        const index_t v = r.verts[static_cast<size_t>(i)];
        p[v] = beta * p[v] - P[v].cwiseProduct(g[v]);
      });

      const T pinf = parallel_sum<detail::MaxAbs<T>>(nrv, [&](index_t i) {
                       const index_t v = r.verts[static_cast<size_t>(i)];
                       return detail::MaxAbs<T>{p[v].template lpNorm<Eigen::Infinity>()};
                     }).v;
      if (pinf == T(0)) {
        r.active = false;
        rec.final_dE[ri] = T(0);
        continue;
      }

      detail::QuadDots<T> q = parallel_sum<detail::QuadDots<T>>(nrv, [&](index_t i) {
        const index_t v = r.verts[static_cast<size_t>(i)];
        detail::QuadDots<T> o;
        o.gTp = g[v].dot(p[v]);
        o.pp = p[v].squaredNorm();
        o.pHp = mesh.mass[v] * o.pp;
        return o;
      });
      if (elastic)
        q.pHp += h2 * parallel_sum<T>(static_cast<index_t>(r.elems.size()), [&](index_t i) {
                   const index_t t = r.elems[static_cast<size_t>(i)];
                   Mat3<T> dF = Mat3<T>::Zero();
                   for (int c = 0; c < 4; ++c) {
                     const index_t v = mesh.tets[t][c];
                     if (region_of[v] == rid) dF += p[v] * mesh.dFdx_weights[t].row(c);
                   }
                   return mesh.rest_volume[t] * element_hessian_quad(scratch[t], dF);
                 });
      q.pHp +=
          cfg.kappa * parallel_sum<T>(static_cast<index_t>(r.cs_idx.size()), [&](index_t i) {
            const auto& kc = cs[r.cs_idx[static_cast<size_t>(i)]];
            const auto bd = barrier_derivs(kc.d, cfg.dhat);
            const Vec3<T> tw = constraint_witness(kc, x);
            Vec3<T> w = Vec3<T>::Zero();
            for (int j = 0; j < 4; ++j)
              if (region_of[kc.v[j]] == rid) w += kc.c[j] * p[kc.v[j]];
            const T inv_d = T(1) / kc.d;
            const T wt = w.dot(tw);
            return (bd.d2b * inv_d * inv_d - bd.db * inv_d * inv_d * inv_d) * wt * wt +
                   bd.db * inv_d * w.squaredNorm();
          });
      q.pHp +=
          cfg.kappa * parallel_sum<T>(static_cast<index_t>(r.points.size()), [&](index_t i) {
            const index_t v = r.points[static_cast<size_t>(i)];
            T acc = 0;
            for (const auto& gp : grounds) {
              const T d = ground_distance(gp, x[v]);
              if (d >= cfg.dhat || d <= T(0)) continue;
              const auto bd = barrier_derivs(d, cfg.dhat);
              const T np = gp.n.dot(p[v]);
              acc += bd.d2b * np * np;
            }
            return acc;
          });

      const T alpha_upper = cfg.dhat / (T(2) * pinf);
      T alpha;
      bool capped;
      const bool fallback = q.pHp <= cfg.curvature_floor * q.pp || q.gTp >= T(0);
      if (fallback) {
        alpha = T(0.5) * alpha_upper;
        capped = true;
        r.restart = true;
      } else {
        const T alpha_bar = -q.gTp / q.pHp;
        alpha = std::min(alpha_bar, alpha_upper);
        capped = alpha_upper < alpha_bar;
      }
      if (!std::isfinite(alpha)) throw SolveAbort("step length is not finite");

      const T dE = -alpha * q.gTp - alpha * alpha / T(2) * q.pHp;
      const T floorE = T(1e-14) * (T(1) + std::abs(r.E0));
      bool apply = true;
      if (fallback) {
        if (r.dE0 < T(0)) r.dE0 = std::max(dE, floorE);
      } else if (r.dE0 < T(0)) {
        if (dE < cfg.epsilon * std::max(dE, floorE)) {
          apply = false;
          r.active = false;
          r.dE0 = floorE;
          rec.final_dE[ri] = dE;
        } else {
          r.dE0 = std::max(dE, floorE);
        }
      } else if (dE < cfg.epsilon * r.dE0) {
        apply = false;
        r.active = false;
        rec.final_dE[ri] = dE;
      }

      if (apply) {
        parallel_for(nrv, [&](index_t i) {
          const index_t v = r.verts[static_cast<size_t>(i)];
          x[v] += alpha * p[v];
        });
        updated_any = true;
        any_capped |= capped;
        sum_dE += dE;
        max_alpha = std::max(max_alpha, alpha);
        max_disp = std::max(max_disp, alpha * pinf);
        ralpha[ri] = alpha;
      }
    }

    if (!updated_any) {
      rec.converged = true;
      break;
    }
    rec.rows.push_back({static_cast<int>(rec.rows.size()) + 1, sum_dE, max_alpha, grad_inf,
                        n_constraints, any_capped ? 1 : 0, max_disp});
    rec.region_alpha.push_back(std::move(ralpha));
    std::swap(g, gprev);
  }

  if (!rec.converged) {
    bool any = false;
    for (const Region& r : regions) any |= r.active;
    rec.converged = !any;
  }
  for (size_t ri = 0; ri < regions.size(); ++ri)
    rec.dE0[ri] = regions[ri].dE0 >= T(0)
                      ? regions[ri].dE0
                      : T(1e-14) * (T(1) + std::abs(regions[ri].E0));
  rec.iterations = static_cast<int>(rec.rows.size());
  return rec;
}

}  // namespace tetipc
