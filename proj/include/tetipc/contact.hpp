#pragma once

#include <array>
#include <vector>

#include "tetipc/barrier.hpp"
#include "tetipc/common.hpp"
#include "tetipc/distance.hpp"
#include "tetipc/spatial_hash.hpp"

namespace tetipc {

enum class ContactKind : std::uint8_t { PointTriangle = 0, EdgeEdge = 1 };

// Canonical identity of a primitive pair, independent of discovery order.
using PairKey = std::array<index_t, 5>;

inline PairKey make_pt_key(index_t p, Vec3i tri) {
  std::array<index_t, 3> t = {tri[0], tri[1], tri[2]};
  std::sort(t.begin(), t.end());
  return {0, p, t[0], t[1], t[2]};
}

inline PairKey make_ee_key(Vec2i ea, Vec2i eb) {
  if (ea[0] > ea[1]) std::swap(ea[0], ea[1]);
  if (eb[0] > eb[1]) std::swap(eb[0], eb[1]);
  if (std::pair(ea[0], ea[1]) > std::pair(eb[0], eb[1])) std::swap(ea, eb);
  return {1, ea[0], ea[1], eb[0], eb[1]};
}

template <class T>
struct ContactConstraint {
  ContactKind kind;
  Vec4i v;     // PT: point, tri0..2; EE: a0, a1, b0, b1
  Vec4<T> c;   // witness weights, t = sum c_i x_{v_i}
  T d;

  PairKey key() const {
    return kind == ContactKind::PointTriangle ? make_pt_key(v[0], Vec3i(v[1], v[2], v[3]))
                                              : make_ee_key(Vec2i(v[0], v[1]), Vec2i(v[2], v[3]));
  }
};

// Primitive pairs that are close in the rest pose of a single object are
// structurally adjacent and never become contacts.
struct ExclusionTable {
  std::vector<PairKey> keys;  // sorted

  bool contains(const PairKey& k) const {
    return std::binary_search(keys.begin(), keys.end(), k);
  }
};

template <class T>
Aabb<T> face_aabb(const std::vector<Vec3<T>>& x, const Vec3i& f) {
  Aabb<T> b;
  for (int k = 0; k < 3; ++k) b.extend(x[f[k]]);
  return b;
}

template <class T>
Aabb<T> edge_aabb(const std::vector<Vec3<T>>& x, const Vec2i& e) {
  Aabb<T> b;
  b.extend(x[e[0]]);
  b.extend(x[e[1]]);
  return b;
}

template <class T>
ExclusionTable build_exclusion_table(const std::vector<Vec3<T>>& x_rest,
                                     const std::vector<Vec3i>& faces,
                                     const std::vector<Vec2i>& edges,
                                     const std::vector<index_t>& points,
                                     const std::vector<index_t>& vertex_object, T threshold) {
  ExclusionTable table;
  const T r = threshold / T(2);

  std::vector<Aabb<T>> fbox(faces.size()), ebox(edges.size());
  for (size_t i = 0; i < faces.size(); ++i) fbox[i] = face_aabb(x_rest, faces[i]).inflated(r);
  for (size_t i = 0; i < edges.size(); ++i) ebox[i] = edge_aabb(x_rest, edges[i]).inflated(r);

  for (index_t p : points) {
    Aabb<T> pb;
    pb.extend(x_rest[p]);
    pb = pb.inflated(r);
    for (size_t f = 0; f < faces.size(); ++f) {
      const Vec3i& tri = faces[f];
      if (vertex_object[p] != vertex_object[tri[0]]) continue;
      if (p == tri[0] || p == tri[1] || p == tri[2]) continue;
      if (!pb.overlaps(fbox[f])) continue;
      if (point_triangle_distance(x_rest[p], x_rest[tri[0]], x_rest[tri[1]], x_rest[tri[2]]).d <
          threshold)
        table.keys.push_back(make_pt_key(p, tri));
    }
  }
  for (size_t i = 0; i < edges.size(); ++i) {
    for (size_t j = i + 1; j < edges.size(); ++j) {
      const Vec2i &a = edges[i], &b = edges[j];
      if (vertex_object[a[0]] != vertex_object[b[0]]) continue;
      if (a[0] == b[0] || a[0] == b[1] || a[1] == b[0] || a[1] == b[1]) continue;
      if (!ebox[i].overlaps(ebox[j])) continue;
      if (edge_edge_distance(x_rest[a[0]], x_rest[a[1]], x_rest[b[0]], x_rest[b[1]]).d < threshold)
        table.keys.push_back(make_ee_key(a, b));
    }
  }

  std::sort(table.keys.begin(), table.keys.end());
  table.keys.erase(std::unique(table.keys.begin(), table.keys.end()), table.keys.end());
  return table;
}

// Active barrier set at the current positions: every non-excluded
// point-triangle and edge-edge pair with distance below dhat. Output is
// sorted by canonical key, so assembly order never depends on the broad
// phase or thread count.
template <class T>
void compute_constraints(const std::vector<Vec3<T>>& x, const std::vector<Vec3i>& faces,
                         const std::vector<Vec2i>& edges, const std::vector<index_t>& points,
                         const ExclusionTable& excl, T dhat, T cell_size, bool use_hash,
                         std::vector<ContactConstraint<T>>& out) {
  const T r = dhat / T(2);
  std::vector<Aabb<T>> fbox(faces.size()), ebox(edges.size());
  for (size_t i = 0; i < faces.size(); ++i) fbox[i] = face_aabb(x, faces[i]).inflated(r);
  for (size_t i = 0; i < edges.size(); ++i) ebox[i] = edge_aabb(x, edges[i]).inflated(r);

  SpatialHash<T> face_hash, edge_hash;
  if (use_hash) {
    face_hash.build(fbox, cell_size);
    edge_hash.build(ebox, cell_size);
  }

  auto try_pt = [&](index_t p, size_t f, std::vector<ContactConstraint<T>>& buf) {
    const Vec3i& tri = faces[f];
    if (p == tri[0] || p == tri[1] || p == tri[2]) return;
    const PairKey key = make_pt_key(p, tri);
    if (excl.contains(key)) return;
    DistanceResult<T> dr = point_triangle_distance(x[p], x[tri[0]], x[tri[1]], x[tri[2]]);
    if (dr.d >= dhat) return;
    if (!(dr.d > T(0)))
      throw PenetrationFault("point " + std::to_string(p) + " touches triangle (" +
                             std::to_string(tri[0]) + "," + std::to_string(tri[1]) + "," +
                             std::to_string(tri[2]) + ")");
    buf.push_back({ContactKind::PointTriangle, Vec4i(p, tri[0], tri[1], tri[2]), dr.c, dr.d});
  };
  auto try_ee = [&](size_t i, size_t j, std::vector<ContactConstraint<T>>& buf) {
    const Vec2i &a = edges[i], &b = edges[j];
    if (a[0] == b[0] || a[0] == b[1] || a[1] == b[0] || a[1] == b[1]) return;
    const PairKey key = make_ee_key(a, b);
    if (excl.contains(key)) return;
    DistanceResult<T> dr = edge_edge_distance(x[a[0]], x[a[1]], x[b[0]], x[b[1]]);
    if (dr.d >= dhat) return;
    if (!(dr.d > T(0)))
      throw PenetrationFault("edge (" + std::to_string(a[0]) + "," + std::to_string(a[1]) +
                             ") touches edge (" + std::to_string(b[0]) + "," +
                             std::to_string(b[1]) + ")");
    buf.push_back({ContactKind::EdgeEdge, Vec4i(a[0], a[1], b[0], b[1]), dr.c, dr.d});
  };

  std::vector<ContactConstraint<T>> pt, ee;
  if (use_hash) {
    parallel_collect<ContactConstraint<T>>(
        static_cast<index_t>(points.size()),
        [&](index_t pi, std::vector<ContactConstraint<T>>& buf) {
          thread_local std::vector<index_t> hits;
          Aabb<T> pb;
          pb.extend(x[points[pi]]);
          face_hash.query(pb.inflated(r), hits);
          for (index_t f : hits) try_pt(points[pi], static_cast<size_t>(f), buf);
        },
        pt);
    parallel_collect<ContactConstraint<T>>(
        static_cast<index_t>(edges.size()),
        [&](index_t i, std::vector<ContactConstraint<T>>& buf) {
          thread_local std::vector<index_t> hits;
          edge_hash.query(ebox[static_cast<size_t>(i)], hits);
          for (index_t j : hits)
            if (j > i) try_ee(static_cast<size_t>(i), static_cast<size_t>(j), buf);
        },
        ee);
  } else {
    parallel_collect<ContactConstraint<T>>(
        static_cast<index_t>(points.size()),
        [&](index_t pi, std::vector<ContactConstraint<T>>& buf) {
          Aabb<T> pb;
          pb.extend(x[points[pi]]);
          pb = pb.inflated(r);
          for (size_t f = 0; f < faces.size(); ++f)
            if (pb.overlaps(fbox[f])) try_pt(points[pi], f, buf);
        },
        pt);
    parallel_collect<ContactConstraint<T>>(
        static_cast<index_t>(edges.size()),
        [&](index_t i, std::vector<ContactConstraint<T>>& buf) {
          for (size_t j = static_cast<size_t>(i) + 1; j < edges.size(); ++j)
            if (ebox[static_cast<size_t>(i)].overlaps(ebox[j]))
              try_ee(static_cast<size_t>(i), j, buf);
        },
        ee);
  }

  out.clear();
  out.reserve(pt.size() + ee.size());
  out.insert(out.end(), pt.begin(), pt.end());
  out.insert(out.end(), ee.begin(), ee.end());
  std::sort(out.begin(), out.end(),
            [](const ContactConstraint<T>& a, const ContactConstraint<T>& b) {
              return a.key() < b.key();
            });
}

// --- barrier assembly over a constraint set ---------------------------------

template <class T>
Vec3<T> constraint_witness(const ContactConstraint<T>& k, const std::vector<Vec3<T>>& x) {
  Vec3<T> t = Vec3<T>::Zero();
  for (int i = 0; i < 4; ++i) t += k.c[i] * x[k.v[i]];
  return t;
}

template <class T>
T barrier_energy(const std::vector<ContactConstraint<T>>& cs, T dhat, T kappa) {
  T e = 0;
  for (const auto& k : cs) e += barrier(k.d, dhat);
  return kappa * e;
}

// Gradient and Hessian-diagonal contributions; sequential scatter over the
// canonically sorted set.
template <class T>
void accumulate_barrier_gradient_diag(const std::vector<ContactConstraint<T>>& cs,
                                      const std::vector<Vec3<T>>& x, T dhat, T kappa,
                                      std::vector<Vec3<T>>& grad, std::vector<Vec3<T>>& diag) {
  for (const auto& k : cs) {
    const auto bd = barrier_derivs(k.d, dhat);
    const Vec3<T> t = constraint_witness(k, x);
    const T inv_d = T(1) / k.d;
    const T gscale = kappa * bd.db * inv_d;
    const T houter = kappa * (bd.d2b * inv_d * inv_d - bd.db * inv_d * inv_d * inv_d);
    const T hiso = kappa * bd.db * inv_d;
    for (int i = 0; i < 4; ++i) {
      const index_t vi = k.v[i];
      const Vec3<T> ct = k.c[i] * t;
      grad[vi] += gscale * ct;
      diag[vi] += houter * ct.cwiseProduct(ct) + Vec3<T>::Constant(hiso * k.c[i] * k.c[i]);
    }
  }
}

// p^T (kappa * sum Hess b) p; optional region mask restricts to constraints
// whose witness stencil lies in the masked vertex set.
template <class T>
T barrier_quad(const std::vector<ContactConstraint<T>>& cs, const std::vector<Vec3<T>>& x,
               const std::vector<Vec3<T>>& p, T dhat, T kappa) {
  return kappa * parallel_sum<T>(static_cast<index_t>(cs.size()), [&](index_t ci) {
    const auto& k = cs[static_cast<size_t>(ci)];
    const auto bd = barrier_derivs(k.d, dhat);
    const Vec3<T> t = constraint_witness(k, x);
    Vec3<T> w = Vec3<T>::Zero();
    for (int i = 0; i < 4; ++i) w += k.c[i] * p[k.v[i]];
    const T inv_d = T(1) / k.d;
    const T wt = w.dot(t);
    return (bd.d2b * inv_d * inv_d - bd.db * inv_d * inv_d * inv_d) * wt * wt +
           bd.db * inv_d * w.squaredNorm();
  });
}

// --- analytic half-space contacts --------------------------------------------

template <class T>
struct GroundPlane {
  Vec3<T> n = Vec3<T>(0, 1, 0);  // unit normal
  T offset = 0;                  // plane is n . x = offset
};

template <class T>
T ground_distance(const GroundPlane<T>& g, const Vec3<T>& x) {
  return g.n.dot(x) - g.offset;
}

template <class T>
T ground_barrier_energy(const std::vector<GroundPlane<T>>& grounds,
                        const std::vector<index_t>& points, const std::vector<Vec3<T>>& x, T dhat,
                        T kappa) {
  T e = 0;
  for (const auto& g : grounds)
    for (index_t v : points) {
      const T d = ground_distance(g, x[v]);
      if (d <= T(0))
        throw PenetrationFault("vertex " + std::to_string(v) + " penetrates a ground plane");
      e += barrier(d, dhat);
    }
  return kappa * e;
}

// Returns the number of active plane-vertex pairs.
template <class T>
index_t accumulate_ground_gradient_diag(const std::vector<GroundPlane<T>>& grounds,
                                        const std::vector<index_t>& points,
                                        const std::vector<Vec3<T>>& x, T dhat, T kappa,
                                        std::vector<Vec3<T>>& grad, std::vector<Vec3<T>>& diag) {
  index_t active = 0;
  for (const auto& g : grounds) {
    const Vec3<T> n2 = g.n.cwiseProduct(g.n);
    for (index_t v : points) {
      const T d = ground_distance(g, x[v]);
      if (d >= dhat) continue;
      if (d <= T(0))
        throw PenetrationFault("vertex " + std::to_string(v) + " penetrates a ground plane");
      const auto bd = barrier_derivs(d, dhat);
      grad[v] += kappa * bd.db * g.n;
      diag[v] += kappa * bd.d2b * n2;
      ++active;
    }
  }
  return active;
}

template <class T>
T ground_quad(const std::vector<GroundPlane<T>>& grounds, const std::vector<index_t>& points,
              const std::vector<Vec3<T>>& x, const std::vector<Vec3<T>>& p, T dhat, T kappa) {
  T q = 0;
  for (const auto& g : grounds) {
    q += parallel_sum<T>(static_cast<index_t>(points.size()), [&](index_t i) {
      const index_t v = points[static_cast<size_t>(i)];
      const T d = ground_distance(g, x[v]);
      if (d >= dhat || d <= T(0)) return T(0);
      const auto bd = barrier_derivs(d, dhat);
      const T np = g.n.dot(p[v]);
      return bd.d2b * np * np;
    });
  }
  return kappa * q;
}

}  // namespace tetipc
