#pragma once

#include <limits>
#include <numeric>

#include "tetipc/world.hpp"

namespace tetipc {

template <class T>
struct AuditReport {
  T min_pt = std::numeric_limits<T>::infinity();
  T min_ee = std::numeric_limits<T>::infinity();
  T min_ground = std::numeric_limits<T>::infinity();
  index_t inside_count = 0;  // surface vertices strictly inside another object

  T min_distance() const { return std::min(min_pt, std::min(min_ee, min_ground)); }
  bool penetrating() const { return inside_count > 0 || min_distance() <= T(0); }
};

// Affine coordinates are orientation-independent, so hull membership is four
// strict inequalities; the margin keeps on-boundary vertices (shared lattice
// planes) out.
template <class T>
bool point_in_tet(const Vec3<T>& p, const Vec3<T>& a, const Vec3<T>& b, const Vec3<T>& c,
                  const Vec3<T>& d) {
  Mat3<T> Ds;
  Ds.col(0) = b - a;
  Ds.col(1) = c - a;
  Ds.col(2) = d - a;
  if (Ds.determinant() == T(0)) return false;
  const Vec3<T> w = Ds.inverse() * (p - a);
  constexpr T kEps = T(1e-12);
  return w[0] > kEps && w[1] > kEps && w[2] > kEps && w.sum() < T(1) - kEps;
}

// Containment census for surface-only data (frame OBJs have no interior
// vertices, so the tet test is unavailable): a point is inside a foreign
// object when that object's outward surface winds around it. Solid angles
// via van Oosterom-Strackee, threshold at half coverage.
template <class T>
index_t count_inside_by_winding(const std::vector<Vec3<T>>& x, const std::vector<Vec3i>& faces,
                                const std::vector<index_t>& points,
                                const std::vector<index_t>& vertex_object) {
  std::vector<uint8_t> inside(points.size(), 0);
  parallel_for(static_cast<index_t>(points.size()), [&](index_t pi) {
    const Vec3<T>& p = x[points[pi]];
    const index_t own = vertex_object[points[pi]];
    T omega = 0;
    for (const Vec3i& f : faces) {
      if (vertex_object[f[0]] == own) continue;
      const Vec3<T> a = x[f[0]] - p, b = x[f[1]] - p, c = x[f[2]] - p;
      const T la = a.norm(), lb = b.norm(), lc = c.norm();
      const T den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
      omega += T(2) * std::atan2(a.dot(b.cross(c)), den);
    }
    inside[pi] = std::abs(omega) > T(2) * T(EIGEN_PI);
  });
  index_t n = 0;
  for (uint8_t b : inside) n += b;
  return n;
}

// Proximity (unsigned point-triangle / edge-edge minima over non-excluded
// pairs, signed ground clearance) plus an exact containment census: any
// surface vertex inside another object's tet means the trajectory tunneled,
// regardless of how far the nearest surface primitive is. Same-object
// containment is not penetration -- a vertex dented a hair inward enters a
// neighbor tet's hull while every surface distance stays positive. Hash mode
// prunes proximity pairs to within dhat and containment candidates by tet
// bounding box; brute mode is exhaustive.
template <class T>
AuditReport<T> audit_distances(const std::vector<Vec3<T>>& x, const World<T>& world,
                               const std::vector<GroundPlane<T>>& grounds, T dhat,
                               bool use_hash, bool tet_containment = true) {
  constexpr T kInf = std::numeric_limits<T>::infinity();
  const TetMesh<T>& mesh = world.mesh;
  const ExclusionTable& excl = world.exclusion;
  const T cell_size = world.cell_size;
  const auto& faces = mesh.surface_faces;
  const auto& edges = mesh.surface_edges;
  const auto& points = mesh.surface_vertices;
  AuditReport<T> rep;
  const T r = dhat / T(2);

  auto pt_candidate = [&](index_t p, size_t f) -> T {
    const Vec3i& tri = faces[f];
    if (p == tri[0] || p == tri[1] || p == tri[2]) return kInf;
    if (excl.contains(make_pt_key(p, tri))) return kInf;
    return point_triangle_distance(x[p], x[tri[0]], x[tri[1]], x[tri[2]]).d;
  };
  auto ee_candidate = [&](size_t i, size_t j) -> T {
    const Vec2i &a = edges[i], &b = edges[j];
    if (a[0] == b[0] || a[0] == b[1] || a[1] == b[0] || a[1] == b[1]) return kInf;
    if (excl.contains(make_ee_key(a, b))) return kInf;
    return edge_edge_distance(x[a[0]], x[a[1]], x[b[0]], x[b[1]]).d;
  };
  auto inside_any = [&](index_t p, const std::vector<index_t>& tet_ids) -> bool {
    for (index_t t : tet_ids) {
      const Vec4i& tet = mesh.tets[t];
      if (world.vertex_object[p] == world.vertex_object[tet[0]]) continue;
      if (point_in_tet(x[p], x[tet[0]], x[tet[1]], x[tet[2]], x[tet[3]])) return true;
    }
    return false;
  };

  const index_t np = static_cast<index_t>(points.size());
  const index_t ne = static_cast<index_t>(edges.size());
  const index_t nt = mesh.num_tets();
  std::vector<T> pmin(points.size(), kInf), emin(edges.size(), kInf);
  std::vector<uint8_t> inside(points.size(), 0);

  if (use_hash) {
    std::vector<Aabb<T>> fbox(faces.size()), ebox(edges.size()), tbox(static_cast<size_t>(nt));
    for (size_t i = 0; i < faces.size(); ++i) fbox[i] = face_aabb(x, faces[i]).inflated(r);
    for (size_t i = 0; i < edges.size(); ++i) ebox[i] = edge_aabb(x, edges[i]).inflated(r);
    for (index_t t = 0; t < nt; ++t) {
      Aabb<T> b;
      for (int c = 0; c < 4; ++c) b.extend(x[mesh.tets[t][c]]);
      tbox[static_cast<size_t>(t)] = b;
    }
    SpatialHash<T> face_hash, edge_hash, tet_hash;
    face_hash.build(fbox, cell_size);
    edge_hash.build(ebox, cell_size);
    tet_hash.build(tbox, cell_size);
    parallel_for(np, [&](index_t pi) {
      thread_local std::vector<index_t> hits;
      Aabb<T> pb;
      pb.extend(x[points[pi]]);
      face_hash.query(pb.inflated(r), hits);
      T best = kInf;
      for (index_t f : hits) best = std::min(best, pt_candidate(points[pi], static_cast<size_t>(f)));
      pmin[pi] = best;
      if (tet_containment) {
        tet_hash.query(pb, hits);
        inside[pi] = inside_any(points[pi], hits);
      }
    });
    parallel_for(ne, [&](index_t i) {
      thread_local std::vector<index_t> hits;
      edge_hash.query(ebox[static_cast<size_t>(i)], hits);
      T best = kInf;
      for (index_t j : hits)
        if (j > i) best = std::min(best, ee_candidate(static_cast<size_t>(i), static_cast<size_t>(j)));
      emin[i] = best;
    });
  } else {
    std::vector<index_t> all_tets(static_cast<size_t>(nt));
    std::iota(all_tets.begin(), all_tets.end(), 0);
    parallel_for(np, [&](index_t pi) {
      T best = kInf;
      for (size_t f = 0; f < faces.size(); ++f)
        best = std::min(best, pt_candidate(points[pi], f));
      pmin[pi] = best;
      if (tet_containment) inside[pi] = inside_any(points[pi], all_tets);
    });
    parallel_for(ne, [&](index_t i) {
      T best = kInf;
      for (size_t j = static_cast<size_t>(i) + 1; j < edges.size(); ++j)
        best = std::min(best, ee_candidate(static_cast<size_t>(i), j));
      emin[i] = best;
    });
  }
  for (T d : pmin) rep.min_pt = std::min(rep.min_pt, d);
  for (T d : emin) rep.min_ee = std::min(rep.min_ee, d);
  for (uint8_t b : inside) rep.inside_count += b;

  for (const auto& g : grounds)
    for (index_t p : points) rep.min_ground = std::min(rep.min_ground, g.n.dot(x[p]) - g.offset);
  return rep;
}

}  // namespace tetipc
