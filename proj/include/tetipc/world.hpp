#pragma once

#include <vector>

#include "tetipc/contact.hpp"
#include "tetipc/elasticity.hpp"
#include "tetipc/mesh.hpp"

namespace tetipc {

// Simulation-ready aggregate: all objects merged into one index space, with
// per-tet materials, Dirichlet flags, the rest-pose contact exclusion table,
// and the vertex->incident-tet map the assembly passes gather through.
template <class T>
struct World {
  TetMesh<T> mesh;
  std::vector<Material<T>> material;    // per tet
  std::vector<index_t> vertex_object;   // per vertex
  index_t num_objects = 0;
  std::vector<std::uint8_t> fixed;      // per vertex; scripted or pinned
  ExclusionTable exclusion;
  Vec3<T> gravity = Vec3<T>::Zero();
  bool elasticity_enabled = true;
  T cell_size = T(1);

  // CSR over vertices; entries encode tet * 4 + corner.
  std::vector<index_t> incidence_offsets;
  std::vector<index_t> incidence;

  index_t num_vertices() const { return mesh.num_vertices(); }
  index_t num_tets() const { return mesh.num_tets(); }
};

template <class T>
World<T> make_world(const std::vector<TetMesh<T>>& parts, const std::vector<Material<T>>& mats,
                    T dhat) {
  if (parts.empty()) throw SceneError("world has no objects");
  if (parts.size() != mats.size()) throw SceneError("one material per object required");

  World<T> w;
  TetMesh<T>& m = w.mesh;
  for (size_t i = 0; i < parts.size(); ++i) {
    const TetMesh<T>& p = parts[i];
    const index_t voff = static_cast<index_t>(m.vertices_rest.size());
    m.vertices_rest.insert(m.vertices_rest.end(), p.vertices_rest.begin(), p.vertices_rest.end());
    for (const Vec4i& t : p.tets)
      m.tets.push_back(Vec4i(t[0] + voff, t[1] + voff, t[2] + voff, t[3] + voff));
    for (const Vec3i& f : p.surface_faces)
      m.surface_faces.push_back(Vec3i(f[0] + voff, f[1] + voff, f[2] + voff));
    for (const Vec2i& e : p.surface_edges)
      m.surface_edges.push_back(Vec2i(e[0] + voff, e[1] + voff));
    for (index_t v : p.surface_vertices) m.surface_vertices.push_back(v + voff);
    m.Dm_inv.insert(m.Dm_inv.end(), p.Dm_inv.begin(), p.Dm_inv.end());
    m.rest_volume.insert(m.rest_volume.end(), p.rest_volume.begin(), p.rest_volume.end());
    m.dFdx_weights.insert(m.dFdx_weights.end(), p.dFdx_weights.begin(), p.dFdx_weights.end());
    m.mass.insert(m.mass.end(), p.mass.begin(), p.mass.end());

    w.material.insert(w.material.end(), p.tets.size(), mats[i]);
    w.vertex_object.insert(w.vertex_object.end(), p.vertices_rest.size(),
                           static_cast<index_t>(i));
  }
  w.num_objects = static_cast<index_t>(parts.size());
  w.fixed.assign(m.vertices_rest.size(), 0);

  w.exclusion = build_exclusion_table(m.vertices_rest, m.surface_faces, m.surface_edges,
                                      m.surface_vertices, w.vertex_object, T(1.5) * dhat);
  w.cell_size = std::max(dhat, m.average_surface_edge_length());

  const index_t nv = m.num_vertices();
  w.incidence_offsets.assign(static_cast<size_t>(nv) + 1, 0);
  for (const Vec4i& t : m.tets)
    for (int k = 0; k < 4; ++k) w.incidence_offsets[static_cast<size_t>(t[k]) + 1]++;
  for (size_t v = 0; v < static_cast<size_t>(nv); ++v)
    w.incidence_offsets[v + 1] += w.incidence_offsets[v];
  w.incidence.resize(m.tets.size() * 4);
  std::vector<index_t> cursor(w.incidence_offsets.begin(), w.incidence_offsets.end() - 1);
  for (index_t t = 0; t < m.num_tets(); ++t)
    for (int k = 0; k < 4; ++k) {
      const index_t v = m.tets[t][k];
      w.incidence[static_cast<size_t>(cursor[v]++)] = t * 4 + k;
    }
  return w;
}

}  // namespace tetipc
