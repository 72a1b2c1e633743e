#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tetipc/common.hpp"

namespace tetipc {

enum class MeshFormat { Auto, NodeEle, Tet };

// Volumetric tetrahedral mesh with all rest-state quantities the element
// kernels need. Immutable after construction; safe to share across workers.
template <class T>
struct TetMesh {
  std::vector<Vec3<T>> vertices_rest;
  std::vector<Vec4i> tets;

  // Boundary, outward-oriented.
  std::vector<Vec3i> surface_faces;
  std::vector<Vec2i> surface_edges;
  std::vector<index_t> surface_vertices;

  std::vector<Mat3<T>> Dm_inv;
  std::vector<T> rest_volume;
  // Row v holds the weight vector w_v with dF = sum_v dx_v * w_v^T; this is
  // the compact form of the constant 9x12 map from stacked positions to
  // vec(F). Row 0 = -(row1+row2+row3), rows 1..3 = rows of Dm_inv.
  std::vector<Eigen::Matrix<T, 4, 3>> dFdx_weights;
  std::vector<T> mass;

  T density = T(1000);

  index_t num_vertices() const { return static_cast<index_t>(vertices_rest.size()); }
  index_t num_tets() const { return static_cast<index_t>(tets.size()); }

  T total_rest_volume() const {
    T v = 0;
    for (T w : rest_volume) v += w;
    return v;
  }

  T average_surface_edge_length() const {
    if (surface_edges.empty()) return T(0);
    T sum = 0;
    for (const Vec2i& e : surface_edges)
      sum += (vertices_rest[e[0]] - vertices_rest[e[1]]).norm();
    return sum / T(surface_edges.size());
  }

  // Materializes the 9x12 map vec(F) = dFdx * [x0;x1;x2;x3].
  Mat9x12<T> dFdx(index_t tet) const {
    Mat9x12<T> J = Mat9x12<T>::Zero();
    const auto& W = dFdx_weights[tet];
    for (int v = 0; v < 4; ++v)
      for (int j = 0; j < 3; ++j)
        for (int a = 0; a < 3; ++a)
          J(3 * j + a, 3 * v + a) = W(v, j);
    return J;
  }
};

namespace detail {

inline std::array<Vec3i, 4> tet_boundary_faces(const Vec4i& t) {
  // Outward-oriented for a positively oriented tet.
  return {Vec3i(t[1], t[2], t[3]), Vec3i(t[0], t[3], t[2]),
          Vec3i(t[0], t[1], t[3]), Vec3i(t[0], t[2], t[1])};
}

}  // namespace detail

template <class T>
TetMesh<T> build_tet_mesh(std::vector<Vec3<T>> vertices, std::vector<Vec4i> tets,
                          T density = T(1000),
                          std::vector<std::string>* warnings = nullptr) {
  TetMesh<T> m;
  m.vertices_rest = std::move(vertices);
  m.tets = std::move(tets);
  m.density = density;

  const index_t nv = m.num_vertices();
  const index_t nt = m.num_tets();
  if (nv == 0) throw MeshError("mesh has no vertices");

  for (index_t t = 0; t < nt; ++t)
    for (int k = 0; k < 4; ++k)
      if (m.tets[t][k] < 0 || m.tets[t][k] >= nv)
        throw MeshError("tet " + std::to_string(t) + " references vertex " +
                        std::to_string(m.tets[t][k]) + " out of range");

  m.Dm_inv.resize(nt);
  m.rest_volume.resize(nt);
  m.dFdx_weights.resize(nt);
  m.mass.assign(nv, T(0));

  for (index_t t = 0; t < nt; ++t) {
    const Vec4i& tet = m.tets[t];
    const Vec3<T>& x0 = m.vertices_rest[tet[0]];
    Mat3<T> Dm;
    Dm.col(0) = m.vertices_rest[tet[1]] - x0;
    Dm.col(1) = m.vertices_rest[tet[2]] - x0;
    Dm.col(2) = m.vertices_rest[tet[3]] - x0;
    const T det = Dm.determinant();
    if (!(det > T(0)))
      throw MeshError("tet " + std::to_string(t) +
                      " has non-positive rest volume (det = " + std::to_string(double(det)) + ")");
    m.rest_volume[t] = det / T(6);
    m.Dm_inv[t] = Dm.inverse();

    auto& W = m.dFdx_weights[t];
    for (int v = 1; v < 4; ++v) W.row(v) = m.Dm_inv[t].row(v - 1);
    W.row(0) = -(W.row(1) + W.row(2) + W.row(3));

    const T mq = density * m.rest_volume[t] / T(4);
    for (int k = 0; k < 4; ++k) m.mass[tet[k]] += mq;
  }

  // Surface faces: those that belong to exactly one tet.
  std::map<std::array<index_t, 3>, std::pair<int, Vec3i>> face_count;
  for (index_t t = 0; t < nt; ++t) {
    for (const Vec3i& f : detail::tet_boundary_faces(m.tets[t])) {
      std::array<index_t, 3> key = {f[0], f[1], f[2]};
      std::sort(key.begin(), key.end());
      auto [it, inserted] = face_count.try_emplace(key, std::pair<int, Vec3i>{0, f});
      it->second.first++;
    }
  }
  for (const auto& [key, cf] : face_count) {
    if (cf.first == 1) {
      m.surface_faces.push_back(cf.second);
    } else if (cf.first > 2 && warnings) {
      warnings->push_back("non-manifold face (" + std::to_string(key[0]) + "," +
                          std::to_string(key[1]) + "," + std::to_string(key[2]) +
                          ") shared by " + std::to_string(cf.first) + " tets");
    }
  }

  std::map<std::array<index_t, 2>, bool> edge_set;
  std::vector<bool> on_surface(nv, false);
  for (const Vec3i& f : m.surface_faces) {
    for (int k = 0; k < 3; ++k) {
      on_surface[f[k]] = true;
      index_t a = f[k], b = f[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      edge_set[{a, b}] = true;
    }
  }
  for (const auto& [e, _] : edge_set) m.surface_edges.push_back(Vec2i(e[0], e[1]));
  for (index_t v = 0; v < nv; ++v)
    if (on_surface[v]) m.surface_vertices.push_back(v);

  return m;
}

// Deformation gradient of one tet: F = Ds * Dm_inv, Ds the current edge matrix.
template <class T>
Mat3<T> compute_deformation_gradient(const TetMesh<T>& mesh, const std::vector<Vec3<T>>& x,
                                     index_t tet) {
  const Vec4i& t = mesh.tets[tet];
  Mat3<T> Ds;
  Ds.col(0) = x[t[1]] - x[t[0]];
  Ds.col(1) = x[t[2]] - x[t[0]];
  Ds.col(2) = x[t[3]] - x[t[0]];
  return Ds * mesh.Dm_inv[tet];
}

namespace detail {

inline std::vector<std::string> tokenize_line(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    std::string w;
    while (ls >> w) tok.push_back(w);
    if (!tok.empty()) return tok;
  }
  return {};
}

template <class T>
T parse_num(const std::string& s, const char* what) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<T>(v);
  } catch (const std::exception&) {
    throw MeshError(std::string("failed to parse ") + what + " from '" + s + "'");
  }
}

inline long parse_int(const std::string& s, const char* what) {
  try {
    size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw MeshError(std::string("failed to parse ") + what + " from '" + s + "'");
  }
}

}  // namespace detail

// TetGen-style .node/.ele pair. `path` may point at either file; the sibling
// is derived by swapping the extension. Indices may be 0- or 1-based, taken
// from the first node row.
template <class T>
TetMesh<T> load_node_ele(const std::string& path, T density = T(1000),
                         std::vector<std::string>* warnings = nullptr) {
  namespace fs = std::filesystem;
  fs::path node_path(path), ele_path(path);
  node_path.replace_extension(".node");
  ele_path.replace_extension(".ele");

  std::ifstream node_in(node_path);
  if (!node_in) throw MeshError("cannot open " + node_path.string());
  std::ifstream ele_in(ele_path);
  if (!ele_in) throw MeshError("cannot open " + ele_path.string());

  auto header = detail::tokenize_line(node_in);
  if (header.empty()) throw MeshError(node_path.string() + ": missing header");
  const long n_nodes = detail::parse_int(header[0], "node count");
  if (header.size() >= 2 && detail::parse_int(header[1], "dimension") != 3)
    throw MeshError(node_path.string() + ": only 3-D meshes are supported");

  std::vector<Vec3<T>> verts(static_cast<size_t>(n_nodes));
  long index_base = 0;
  for (long i = 0; i < n_nodes; ++i) {
    auto row = detail::tokenize_line(node_in);
    if (row.size() < 4) throw MeshError(node_path.string() + ": truncated node row");
    const long idx = detail::parse_int(row[0], "node index");
    if (i == 0) index_base = idx;
    const long slot = idx - index_base;
    if (slot < 0 || slot >= n_nodes)
      throw MeshError(node_path.string() + ": node index " + std::to_string(idx) + " out of range");
    verts[static_cast<size_t>(slot)] =
        Vec3<T>(detail::parse_num<T>(row[1], "x"), detail::parse_num<T>(row[2], "y"),
                detail::parse_num<T>(row[3], "z"));
  }

  header = detail::tokenize_line(ele_in);
  if (header.empty()) throw MeshError(ele_path.string() + ": missing header");
  const long n_tets = detail::parse_int(header[0], "tet count");
  if (header.size() >= 2 && detail::parse_int(header[1], "nodes per tet") != 4)
    throw MeshError(ele_path.string() + ": only linear (4-node) tets are supported");

  std::vector<Vec4i> tets(static_cast<size_t>(n_tets));
  for (long i = 0; i < n_tets; ++i) {
    auto row = detail::tokenize_line(ele_in);
    if (row.size() < 5) throw MeshError(ele_path.string() + ": truncated tet row");
    for (int k = 0; k < 4; ++k)
      tets[static_cast<size_t>(i)][k] =
          static_cast<index_t>(detail::parse_int(row[1 + k], "tet vertex") - index_base);
  }

  return build_tet_mesh<T>(std::move(verts), std::move(tets), density, warnings);
}

// Minimal structured text format:
//   tetmesh 1
//   vertices <N>
//   <x y z> ...
//   tets <M>
//   <v0 v1 v2 v3> ...
template <class T>
TetMesh<T> load_tet_text(const std::string& path, T density = T(1000),
                         std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open " + path);

  auto magic = detail::tokenize_line(in);
  if (magic.size() < 2 || magic[0] != "tetmesh")
    throw MeshError(path + ": missing 'tetmesh <version>' header");
  if (detail::parse_int(magic[1], "format version") != 1)
    throw MeshError(path + ": unsupported format version " + magic[1]);

  auto section = detail::tokenize_line(in);
  if (section.size() != 2 || section[0] != "vertices")
    throw MeshError(path + ": expected 'vertices <count>'");
  const long nv = detail::parse_int(section[1], "vertex count");
  std::vector<Vec3<T>> verts(static_cast<size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    auto row = detail::tokenize_line(in);
    if (row.size() != 3) throw MeshError(path + ": vertex row must have 3 coordinates");
    verts[static_cast<size_t>(i)] =
        Vec3<T>(detail::parse_num<T>(row[0], "x"), detail::parse_num<T>(row[1], "y"),
                detail::parse_num<T>(row[2], "z"));
  }

  section = detail::tokenize_line(in);
  if (section.size() != 2 || section[0] != "tets")
    throw MeshError(path + ": expected 'tets <count>'");
  const long nt = detail::parse_int(section[1], "tet count");
  std::vector<Vec4i> tets(static_cast<size_t>(nt));
  for (long i = 0; i < nt; ++i) {
    auto row = detail::tokenize_line(in);
    if (row.size() != 4) throw MeshError(path + ": tet row must have 4 indices");
    for (int k = 0; k < 4; ++k)
      tets[static_cast<size_t>(i)][k] = static_cast<index_t>(detail::parse_int(row[k], "tet vertex"));
  }

  return build_tet_mesh<T>(std::move(verts), std::move(tets), density, warnings);
}

template <class T>
TetMesh<T> load_mesh(const std::string& path, MeshFormat format = MeshFormat::Auto,
                     T density = T(1000), std::vector<std::string>* warnings = nullptr) {
  if (format == MeshFormat::Auto) {
    const auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".node" || ext == ".ele")
      format = MeshFormat::NodeEle;
    else if (ext == ".tet")
      format = MeshFormat::Tet;
    else
      throw MeshError("cannot infer mesh format from extension '" + ext + "'");
  }
  return format == MeshFormat::NodeEle ? load_node_ele<T>(path, density, warnings)
                                       : load_tet_text<T>(path, density, warnings);
}

// Axis-aligned block of nx*ny*nz cells, five tets per cell with mirrored
// splits so neighboring cells share diagonals. Used for demo scenes and tests.
template <class T>
TetMesh<T> make_box_mesh(int nx, int ny, int nz, Vec3<T> size, T density = T(1000),
                         Vec3<T> origin = Vec3<T>::Zero()) {
  if (nx < 1 || ny < 1 || nz < 1) throw MeshError("box resolution must be >= 1");
  auto vid = [&](int i, int j, int k) {
    return static_cast<index_t>((i * (ny + 1) + j) * (nz + 1) + k);
  };
  std::vector<Vec3<T>> verts;
  verts.reserve(static_cast<size_t>((nx + 1) * (ny + 1) * (nz + 1)));
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j)
      for (int k = 0; k <= nz; ++k)
        verts.push_back(origin + Vec3<T>(size[0] * T(i) / T(nx), size[1] * T(j) / T(ny),
                                         size[2] * T(k) / T(nz)));

  std::vector<Vec4i> tets;
  tets.reserve(static_cast<size_t>(nx * ny * nz) * 5);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) {
        index_t c[2][2][2];
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            for (int d = 0; d < 2; ++d) c[a][b][d] = vid(i + a, j + b, k + d);
        const bool even = ((i + j + k) % 2) == 0;
        auto v = [&](int a, int b, int d) {
          // Mirror odd cells in x so diagonals of shared faces line up.
          return even ? c[a][b][d] : c[1 - a][b][d];
        };
        const index_t A = v(0, 0, 0), B = v(1, 0, 0), C = v(1, 1, 0), D = v(0, 1, 0);
        const index_t E = v(0, 0, 1), F = v(1, 0, 1), G = v(1, 1, 1), H = v(0, 1, 1);
        const std::array<Vec4i, 5> cell = {Vec4i(A, B, D, E), Vec4i(B, C, D, G),
                                           Vec4i(B, F, E, G), Vec4i(D, E, G, H),
                                           Vec4i(B, D, E, G)};
        for (Vec4i t : cell) {
          Mat3<T> Dm;
          Dm.col(0) = verts[t[1]] - verts[t[0]];
          Dm.col(1) = verts[t[2]] - verts[t[0]];
          Dm.col(2) = verts[t[3]] - verts[t[0]];
          if (Dm.determinant() < T(0)) std::swap(t[2], t[3]);
          tets.push_back(t);
        }
      }

  return build_tet_mesh<T>(std::move(verts), std::move(tets), density);
}

template <class T>
void save_tet_text(const TetMesh<T>& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write " + path);
  out << "tetmesh 1\n";
  out << "vertices " << mesh.num_vertices() << "\n";
  char buf[128];
  for (const Vec3<T>& v : mesh.vertices_rest) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", double(v[0]), double(v[1]),
                  double(v[2]));
    out << buf;
  }
  out << "tets " << mesh.num_tets() << "\n";
  for (const Vec4i& t : mesh.tets)
    out << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
}

template <class T>
void save_node_ele(const TetMesh<T>& mesh, const std::string& base_path) {
  namespace fs = std::filesystem;
  fs::path node_path(base_path), ele_path(base_path);
  node_path.replace_extension(".node");
  ele_path.replace_extension(".ele");
  std::ofstream node(node_path);
  if (!node) throw MeshError("cannot write " + node_path.string());
  node << mesh.num_vertices() << " 3 0 0\n";
  char buf[160];
  for (index_t i = 0; i < mesh.num_vertices(); ++i) {
    const Vec3<T>& v = mesh.vertices_rest[i];
    std::snprintf(buf, sizeof(buf), "%d %.17g %.17g %.17g\n", i, double(v[0]), double(v[1]),
                  double(v[2]));
    node << buf;
  }
  std::ofstream ele(ele_path);
  if (!ele) throw MeshError("cannot write " + ele_path.string());
  ele << mesh.num_tets() << " 4 0\n";
  for (index_t t = 0; t < mesh.num_tets(); ++t) {
    const Vec4i& e = mesh.tets[t];
    ele << t << " " << e[0] << " " << e[1] << " " << e[2] << " " << e[3] << "\n";
  }
}

}  // namespace tetipc
