#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tetipc/mesh.hpp"

namespace tetipc {

// Compact boundary mesh: only surface vertices are emitted, faces remapped
// and 1-indexed.
template <class T>
void write_surface_obj(const std::string& path, const TetMesh<T>& mesh,
                       const std::vector<Vec3<T>>& x, int precision = 17) {
  std::ofstream out(path);
  if (!out) throw SceneError("cannot write " + path);
  std::vector<index_t> remap(x.size(), -1);
  char buf[192];
  index_t next = 1;
  for (index_t v : mesh.surface_vertices) {
    remap[v] = next++;
    std::snprintf(buf, sizeof(buf), "v %.*g %.*g %.*g\n", precision, double(x[v][0]), precision,
                  double(x[v][1]), precision, double(x[v][2]));
    out << buf;
  }
  for (const Vec3i& f : mesh.surface_faces)
    out << "f " << remap[f[0]] << " " << remap[f[1]] << " " << remap[f[2]] << "\n";
  if (!out) throw SceneError("write failed for " + path);
}

// Minimal OBJ reader for audit: v and f records only, faces triangulated as a
// fan, 1-indexed (negative indices count from the end).
template <class T>
void read_obj(const std::string& path, std::vector<Vec3<T>>& verts, std::vector<Vec3i>& faces) {
  std::ifstream in(path);
  if (!in) throw SceneError("cannot open " + path);
  verts.clear();
  faces.clear();
  std::string line, tok;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    if (!(ls >> tok)) continue;
    if (tok == "v") {
      Vec3<T> v;
      if (!(ls >> v[0] >> v[1] >> v[2])) throw SceneError("bad vertex line in " + path);
      verts.push_back(v);
    } else if (tok == "f") {
      std::vector<index_t> idx;
      std::string fv;
      while (ls >> fv) {
        const long n = std::strtol(fv.c_str(), nullptr, 10);
        if (n == 0) throw SceneError("bad face index in " + path);
        idx.push_back(static_cast<index_t>(n > 0 ? n - 1 : static_cast<long>(verts.size()) + n));
      }
      if (idx.size() < 3) throw SceneError("face with fewer than 3 vertices in " + path);
      for (index_t i : idx)
        if (i < 0 || i >= static_cast<index_t>(verts.size()))
          throw SceneError("face index out of range in " + path);
      for (size_t k = 2; k < idx.size(); ++k)
        faces.push_back(Vec3i(idx[0], idx[k - 1], idx[k]));
    }
  }
}

}  // namespace tetipc
