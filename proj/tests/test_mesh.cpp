#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "tetipc/mesh.hpp"

using namespace tetipc;
using Catch::Approx;

namespace {

TetMesh<double> unit_tet(double density = 1000.0) {
  std::vector<Vec3<double>> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  std::vector<Vec4i> t = {Vec4i(0, 1, 2, 3)};
  return build_tet_mesh<double>(v, t, density);
}

}  // namespace

TEST_CASE("unit tet rest quantities") {
  auto m = unit_tet();
  REQUIRE(m.num_vertices() == 4);
  REQUIRE(m.num_tets() == 1);
  REQUIRE(m.rest_volume[0] == Approx(1.0 / 6.0).epsilon(1e-15));
  REQUIRE((m.Dm_inv[0] - Mat3<double>::Identity()).norm() == Approx(0.0).margin(1e-15));
  for (int i = 0; i < 4; ++i)
    REQUIRE(m.mass[i] == Approx(1000.0 * (1.0 / 6.0) / 4.0).epsilon(1e-15));
  REQUIRE(m.surface_faces.size() == 4);
  REQUIRE(m.surface_edges.size() == 6);
  REQUIRE(m.surface_vertices.size() == 4);
}

TEST_CASE("inverted and degenerate tets are rejected with the tet index") {
  std::vector<Vec3<double>> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  std::vector<Vec4i> bad = {Vec4i(0, 2, 1, 3)};
  REQUIRE_THROWS_MATCHES(build_tet_mesh<double>(v, bad), MeshError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("tet 0")));

  std::vector<Vec3<double>> flat = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  std::vector<Vec4i> t = {Vec4i(0, 1, 2, 3)};
  REQUIRE_THROWS_AS(build_tet_mesh<double>(flat, t), MeshError);

  std::vector<Vec4i> oob = {Vec4i(0, 1, 2, 4)};
  REQUIRE_THROWS_AS(build_tet_mesh<double>(v, oob), MeshError);
}

TEST_CASE("five-tet cube: volume, mass lumping, surface counts") {
  auto m = make_box_mesh<double>(1, 1, 1, {1.0, 1.0, 1.0}, 1000.0);
  REQUIRE(m.num_vertices() == 8);
  REQUIRE(m.num_tets() == 5);
  REQUIRE(m.total_rest_volume() == Approx(1.0).epsilon(1e-14));
  REQUIRE(m.surface_faces.size() == 12);
  REQUIRE(m.surface_edges.size() == 18);
  REQUIRE(m.surface_vertices.size() == 8);

  double mass_sum = 0;
  for (double w : m.mass) mass_sum += w;
  REQUIRE(mass_sum == Approx(1000.0 * m.total_rest_volume()).epsilon(1e-12));
}

TEST_CASE("multi-cell boxes are conforming and closed") {
  // A non-conforming interior face would leak extra boundary triangles.
  auto check = [](int nx, int ny, int nz) {
    Vec3<double> size{double(nx), double(ny), double(nz)};
    auto m = make_box_mesh<double>(nx, ny, nz, size, 500.0);
    REQUIRE(m.num_tets() == 5 * nx * ny * nz);
    REQUIRE(m.total_rest_volume() == Approx(double(nx * ny * nz)).epsilon(1e-12));
    const double area = 2.0 * (size[0] * size[1] + size[1] * size[2] + size[0] * size[2]);
    REQUIRE(int(m.surface_faces.size()) == int(2.0 * area + 0.5));

    Vec3<double> center = size / 2.0;
    double signed_area = 0;
    for (const Vec3i& f : m.surface_faces) {
      const Vec3<double>& a = m.vertices_rest[f[0]];
      const Vec3<double>& b = m.vertices_rest[f[1]];
      const Vec3<double>& c = m.vertices_rest[f[2]];
      Vec3<double> n = (b - a).cross(c - a);
      REQUIRE(n.dot((a + b + c) / 3.0 - center) > 0.0);
      signed_area += 0.5 * n.norm();
    }
    REQUIRE(signed_area == Approx(area).epsilon(1e-12));
  };
  check(2, 1, 1);
  check(2, 2, 2);
  check(3, 2, 4);
}

TEST_CASE("deformation gradient reproduces affine maps exactly (seed 12345)") {
  auto m = make_box_mesh<double>(2, 2, 2, {1.0, 1.0, 1.0});
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Mat3<double> A;
    Vec3<double> b;
    for (int i = 0; i < 3; ++i) {
      b[i] = u(rng);
      for (int j = 0; j < 3; ++j) A(i, j) = u(rng);
    }
    std::vector<Vec3<double>> x(m.num_vertices());
    for (index_t v = 0; v < m.num_vertices(); ++v) x[v] = A * m.vertices_rest[v] + b;
    for (index_t t = 0; t < m.num_tets(); ++t) {
      Mat3<double> F = compute_deformation_gradient(m, x, t);
      REQUIRE((F - A).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("dense dFdx matches the compact weights and vec(F)") {
  auto m = make_box_mesh<double>(1, 1, 1, {0.7, 1.3, 0.9});
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3<double>> x(m.num_vertices());
  for (auto& p : x) p = Vec3<double>(u(rng), u(rng), u(rng));

  for (index_t t = 0; t < m.num_tets(); ++t) {
    Mat9x12<double> J = m.dFdx(t);
    Vec12<double> xs;
    for (int v = 0; v < 4; ++v) xs.template segment<3>(3 * v) = x[m.tets[t][v]];

    Mat3<double> F = compute_deformation_gradient(m, x, t);
    Vec9<double> vecF = Eigen::Map<Vec9<double>>(F.data());
    REQUIRE((J * xs - vecF).cwiseAbs().maxCoeff() < 1e-13);

    Mat3<double> Fw = Mat3<double>::Zero();
    for (int v = 0; v < 4; ++v)
      Fw += x[m.tets[t][v]] * m.dFdx_weights[t].row(v);
    REQUIRE((Fw - F).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("mesh file round trips") {
  namespace fs = std::filesystem;
  auto m = make_box_mesh<double>(2, 1, 3, {2.0, 1.0, 3.0}, 850.0, {-1.0, 0.25, 7.0});
  fs::path dir = fs::temp_directory_path() / "tetipc_mesh_io";
  fs::create_directories(dir);

  save_tet_text(m, (dir / "box.tet").string());
  auto mt = load_mesh<double>((dir / "box.tet").string(), MeshFormat::Auto, 850.0);
  REQUIRE(mt.num_vertices() == m.num_vertices());
  REQUIRE(mt.num_tets() == m.num_tets());
  for (index_t v = 0; v < m.num_vertices(); ++v)
    REQUIRE((mt.vertices_rest[v] - m.vertices_rest[v]).norm() == 0.0);
  for (index_t t = 0; t < m.num_tets(); ++t) REQUIRE(mt.tets[t] == m.tets[t]);

  save_node_ele(m, (dir / "box.node").string());
  auto mn = load_mesh<double>((dir / "box.node").string(), MeshFormat::Auto, 850.0);
  REQUIRE(mn.num_vertices() == m.num_vertices());
  for (index_t v = 0; v < m.num_vertices(); ++v)
    REQUIRE((mn.vertices_rest[v] - m.vertices_rest[v]).norm() == 0.0);
  for (index_t t = 0; t < m.num_tets(); ++t) REQUIRE(mn.tets[t] == m.tets[t]);

  // 1-based indices are detected from the first row.
  {
    std::ofstream node(dir / "one.node");
    node << "4 3 0 0\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n";
    std::ofstream ele(dir / "one.ele");
    ele << "1 4 0\n1 1 2 3 4\n";
  }
  auto m1 = load_mesh<double>((dir / "one.node").string());
  REQUIRE(m1.num_tets() == 1);
  REQUIRE(m1.rest_volume[0] == Approx(1.0 / 6.0));
}

TEST_CASE("average surface edge length") {
  auto m = make_box_mesh<double>(1, 1, 1, {1.0, 1.0, 1.0});
  // 12 axis edges of length 1 and 6 face diagonals of length sqrt(2).
  const double expect = (12.0 * 1.0 + 6.0 * std::sqrt(2.0)) / 18.0;
  REQUIRE(m.average_surface_edge_length() == Approx(expect).epsilon(1e-14));
}
