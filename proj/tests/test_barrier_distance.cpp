#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "tetipc/barrier.hpp"
#include "tetipc/distance.hpp"
#include "tetipc/oracle.hpp"
#include "tetipc/spatial_hash.hpp"

using namespace tetipc;
using Catch::Approx;

namespace {
std::mt19937& rng() {
  static std::mt19937 gen(6021023);
  return gen;
}
double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}
Vec3<double> random_point(double scale = 1.0) {
  return {uniform(-scale, scale), uniform(-scale, scale), uniform(-scale, scale)};
}
}  // namespace

TEST_CASE("barrier pinned values at dhat = 1, d = 0.5") {
  auto bd = barrier_derivs(0.5, 1.0);
  REQUIRE(bd.b == Approx(0.17328679513998632).epsilon(1e-14));
  REQUIRE(bd.db == Approx(-1.1931471805599453).epsilon(1e-14));
  REQUIRE(bd.d2b == Approx(6.386294361119891).epsilon(1e-14));
  REQUIRE(barrier(0.5, 1.0) == bd.b);
}

TEST_CASE("barrier support, sign, and smooth junction") {
  const double dhat = 0.37;
  REQUIRE(barrier(dhat, dhat) == 0.0);
  REQUIRE(barrier(2 * dhat, dhat) == 0.0);
  REQUIRE(barrier_derivs(1.5 * dhat, dhat).db == 0.0);
  for (double f : {0.999, 0.9999, 0.99999}) {
    auto bd = barrier_derivs(f * dhat, dhat);
    REQUIRE(bd.b >= 0.0);
    REQUIRE(std::abs(bd.b) < 1e-8);
    REQUIRE(std::abs(bd.db) < 1e-3);
  }
  REQUIRE(barrier(1e-8 * dhat, dhat) > barrier(1e-4 * dhat, dhat));
  REQUIRE(barrier_derivs(1e-8 * dhat, dhat).db < -1e6);
  for (int i = 0; i < 50; ++i) {
    const double d = uniform(1e-3, 1.0) * dhat;
    REQUIRE(barrier(d, dhat) > 0.0);
    REQUIRE(barrier_derivs(d, dhat).db < 0.0);
  }
}

TEST_CASE("barrier derivatives match finite differences") {
  const double dhat = 0.8;
  for (int i = 0; i < 40; ++i) {
    const double d = uniform(0.05, 0.95) * dhat;
    auto bd = barrier_derivs(d, dhat);
    const double h = 1e-7;
    const double fd1 = (barrier(d + h, dhat) - barrier(d - h, dhat)) / (2 * h);
    const double fd2 =
        (barrier_derivs(d + h, dhat).db - barrier_derivs(d - h, dhat).db) / (2 * h);
    REQUIRE(bd.db == Approx(fd1).epsilon(1e-6).margin(1e-8));
    REQUIRE(bd.d2b == Approx(fd2).epsilon(1e-5).margin(1e-6));
  }
}

TEST_CASE("point-triangle distance: closed-form cases") {
  Vec3<double> a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);

  // interior projection
  auto r = point_triangle_distance<double>({0.2, 0.3, 0.7}, a, b, c);
  REQUIRE(r.d == Approx(0.7).epsilon(1e-14));
  REQUIRE(r.c[0] == 1.0);
  REQUIRE(r.c[1] == Approx(-0.5).epsilon(1e-13));  // 1 - u - v
  REQUIRE(r.c[2] == Approx(-0.2).epsilon(1e-13));
  REQUIRE(r.c[3] == Approx(-0.3).epsilon(1e-13));

  // nearest vertex
  r = point_triangle_distance<double>({-1.0, -1.0, 0.0}, a, b, c);
  REQUIRE(r.d == Approx(std::sqrt(2.0)).epsilon(1e-14));
  REQUIRE(r.c[1] == -1.0);
  REQUIRE(r.c[2] == 0.0);
  REQUIRE(r.c[3] == 0.0);

  // nearest edge (hypotenuse)
  r = point_triangle_distance<double>({1.0, 1.0, 0.0}, a, b, c);
  REQUIRE(r.d == Approx(std::sqrt(0.5)).epsilon(1e-13));
  REQUIRE(r.c[1] == Approx(0.0).margin(1e-15));
}

TEST_CASE("point-triangle distance matches exhaustive search (seed 6021023)") {
  for (int trial = 0; trial < 150; ++trial) {
    Vec3<double> a = random_point(), b = random_point(), c = random_point(), p = random_point(2.0);
    if ((b - a).cross(c - a).norm() < 1e-3) continue;
    auto r = point_triangle_distance(p, a, b, c);
    REQUIRE(r.d == Approx(oracle::brute_point_triangle(p, a, b, c)).epsilon(1e-6).margin(1e-7));

    REQUIRE(r.c[0] == 1.0);
    REQUIRE(r.c.sum() == Approx(0.0).margin(1e-12));
    for (int i = 1; i < 4; ++i) REQUIRE(r.c[i] <= 1e-15);
    Vec3<double> t = r.c[0] * p + r.c[1] * a + r.c[2] * b + r.c[3] * c;
    REQUIRE(t.norm() == Approx(r.d).epsilon(1e-12).margin(1e-15));
  }
}

TEST_CASE("edge-edge distance: closed-form cases") {
  // skew perpendicular, unit gap
  auto r = edge_edge_distance<double>({-1, 0, 0}, {1, 0, 0}, {0, -1, 1}, {0, 1, 1});
  REQUIRE(r.d == Approx(1.0).epsilon(1e-14));
  REQUIRE(r.c[0] == Approx(0.5).epsilon(1e-13));
  REQUIRE(r.c[1] == Approx(0.5).epsilon(1e-13));
  REQUIRE(r.c[2] == Approx(-0.5).epsilon(1e-13));
  REQUIRE(r.c[3] == Approx(-0.5).epsilon(1e-13));

  // parallel with partial overlap: witness at the middle of the overlap
  r = edge_edge_distance<double>({0, 0, 0}, {2, 0, 0}, {1, 1, 0}, {3, 1, 0});
  REQUIRE(r.d == Approx(1.0).epsilon(1e-14));
  REQUIRE(r.c[0] == Approx(0.25).epsilon(1e-13));
  REQUIRE(r.c[1] == Approx(0.75).epsilon(1e-13));
  REQUIRE(r.c[2] == Approx(-0.75).epsilon(1e-13));
  REQUIRE(r.c[3] == Approx(-0.25).epsilon(1e-13));

  // disjoint collinear: endpoint to endpoint
  r = edge_edge_distance<double>({0, 0, 0}, {1, 0, 0}, {3, 0, 0}, {5, 0, 0});
  REQUIRE(r.d == Approx(2.0).epsilon(1e-14));
  REQUIRE(r.c[1] == 1.0);
  REQUIRE(r.c[2] == -1.0);
}

TEST_CASE("edge-edge distance matches exhaustive search") {
  for (int trial = 0; trial < 150; ++trial) {
    Vec3<double> p1 = random_point(), q1 = random_point(), p2 = random_point(),
                 q2 = random_point();
    auto r = edge_edge_distance(p1, q1, p2, q2);
    REQUIRE(r.d == Approx(oracle::brute_edge_edge(p1, q1, p2, q2)).epsilon(1e-6).margin(1e-7));

    REQUIRE(r.c[0] + r.c[1] == Approx(1.0).margin(1e-13));
    REQUIRE(r.c[2] + r.c[3] == Approx(-1.0).margin(1e-13));
    REQUIRE(r.c[0] >= -1e-15);
    REQUIRE(r.c[1] >= -1e-15);
    REQUIRE(r.c[2] <= 1e-15);
    REQUIRE(r.c[3] <= 1e-15);
    Vec3<double> t = r.c[0] * p1 + r.c[1] * q1 + r.c[2] * p2 + r.c[3] * q2;
    REQUIRE(t.norm() == Approx(r.d).epsilon(1e-12).margin(1e-15));
  }
}

TEST_CASE("witness weights are the distance gradient where it is smooth") {
  // point-triangle with a strictly interior witness
  for (int trial = 0; trial < 25; ++trial) {
    Vec3<double> a = random_point(), b = random_point(), c = random_point();
    Vec3<double> n = (b - a).cross(c - a);
    if (n.norm() < 1e-2) continue;
    n.normalize();
    const double u = uniform(0.2, 0.4), v = uniform(0.2, 0.4);
    Vec3<double> p = (1 - u - v) * a + u * b + v * c + uniform(0.2, 0.6) * n;

    Eigen::VectorXd z(12);
    z << p, a, b, c;
    auto dist = [](const Eigen::VectorXd& w) {
      return point_triangle_distance<double>(w.segment<3>(0), w.segment<3>(3), w.segment<3>(6),
                                             w.segment<3>(9))
          .d;
    };
    Eigen::VectorXd g = oracle::fd_gradient_flat<double>(dist, z);
    auto r = point_triangle_distance(p, a, b, c);
    Vec3<double> t = r.c[0] * p + r.c[1] * a + r.c[2] * b + r.c[3] * c;
    for (int i = 0; i < 4; ++i)
      REQUIRE((g.segment<3>(3 * i) - r.c[i] * t / r.d).norm() < 1e-6);
  }

  // skew edge-edge with interior witnesses
  for (int trial = 0; trial < 25; ++trial) {
    Vec3<double> p1 = random_point(), q1 = random_point(), p2 = random_point(),
                 q2 = random_point();
    auto r = edge_edge_distance(p1, q1, p2, q2);
    if (r.c[0] < 0.1 || r.c[0] > 0.9 || -r.c[3] < 0.1 || -r.c[3] > 0.9 || r.d < 0.05) continue;

    Eigen::VectorXd z(12);
    z << p1, q1, p2, q2;
    auto dist = [](const Eigen::VectorXd& w) {
      return edge_edge_distance<double>(w.segment<3>(0), w.segment<3>(3), w.segment<3>(6),
                                        w.segment<3>(9))
          .d;
    };
    Eigen::VectorXd g = oracle::fd_gradient_flat<double>(dist, z);
    Vec3<double> t = r.c[0] * p1 + r.c[1] * q1 + r.c[2] * p2 + r.c[3] * q2;
    std::array<Vec3<double>, 4> pts = {p1, q1, p2, q2};
    for (int i = 0; i < 4; ++i)
      REQUIRE((g.segment<3>(3 * i) - r.c[i] * t / r.d).norm() < 1e-6);
  }
}

TEST_CASE("spatial hash returns exactly the overlapping boxes") {
  std::vector<Aabb<double>> boxes;
  for (int i = 0; i < 120; ++i) {
    Vec3<double> lo = random_point(3.0);
    Aabb<double> b;
    b.extend(lo);
    b.extend(lo + Vec3<double>(uniform(0.01, 0.5), uniform(0.01, 0.5), uniform(0.01, 0.5)));
    boxes.push_back(b);
  }
  for (double cell : {0.13, 0.5, 2.0}) {
    SpatialHash<double> hash;
    hash.build(boxes, cell);
    std::vector<index_t> out;
    for (int probe = 0; probe < 60; ++probe) {
      Vec3<double> lo = random_point(3.5);
      Aabb<double> q;
      q.extend(lo);
      q.extend(lo + Vec3<double>(uniform(0.01, 0.8), uniform(0.01, 0.8), uniform(0.01, 0.8)));
      hash.query(q, out);
      std::vector<index_t> ref;
      for (index_t i = 0; i < 120; ++i)
        if (boxes[i].overlaps(q)) ref.push_back(i);
      REQUIRE(out == ref);
    }
  }
}
