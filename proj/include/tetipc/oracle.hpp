#pragma once

// Slow reference implementations used only by the test suite: finite
// differences, dense assemblies, exhaustive searches. Nothing here is called
// from the solver.

#include <functional>
#include <queue>
#include <vector>

#include "tetipc/common.hpp"
#include "tetipc/svd3.hpp"

namespace tetipc::oracle {

// Central finite difference of a scalar function of a 3x3 matrix.
template <class T, class Fn>
Vec9<T> fd_gradient_mat3(Fn&& f, const Mat3<T>& F, T h = T(1e-6)) {
  Vec9<T> g;
  Mat3<T> Fp = F, Fm = F;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) {
      Fp(i, j) = F(i, j) + h;
      Fm(i, j) = F(i, j) - h;
      g[3 * j + i] = (f(Fp) - f(Fm)) / (T(2) * h);
      Fp(i, j) = F(i, j);
      Fm(i, j) = F(i, j);
    }
  return g;
}

// Central finite difference of a 9-vector function of a 3x3 matrix.
template <class T, class Fn>
Mat9<T> fd_jacobian_mat3(Fn&& f, const Mat3<T>& F, T h = T(1e-5)) {
  Mat9<T> J;
  Mat3<T> Fp = F, Fm = F;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) {
      Fp(i, j) = F(i, j) + h;
      Fm(i, j) = F(i, j) - h;
      J.col(3 * j + i) = (f(Fp) - f(Fm)) / (T(2) * h);
      Fp(i, j) = F(i, j);
      Fm(i, j) = F(i, j);
    }
  return J;
}

// Central finite difference of a scalar function of stacked positions.
template <class T, class Fn>
std::vector<Vec3<T>> fd_gradient_positions(Fn&& f, std::vector<Vec3<T>> x, T h = T(1e-6)) {
  std::vector<Vec3<T>> g(x.size(), Vec3<T>::Zero());
  for (size_t v = 0; v < x.size(); ++v)
    for (int a = 0; a < 3; ++a) {
      const T saved = x[v][a];
      x[v][a] = saved + h;
      const T fp = f(x);
      x[v][a] = saved - h;
      const T fm = f(x);
      x[v][a] = saved;
      g[v][a] = (fp - fm) / (T(2) * h);
    }
  return g;
}

// Central finite difference of a scalar function of a flat coordinate vector.
template <class T, class Fn>
Eigen::VectorX<T> fd_gradient_flat(Fn&& f, Eigen::VectorX<T> x, T h = T(1e-6)) {
  Eigen::VectorX<T> g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const T saved = x[i];
    x[i] = saved + h;
    const T fp = f(x);
    x[i] = saved - h;
    const T fm = f(x);
    x[i] = saved;
    g[i] = (fp - fm) / (T(2) * h);
  }
  return g;
}

template <class T, class Fn>
Eigen::MatrixX<T> fd_jacobian_flat(Fn&& f, Eigen::VectorX<T> x, Eigen::Index rows,
                                   T h = T(1e-5)) {
  Eigen::MatrixX<T> J(rows, x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const T saved = x[i];
    x[i] = saved + h;
    const Eigen::VectorX<T> fp = f(x);
    x[i] = saved - h;
    const Eigen::VectorX<T> fm = f(x);
    x[i] = saved;
    J.col(i) = (fp - fm) / (T(2) * h);
  }
  return J;
}

// Minimum of a 2-parameter distance surface, certified two ways. A
// branch-and-bound pass exploits that the parameter-to-position map is
// affine: over a cell the world diameter is at most du*Lu + dv*Lv and the
// distance is 1-Lipschitz in world space, so cells whose lower bound cannot
// beat the incumbent are pruned. Anisotropic or flat valleys (needle
// triangles, parallel edges) exhaust the cell budget before certifying, so
// the seed is then polished by exact 1D minimizations: the distance is
// convex along any parameter line, where a grid window refinement IS
// certified, and the eigenvectors of the parameter-space Gram matrix are
// conjugate directions of the squared distance, so a pair of such line
// solves finishes interior minima regardless of conditioning.
namespace detail {

template <class T>
struct BnbCell {
  T u0, u1, v0, v1, lb;
  bool operator<(const BnbCell& o) const { return lb > o.lb; }  // min-heap
};

template <class T>
struct Min2 {
  T d = std::numeric_limits<T>::max();
  T u = 0, v = 0;

  template <class Fn>
  void consider(Fn&& f, T uu, T vv) {
    const T val = f(uu, vv);
    if (val < d) {
      d = val;
      u = uu;
      v = vv;
    }
  }
};

template <class T, class Fn, class Feasible>
void bnb_pass(Fn&& f, T Lu, T Lv, Feasible&& feasible, T gap, long budget, Min2<T>& best) {
  std::priority_queue<BnbCell<T>> heap;
  long evals = 0;
  auto push = [&](T u0, T u1, T v0, T v1) {
    if (!feasible(u0, v0)) return;
    T u = (u0 + u1) / T(2), v = (v0 + v1) / T(2);
    if (!feasible(u, v)) {
      u = u0;
      v = v0;
    }
    ++evals;
    const T d = f(u, v);
    if (d < best.d) {
      best.d = d;
      best.u = u;
      best.v = v;
    }
    const T lb = std::max(T(0), d - ((u1 - u0) * Lu + (v1 - v0) * Lv));
    if (lb < best.d - gap) heap.push({u0, u1, v0, v1, lb});
  };

  push(T(0), T(1), T(0), T(1));
  while (!heap.empty() && evals < budget) {
    const BnbCell<T> cell = heap.top();
    heap.pop();
    if (cell.lb >= best.d - gap) break;
    const T um = (cell.u0 + cell.u1) / T(2), vm = (cell.v0 + cell.v1) / T(2);
    if ((cell.u1 - cell.u0) * Lu >= (cell.v1 - cell.v0) * Lv) {
      push(cell.u0, um, cell.v0, cell.v1);
      push(um, cell.u1, cell.v0, cell.v1);
    } else {
      push(cell.u0, cell.u1, cell.v0, vm);
      push(cell.u0, cell.u1, vm, cell.v1);
    }
  }
}

// Exact 1D minimization of f along (du, dv) through the incumbent, clipped
// to the affine constraints lo <= A (u, v) <= hi row-wise.
template <class T, class Fn, int NC>
void line_refine(Fn&& f, const Eigen::Matrix<T, NC, 2>& A, const Eigen::Matrix<T, NC, 1>& lo,
                 const Eigen::Matrix<T, NC, 1>& hi, T du, T dv, Min2<T>& best) {
  T tlo = -std::numeric_limits<T>::max(), thi = std::numeric_limits<T>::max();
  for (int r = 0; r < NC; ++r) {
    const T rate = A(r, 0) * du + A(r, 1) * dv;
    const T at = A(r, 0) * best.u + A(r, 1) * best.v;
    if (std::abs(rate) < T(1e-14)) {
      if (at < lo[r] - T(1e-12) || at > hi[r] + T(1e-12)) return;
      continue;
    }
    const T t0 = (lo[r] - at) / rate, t1 = (hi[r] - at) / rate;
    tlo = std::max(tlo, std::min(t0, t1));
    thi = std::min(thi, std::max(t0, t1));
  }
  if (!(tlo <= thi)) return;

  const int n = 96;
  const T u0 = best.u, v0 = best.v;
  const T Tlo = tlo, Thi = thi;
  T bt = 0;
  T bd = best.d;
  for (int round = 0; round < 6; ++round) {
    for (int i = 0; i <= n; ++i) {
      const T t = tlo + (thi - tlo) * T(i) / T(n);
      const T d = f(u0 + t * du, v0 + t * dv);
      if (d < bd) {
        bd = d;
        bt = t;
      }
    }
    const T w = (thi - tlo) / T(n) * T(2);
    tlo = std::max(Tlo, bt - w);
    thi = std::min(Thi, bt + w);
  }
  best.consider(f, u0 + bt * du, v0 + bt * dv);
}

template <class T, class Fn, int NC>
T certified_min2(Fn&& f, T Lu, T Lv, const Eigen::Matrix<T, NC, 2>& A,
                 const Eigen::Matrix<T, NC, 1>& lo, const Eigen::Matrix<T, NC, 1>& hi, T guv) {
  Min2<T> best;
  best.consider(f, T(0), T(0));
  best.consider(f, T(1), T(0));
  best.consider(f, T(0), T(1));
  bnb_pass(
      f, Lu, Lv,
      [&](T u, T v) { return ((A * Eigen::Matrix<T, 2, 1>(u, v) - hi).array() <= T(0)).all(); },
      T(1e-10), 20000, best);

  Eigen::Matrix<T, 2, 2> G;
  G << Lu * Lu, guv, guv, Lv * Lv;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<T, 2, 2>> eig(G);
  for (int sweep = 0; sweep < 3; ++sweep) {
    line_refine(f, A, lo, hi, eig.eigenvectors()(0, 1), eig.eigenvectors()(1, 1), best);
    line_refine(f, A, lo, hi, eig.eigenvectors()(0, 0), eig.eigenvectors()(1, 0), best);
    line_refine(f, A, lo, hi, T(1), T(0), best);
    line_refine(f, A, lo, hi, T(0), T(1), best);
    line_refine(f, A, lo, hi, T(1), T(-1), best);
  }
  return best.d;
}

}  // namespace detail

template <class T>
T brute_edge_edge(const Vec3<T>& p1, const Vec3<T>& q1, const Vec3<T>& p2, const Vec3<T>& q2) {
  auto f = [&](T s, T t) {
    return ((T(1) - s) * p1 + s * q1 - (T(1) - t) * p2 - t * q2).norm();
  };
  Eigen::Matrix<T, 2, 2> A;
  A << 1, 0, 0, 1;
  const Eigen::Matrix<T, 2, 1> lo(0, 0), hi(1, 1);
  return detail::certified_min2(f, (q1 - p1).norm(), (q2 - p2).norm(), A, lo, hi,
                                -(q1 - p1).dot(q2 - p2));
}

template <class T>
T brute_point_triangle(const Vec3<T>& p, const Vec3<T>& a, const Vec3<T>& b, const Vec3<T>& c) {
  auto f = [&](T u, T v) { return (p - (T(1) - u - v) * a - u * b - v * c).norm(); };
  Eigen::Matrix<T, 3, 2> A;
  A << 1, 0, 0, 1, 1, 1;
  const Eigen::Matrix<T, 3, 1> lo(0, 0, 0), hi(1, 1, 1);
  return detail::certified_min2(f, (b - a).norm(), (c - a).norm(), A, lo, hi,
                                (b - a).dot(c - a));
}

}  // namespace tetipc::oracle
