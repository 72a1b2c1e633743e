#pragma once

#include <algorithm>
#include <cmath>

#include "tetipc/common.hpp"

namespace tetipc {

// Closest-pair result in unified witness form: the separation vector is
// t = sum_i c_i x_i over the four participating vertices and d = |t|.
// Point-triangle: c = (1, -u, -v, -w), barycentric u+v+w = 1.
// Edge-edge:      c = (1-s, s, -(1-t), -t), segment parameters s, t.
template <class T>
struct DistanceResult {
  T d = 0;
  Vec4<T> c = Vec4<T>::Zero();
};

// Barycentric coordinates of the point of `abc` closest to `p`.
template <class T>
Vec3<T> closest_point_triangle_bary(const Vec3<T>& p, const Vec3<T>& a, const Vec3<T>& b,
                                    const Vec3<T>& c) {
  const Vec3<T> ab = b - a, ac = c - a, ap = p - a;
  const T d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= T(0) && d2 <= T(0)) return {T(1), T(0), T(0)};

  const Vec3<T> bp = p - b;
  const T d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= T(0) && d4 <= d3) return {T(0), T(1), T(0)};

  const T vc = d1 * d4 - d3 * d2;
  if (vc <= T(0) && d1 >= T(0) && d3 <= T(0)) {
    const T v = d1 / (d1 - d3);
    return {T(1) - v, v, T(0)};
  }

  const Vec3<T> cp = p - c;
  const T d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= T(0) && d5 <= d6) return {T(0), T(0), T(1)};

  const T vb = d5 * d2 - d1 * d6;
  if (vb <= T(0) && d2 >= T(0) && d6 <= T(0)) {
    const T w = d2 / (d2 - d6);
    return {T(1) - w, T(0), w};
  }

  const T va = d3 * d6 - d5 * d4;
  if (va <= T(0) && d4 - d3 >= T(0) && d5 - d6 >= T(0)) {
    const T w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {T(0), T(1) - w, w};
  }

  const T denom = T(1) / (va + vb + vc);
  const T v = vb * denom, w = vc * denom;
  return {T(1) - v - w, v, w};
}

template <class T>
DistanceResult<T> point_triangle_distance(const Vec3<T>& p, const Vec3<T>& a, const Vec3<T>& b,
                                          const Vec3<T>& c) {
  const Vec3<T> bary = closest_point_triangle_bary(p, a, b, c);
  DistanceResult<T> r;
  r.c = Vec4<T>(T(1), -bary[0], -bary[1], -bary[2]);
  r.d = (p - (bary[0] * a + bary[1] * b + bary[2] * c)).norm();
  return r;
}

// Closest parameters (s, t) between segments p1+s*(q1-p1) and p2+t*(q2-p2).
// Parallel segments resolve to the midpoint of the overlapping parameter
// interval so the witness is unique and symmetric.
template <class T>
void closest_segment_segment(const Vec3<T>& p1, const Vec3<T>& q1, const Vec3<T>& p2,
                             const Vec3<T>& q2, T& s, T& t) {
  const Vec3<T> d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const T a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  const T tiny = std::numeric_limits<T>::min() * T(64);
  auto clamp01 = [](T v) { return std::clamp(v, T(0), T(1)); };

  if (a <= tiny && e <= tiny) {
    s = t = T(0);
    return;
  }
  if (a <= tiny) {
    s = T(0);
    t = clamp01(f / e);
    return;
  }
  const T c = d1.dot(r);
  if (e <= tiny) {
    t = T(0);
    s = clamp01(-c / a);
    return;
  }

  const T b = d1.dot(d2);
  const T denom = a * e - b * b;
  if (denom > T(1e-10) * a * e) {
    s = clamp01((b * f - c * e) / denom);
  } else {
    // Project the second segment onto the first's axis and take the middle
    // of the clamped overlap.
    const T s0 = -c / a, s1 = (b - c) / a;
    const T lo = std::max(T(0), std::min(s0, s1));
    const T hi = std::min(T(1), std::max(s0, s1));
    s = clamp01((lo + hi) / T(2));
  }
  t = (b * s + f) / e;
  if (t < T(0)) {
    t = T(0);
    s = clamp01(-c / a);
  } else if (t > T(1)) {
    t = T(1);
    s = clamp01((b - c) / a);
  }
}

template <class T>
DistanceResult<T> edge_edge_distance(const Vec3<T>& p1, const Vec3<T>& q1, const Vec3<T>& p2,
                                     const Vec3<T>& q2) {
  T s, t;
  closest_segment_segment(p1, q1, p2, q2, s, t);
  DistanceResult<T> r;
  r.c = Vec4<T>(T(1) - s, s, -(T(1) - t), -t);
  r.d = ((T(1) - s) * p1 + s * q1 - (T(1) - t) * p2 - t * q2).norm();
  return r;
}

}  // namespace tetipc
