#pragma once

#include <cmath>

#include "tetipc/common.hpp"

namespace tetipc {

// Log barrier b(d) = -(d - dhat)^2 log(d / dhat) on (0, dhat), identically
// zero at and beyond dhat (C2 across the junction). Callers guarantee d > 0;
// non-positive distances are a penetration fault upstream.
template <class T>
T barrier(T d, T dhat) {
  if (d >= dhat) return T(0);
  const T s = d - dhat;
  return -s * s * std::log(d / dhat);
}

template <class T>
struct BarrierDerivs {
  T b = 0, db = 0, d2b = 0;
};

template <class T>
BarrierDerivs<T> barrier_derivs(T d, T dhat) {
  if (d >= dhat) return {};
  const T s = d - dhat;
  const T lg = std::log(d / dhat);
  BarrierDerivs<T> out;
  out.b = -s * s * lg;
  out.db = -T(2) * s * lg - s * s / d;
  out.d2b = -T(2) * lg - T(4) * s / d + s * s / (d * d);
  return out;
}

}  // namespace tetipc
