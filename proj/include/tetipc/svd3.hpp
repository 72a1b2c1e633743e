#pragma once

#include <Eigen/SVD>
#include <array>

#include "tetipc/common.hpp"

namespace tetipc {

// Rotation-variant SVD: F = U diag(sigma) V^T with det U = det V = +1; any
// reflection is folded into the smallest (last) singular value, which then
// carries the sign of det F.
template <class T>
struct Svd3 {
  Mat3<T> U, V;
  Vec3<T> sigma;

  Mat3<T> rotation() const { return U * V.transpose(); }
  Mat3<T> stretch() const { return V * sigma.asDiagonal() * V.transpose(); }
};

template <class T>
Svd3<T> svd_rv(const Mat3<T>& F) {
  Eigen::JacobiSVD<Mat3<T>> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Svd3<T> out{svd.matrixU(), svd.matrixV(), svd.singularValues()};
  if (out.U.determinant() < T(0)) {
    out.U.col(2) = -out.U.col(2);
    out.sigma[2] = -out.sigma[2];
  }
  if (out.V.determinant() < T(0)) {
    out.V.col(2) = -out.V.col(2);
    out.sigma[2] = -out.sigma[2];
  }
  return out;
}

// Isotropic strain invariants: I1 = tr(S), I2 = |F|_F^2, I3 = det F.
template <class T>
T invariant_I1(const Svd3<T>& s) {
  return s.sigma.sum();
}

template <class T>
T invariant_I2(const Mat3<T>& F) {
  return F.squaredNorm();
}

template <class T>
T invariant_I3(const Mat3<T>& F) {
  return F.determinant();
}

// Cofactor matrix [f1 x f2, f2 x f0, f0 x f1]; vec of it is dI3/dF.
template <class T>
Mat3<T> cofactor(const Mat3<T>& F) {
  Mat3<T> c;
  c.col(0) = F.col(1).cross(F.col(2));
  c.col(1) = F.col(2).cross(F.col(0));
  c.col(2) = F.col(0).cross(F.col(1));
  return c;
}

// dI1/dF = R.
template <class T>
Mat3<T> invariant_I1_gradient(const Svd3<T>& s) {
  return s.rotation();
}

// Twist modes of the I1 Hessian: H1 = sum_i lam_i vec(Q_i) vec(Q_i)^T with
// lam_i = 2 / max(sigma_j + sigma_k, floor) and Q_i = U T_i V^T / sqrt(2),
// T_i the antisymmetric generator in the (j,k) plane.
template <class T>
void invariant_I1_hessian_modes(const Svd3<T>& s, std::array<Mat3<T>, 3>& Q, Vec3<T>& lam,
                                T denom_floor = T(1e-6)) {
  static const int jk[3][2] = {{1, 2}, {0, 2}, {0, 1}};
  const T inv_sqrt2 = T(1) / std::sqrt(T(2));
  for (int i = 0; i < 3; ++i) {
    const int j = jk[i][0], k = jk[i][1];
    Mat3<T> Ti = Mat3<T>::Zero();
    Ti(j, k) = T(1);
    Ti(k, j) = T(-1);
    Q[i] = inv_sqrt2 * s.U * Ti * s.V.transpose();
    lam[i] = T(2) / std::max(s.sigma[j] + s.sigma[k], denom_floor);
  }
}

// Dense 9x9 forms, column-major vec convention. Reference/diagnostic path;
// the solver never materializes these.
template <class T>
Vec9<T> vec9(const Mat3<T>& M) {
  return Eigen::Map<const Vec9<T>>(M.data());
}

template <class T>
Mat3<T> unvec9(const Vec9<T>& v) {
  return Eigen::Map<const Mat3<T>>(v.data());
}

template <class T>
Mat3<T> cross_matrix(const Vec3<T>& a) {
  Mat3<T> m;
  m << T(0), -a[2], a[1], a[2], T(0), -a[0], -a[1], a[0], T(0);
  return m;
}

template <class T>
Mat9<T> invariant_I1_hessian(const Svd3<T>& s, T denom_floor = T(1e-6)) {
  std::array<Mat3<T>, 3> Q;
  Vec3<T> lam;
  invariant_I1_hessian_modes(s, Q, lam, denom_floor);
  Mat9<T> H = Mat9<T>::Zero();
  for (int i = 0; i < 3; ++i) {
    Vec9<T> q = vec9(Q[i]);
    H += lam[i] * q * q.transpose();
  }
  return H;
}

template <class T>
Mat9<T> invariant_I2_hessian() {
  return T(2) * Mat9<T>::Identity();
}

template <class T>
Mat9<T> invariant_I3_hessian(const Mat3<T>& F) {
  Mat9<T> H = Mat9<T>::Zero();
  const Mat3<T> h0 = cross_matrix<T>(F.col(0));
  const Mat3<T> h1 = cross_matrix<T>(F.col(1));
  const Mat3<T> h2 = cross_matrix<T>(F.col(2));
  H.template block<3, 3>(0, 3) = -h2;
  H.template block<3, 3>(0, 6) = h1;
  H.template block<3, 3>(3, 0) = h2;
  H.template block<3, 3>(3, 6) = -h0;
  H.template block<3, 3>(6, 0) = -h1;
  H.template block<3, 3>(6, 3) = h0;
  return H;
}

}  // namespace tetipc
