#pragma once

#include <string>

#include "tetipc/common.hpp"
#include "tetipc/svd3.hpp"

namespace tetipc {

enum class MaterialModel { NeoHookean, ARAP, FixedCorotated, StableNeoHookean };

inline MaterialModel material_model_from_string(const std::string& s) {
  if (s == "neo_hookean") return MaterialModel::NeoHookean;
  if (s == "arap") return MaterialModel::ARAP;
  if (s == "fixed_corotated") return MaterialModel::FixedCorotated;
  if (s == "stable_neo_hookean") return MaterialModel::StableNeoHookean;
  throw SceneError("unknown material model '" + s + "'");
}

inline const char* material_model_name(MaterialModel m) {
  switch (m) {
    case MaterialModel::NeoHookean: return "neo_hookean";
    case MaterialModel::ARAP: return "arap";
    case MaterialModel::FixedCorotated: return "fixed_corotated";
    case MaterialModel::StableNeoHookean: return "stable_neo_hookean";
  }
  return "?";
}

template <class T>
struct Material {
  MaterialModel model = MaterialModel::StableNeoHookean;
  T mu = T(1);
  T lambda = T(1);
};

template <class T>
Material<T> material_from_youngs(MaterialModel model, T E, T nu) {
  return {model, E / (T(2) * (T(1) + nu)), E * nu / ((T(1) + nu) * (T(1) - T(2) * nu))};
}

// Only ARAP and fixed corotated reference I1; the two Neo-Hookean variants
// never touch the rotation factors, so their element path skips the SVD.
inline bool needs_rotation(MaterialModel m) {
  return m == MaterialModel::ARAP || m == MaterialModel::FixedCorotated;
}

// Energy density and its invariant derivatives. Every supported model is
// linear in I1 and I2 and at most quadratic-log in I3, so the only surviving
// second derivative is d2I3 and all cross terms vanish.
template <class T>
struct PsiDerivs {
  T psi = 0;
  T dI1 = 0, dI2 = 0, dI3 = 0;
  T d2I3 = 0;
};

template <class T>
PsiDerivs<T> psi_derivs(const Material<T>& mat, T I1, T I2, T I3, index_t tet = -1) {
  const T mu = mat.mu, la = mat.lambda;
  PsiDerivs<T> d;
  switch (mat.model) {
    case MaterialModel::NeoHookean: {
      if (!(I3 > T(0)))
        throw MaterialFailure(tet, double(I3),
                              "neo_hookean element " + std::to_string(tet) +
                                  " inverted (det F = " + std::to_string(double(I3)) + ")");
      const T logI3 = std::log(I3);
      d.psi = mu / T(2) * (I2 - T(3)) - mu * logI3 + la / T(2) * logI3 * logI3;
      d.dI2 = mu / T(2);
      d.dI3 = (-mu + la * logI3) / I3;
      d.d2I3 = (mu + la * (T(1) - logI3)) / (I3 * I3);
      break;
    }
    case MaterialModel::ARAP: {
      d.psi = mu / T(2) * (I2 - T(2) * I1 + T(3));
      d.dI1 = -mu;
      d.dI2 = mu / T(2);
      break;
    }
    case MaterialModel::FixedCorotated: {
      d.psi = mu * (I2 - T(2) * I1 + T(3)) + la / T(2) * (I3 - T(1)) * (I3 - T(1));
      d.dI1 = T(-2) * mu;
      d.dI2 = mu;
      d.dI3 = la * (I3 - T(1));
      d.d2I3 = la;
      break;
    }
    case MaterialModel::StableNeoHookean: {
      const T a = I3 - T(1) - mu / la;
      d.psi = mu / T(2) * (I2 - T(3)) + la / T(2) * a * a;
      d.dI2 = mu / T(2);
      d.dI3 = la * a;
      d.d2I3 = la;
      break;
    }
  }
  return d;
}

template <class T>
T psi(const Material<T>& mat, T I1, T I2, T I3) {
  return psi_derivs(mat, I1, I2, I3).psi;
}

template <class T>
T psi_from_F(const Material<T>& mat, const Mat3<T>& F, index_t tet = -1) {
  const T I1 = needs_rotation(mat.model) ? invariant_I1(svd_rv(F)) : T(0);
  return psi_derivs(mat, I1, invariant_I2(F), invariant_I3(F), tet).psi;
}

// Everything the gradient/diagonal/quadratic kernels need for one element,
// computed once per element per iteration and reused across the two passes.
template <class T>
struct ElementScratch {
  Mat3<T> F, cof;
  PsiDerivs<T> d;
  bool has_rot = false;
  Mat3<T> R;
  std::array<Mat3<T>, 3> Q;
  Vec3<T> lam;
};

template <class T>
void eval_element(const Material<T>& mat, const Mat3<T>& F, index_t tet, ElementScratch<T>& s) {
  s.F = F;
  s.cof = cofactor(F);
  s.has_rot = needs_rotation(mat.model);
  T I1 = 0;
  if (s.has_rot) {
    const Svd3<T> svd = svd_rv(F);
    I1 = invariant_I1(svd);
    s.R = svd.rotation();
    invariant_I1_hessian_modes(svd, s.Q, s.lam);
  }
  s.d = psi_derivs(mat, I1, invariant_I2(F), invariant_I3(F), tet);
}

// First Piola-Kirchhoff stress; the force block on vertex v of a tet with
// weight row w_v is -V * P * w_v.
template <class T>
Mat3<T> element_pk1(const ElementScratch<T>& s) {
  Mat3<T> P = T(2) * s.d.dI2 * s.F + s.d.dI3 * s.cof;
  if (s.has_rot) P += s.d.dI1 * s.R;
  return P;
}

// diag(J^T Hpsi J) restricted to one vertex, per unit volume. The dI3*H3
// term drops out exactly: each coordinate perturbs F by a rank-one matrix
// whose H3 quadratic form vanishes.
template <class T>
Vec3<T> element_hessian_diag(const ElementScratch<T>& s, const Vec3<T>& w) {
  Vec3<T> out = Vec3<T>::Constant(T(2) * s.d.dI2 * w.squaredNorm());
  if (s.d.d2I3 != T(0)) {
    const Vec3<T> cw = s.cof * w;
    out += s.d.d2I3 * cw.cwiseProduct(cw);
  }
  if (s.has_rot) {
    for (int i = 0; i < 3; ++i) {
      const Vec3<T> qw = s.Q[i] * w;
      out += s.d.dI1 * s.lam[i] * qw.cwiseProduct(qw);
    }
  }
  return out;
}

// p^T Hpsi p per unit volume, with dF = sum_v p_v w_v^T already assembled.
template <class T>
T element_hessian_quad(const ElementScratch<T>& s, const Mat3<T>& dF) {
  T q = T(2) * s.d.dI2 * dF.squaredNorm();
  if (s.d.dI3 != T(0))
    q += T(2) * s.d.dI3 *
         (s.F.col(0).dot(dF.col(1).cross(dF.col(2))) +
          s.F.col(1).dot(dF.col(2).cross(dF.col(0))) +
          s.F.col(2).dot(dF.col(0).cross(dF.col(1))));
  if (s.d.d2I3 != T(0)) {
    const T c = (s.cof.array() * dF.array()).sum();
    q += s.d.d2I3 * c * c;
  }
  if (s.has_rot) {
    for (int i = 0; i < 3; ++i) {
      const T t = (s.Q[i].array() * dF.array()).sum();
      q += s.d.dI1 * s.lam[i] * t * t;
    }
  }
  return q;
}

// Dense 9x9 Hpsi; diagnostic path for cross-checking the kernels above.
template <class T>
Mat9<T> element_hessian_dense(const ElementScratch<T>& s) {
  Mat9<T> H = T(2) * s.d.dI2 * Mat9<T>::Identity();
  if (s.d.dI3 != T(0)) H += s.d.dI3 * invariant_I3_hessian(s.F);
  if (s.d.d2I3 != T(0)) {
    const Vec9<T> g3 = vec9(s.cof);
    H += s.d.d2I3 * g3 * g3.transpose();
  }
  if (s.has_rot) {
    for (int i = 0; i < 3; ++i) {
      const Vec9<T> q = vec9(s.Q[i]);
      H += s.d.dI1 * s.lam[i] * q * q.transpose();
    }
  }
  return H;
}

}  // namespace tetipc
