// Shared test configurations with closed-form answers.
#pragma once

#include <memory>

#include "nahm/core.hpp"
#include "nahm/flow.hpp"
#include "nahm/monopole.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace nahm;

inline const cplx kI(0, 1);

inline Triple diag_gamma(const std::vector<Eigen::Vector3d>& xs) {
  const int r = static_cast<int>(xs.size());
  Triple g;
  for (int i = 0; i < 3; ++i) {
    g[i] = CMatrix::Zero(r, r);
    for (int a = 0; a < r; ++a) g[i](a, a) = 2 * oracle::kPi * kI * xs[a][i];
  }
  return g;
}

inline std::shared_ptr<const NahmCurve> constant_curve(const Triple& g, double T, int n) {
  auto c = std::make_shared<NahmCurve>();
  c->grid = uniform_grid(-T, T, n);
  c->a.assign(c->grid.size(), g);
  c->minus = c->plus = validate_model_solution(g, zero_triple(static_cast<int>(g[0].rows())));
  return c;
}

// A_3 = i diag(c_a tanh t + b_a), A_1 = A_2 = 0. In mode 0 at xi = 0 the kernel of
// f' = D f is spanned by the upper-spinor lines cosh(t)^(-c_a) exp(-b_a t).
// Not a Nahm solution (A' != 0 while A commutes); used for Dirac-side oracles only.
inline std::shared_ptr<const NahmCurve> tanh_curve(const std::vector<double>& c, const std::vector<double>& b,
                                                   double T, int n) {
  const int r = static_cast<int>(c.size());
  auto curve = std::make_shared<NahmCurve>();
  curve->grid = uniform_grid(-T, T, n);
  for (double t : curve->grid) {
    Triple a = zero_triple(r);
    for (int k = 0; k < r; ++k) a[2](k, k) = kI * (c[k] * std::tanh(t) + b[k]);
    curve->a.push_back(a);
  }
  Triple gm = zero_triple(r), gp = zero_triple(r);
  for (int k = 0; k < r; ++k) {
    gm[2](k, k) = kI * (b[k] - c[k]);
    gp[2](k, k) = kI * (b[k] + c[k]);
  }
  curve->minus = validate_model_solution(gm, zero_triple(r));
  curve->plus = validate_model_solution(gp, zero_triple(r));
  return curve;
}

// Abelian Dirac monopoles of charges k_a at the origin, on the lattice x0 + h (i, j, k):
// Phi = i k / (2R), A = -(i k / 2) (x dy - y dx) / (R (R + z)), so F = *dPhi.
// The string sits on the negative z axis; keep the box away from it.
inline Eigen::Vector3d dirac_potential(const Eigen::Vector3d& x) {
  const double r = x.norm();
  const double s = -0.5 / (r * (r + x[2]));
  return {-s * x[1], s * x[0], 0.0};  // coefficient of i k
}

inline LatticeMonopole dirac_monopole(const std::vector<int>& ks, const Eigen::Vector3d& x0, double h,
                                      std::array<int, 3> dims) {
  static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                               0.9061798459386640};
  static const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                               0.2369268850561891};
  const int r = static_cast<int>(ks.size());
  LatticeMonopole m;
  m.resize(dims, h);
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const int s = m.index(i, j, k);
        const Eigen::Vector3d x = x0 + h * Eigen::Vector3d(i, j, k);
        m.valid[s] = true;
        m.phi[s] = CMatrix::Zero(r, r);
        for (int a = 0; a < r; ++a) m.phi[s](a, a) = kI * (ks[a] / (2 * x.norm()));
        for (int mu = 0; mu < 3; ++mu) {
          // integral of A along x -> x + h e_mu
          double line = 0.0;
          for (int q = 0; q < 5; ++q) {
            Eigen::Vector3d y = x;
            y[mu] += 0.5 * h * (1 + gx[q]);
            line += 0.5 * h * gw[q] * dirac_potential(y)[mu];
          }
          m.links[mu][s] = CMatrix::Zero(r, r);
          for (int a = 0; a < r; ++a) m.links[mu][s](a, a) = std::exp(kI * (ks[a] * line));
        }
      }
  return m;
}

}  // namespace fixture
