#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <random>
#include <vector>

namespace nahm {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Triple = std::array<CMatrix, 3>;

inline CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

// Frobenius norm; on skew-Hermitian matrices this is sqrt(-tr(M^2)).
inline double frob(const CMatrix& m) { return m.norm(); }

inline CMatrix skew_part(const CMatrix& m) { return 0.5 * (m - m.adjoint()); }

Triple zero_triple(int r);
Triple operator+(const Triple& a, const Triple& b);
Triple operator-(const Triple& a, const Triple& b);
Triple operator*(double s, const Triple& a);
double max_norm(const Triple& a);

CMatrix pauli(int i);  // i = 0,1,2 -> sigma_1, sigma_2, sigma_3

// Real coordinates of u(r) in an orthonormal basis for <X,Y> = -Re tr(XY).
// Layout: r diagonal entries, then (re, im) pairs of the strict upper triangle.
int skew_dimension(int r);
Eigen::VectorXd pack_skew(const CMatrix& m);
CMatrix unpack_skew(const Eigen::Ref<const Eigen::VectorXd>& v, int r);
Eigen::VectorXd pack_triple(const Triple& a);
Triple unpack_triple(const Eigen::Ref<const Eigen::VectorXd>& v, int r);

// Unitary factor W V^H of the SVD G = W S V^H; smallest singular value in *smin.
CMatrix polar_unitary(const CMatrix& g, double* smin = nullptr);

CMatrix random_unitary(int r, std::mt19937_64& rng);
CMatrix random_skew(int r, std::mt19937_64& rng, double scale = 1.0);

// Finite-difference / interpolation weights on arbitrary nodes (Fornberg).
// Returns w(k, m): weight of node k for the m-th derivative at z.
Eigen::MatrixXd fornberg_weights(double z, const double* x, int n, int max_order);

// Composite Simpson weights on consecutive interval pairs (any spacing); a
// leftover last interval gets the trapezoid rule.
Eigen::VectorXd quadrature_weights(const std::vector<double>& t);

}  // namespace nahm
