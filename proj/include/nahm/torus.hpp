#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace nahm {

// A lattice in R^3; basis vectors are the columns of basis().
class Lattice3 {
 public:
  explicit Lattice3(const Eigen::Matrix3d& basis_columns);
  // Config order: each row is one generator.
  static Lattice3 from_rows(const Eigen::Matrix3d& rows) { return Lattice3(rows.transpose()); }
  static Lattice3 cubic(double a = 1.0) { return Lattice3(a * Eigen::Matrix3d::Identity()); }

  const Eigen::Matrix3d& basis() const { return basis_; }
  double volume() const { return std::abs(basis_.determinant()); }
  Eigen::Vector3d point(const Eigen::Vector3d& coeffs) const { return basis_ * coeffs; }

 private:
  Eigen::Matrix3d basis_;
};

// Dual lattice: the rows of basis() are the dual covectors, i.e. the rows of
// the inverse of the lattice basis matrix. Covectors are handled through their
// coefficients c_k = <xi, b_k> against the lattice generators b_k.
class DualLattice3 {
 public:
  const Eigen::Matrix3d& basis() const { return basis_; }
  const Eigen::Matrix3d& gram() const { return gram_; }
  const Eigen::Matrix3d& lattice_basis() const { return lattice_basis_; }

  Eigen::Vector3d covector(const Eigen::Vector3d& coeffs) const { return basis_.transpose() * coeffs; }
  Eigen::Vector3d coefficients(const Eigen::Vector3d& covector) const {
    return lattice_basis_.transpose() * covector;
  }
  double norm(const Eigen::Vector3d& coeffs) const { return std::sqrt(coeffs.dot(gram_ * coeffs)); }

  // The lattice whose dual is this one (dual of the dual).
  Lattice3 dual() const { return Lattice3(basis_.transpose()); }

 private:
  friend DualLattice3 dual_lattice(const Lattice3& l);
  Eigen::Matrix3d basis_;
  Eigen::Matrix3d lattice_basis_;
  Eigen::Matrix3d gram_;
};

DualLattice3 dual_lattice(const Lattice3& l);

// Point of the dual torus, as dual-basis coefficients in [0,1)^3.
struct DualTorusPoint {
  Eigen::Vector3d coeffs = Eigen::Vector3d::Zero();
};

using ModeIndex = std::array<int, 3>;

DualTorusPoint reduce_coefficients(const Eigen::Vector3d& coeffs);
DualTorusPoint reduce(const Eigen::Vector3d& covector, const DualLattice3& dl);

double torus_distance(const DualTorusPoint& a, const DualTorusPoint& b, const DualLattice3& dl);

// Dual lattice vectors n with |2 pi (n - xi)| <= cutoff, lexicographic order.
std::vector<ModeIndex> enumerate_modes(const DualLattice3& dl, const DualTorusPoint& xi, double cutoff,
                                       std::size_t hard_limit = 200000);

// Euclidean covector of n - xi.
Eigen::Vector3d mode_shift(const DualLattice3& dl, const ModeIndex& n, const DualTorusPoint& xi);

// exp(2 pi i <x, v>) for x in R^3 and v in the dual lattice.
std::complex<double> poincare_phase(const Eigen::Vector3d& x, const ModeIndex& v, const DualLattice3& dl);

// Splitting T^3 = S^1 x T^2 with tau = t + i x^1, w = x^2 + i x^3.
class ComplexCoords {
 public:
  explicit ComplexCoords(const Lattice3& l);

  std::complex<double> tau(double t, const Eigen::Vector3d& x) const { return {t, x[0]}; }
  std::complex<double> w(const Eigen::Vector3d& x) const { return {x[1], x[2]}; }

  // Generators of the T^2 lattice in the (x^2, x^3) plane (columns) and its dual (rows).
  const Eigen::Matrix2d& t2_basis() const { return t2_basis_; }
  const Eigen::Matrix2d& t2_dual() const { return t2_dual_; }

  // Reduced T^2-dual coefficients of the (xi_2, xi_3) part of a covector.
  Eigen::Vector2d t2_point(const Eigen::Vector2d& covector) const;
  double t2_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const;

 private:
  Eigen::Matrix2d t2_basis_;
  Eigen::Matrix2d t2_dual_;
};

}  // namespace nahm
