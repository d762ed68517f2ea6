#include "nahm/torus.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "nahm/errors.hpp"

namespace nahm {

Lattice3::Lattice3(const Eigen::Matrix3d& basis_columns) : basis_(basis_columns) {
  if (!basis_.allFinite() || std::abs(basis_.determinant()) <= 1e-12)
    throw InvalidLattice("lattice basis is singular (|det| <= 1e-12)");
}

DualLattice3 dual_lattice(const Lattice3& l) {
  DualLattice3 d;
  d.lattice_basis_ = l.basis();
  d.basis_ = l.basis().inverse();
  d.gram_ = d.basis_ * d.basis_.transpose();
  return d;
}

namespace {

double reduce_unit(double c) {
  double f = c - std::floor(c);
  // values that round to the upper face belong to 0
  if (f >= 1.0 - 1e-12 || f < 0.0) f = 0.0;
  if (f < 1e-15) f = 0.0;
  return f;
}

}  // namespace

DualTorusPoint reduce_coefficients(const Eigen::Vector3d& coeffs) {
  DualTorusPoint p;
  for (int k = 0; k < 3; ++k) p.coeffs[k] = reduce_unit(coeffs[k]);
  return p;
}

DualTorusPoint reduce(const Eigen::Vector3d& covector, const DualLattice3& dl) {
  return reduce_coefficients(dl.coefficients(covector));
}

double torus_distance(const DualTorusPoint& a, const DualTorusPoint& b, const DualLattice3& dl) {
  Eigen::Vector3d d = a.coeffs - b.coeffs;
  for (int k = 0; k < 3; ++k) d[k] -= std::round(d[k]);
  double best = dl.norm(d);
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j)
      for (int k = -2; k <= 2; ++k) best = std::min(best, dl.norm(d + Eigen::Vector3d(i, j, k)));
  return best;
}

Eigen::Vector3d mode_shift(const DualLattice3& dl, const ModeIndex& n, const DualTorusPoint& xi) {
  return dl.covector(Eigen::Vector3d(n[0], n[1], n[2]) - xi.coeffs);
}

std::vector<ModeIndex> enumerate_modes(const DualLattice3& dl, const DualTorusPoint& xi, double cutoff,
                                       std::size_t hard_limit) {
  if (!(cutoff > 0)) throw std::invalid_argument("enumerate_modes: cutoff must be positive");
  const double radius = cutoff / (2 * std::numbers::pi);
  std::array<int, 3> lo{}, hi{};
  double box = 1.0;
  for (int k = 0; k < 3; ++k) {
    const double reach = radius * dl.lattice_basis().col(k).norm();
    lo[k] = static_cast<int>(std::floor(xi.coeffs[k] - reach));
    hi[k] = static_cast<int>(std::ceil(xi.coeffs[k] + reach));
    box *= hi[k] - lo[k] + 1;
  }
  // a ball of this radius holds about (4/3) pi R^3 / covolume points
  const double expected = 4.0 / 3.0 * std::numbers::pi * std::pow(radius, 3) * dl.lattice_basis().determinant();
  if (std::abs(expected) > static_cast<double>(hard_limit) || box > 1e9) {
    std::ostringstream os;
    os << "enumerate_modes: cutoff " << cutoff << " would produce more than " << hard_limit << " modes";
    throw ResourceLimit(os.str());
  }
  std::vector<ModeIndex> out;
  for (int i = lo[0]; i <= hi[0]; ++i)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int k = lo[2]; k <= hi[2]; ++k) {
        const ModeIndex n{i, j, k};
        const double len = 2 * std::numbers::pi * dl.norm(Eigen::Vector3d(i, j, k) - xi.coeffs);
        if (len <= cutoff) {
          out.push_back(n);
          if (out.size() > hard_limit) throw ResourceLimit("enumerate_modes: hard limit exceeded");
        }
      }
  return out;
}

std::complex<double> poincare_phase(const Eigen::Vector3d& x, const ModeIndex& v, const DualLattice3& dl) {
  // <x, v> = sum_k v_k <x, lambda*_k>; integer parts are dropped in extended precision
  const Eigen::Vector3d xc = dl.basis() * x;
  long double s = 0.0L;
  for (int k = 0; k < 3; ++k) {
    const long double c = xc[k] - std::floor(xc[k]);
    s += c * v[k];
  }
  s -= std::floor(s);
  const long double arg = 2.0L * std::numbers::pi_v<long double> * s;
  return {static_cast<double>(std::cos(arg)), static_cast<double>(std::sin(arg))};
}

ComplexCoords::ComplexCoords(const Lattice3& l) {
  const Eigen::Matrix3d& b = l.basis();
  const double off = std::max({std::abs(b(1, 0)), std::abs(b(2, 0)), std::abs(b(0, 1)), std::abs(b(0, 2))});
  if (off > 1e-12)
    throw InvalidLattice("complex coordinates need a block-diagonal lattice (S^1 factor along x^1)");
  if (std::abs(std::abs(b(0, 0)) - 1.0) > 1e-12)
    throw InvalidLattice("complex coordinates need a unit-length S^1 generator");
  t2_basis_ = b.block<2, 2>(1, 1);
  t2_dual_ = t2_basis_.inverse();
}

Eigen::Vector2d ComplexCoords::t2_point(const Eigen::Vector2d& covector) const {
  Eigen::Vector2d c = t2_basis_.transpose() * covector;
  for (int k = 0; k < 2; ++k) {
    c[k] -= std::floor(c[k]);
    if (c[k] >= 1.0 - 1e-12) c[k] = 0.0;
  }
  return c;
}

double ComplexCoords::t2_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const {
  Eigen::Vector2d d = a - b;
  for (int k = 0; k < 2; ++k) d[k] -= std::round(d[k]);
  double best = 1e300;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j)
      best = std::min(best, (t2_dual_.transpose() * (d + Eigen::Vector2d(i, j))).norm());
  return best;
}

}  // namespace nahm
