#include "nahm/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "nahm/errors.hpp"

namespace nahm {

Triple zero_triple(int r) {
  return {CMatrix::Zero(r, r), CMatrix::Zero(r, r), CMatrix::Zero(r, r)};
}

Triple operator+(const Triple& a, const Triple& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Triple operator-(const Triple& a, const Triple& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Triple operator*(double s, const Triple& a) { return {s * a[0], s * a[1], s * a[2]}; }

double max_norm(const Triple& a) {
  return std::max({frob(a[0]), frob(a[1]), frob(a[2])});
}

CMatrix pauli(int i) {
  const cplx I(0, 1);
  CMatrix s(2, 2);
  switch (i) {
    case 0: s << 0, 1, 1, 0; break;
    case 1: s << 0, -I, I, 0; break;
    case 2: s << 1, 0, 0, -1; break;
    default: throw std::out_of_range("pauli index");
  }
  return s;
}

int skew_dimension(int r) { return r * r; }

Eigen::VectorXd pack_skew(const CMatrix& m) {
  const int r = static_cast<int>(m.rows());
  Eigen::VectorXd v(r * r);
  int k = 0;
  for (int i = 0; i < r; ++i) v[k++] = m(i, i).imag();
  const double s = std::sqrt(2.0);
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      v[k++] = s * m(i, j).real();
      v[k++] = s * m(i, j).imag();
    }
  return v;
}

CMatrix unpack_skew(const Eigen::Ref<const Eigen::VectorXd>& v, int r) {
  CMatrix m = CMatrix::Zero(r, r);
  int k = 0;
  for (int i = 0; i < r; ++i) m(i, i) = cplx(0, v[k++]);
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      const cplx z(s * v[k], s * v[k + 1]);
      k += 2;
      m(i, j) = z;
      m(j, i) = -std::conj(z);
    }
  return m;
}

Eigen::VectorXd pack_triple(const Triple& a) {
  const int r = static_cast<int>(a[0].rows());
  Eigen::VectorXd v(3 * r * r);
  for (int i = 0; i < 3; ++i) v.segment(i * r * r, r * r) = pack_skew(a[i]);
  return v;
}

Triple unpack_triple(const Eigen::Ref<const Eigen::VectorXd>& v, int r) {
  const int m = r * r;
  return {unpack_skew(v.segment(0, m), r), unpack_skew(v.segment(m, m), r),
          unpack_skew(v.segment(2 * m, m), r)};
}

CMatrix polar_unitary(const CMatrix& g, double* smin) {
  if (g.size() == 0) {
    if (smin) *smin = 1.0;
    return g;
  }
  Eigen::JacobiSVD<CMatrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (smin) *smin = svd.singularValues().minCoeff();
  return svd.matrixU() * svd.matrixV().adjoint();
}

CMatrix random_unitary(int r, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CMatrix z(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) z(i, j) = cplx(nd(rng), nd(rng));
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ();
  // fix the phases so the distribution is Haar
  CMatrix rr = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < r; ++j) {
    const cplx d = rr(j, j);
    if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

CMatrix random_skew(int r, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd;
  CMatrix z(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) z(i, j) = cplx(nd(rng), nd(rng));
  return scale * skew_part(z);
}

Eigen::MatrixXd fornberg_weights(double z, const double* x, int n, int max_order) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, max_order + 1);
  double c1 = 1.0;
  double c4 = x[0] - z;
  c(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, max_order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
        c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k) c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
      c(j, 0) = c4 * c(j, 0) / c3;
    }
    c1 = c2;
  }
  return c;
}

Eigen::VectorXd quadrature_weights(const std::vector<double>& t) {
  const int n = static_cast<int>(t.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  if (n < 2) return w;
  int k = 0;
  // Simpson on consecutive interval pairs (valid for unequal spacing)
  for (; k + 2 < n; k += 2) {
    const double h0 = t[k + 1] - t[k];
    const double h1 = t[k + 2] - t[k + 1];
    const double s = h0 + h1;
    w[k] += s / 6.0 * (2.0 - h1 / h0);
    w[k + 1] += s * s * s / (6.0 * h0 * h1);
    w[k + 2] += s / 6.0 * (2.0 - h0 / h1);
  }
  if (k + 1 < n) {
    const double h = t[k + 1] - t[k];
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  return w;
}

}  // namespace nahm
