#include "nahm/flow.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nahm {

Triple nahm_rhs(const Triple& a) {
  return {-commutator(a[1], a[2]), -commutator(a[2], a[0]), -commutator(a[0], a[1])};
}

namespace {

// Index window of `width` consecutive nodes around t.
int window_start(const std::vector<double>& grid, double t, int width) {
  const int n = static_cast<int>(grid.size());
  const int k = static_cast<int>(std::upper_bound(grid.begin(), grid.end(), t) - grid.begin()) - 1;
  int s = k - (width / 2 - 1);
  return std::clamp(s, 0, std::max(0, n - width));
}

}  // namespace

Triple NahmCurve::model_value(double t) const {
  const ModelSolution& ms = t < 0 ? minus : plus;
  return {ms.gamma[0] + ms.nn[0] / t, ms.gamma[1] + ms.nn[1] / t, ms.gamma[2] + ms.nn[2] / t};
}

Triple NahmCurve::value(double t) const {
  if (t <= grid.front()) return t == grid.front() ? a.front() : model_value(t);
  if (t >= grid.back()) return t == grid.back() ? a.back() : model_value(t);
  const int w = std::min<int>(4, static_cast<int>(grid.size()));
  const int s = window_start(grid, t, w);
  const Eigen::MatrixXd c = fornberg_weights(t, grid.data() + s, w, 0);
  Triple out = zero_triple(rank());
  for (int k = 0; k < w; ++k)
    for (int i = 0; i < 3; ++i) out[i] += c(k, 0) * a[s + k][i];
  return out;
}

double NahmCurve::tail_mismatch() const {
  const Triple lo = model_value(grid.front()), hi = model_value(grid.back());
  return std::max(max_norm(a.front() - lo), max_norm(a.back() - hi));
}

double NahmCurve::skew_defect() const {
  double d = 0.0;
  for (const auto& x : a)
    for (int i = 0; i < 3; ++i) d = std::max(d, frob(x[i] + x[i].adjoint()));
  return d;
}

// ---------------------------------------------------------------- integrate

NahmSegment integrate(const Triple& a0, double t0, double t1, double tol, const IntegrateOptions& opt) {
  if (t0 == t1) throw std::invalid_argument("integrate: t0 == t1");
  if (!(tol > 0)) throw std::invalid_argument("integrate: tol must be positive");
  // Dormand-Prince 5(4)
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2; (void)c3; (void)c4; (void)c5;

  const double span = t1 - t0;
  const double dir = span > 0 ? 1.0 : -1.0;
  const double hmin = opt.min_step_fraction * std::abs(span);
  NahmSegment seg;
  seg.t.push_back(t0);
  Triple y = {skew_part(a0[0]), skew_part(a0[1]), skew_part(a0[2])};
  seg.a.push_back(y);
  double t = t0;
  const double scale0 = std::max(1.0, max_norm(y));
  double h = dir * std::min(std::abs(span), 0.01 * std::abs(span) + 1e-3 / scale0);
  Triple k1 = nahm_rhs(y);
  for (std::size_t step = 0; step < opt.max_steps; ++step) {
    if (dir * (t + h - t1) > 0) h = t1 - t;
    const Triple k2 = nahm_rhs(y + (h * a21) * k1);
    const Triple k3 = nahm_rhs(y + h * (a31 * k1 + a32 * k2));
    const Triple k4 = nahm_rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Triple k5 = nahm_rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Triple k6 = nahm_rhs(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Triple y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Triple k7 = nahm_rhs(y5);
    const Triple err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double e = 0.0;
    for (int i = 0; i < 3; ++i) e = std::max(e, err[i].cwiseAbs().maxCoeff());
    e /= tol;
    if (!std::isfinite(e)) e = 1e10;
    if (e <= 1.0) {
      t += h;
      y = {skew_part(y5[0]), skew_part(y5[1]), skew_part(y5[2])};
      seg.t.push_back(t);
      seg.a.push_back(y);
      if (max_norm(y) > opt.blowup_norm) {
        std::ostringstream os;
        os << "integrate: solution norm exceeded " << opt.blowup_norm << " near t = " << t;
        throw BlowUp(t, os.str());
      }
      if (dir * (t1 - t) <= 0) return seg;
      k1 = nahm_rhs(y);
    }
    const double fac = e > 0 ? 0.9 * std::pow(e, -0.2) : 5.0;
    h *= std::clamp(fac, 0.2, 5.0);
    if (std::abs(h) < hmin) {
      std::ostringstream os;
      os << "integrate: step size underflow (blow-up) after t = " << t;
      throw BlowUp(t, os.str());
    }
  }
  throw BlowUp(t, "integrate: step budget exhausted");
}

// ---------------------------------------------------------------- Lax invariants

std::vector<cplx> lax_eigenvalues(const Triple& a) {
  const cplx I(0, 1);
  const CMatrix b = a[1] + I * a[2];
  if (b.size() == 0) return {};
  Eigen::ComplexEigenSolver<CMatrix> es(b, false);
  const CVector ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

namespace {

// Reorder `cur` to best match `ref` (minimal max distance; exhaustive for small sizes).
std::vector<cplx> match_to(const std::vector<cplx>& ref, std::vector<cplx> cur) {
  const std::size_t n = ref.size();
  if (n <= 7) {
    std::vector<int> perm(n), best;
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<int>(i);
    double bestv = 1e300;
    do {
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v = std::max(v, std::abs(ref[i] - cur[perm[i]]));
      if (v < bestv) {
        bestv = v;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    std::vector<cplx> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = cur[best[i]];
    return out;
  }
  std::vector<cplx> out;
  for (const auto& z : ref) {
    auto it = std::min_element(cur.begin(), cur.end(),
                               [&](const cplx& p, const cplx& q) { return std::abs(p - z) < std::abs(q - z); });
    out.push_back(*it);
    cur.erase(it);
  }
  return out;
}

SpectralInvariants invariants_of(const std::vector<double>& t, const std::vector<Triple>& a) {
  SpectralInvariants s;
  s.t = t;
  std::vector<cplx> ref;
  for (std::size_t k = 0; k < a.size(); ++k) {
    auto ev = lax_eigenvalues(a[k]);
    if (k == 0) {
      std::sort(ev.begin(), ev.end(), [](cplx p, cplx q) { return p.real() != q.real() ? p.real() < q.real() : p.imag() < q.imag(); });
      ref = ev;
    } else {
      ev = match_to(ref, ev);
    }
    for (std::size_t i = 0; i < ev.size(); ++i) s.drift = std::max(s.drift, std::abs(ev[i] - ref[i]));
    s.eigenvalues.push_back(std::move(ev));
  }
  return s;
}

}  // namespace

SpectralInvariants spectral_invariants(const NahmSegment& seg) { return invariants_of(seg.t, seg.a); }
SpectralInvariants spectral_invariants(const NahmCurve& curve) { return invariants_of(curve.grid, curve.a); }

// ---------------------------------------------------------------- linearisation

namespace {

// Jacobian of the packed right-hand side at a: delta -> -[delta_j, A_k] - [A_j, delta_k]
Eigen::MatrixXd rhs_jacobian(const Triple& a) {
  const int r = static_cast<int>(a[0].rows());
  const int m = 3 * r * r;
  Eigen::MatrixXd j(m, m);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
  for (int c = 0; c < m; ++c) {
    e[c] = 1.0;
    const Triple d = unpack_triple(e, r);
    e[c] = 0.0;
    Triple out;
    for (int i = 0; i < 3; ++i) {
      const int p = (i + 1) % 3, q = (i + 2) % 3;
      out[i] = -commutator(d[p], a[q]) - commutator(a[p], d[q]);
    }
    j.col(c) = pack_triple(out);
  }
  return j;
}

}  // namespace

BoundarySplit linearized_split(const Triple& gamma, Eigen::MatrixXd* stable, Eigen::MatrixXd* unstable) {
  Eigen::MatrixXd l = rhs_jacobian(gamma);
  l = 0.5 * (l + l.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double thr = 1e-9 * std::max(1.0, max_norm(gamma));
  BoundarySplit s;
  std::vector<int> st, un;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < -thr) st.push_back(i);
    else if (ev[i] > thr) un.push_back(i);
    else s.center++;
  }
  s.stable = static_cast<int>(st.size());
  s.unstable = static_cast<int>(un.size());
  auto gather = [&](const std::vector<int>& idx) {
    Eigen::MatrixXd m(ev.size(), idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) m.col(k) = es.eigenvectors().col(idx[k]);
    return m;
  };
  if (stable) *stable = gather(st);
  if (unstable) *unstable = gather(un);
  return s;
}

std::vector<double> uniform_grid(double a, double b, int n) {
  if (n < 2) throw std::invalid_argument("uniform_grid: need at least two points");
  std::vector<double> g(n);
  for (int k = 0; k < n; ++k) g[k] = a + (b - a) * k / (n - 1);
  g.back() = b;
  return g;
}

// ---------------------------------------------------------------- heteroclinic solve

namespace {

double min_nonzero_gap(const ModelSolution& ms) {
  const auto sp = joint_eigenspaces(ms.gamma);
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < sp.size(); ++a)
    for (std::size_t b = a + 1; b < sp.size(); ++b)
      g = std::min(g, 2 * std::numbers::pi * (sp[a].covector - sp[b].covector).norm());
  return g;
}

double op_norm_max(const Triple& t) {
  double m = 0.0;
  for (int i = 0; i < 3; ++i)
    if (t[i].size()) m = std::max(m, Eigen::JacobiSVD<CMatrix>(t[i]).singularValues()[0]);
  return m;
}

Eigen::VectorXd packed_rhs(const Eigen::Ref<const Eigen::VectorXd>& x, int r) {
  return pack_triple(nahm_rhs(unpack_triple(x, r)));
}

// Orthonormal basis of the orthogonal complement of span(v) in R^m.
Eigen::MatrixXd complement(const Eigen::MatrixXd& v, int m) {
  if (v.cols() == 0) return Eigen::MatrixXd::Identity(m, m);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
  return q.rightCols(m - v.cols());
}

struct Collocation {
  int r, m, n;
  std::vector<double> t;
  Eigen::MatrixXd bc_minus, bc_plus;  // rows are constraints
  Eigen::VectorXd target_minus, target_plus;

  int rows() const { return (n - 1) * m + static_cast<int>(bc_minus.rows() + bc_plus.rows()); }

  Eigen::VectorXd residual(const Eigen::VectorXd& x) const {
    Eigen::VectorXd res(rows());
    std::vector<Eigen::VectorXd> f(n);
    for (int k = 0; k < n; ++k) f[k] = packed_rhs(x.segment(k * m, m), r);
    for (int k = 0; k + 1 < n; ++k) {
      const double h = t[k + 1] - t[k];
      const auto xk = x.segment(k * m, m), xk1 = x.segment((k + 1) * m, m);
      const Eigen::VectorXd xm = 0.5 * (xk + xk1) + h / 8 * (f[k] - f[k + 1]);
      const Eigen::VectorXd fm = packed_rhs(xm, r);
      res.segment(k * m, m) = (xk1 - xk) / h - (f[k] + 4 * fm + f[k + 1]) / 6;
    }
    int row = (n - 1) * m;
    res.segment(row, bc_minus.rows()) = bc_minus * (x.segment(0, m) - target_minus);
    row += static_cast<int>(bc_minus.rows());
    res.segment(row, bc_plus.rows()) = bc_plus * (x.segment((n - 1) * m, m) - target_plus);
    return res;
  }

  Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& x) const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * 2 * m * m + static_cast<std::size_t>(2 * m * m));
    std::vector<Eigen::VectorXd> f(n);
    std::vector<Eigen::MatrixXd> jac(n);
    for (int k = 0; k < n; ++k) {
      const Triple a = unpack_triple(x.segment(k * m, m), r);
      f[k] = pack_triple(nahm_rhs(a));
      jac[k] = rhs_jacobian(a);
    }
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(m, m);
    for (int k = 0; k + 1 < n; ++k) {
      const double h = t[k + 1] - t[k];
      const auto xk = x.segment(k * m, m), xk1 = x.segment((k + 1) * m, m);
      const Eigen::VectorXd xm = 0.5 * (xk + xk1) + h / 8 * (f[k] - f[k + 1]);
      const Eigen::MatrixXd jm = rhs_jacobian(unpack_triple(xm, r));
      const Eigen::MatrixXd dk = -id / h - (jac[k] + 4 * jm * (0.5 * id + h / 8 * jac[k])) / 6;
      const Eigen::MatrixXd dk1 = id / h - (jac[k + 1] + 4 * jm * (0.5 * id - h / 8 * jac[k + 1])) / 6;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          if (dk(i, j) != 0.0) trip.emplace_back(k * m + i, k * m + j, dk(i, j));
          if (dk1(i, j) != 0.0) trip.emplace_back(k * m + i, (k + 1) * m + j, dk1(i, j));
        }
    }
    int row = (n - 1) * m;
    for (int i = 0; i < bc_minus.rows(); ++i)
      for (int j = 0; j < m; ++j) trip.emplace_back(row + i, j, bc_minus(i, j));
    row += static_cast<int>(bc_minus.rows());
    for (int i = 0; i < bc_plus.rows(); ++i)
      for (int j = 0; j < m; ++j) trip.emplace_back(row + i, (n - 1) * m + j, bc_plus(i, j));
    Eigen::SparseMatrix<double> jmat(rows(), n * m);
    jmat.setFromTriplets(trip.begin(), trip.end());
    return jmat;
  }

  // Nahm residual of the Hermite cubic at the quarter points of each interval.
  double interpolant_residual(const Eigen::VectorXd& x) const {
    double worst = 0.0;
    std::vector<Eigen::VectorXd> f(n);
    for (int k = 0; k < n; ++k) f[k] = packed_rhs(x.segment(k * m, m), r);
    for (int k = 0; k + 1 < n; ++k) {
      const double h = t[k + 1] - t[k];
      const auto xk = x.segment(k * m, m), xk1 = x.segment((k + 1) * m, m);
      for (double th : {0.25, 0.75}) {
        const double h00 = 2 * th * th * th - 3 * th * th + 1, h10 = th * th * th - 2 * th * th + th;
        const double h01 = -2 * th * th * th + 3 * th * th, h11 = th * th * th - th * th;
        const double d00 = 6 * th * th - 6 * th, d10 = 3 * th * th - 4 * th + 1;
        const double d01 = -6 * th * th + 6 * th, d11 = 3 * th * th - 2 * th;
        const Eigen::VectorXd p = h00 * xk + h10 * h * f[k] + h01 * xk1 + h11 * h * f[k + 1];
        const Eigen::VectorXd dp = (d00 * xk + d01 * xk1) / h + d10 * f[k] + d11 * f[k + 1];
        worst = std::max(worst, max_norm(unpack_triple(dp - packed_rhs(p, r), r)));
      }
    }
    return worst;
  }

  double defect(const Eigen::VectorXd& res) const {
    double worst = 0.0;
    for (int k = 0; k + 1 < n; ++k) worst = std::max(worst, max_norm(unpack_triple(res.segment(k * m, m), r)));
    const int b = static_cast<int>(bc_minus.rows() + bc_plus.rows());
    if (b > 0) worst = std::max(worst, res.tail(b).cwiseAbs().maxCoeff());
    return worst;
  }
};

Triple model_at(const ModelSolution& ms, double t) {
  return {ms.gamma[0] + ms.nn[0] / t, ms.gamma[1] + ms.nn[1] / t, ms.gamma[2] + ms.nn[2] / t};
}

}  // namespace

HeteroclinicResult solve_heteroclinic(const ModelSolution& minus, const ModelSolution& plus, double T, int grid_n,
                                      double tol, const HeteroclinicOptions& opt) {
  if (minus.rank() != plus.rank()) throw std::invalid_argument("solve_heteroclinic: rank mismatch");
  if (grid_n < 3) throw std::invalid_argument("solve_heteroclinic: grid_n must be >= 3");
  if (!(T > 0) || !(tol > 0)) throw std::invalid_argument("solve_heteroclinic: T and tol must be positive");
  for (const ModelSolution* ms : {&minus, &plus}) {
    const double gap = min_nonzero_gap(*ms);
    if (std::isfinite(gap) && op_norm_max(ms->nn) / T >= 0.1 * gap)
      throw std::invalid_argument("solve_heteroclinic: T too small for the spectral gap of Γ");
  }
  const int r = minus.rank();
  const int m = 3 * r * r;
  Collocation col;
  col.r = r;
  col.m = m;
  col.n = grid_n;
  col.t = uniform_grid(-T, T, grid_n);
  HeteroclinicResult out;
  Eigen::MatrixXd st_m, un_m, st_p, un_p;
  out.split_minus = linearized_split(minus.gamma, &st_m, &un_m);
  out.split_plus = linearized_split(plus.gamma, &st_p, &un_p);
  // A(-T) - model may only use unstable directions, A(T) - model only stable ones
  col.bc_minus = complement(un_m, m).transpose();
  col.bc_plus = complement(st_p, m).transpose();
  col.target_minus = pack_triple(model_at(minus, -T));
  col.target_plus = pack_triple(model_at(plus, T));

  Eigen::VectorXd x(grid_n * m);
  if (opt.initial_guess) {
    if (static_cast<int>(opt.initial_guess->size()) != grid_n)
      throw std::invalid_argument("solve_heteroclinic: initial guess has the wrong length");
    for (int k = 0; k < grid_n; ++k) x.segment(k * m, m) = pack_triple((*opt.initial_guess)[k]);
  } else {
    std::mt19937_64 rng(opt.seed);
    Triple bump = {random_skew(r, rng), random_skew(r, rng), random_skew(r, rng)};
    for (int k = 0; k < grid_n; ++k) {
      const double t = col.t[k];
      const double s = 0.5 * (1 + std::tanh(t));
      const Triple lo = model_at(minus, std::min(t, -1.0)), hi = model_at(plus, std::max(t, 1.0));
      Triple g = (1 - s) * lo + s * hi;
      if (opt.perturbation != 0.0) g = g + (opt.perturbation * std::exp(-t * t / 4)) * bump;
      x.segment(k * m, m) = pack_triple(g);
    }
  }

  Eigen::VectorXd res = col.residual(x);
  double cost = res.squaredNorm();
  double mu = 1e-10;
  out.residual_history.push_back(col.defect(res));
  const double target = 0.1 * tol;
  int it = 0;
  for (; it < opt.max_iter && out.residual_history.back() > target; ++it) {
    const Eigen::SparseMatrix<double> j = col.jacobian(x);
    const Eigen::SparseMatrix<double> jt = j.transpose();
    Eigen::SparseMatrix<double> normal = jt * j;
    const Eigen::VectorXd g = jt * res;
    bool improved = false;
    for (int tries = 0; tries < 12 && !improved; ++tries) {
      Eigen::SparseMatrix<double> a = normal;
      for (int i = 0; i < a.rows(); ++i) a.coeffRef(i, i) += mu * (1.0 + normal.coeff(i, i));
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
      if (ldlt.info() != Eigen::Success) {
        mu *= 10;
        continue;
      }
      const Eigen::VectorXd dx = ldlt.solve(-g);
      const Eigen::VectorXd xn = x + dx;
      const Eigen::VectorXd rn = col.residual(xn);
      const double cn = rn.squaredNorm();
      if (std::isfinite(cn) && cn < cost) {
        x = xn;
        res = rn;
        cost = cn;
        mu = std::max(1e-14, mu / 10);
        improved = true;
      } else {
        mu *= 10;
      }
    }
    out.residual_history.push_back(col.defect(res));
    if (!improved) break;
  }
  out.iterations = it;
  out.collocation_residual = out.residual_history.back();
  out.interpolant_residual = col.interpolant_residual(x);
  if (out.collocation_residual > tol) {
    std::ostringstream os;
    os << "Gauss-Newton stalled with collocation residual " << out.collocation_residual;
    out.reason = os.str();
    return out;
  }
  if (out.interpolant_residual > opt.interp_tol) {
    std::ostringstream os;
    os << "discrete solution does not resolve a smooth curve (interpolant residual "
       << out.interpolant_residual << ")";
    out.reason = os.str();
    return out;
  }
  NahmCurve c;
  c.grid = col.t;
  c.minus = minus;
  c.plus = plus;
  for (int k = 0; k < grid_n; ++k) c.a.push_back(unpack_triple(x.segment(k * m, m), r));
  out.curve = std::move(c);
  out.found = true;
  out.reason = "converged";
  return out;
}

// ---------------------------------------------------------------- diagnostics

std::vector<Triple> sample_derivative(const std::vector<double>& t, const std::vector<Triple>& a) {
  const int n = static_cast<int>(t.size());
  const int r = a.empty() ? 0 : static_cast<int>(a[0][0].rows());
  const int w = std::min(5, n);
  std::vector<Triple> d(n, zero_triple(r));
  for (int k = 0; k < n; ++k) {
    const int s = std::clamp(k - w / 2, 0, n - w);
    const Eigen::MatrixXd c = fornberg_weights(t[k], t.data() + s, w, 1);
    for (int q = 0; q < w; ++q)
      for (int i = 0; i < 3; ++i) d[k][i] += c(q, 1) * a[s + q][i];
  }
  return d;
}

std::vector<double> asd_residual(const NahmCurve& curve) {
  const auto d = sample_derivative(curve.grid, curve.a);
  std::vector<double> out(curve.grid.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Triple rhs = nahm_rhs(curve.a[k]);
    out[k] = max_norm(d[k] - rhs);
  }
  return out;
}

double model_tail_energy(const ModelSolution& ms, double T) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += ms.nn[i].squaredNorm();
  return 2 * s / (3 * T * T * T);
}

double curvature_energy(const NahmCurve& curve, const Lattice3& l, double residual_tol) {
  const auto res = asd_residual(curve);
  const double worst = res.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
  if (worst > residual_tol) {
    std::ostringstream os;
    os << "curvature_energy: curve residual " << worst << " exceeds " << residual_tol;
    throw NumericalError(os.str());
  }
  const auto d = sample_derivative(curve.grid, curve.a);
  const Eigen::VectorXd w = quadrature_weights(curve.grid);
  double e = 0.0;
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    const Triple& a = curve.a[k];
    double dens = 0.0;
    for (int i = 0; i < 3; ++i) dens += d[k][i].squaredNorm();
    dens += commutator(a[0], a[1]).squaredNorm() + commutator(a[1], a[2]).squaredNorm() +
            commutator(a[2], a[0]).squaredNorm();
    e += w[k] * dens;
  }
  e += model_tail_energy(curve.minus, -curve.t_min()) + model_tail_energy(curve.plus, curve.t_max());
  return l.volume() * e;
}

namespace {

CMatrix center_projection(const std::vector<JointEigenspace>& sp, const CMatrix& x) {
  CMatrix out = CMatrix::Zero(x.rows(), x.cols());
  for (const auto& s : sp) {
    const CMatrix p = s.frame * s.frame.adjoint();
    out += p * x * p;
  }
  return out;
}

AsymptoticFit fit_end(const NahmCurve& c, bool plus_end) {
  AsymptoticFit f;
  const ModelSolution& ms = plus_end ? c.plus : c.minus;
  const auto sp = joint_eigenspaces(ms.gamma);
  const double T = plus_end ? c.t_max() : -c.t_min();
  std::vector<double> lt, ec, tt, ep;
  double scale = std::max(1.0, max_norm(ms.gamma) + max_norm(ms.nn));
  for (std::size_t k = 0; k < c.grid.size(); ++k) {
    const double t = c.grid[k];
    const double at = plus_end ? t : -t;
    if (at < 0.5 * T) continue;
    const Triple model = c.model_value(t);
    double nc = 0.0, np = 0.0;
    for (int i = 0; i < 3; ++i) {
      const CMatrix eps = c.a[k][i] - model[i];
      const CMatrix cen = center_projection(sp, eps);
      nc = std::max(nc, frob(cen));
      np = std::max(np, frob(eps - cen));
    }
    lt.push_back(std::log(at));
    ec.push_back(nc);
    tt.push_back(at);
    ep.push_back(np);
  }
  const double floor = 1e-13 * scale;
  auto slope = [&](const std::vector<double>& xs, const std::vector<double>& ys, double* amp) {
    std::vector<double> xv, yv;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (ys[i] > floor) {
        xv.push_back(xs[i]);
        yv.push_back(std::log(ys[i]));
      }
    if (xv.size() < 3) return std::optional<double>();
    Eigen::MatrixXd a(xv.size(), 2);
    Eigen::VectorXd b(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) {
      a(i, 0) = 1.0;
      a(i, 1) = xv[i];
      b[i] = yv[i];
    }
    const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(b);
    *amp = std::exp(sol[0]);
    return std::optional<double>(-sol[1]);
  };
  if (auto p = slope(lt, ec, &f.center_amplitude)) f.center_exponent = *p;
  else f.center_exact = true;
  if (auto p = slope(tt, ep, &f.perp_amplitude)) f.perp_rate = *p;
  else f.perp_exact = true;
  return f;
}

}  // namespace

AsymptoticReport asymptotic_fit(const NahmCurve& curve) {
  return AsymptoticReport{fit_end(curve, false), fit_end(curve, true)};
}

}  // namespace nahm
