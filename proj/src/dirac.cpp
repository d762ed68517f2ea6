#include "nahm/dirac.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "nahm/parallel.hpp"

namespace nahm {

namespace {
constexpr double kTwoPi = 2 * std::numbers::pi;
const cplx kI(0, 1);

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double hermitian_norm(const CMatrix& h) {
  if (h.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double hermitian_min_abs(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().minCoeff();
}

}  // namespace

CliffordModel CliffordModel::standard() {
  CliffordModel m;
  for (int i = 0; i < 3; ++i) m.c[i] = kI * pauli(i);
  return m;
}

CMatrix CliffordModel::clif_dt() const {
  CMatrix m = CMatrix::Zero(4, 4);
  m.topRightCorner(2, 2) = -CMatrix::Identity(2, 2);
  m.bottomLeftCorner(2, 2) = CMatrix::Identity(2, 2);
  return m;
}

CMatrix CliffordModel::clif_dx(int i) const {
  CMatrix m = CMatrix::Zero(4, 4);
  m.topRightCorner(2, 2) = c[i];
  m.bottomLeftCorner(2, 2) = c[i];
  return m;
}

double CliffordModel::relation_defect() const {
  double d = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CMatrix target = (i == j ? -2.0 : 0.0) * CMatrix::Identity(2, 2);
      d = std::max(d, (c[i] * c[j] + c[j] * c[i] - target).cwiseAbs().maxCoeff());
    }
  return d;
}

// ---------------------------------------------------------------- mode operator

ModeOperator::ModeOperator(std::shared_ptr<const NahmCurve> curve, ModeIndex n, DualTorusPoint xi,
                           const DualLattice3& dl, const CliffordModel& cm)
    : curve_(std::move(curve)), n_(n), xi_(xi), shift_(mode_shift(dl, n, xi)), cm_(cm) {
  limit_minus_ = assemble(curve_->minus.gamma);
  limit_plus_ = assemble(curve_->plus.gamma);
  gap_ = std::min(hermitian_min_abs(limit_minus_), hermitian_min_abs(limit_plus_));
  const int r = curve_->rank();
  auto ncl = [&](const ModelSolution& ms) {
    CMatrix s = CMatrix::Zero(2 * r, 2 * r);
    for (int i = 0; i < 3; ++i) s += kron(cm_.c[i], ms.nn[i]);
    return hermitian_norm(s);
  };
  tail_correction_ = std::max(ncl(curve_->minus) / -curve_->t_min(), ncl(curve_->plus) / curve_->t_max());
}

CMatrix ModeOperator::assemble(const Triple& a) const {
  const int r = static_cast<int>(a[0].rows());
  CMatrix d = CMatrix::Zero(2 * r, 2 * r);
  for (int i = 0; i < 3; ++i) {
    const CMatrix m = a[i] + kTwoPi * kI * shift_[i] * CMatrix::Identity(r, r);
    d += kron(cm_.c[i], m);
  }
  return d;
}

double ModeOperator::hermiticity_defect() const {
  double d = 0.0;
  for (std::size_t k = 0; k < curve_->grid.size(); ++k) {
    const CMatrix m = at_sample(k);
    d = std::max(d, (m - m.adjoint()).cwiseAbs().maxCoeff());
  }
  return d;
}

ModeOperator build_mode_operator(std::shared_ptr<const NahmCurve> curve, const ModeIndex& n,
                                 const DualTorusPoint& xi, const DualLattice3& dl, const CliffordModel& cm,
                                 double gap_min) {
  ModeOperator op(std::move(curve), n, xi, dl, cm);
  if (op.gap() <= gap_min) {
    std::ostringstream os;
    os << "mode (" << n[0] << "," << n[1] << "," << n[2] << "): limit gap " << op.gap()
       << " below threshold; xi is at a singular point";
    throw GapError(op.gap(), os.str());
  }
  return op;
}

// ---------------------------------------------------------------- kernel by shooting

namespace {

struct EndSplit {
  Eigen::VectorXd rates;
  CMatrix vecs;
};

// Eigenpairs of the Hermitian matrix h with eigenvalue sign `positive`.
EndSplit end_split(const CMatrix& h, bool positive, double gap_min) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (h + h.adjoint()));
  const Eigen::VectorXd& ev = es.eigenvalues();
  std::vector<int> idx;
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev[i]) <= gap_min) throw GapError(std::abs(ev[i]), "frozen tail operator has no spectral gap");
    if ((ev[i] > 0) == positive) idx.push_back(i);
  }
  EndSplit s;
  s.rates.resize(static_cast<int>(idx.size()));
  s.vecs.resize(ev.size(), static_cast<int>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    s.rates[k] = ev[idx[k]];
    s.vecs.col(k) = es.eigenvectors().col(idx[k]);
  }
  return s;
}

// Fourth order Magnus generator for f' = s D(t) f over [t0, t1].
CMatrix magnus_generator(const ModeOperator& op, double t0, double t1, double s) {
  const double h = t1 - t0;
  const double d = std::sqrt(3.0) / 6.0;
  const CMatrix d1 = op.at(t0 + (0.5 - d) * h);
  const CMatrix d2 = op.at(t0 + (0.5 + d) * h);
  return (s * h / 2) * (d1 + d2) + (std::sqrt(3.0) / 12 * h * h) * (d2 * d1 - d1 * d2);
}

struct QRStep {
  CMatrix q;
  CMatrix r;
};

QRStep thin_qr(const CMatrix& y) {
  Eigen::HouseholderQR<CMatrix> qr(y);
  const auto p = y.cols();
  QRStep s;
  s.q = qr.householderQ() * CMatrix::Identity(y.rows(), p);
  s.r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const double rmin = s.r.diagonal().cwiseAbs().minCoeff();
  const double rmax = s.r.diagonal().cwiseAbs().maxCoeff();
  if (!(rmin > 1e-14 * rmax) || !std::isfinite(rmax))
    throw NumericalError("subspace marching lost rank (orthonormalisation failure)");
  return s;
}

// Tail integrals of conj(f) g for tails sharing t_end: plain or first moment.
cplx tail_product(const ExpTail& a, const ExpTail& b, bool plus_side, bool moment) {
  cplx s = 0.0;
  const double te = a.t_end;
  for (int k = 0; k < a.rates.size(); ++k)
    for (int l = 0; l < b.rates.size(); ++l) {
      const double rate = a.rates[k] + b.rates[l];
      const cplx w = std::conj(a.coeff[k]) * b.coeff[l] * a.vecs.col(k).dot(b.vecs.col(l));
      double integral;
      if (plus_side) integral = moment ? 1.0 / (rate * rate) - te / rate : -1.0 / rate;
      else integral = moment ? te / rate - 1.0 / (rate * rate) : 1.0 / rate;
      s += w * integral;
    }
  return s;
}

}  // namespace

cplx l2_product(const ModeKernel& ka, int a, const ModeKernel& kb, int b, bool moment) {
  if (ka.t.size() != kb.t.size()) throw std::invalid_argument("l2_product: kernels live on different grids");
  const CMatrix& fa = ka.basis[a];
  const CMatrix& fb = kb.basis[b];
  cplx s = 0.0;
  for (std::size_t k = 0; k < ka.t.size(); ++k) {
    const cplx v = fa.col(k).dot(fb.col(k));
    s += ka.weights[k] * (moment ? ka.t[k] : 1.0) * v;
  }
  s += tail_product(ka.tail_minus[a], kb.tail_minus[b], false, moment);
  s += tail_product(ka.tail_plus[a], kb.tail_plus[b], true, moment);
  return ka.volume * s;
}

ModeKernel mode_kernel(const ModeOperator& op, const KernelOptions& opt) {
  const NahmCurve& c = op.curve();
  const auto& t = c.grid;
  const int nt = static_cast<int>(t.size());
  const double s = opt.sign == DiracSign::Minus ? 1.0 : -1.0;
  ModeKernel out;
  out.n = op.n();
  out.volume = opt.volume;

  // f' = s D f: decay at -inf needs positive eigenvalues of s D, at +inf negative ones
  const CMatrix dm = s * op.at_sample(0), dp = s * op.at_sample(nt - 1);
  const double gmin = 1e-10 * std::max(1.0, hermitian_norm(dm));
  const EndSplit lo = end_split(dm, true, gmin);
  const EndSplit hi = end_split(dp, false, gmin);
  const int p = static_cast<int>(lo.vecs.cols()), q = static_cast<int>(hi.vecs.cols());
  out.principal_sines = Eigen::VectorXd();
  if (p == 0 || q == 0) return out;

  const int k0 = nt / 2;
  // forward march of the decaying-at--inf subspace
  std::vector<CMatrix> u(k0 + 1), ru(k0);
  u[0] = lo.vecs;
  CMatrix prev_gen, prev_exp;
  auto step_exp = [&](int k, bool inverse) {
    CMatrix g = magnus_generator(op, t[k], t[k + 1], s);
    if (inverse) g = -g;
    if (prev_gen.size() == g.size() && (g - prev_gen).norm() <= 1e-14 * (1.0 + g.norm())) return prev_exp;
    prev_gen = g;
    prev_exp = g.exp();
    return prev_exp;
  };
  for (int k = 0; k < k0; ++k) {
    QRStep st = thin_qr(step_exp(k, false) * u[k]);
    u[k + 1] = std::move(st.q);
    ru[k] = std::move(st.r);
  }
  // backward march of the decaying-at-+inf subspace
  prev_gen.resize(0, 0);
  std::vector<CMatrix> sv(nt), rs(nt);
  sv[nt - 1] = hi.vecs;
  for (int k = nt - 2; k >= k0; --k) {
    QRStep st = thin_qr(step_exp(k, true) * sv[k + 1]);
    sv[k] = std::move(st.q);
    rs[k] = std::move(st.r);
  }

  // principal angles between the two subspaces at t[k0]
  const CMatrix& uk = u[k0];
  const CMatrix& sk = sv[k0];
  const CMatrix resid = sk - uk * (uk.adjoint() * sk);
  Eigen::JacobiSVD<CMatrix> svd(resid, Eigen::ComputeFullV);
  const Eigen::VectorXd sing = svd.singularValues();  // descending
  out.principal_sines = sing.reverse();
  std::vector<int> hits;
  for (int i = static_cast<int>(sing.size()) - 1; i >= 0; --i) {
    if (sing[i] < opt.angle_tol) hits.push_back(i);
    else if (sing[i] <= opt.angle_uncertain) out.uncertain = true;
  }
  out.dim = static_cast<int>(hits.size());
  if (out.dim == 0) return out;

  out.t = t;
  out.weights = quadrature_weights(t);
  std::vector<CMatrix> raw;
  std::vector<ExpTail> tm, tp;
  for (int h : hits) {
    CMatrix f(op.dim(), nt);
    CVector b = svd.matrixV().col(h);
    f.col(k0) = sk * b;
    for (int k = k0; k < nt - 1; ++k) {
      b = rs[k].triangularView<Eigen::Upper>().solve(b);
      f.col(k + 1) = sv[k + 1] * b;
    }
    CVector a = uk.adjoint() * f.col(k0);
    for (int k = k0 - 1; k >= 0; --k) {
      a = ru[k].triangularView<Eigen::Upper>().solve(a);
      f.col(k) = u[k] * a;
    }
    ExpTail em{t.front(), lo.rates, lo.vecs, lo.vecs.adjoint() * f.col(0)};
    ExpTail ep{t.back(), hi.rates, hi.vecs, hi.vecs.adjoint() * f.col(nt - 1)};
    raw.push_back(std::move(f));
    tm.push_back(std::move(em));
    tp.push_back(std::move(ep));
  }
  out.basis = raw;
  out.tail_minus = tm;
  out.tail_plus = tp;

  // Loewdin orthonormalisation in L^2
  const int d = out.dim;
  CMatrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = l2_product(out, i, out, j);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (g + g.adjoint()));
  if (es.eigenvalues().minCoeff() <= 1e-12 * es.eigenvalues().maxCoeff())
    throw NumericalError("kernel candidates are linearly dependent in L^2");
  const CMatrix x = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                    es.eigenvectors().adjoint();
  for (int j = 0; j < d; ++j) {
    out.basis[j] = CMatrix::Zero(op.dim(), nt);
    out.tail_minus[j].coeff = CVector::Zero(p);
    out.tail_plus[j].coeff = CVector::Zero(q);
    for (int i = 0; i < d; ++i) {
      out.basis[j] += x(i, j) * raw[i];
      out.tail_minus[j].coeff += x(i, j) * tm[i].coeff;
      out.tail_plus[j].coeff += x(i, j) * tp[i].coeff;
    }
  }
  double defect = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      defect = std::max(defect, std::abs(l2_product(out, i, out, j) - (i == j ? 1.0 : 0.0)));
  out.gram_defect = defect;
  return out;
}

double kernel_ode_residual(const ModeOperator& op, const ModeKernel& k, int index, DiracSign sign) {
  const double s = sign == DiracSign::Minus ? 1.0 : -1.0;
  const auto& t = k.t;
  const int n = static_cast<int>(t.size());
  const CMatrix& f = k.basis[index];
  double worst = 0.0, scale = 0.0;
  for (int j = 0; j < n; ++j) scale = std::max(scale, f.col(j).norm());
  for (int j = 0; j < n; ++j) {
    const int st = std::clamp(j - 2, 0, n - 5);
    const Eigen::MatrixXd w = fornberg_weights(t[j], t.data() + st, 5, 1);
    CVector df = CVector::Zero(f.rows());
    for (int q = 0; q < 5; ++q) df += w(q, 1) * f.col(st + q);
    worst = std::max(worst, (df - s * op.at_sample(j) * f.col(j)).norm());
  }
  return scale > 0 ? worst / scale : 0.0;
}

// ---------------------------------------------------------------- total kernel

CurveBounds curve_bounds(const NahmCurve& curve, const CliffordModel& cm) {
  const int r = curve.rank();
  auto clif = [&](const Triple& a) {
    CMatrix d = CMatrix::Zero(2 * r, 2 * r);
    for (int i = 0; i < 3; ++i) d += kron(cm.c[i], a[i]);
    return hermitian_norm(d);
  };
  CurveBounds b;
  for (const auto& a : curve.a) b.sup_a = std::max(b.sup_a, clif(a));
  const auto d = sample_derivative(curve.grid, curve.a);
  for (const auto& x : d) b.sup_deriv = std::max(b.sup_deriv, clif(x));
  for (const auto* ms : {&curve.minus, &curve.plus}) {
    const double T = ms == &curve.minus ? -curve.t_min() : curve.t_max();
    const double nn = clif(ms->nn);
    b.sup_a = std::max(b.sup_a, clif(ms->gamma) + nn / T);
    b.sup_deriv = std::max(b.sup_deriv, nn / (T * T));
  }
  return b;
}

namespace {

// Convexity certificate: |f|^2 is strictly convex for any solution when the
// smallest |eigenvalue| of D_n stays above sqrt(sup|D'|/2) on the whole line.
bool convexity_excludes(const ModeOperator& op, const CurveBounds& b) {
  const NahmCurve& c = op.curve();
  double hmax = 0.0;
  for (std::size_t k = 0; k + 1 < c.grid.size(); ++k) hmax = std::max(hmax, c.grid[k + 1] - c.grid[k]);
  double gmin = std::min(op.gap(), hermitian_min_abs(op.at_sample(0))) - op.tail_correction();
  gmin = std::min(gmin, hermitian_min_abs(op.at_sample(c.grid.size() - 1)) - op.tail_correction());
  for (std::size_t k = 0; k < c.grid.size(); ++k) gmin = std::min(gmin, hermitian_min_abs(op.at_sample(k)));
  // eigenvalues move by at most sup|D'| * h between samples
  gmin -= b.sup_deriv * hmax;
  return gmin > std::sqrt(0.5 * b.sup_deriv) + 1e-9;
}

}  // namespace

TotalKernel total_kernel(std::shared_ptr<const NahmCurve> curve, const DualTorusPoint& xi, const Lattice3& l,
                         const CliffordModel& cm, const TotalKernelOptions& opt) {
  const DualLattice3 dl = dual_lattice(l);
  TotalKernel out;
  out.xi = xi;
  const CurveBounds b = curve_bounds(*curve, cm);
  double shell = 1e300;
  for (int k = 0; k < 3; ++k) shell = std::min(shell, dl.basis().row(k).norm());
  shell *= 2 * std::numbers::pi;
  out.cutoff = b.sup_a + std::sqrt(0.5 * b.sup_deriv) + opt.policy.margin + opt.policy.extra_shells * shell;
  std::vector<ModeIndex> modes;
  try {
    modes = enumerate_modes(dl, xi, out.cutoff, opt.policy.hard_limit);
  } catch (const ResourceLimit& e) {
    out.certified = false;
    out.warnings.push_back(std::string("uncertified tail: ") + e.what());
    return out;
  }
  out.modes_examined = static_cast<int>(modes.size());

  struct Slot {
    ModeKernel minus;
    int plus_dim = 0;
    bool shortcut = false;
    bool uncertain = false;
  };
  std::vector<Slot> slots(modes.size());
  KernelOptions ko = opt.kernel;
  ko.volume = l.volume();
  parallel_for(modes.size(), opt.threads, [&](std::size_t i) {
    const ModeOperator op = build_mode_operator(curve, modes[i], xi, dl, cm, opt.policy.gap_min);
    Slot& s = slots[i];
    s.minus.n = modes[i];
    if (opt.policy.convexity_shortcut && convexity_excludes(op, b)) {
      s.shortcut = true;
      return;
    }
    KernelOptions km = ko;
    km.sign = DiracSign::Minus;
    s.minus = mode_kernel(op, km);
    s.uncertain = s.minus.uncertain;
    if (opt.check_flipped) {
      KernelOptions kp = ko;
      kp.sign = DiracSign::Plus;
      const ModeKernel mp = mode_kernel(op, kp);
      s.plus_dim = mp.dim;
      s.uncertain = s.uncertain || mp.uncertain;
    }
  });
  out.flipped_dim = opt.check_flipped ? 0 : -1;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    Slot& s = slots[i];
    if (s.shortcut) out.modes_shortcut++;
    out.dim += s.minus.dim;
    if (opt.check_flipped) out.flipped_dim += s.plus_dim;
    if (s.uncertain) {
      out.uncertain = true;
      std::ostringstream os;
      os << "mode (" << modes[i][0] << "," << modes[i][1] << "," << modes[i][2]
         << "): principal angle inside the uncertainty band";
      out.warnings.push_back(os.str());
    }
    if (s.minus.dim > 0) out.modes.emplace(modes[i], std::move(s.minus));
  }
  if (out.flipped_dim > 0) {
    out.certified = false;
    out.warnings.push_back("sign-flipped operator has nonzero L2 kernel");
  }
  if (out.uncertain) out.certified = false;
  return out;
}

// ---------------------------------------------------------------- slice energy

namespace {

void fit_profile(SliceEnergyProfile& p) {
  const int n = static_cast<int>(p.t.size());
  if (n < 4) return;
  // monotone runs from both ends
  int hi = n - 1;
  while (hi > 0 && p.F[hi - 1] > p.F[hi]) --hi;
  int lo = 0;
  while (lo < n - 1 && p.F[lo + 1] > p.F[lo]) ++lo;
  p.K = std::max({0.0, p.t[hi], -p.t[lo]});
  p.monotone = p.K < p.t.back();  // a decaying region exists on the grid
  auto rate = [&](int from, int to) {
    std::vector<double> x, y;
    for (int k = from; k <= to; ++k)
      if (p.F[k] > 1e-280) {
        x.push_back(p.t[k]);
        y.push_back(std::log(p.F[k]));
      }
    if (x.size() < 3) return 0.0;
    Eigen::MatrixXd a(x.size(), 2);
    Eigen::VectorXd rhs(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      a(k, 0) = 1.0;
      a(k, 1) = x[k];
      rhs[k] = y[k];
    }
    return Eigen::VectorXd(a.colPivHouseholderQr().solve(rhs))[1];
  };
  const double tmax = p.t.back();
  // outer half of the monotone region on each side
  int a = hi;
  while (a < n - 1 && p.t[a] < 0.5 * (p.K + tmax)) ++a;
  p.kappa_plus = -rate(a, n - 1);
  int z = lo;
  while (z > 0 && p.t[z] > -0.5 * (p.K + tmax)) --z;
  p.kappa_minus = rate(0, z);
  p.kappa = std::min(p.kappa_plus, p.kappa_minus);
}

}  // namespace

SliceEnergyProfile slice_energy(const ModeKernel& k) {
  SliceEnergyProfile p;
  if (k.dim == 0) return p;
  p.t = k.t;
  p.F.assign(k.t.size(), 0.0);
  for (const auto& f : k.basis)
    for (std::size_t j = 0; j < k.t.size(); ++j) p.F[j] += k.volume * f.col(j).squaredNorm();
  double g = 1e300;
  for (const auto& tl : k.tail_minus) g = std::min(g, tl.rates.cwiseAbs().minCoeff());
  for (const auto& tl : k.tail_plus) g = std::min(g, tl.rates.cwiseAbs().minCoeff());
  p.gap_bound = 2 * g;
  fit_profile(p);
  return p;
}

SliceEnergyProfile slice_energy(const TotalKernel& tk) {
  SliceEnergyProfile p;
  for (const auto& [n, k] : tk.modes) {
    const SliceEnergyProfile q = slice_energy(k);
    if (q.t.empty()) continue;
    if (p.t.empty()) {
      p = q;
      continue;
    }
    for (std::size_t j = 0; j < p.F.size(); ++j) p.F[j] += q.F[j];
    p.gap_bound = std::min(p.gap_bound, q.gap_bound);
  }
  if (!p.t.empty()) fit_profile(p);
  return p;
}

}  // namespace nahm
