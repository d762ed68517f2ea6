#include "nahm/monopole.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

namespace nahm {

namespace {
const cplx kI(0, 1);

struct FrameEntry {
  const ModeKernel* mode;
  int index;
};

std::vector<FrameEntry> frame_of(const TotalKernel& k) {
  std::vector<FrameEntry> out;
  for (const auto& [n, mk] : k.modes)
    for (int i = 0; i < mk.dim; ++i) out.push_back({&mk, i});
  return out;
}

}  // namespace

MonopoleSample higgs_field(std::shared_ptr<const TotalKernel> kernel, std::string frame_id) {
  MonopoleSample s;
  s.xi = kernel->xi;
  s.rank = kernel->dim;
  s.frame_id = std::move(frame_id);
  const auto fr = frame_of(*kernel);
  const int d = static_cast<int>(fr.size());
  s.phi = CMatrix::Zero(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      if (fr[a].mode != fr[b].mode) continue;  // distinct Fourier modes are orthogonal
      s.phi(a, b) = 2 * std::numbers::pi * kI * l2_product(*fr[a].mode, fr[a].index, *fr[b].mode, fr[b].index, true);
    }
  const double defect = (s.phi + s.phi.adjoint()).norm();
  if (defect > 1e-8 * std::max(1.0, s.phi.norm()))
    throw NumericalError("Higgs field is not skew-Hermitian (frame not orthonormal?)");
  s.phi = skew_part(s.phi);
  s.frame = std::move(kernel);
  return s;
}

LinkOverlap connection_links(const TotalKernel& from, const TotalKernel& to, const ModeIndex& wrap,
                             double reject_below) {
  if (from.dim != to.dim) throw NumericalError("connection_links: ranks differ across the link");
  const auto fa = frame_of(from), fb = frame_of(to);
  const int d = static_cast<int>(fa.size());
  LinkOverlap out;
  out.gram = CMatrix::Zero(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const ModeIndex na = fa[a].mode->n, nb = fb[b].mode->n;
      if (na[0] - wrap[0] != nb[0] || na[1] - wrap[1] != nb[1] || na[2] - wrap[2] != nb[2]) continue;
      out.gram(a, b) = l2_product(*fa[a].mode, fa[a].index, *fb[b].mode, fb[b].index);
    }
  out.u = polar_unitary(out.gram, &out.smin);
  if (d > 0 && out.smin < reject_below) {
    std::ostringstream os;
    os << "link rejected: smallest frame overlap singular value " << out.smin;
    throw NumericalError(os.str());
  }
  return out;
}

void LatticeMonopole::resize(std::array<int, 3> d, double spacing) {
  dims = d;
  h = spacing;
  const std::size_t n = static_cast<std::size_t>(d[0]) * d[1] * d[2];
  phi.assign(n, CMatrix());
  for (auto& l : links) l.assign(n, CMatrix());
  valid.assign(n, false);
}

namespace {

CMatrix unitary_log(const CMatrix& u) {
  // u is unitary; log via its Schur form keeps the result skew-Hermitian
  Eigen::ComplexSchur<CMatrix> schur(u);
  const CMatrix& t = schur.matrixT();
  CMatrix l = CMatrix::Zero(u.rows(), u.cols());
  for (int i = 0; i < t.rows(); ++i) l(i, i) = std::log(t(i, i));
  return schur.matrixU() * l * schur.matrixU().adjoint();
}

}  // namespace

BogomolnyResidual bogomolny_residual(const LatticeMonopole& m, std::array<int, 3> s, int orientation) {
  auto at = [&](std::array<int, 3> x) { return m.index(x[0], x[1], x[2]); };
  auto off = [&](std::array<int, 3> x, int mu, int by) {
    x[mu] += by;
    return x;
  };
  for (int mu = 0; mu < 3; ++mu)
    if (s[mu] < 1 || s[mu] > m.dims[mu] - 2) throw std::out_of_range("bogomolny_residual: site not interior");
  auto link = [&](int mu, std::array<int, 3> x) -> const CMatrix& { return m.links[mu][at(x)]; };
  const double h = m.h;
  // centred covariant differences in the frame of s
  std::array<CMatrix, 3> grad;
  for (int l = 0; l < 3; ++l) {
    const CMatrix& up = link(l, s);
    const CMatrix& dn = link(l, off(s, l, -1));
    grad[l] = (up * m.phi[at(off(s, l, 1))] * up.adjoint() - dn.adjoint() * m.phi[at(off(s, l, -1))] * dn) / (2 * h);
  }
  BogomolnyResidual r;
  for (int l = 0; l < 3; ++l) {
    const int mu = (l + 1) % 3, nu = (l + 2) % 3;
    const auto smu = off(s, mu, -1), snu = off(s, nu, -1), smn = off(off(s, mu, -1), nu, -1);
    const CMatrix p1 = link(mu, s) * link(nu, off(s, mu, 1)) * link(mu, off(s, nu, 1)).adjoint() * link(nu, s).adjoint();
    const CMatrix p2 = link(nu, s) * link(mu, off(smu, nu, 1)).adjoint() * link(nu, smu).adjoint() * link(mu, smu);
    const CMatrix p3 = link(mu, smu).adjoint() * link(nu, smn).adjoint() * link(mu, smn) * link(nu, snu);
    const CMatrix p4 = link(nu, snu).adjoint() * link(mu, snu) * link(nu, off(snu, mu, 1)) * link(mu, s).adjoint();
    const CMatrix f = (unitary_log(p1) + unitary_log(p2) + unitary_log(p3) + unitary_log(p4)) / (4 * h * h);
    r.plane[l] = (f - static_cast<double>(orientation) * grad[l]).norm();
  }
  return r;
}

std::optional<BogomolnyResidual> bogomolny_residual_max(const LatticeMonopole& m, int orientation) {
  std::optional<BogomolnyResidual> best;
  for (int k = 1; k + 1 < m.dims[2]; ++k)
    for (int j = 1; j + 1 < m.dims[1]; ++j)
      for (int i = 1; i + 1 < m.dims[0]; ++i) {
        bool ok = true;
        for (int a = -1; a <= 1 && ok; ++a)
          for (int b = -1; b <= 1 && ok; ++b)
            for (int c = -1; c <= 1 && ok; ++c) ok = m.valid[m.index(i + a, j + b, k + c)];
        if (!ok) continue;
        const BogomolnyResidual r = bogomolny_residual(m, {i, j, k}, orientation);
        if (!best) best = r;
        else
          for (int p = 0; p < 3; ++p) best->plane[p] = std::max(best->plane[p], r.plane[p]);
      }
  return best;
}

std::vector<double> higgs_eigenvalues(const CMatrix& phi) {
  if (phi.size() == 0) return {};
  const CMatrix h = -kI * phi;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

double higgs_norm(const CMatrix& phi) {
  const auto ev = higgs_eigenvalues(phi);
  double m = 0.0;
  for (double e : ev) m = std::max(m, std::abs(e));
  return m;
}

WeightReport fit_singularity_weights(const DualTorusPoint& p, const std::vector<RaySamples>& rays,
                                     const Su2WeightVector& predicted_plus, const Su2WeightVector& predicted_minus,
                                     const WeightFitOptions& opt) {
  if (rays.size() < 3) throw std::invalid_argument("fit_singularity_weights: need at least 3 rays");
  WeightReport rep;
  rep.p = p;
  rep.predicted_plus = predicted_plus;
  rep.predicted_minus = predicted_minus;
  std::size_t branches = std::string::npos;
  for (const auto& ray : rays) {
    if (ray.radius.size() < 3 || ray.eigenvalues.size() != ray.radius.size())
      throw std::invalid_argument("fit_singularity_weights: need at least 3 radii per ray");
    for (const auto& ev : ray.eigenvalues) {
      if (branches == std::string::npos) branches = ev.size();
      if (ev.size() != branches) {
        rep.flagged = true;
        rep.notes.push_back("rank changes along the rays");
        return rep;
      }
    }
  }
  if (branches == 0) {
    rep.flagged = true;
    rep.notes.push_back("rank 0 near the point: no Higgs eigenvalues to fit");
    return rep;
  }
  std::vector<std::vector<double>> ks(branches), cs(branches);
  rep.residuals.assign(branches, 0.0);
  for (const auto& ray : rays) {
    const int nr = static_cast<int>(ray.radius.size());
    Eigen::MatrixXd a(nr, 2);
    for (int i = 0; i < nr; ++i) {
      a(i, 0) = 1.0 / (2 * ray.radius[i]);
      a(i, 1) = 1.0;
    }
    const auto qr = a.colPivHouseholderQr();
    for (std::size_t b = 0; b < branches; ++b) {
      Eigen::VectorXd y(nr);
      for (int i = 0; i < nr; ++i) y[i] = ray.eigenvalues[i][b];
      const Eigen::VectorXd sol = qr.solve(y);
      ks[b].push_back(sol[0]);
      cs[b].push_back(sol[1]);
      rep.residuals[b] = std::max(rep.residuals[b], std::sqrt((a * sol - y).squaredNorm() / nr));
    }
  }
  for (std::size_t b = 0; b < branches; ++b) {
    const auto [lo, hi] = std::minmax_element(ks[b].begin(), ks[b].end());
    double mean = 0.0, cmean = 0.0;
    for (std::size_t i = 0; i < ks[b].size(); ++i) {
      mean += ks[b][i];
      cmean += cs[b][i];
    }
    mean /= static_cast<double>(ks[b].size());
    cmean /= static_cast<double>(ks[b].size());
    rep.fitted_raw.push_back(mean);
    rep.offsets.push_back(cmean);
    rep.spread.push_back(*hi - *lo);
    const int k = static_cast<int>(std::lround(mean));
    rep.fitted.push_back(k);
    if (std::abs(mean - k) >= opt.integrality_tol) {
      rep.flagged = true;
      std::ostringstream os;
      os << "branch " << b << ": fitted weight " << mean << " is not integral";
      rep.notes.push_back(os.str());
    }
    if (*hi - *lo > opt.isotropy_tol) {
      rep.flagged = true;
      std::ostringstream os;
      os << "branch " << b << ": weight differs across rays by " << (*hi - *lo);
      rep.notes.push_back(os.str());
    }
    if (k > 0) rep.k_plus.push_back(k);
    if (k < 0) rep.k_minus.push_back(-k);
  }
  std::sort(rep.k_plus.begin(), rep.k_plus.end(), std::greater<>());
  std::sort(rep.k_minus.begin(), rep.k_minus.end(), std::greater<>());
  rep.match = rep.k_plus == predicted_plus.weights && rep.k_minus == predicted_minus.weights;
  return rep;
}

int det_winding_weight_sum(const std::vector<cplx>& z) {
  if (z.size() < 3) throw std::invalid_argument("det_winding_weight_sum: need at least 3 samples");
  for (const auto& v : z)
    if (!(std::abs(v) >= 1e-8)) throw NumericalError("determinant nearly vanishes on the circle (|det| < 1e-8)");
  double total = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double d = std::arg(z[(j + 1) % z.size()] / z[j]);
    if (std::abs(d) > 0.5 * std::numbers::pi)
      throw NumericalError("determinant phase jumps by more than pi/2 between samples; refine the circle");
    total += d;
  }
  const double w = total / (2 * std::numbers::pi);
  const long k = std::lround(w);
  if (std::abs(w - static_cast<double>(k)) > 1e-6) throw NumericalError("winding is not an integer");
  return static_cast<int>(k);
}

CMatrix scattering_transport(const std::vector<CMatrix>& links, const std::vector<CMatrix>& phis, double h) {
  if (links.size() != phis.size() || links.empty())
    throw std::invalid_argument("scattering_transport: need one link per site");
  CMatrix psi = CMatrix::Identity(links[0].rows(), links[0].cols());
  for (std::size_t j = 0; j < links.size(); ++j) {
    const CMatrix step = (h * kI * phis[j]).exp();
    psi = links[j].adjoint() * step * psi;
  }
  return psi;
}

}  // namespace nahm
