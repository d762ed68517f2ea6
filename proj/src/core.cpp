#include "nahm/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nahm {

namespace {

const char* kSub[3] = {"₁", "₂", "₃"};

std::string sym(const char* base, int i) { return std::string(base) + kSub[i]; }

bool lex_less(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  for (int k = 0; k < 3; ++k) {
    if (a[k] < b[k] - 1e-12) return true;
    if (a[k] > b[k] + 1e-12) return false;
  }
  return false;
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> v)
    : Error([&] {
        std::ostringstream os;
        os << "validation failed:";
        for (const auto& x : v) os << " " << x.identity << " (residual " << x.residual << ");";
        return os.str();
      }()),
      violations_(std::move(v)) {}

std::vector<Violation> model_violations(const Triple& gamma, const Triple& nn, double tol) {
  std::vector<Violation> out;
  const auto r = gamma[0].rows();
  for (int i = 0; i < 3; ++i) {
    if (gamma[i].rows() != r || gamma[i].cols() != r || nn[i].rows() != r || nn[i].cols() != r) {
      out.push_back({"matrix dimensions differ", 0.0});
      return out;
    }
  }
  auto check = [&](double res, double scale, std::string name) {
    if (!(res <= tol * std::max(1.0, scale))) out.push_back({std::move(name), res});
  };
  for (int i = 0; i < 3; ++i) {
    check(frob(gamma[i] + gamma[i].adjoint()), frob(gamma[i]), sym("Γ", i) + " not skew-Hermitian");
    check(frob(nn[i] + nn[i].adjoint()), frob(nn[i]), sym("N", i) + " not skew-Hermitian");
  }
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      check(frob(commutator(gamma[i], gamma[j])), frob(gamma[i]) * frob(gamma[j]),
            "[" + sym("Γ", i) + "," + sym("Γ", j) + "] ≠ 0");
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      check(frob(commutator(gamma[i], nn[j])), frob(gamma[i]) * frob(nn[j]),
            "[" + sym("Γ", i) + "," + sym("N", j) + "] ≠ 0");
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    check(frob(nn[i] - commutator(nn[j], nn[k])), frob(nn[j]) * frob(nn[k]),
          sym("N", i) + " ≠ [" + sym("N", j) + "," + sym("N", k) + "]");
  }
  return out;
}

ModelSolution validate_model_solution(const Triple& gamma, const Triple& nn, double tol) {
  auto v = model_violations(gamma, nn, tol);
  if (!v.empty()) throw ValidationError(std::move(v));
  return ModelSolution{gamma, nn};
}

int Su2WeightVector::dimension() const {
  int s = 0;
  for (int w : weights) s += w;
  return s;
}

std::string Su2WeightVector::str() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < weights.size(); ++i) os << (i ? "," : "") << weights[i];
  os << ")";
  return os.str();
}

Su2WeightVector make_weights(std::vector<int> w) {
  std::sort(w.begin(), w.end(), std::greater<>());
  return Su2WeightVector{std::move(w)};
}

int numerical_rank(const CMatrix& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& s = svd.singularValues();
  int k = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > tol) ++k;
  return k;
}

std::vector<int> nilpotent_jordan_blocks(const CMatrix& m, double tol) {
  const int n = static_cast<int>(m.rows());
  const double thr = tol * std::max(1.0, m.norm());
  std::vector<int> ranks{n};
  CMatrix p = CMatrix::Identity(n, n);
  for (int k = 1; k <= n + 1; ++k) {
    p = p * m;
    ranks.push_back(numerical_rank(p, thr));
    if (ranks.back() == 0) break;
  }
  if (ranks.back() != 0) throw NumericalError("matrix is not nilpotent within tolerance");
  std::vector<int> blocks;
  // number of blocks of size >= k is ranks[k-1] - ranks[k]
  for (std::size_t k = 1; k < ranks.size(); ++k) {
    const int ge_k = ranks[k - 1] - ranks[k];
    const int ge_k1 = (k + 1 < ranks.size()) ? ranks[k] - ranks[k + 1] : 0;
    if (ge_k < ge_k1) throw NumericalError("inconsistent rank sequence for nilpotent matrix");
    for (int c = 0; c < ge_k - ge_k1; ++c) blocks.push_back(static_cast<int>(k));
  }
  std::sort(blocks.begin(), blocks.end(), std::greater<>());
  return blocks;
}

namespace {

void require_su2(const Triple& nn, double tol) {
  std::vector<Violation> bad;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    const double res = frob(nn[i] - commutator(nn[j], nn[k]));
    if (res > tol * std::max(1.0, frob(nn[j]) * frob(nn[k])))
      bad.push_back({sym("N", i) + " ≠ [" + sym("N", j) + "," + sym("N", k) + "]", res});
    const double sk = frob(nn[i] + nn[i].adjoint());
    if (sk > tol * std::max(1.0, frob(nn[i]))) bad.push_back({sym("N", i) + " not skew-Hermitian", sk});
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

}  // namespace

Su2WeightVector su2_weights_jordan(const Triple& nn, double tol) {
  const cplx I(0, 1);
  return make_weights(nilpotent_jordan_blocks(nn[1] + I * nn[2], tol));
}

Su2WeightVector su2_weights_casimir(const Triple& nn, double tol) {
  const int n = static_cast<int>(nn[0].rows());
  if (n == 0) return {};
  CMatrix c = -(nn[0] * nn[0] + nn[1] * nn[1] + nn[2] * nn[2]);
  c = 0.5 * (c + c.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(c, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double thr = std::max(1e-6, 1e3 * tol) * std::max(1.0, ev.cwiseAbs().maxCoeff());
  std::vector<int> w;
  int i = 0;
  while (i < n) {
    int j = i + 1;
    while (j < n && ev[j] - ev[j - 1] <= thr) ++j;
    double mean = ev.segment(i, j - i).mean();
    // Casimir j(j+1) on a summand of dimension d = 2j+1
    const double d = std::sqrt(std::max(0.0, 4 * mean + 1));
    const int di = static_cast<int>(std::lround(d));
    if (std::abs(d - di) > 1e-5 || di < 1) throw NumericalError("Casimir eigenvalue is not j(j+1)");
    if ((j - i) % di != 0) throw NumericalError("Casimir multiplicity is not a multiple of the summand dimension");
    for (int c2 = 0; c2 < (j - i) / di; ++c2) w.push_back(di);
    i = j;
  }
  return make_weights(std::move(w));
}

Su2WeightVector su2_weights(const Triple& nn, double tol) {
  require_su2(nn, 1e-10);
  auto a = su2_weights_jordan(nn, tol);
  auto b = su2_weights_casimir(nn, tol);
  if (!(a == b))
    throw NumericalError("su(2) weights disagree: Jordan " + a.str() + " vs Casimir " + b.str());
  return a;
}

Triple su2_irrep(int dim) {
  if (dim < 1) throw std::invalid_argument("su2_irrep: dimension must be positive");
  const double j = 0.5 * (dim - 1);
  CMatrix jp = CMatrix::Zero(dim, dim), jz = CMatrix::Zero(dim, dim);
  // basis ordered m = j, j-1, ..., -j
  for (int a = 0; a < dim; ++a) {
    const double m = j - a;
    jz(a, a) = m;
    if (a > 0) jp(a - 1, a) = std::sqrt(j * (j + 1) - m * (m + 1));
  }
  const cplx I(0, 1);
  const CMatrix jx = 0.5 * (jp + jp.adjoint());
  const CMatrix jy = (jp - jp.adjoint()) / (2.0 * I);
  return {-I * jx, -I * jy, -I * jz};
}

Triple direct_sum(const Triple& a, const Triple& b) {
  const auto p = a[0].rows(), q = b[0].rows();
  Triple out;
  for (int i = 0; i < 3; ++i) {
    out[i] = CMatrix::Zero(p + q, p + q);
    out[i].topLeftCorner(p, p) = a[i];
    out[i].bottomRightCorner(q, q) = b[i];
  }
  return out;
}

Triple su2_sum(const std::vector<int>& dims) {
  Triple out = zero_triple(0);
  for (int d : dims) out = direct_sum(out, su2_irrep(d));
  return out;
}

Triple conjugate(const Triple& a, const CMatrix& u) {
  return {u * a[0] * u.adjoint(), u * a[1] * u.adjoint(), u * a[2] * u.adjoint()};
}

Triple restrict_triple(const Triple& a, const CMatrix& frame) {
  return {frame.adjoint() * a[0] * frame, frame.adjoint() * a[1] * frame, frame.adjoint() * a[2] * frame};
}

namespace {

// Split span(frame) into eigenspaces of frame^H h frame.
std::vector<CMatrix> split_by(const CMatrix& frame, const CMatrix& h, double thr) {
  CMatrix hr = frame.adjoint() * h * frame;
  hr = 0.5 * (hr + hr.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hr);
  const Eigen::VectorXd& ev = es.eigenvalues();
  std::vector<CMatrix> out;
  const int n = static_cast<int>(ev.size());
  int i = 0;
  while (i < n) {
    int j = i + 1;
    while (j < n && ev[j] - ev[j - 1] <= thr) ++j;
    out.push_back(frame * es.eigenvectors().middleCols(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::vector<JointEigenspace> joint_eigenspaces(const Triple& gamma, double rel_tol) {
  const int r = static_cast<int>(gamma[0].rows());
  if (r == 0) return {};
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const double res = frob(commutator(gamma[i], gamma[j]));
      if (res > 1e-10 * std::max(1.0, frob(gamma[i]) * frob(gamma[j])))
        throw ValidationError({{"[" + sym("Γ", i) + "," + sym("Γ", j) + "] ≠ 0", res}});
    }
  const cplx I(0, 1);
  const double scale = max_norm(gamma);
  const double thr = rel_tol * scale + 1e-14;
  // fixed generic combination, then refine by each generator
  const double c[3] = {0.7548776662466927, 0.5698402909980532, 0.3247179572447460};
  CMatrix h = c[0] * I * gamma[0] + c[1] * I * gamma[1] + c[2] * I * gamma[2];
  std::vector<CMatrix> spaces = split_by(CMatrix::Identity(r, r), h, thr);
  for (int g = 0; g < 3; ++g) {
    std::vector<CMatrix> next;
    for (const auto& f : spaces) {
      auto parts = split_by(f, I * gamma[g], thr);
      next.insert(next.end(), parts.begin(), parts.end());
    }
    spaces = std::move(next);
  }
  std::vector<JointEigenspace> out;
  for (auto& f : spaces) {
    JointEigenspace js;
    const double m = static_cast<double>(f.cols());
    for (int g = 0; g < 3; ++g) {
      // i Gamma_g = -2 pi xi_g on the eigenspace
      const double lam = (f.adjoint() * (I * gamma[g]) * f).trace().real() / m;
      js.covector[g] = -lam / (2 * std::numbers::pi);
    }
    js.frame = std::move(f);
    out.push_back(std::move(js));
  }
  return out;
}

int SpectrumSet::total_multiplicity() const {
  int s = 0;
  for (const auto& p : points) s += p.multiplicity;
  return s;
}

bool SpectrumSet::same_as(const SpectrumSet& other, const DualLattice3& dl, double tol) const {
  if (points.size() != other.points.size()) return false;
  std::vector<bool> used(other.points.size(), false);
  for (const auto& p : points) {
    bool hit = false;
    for (std::size_t k = 0; k < other.points.size(); ++k) {
      if (used[k] || other.points[k].multiplicity != p.multiplicity) continue;
      if (torus_distance(p.xi, other.points[k].xi, dl) <= tol) {
        used[k] = hit = true;
        break;
      }
    }
    if (!hit) return false;
  }
  return true;
}

SpectrumSet spectrum_set(const ModelSolution& ms, const Lattice3& l) {
  const DualLattice3 dl = dual_lattice(l);
  SpectrumSet s;
  for (auto& js : joint_eigenspaces(ms.gamma)) {
    SpectrumPoint p;
    p.xi = reduce(js.covector, dl);
    p.lift = js.covector;
    p.multiplicity = static_cast<int>(js.frame.cols());
    p.frame = std::move(js.frame);
    s.points.push_back(std::move(p));
  }
  for (std::size_t a = 0; a < s.points.size(); ++a)
    for (std::size_t b = a + 1; b < s.points.size(); ++b) {
      const double d = torus_distance(s.points[a].xi, s.points[b].xi, dl);
      if (d <= 1e-8)
        throw ValidationError({{"distinct joint eigenvalues of Γ map to the same dual torus point", d}});
    }
  std::sort(s.points.begin(), s.points.end(),
            [](const SpectrumPoint& a, const SpectrumPoint& b) { return lex_less(a.xi.coeffs, b.xi.coeffs); });
  return s;
}

SpectrumSet SingularitySet::as_spectrum() const {
  SpectrumSet s;
  for (const auto& p : points) {
    SpectrumPoint q;
    q.xi = p.xi;
    q.lift = Eigen::Vector3d::Zero();
    q.multiplicity = 1;
    s.points.push_back(q);
  }
  return s;
}

SingularitySet singularity_set(const ModelSolution& plus, const ModelSolution& minus, const Lattice3& l) {
  if (plus.rank() != minus.rank()) throw std::invalid_argument("singularity_set: rank mismatch");
  const DualLattice3 dl = dual_lattice(l);
  const SpectrumSet sp = spectrum_set(plus, l), sm = spectrum_set(minus, l);
  SingularitySet out;
  auto find = [&](const DualTorusPoint& xi) -> SingularPoint* {
    for (auto& p : out.points)
      if (torus_distance(p.xi, xi, dl) <= 1e-8) return &p;
    return nullptr;
  };
  for (const auto& p : sp.points) {
    SingularPoint q;
    q.xi = p.xi;
    q.mult_plus = p.multiplicity;
    q.rho_plus = restrict_triple(plus.nn, p.frame);
    q.w_plus = su2_weights(q.rho_plus);
    q.rho_minus = zero_triple(0);
    out.points.push_back(std::move(q));
  }
  for (const auto& p : sm.points) {
    SingularPoint* q = find(p.xi);
    if (!q) {
      SingularPoint fresh;
      fresh.xi = p.xi;
      fresh.rho_plus = zero_triple(0);
      out.points.push_back(std::move(fresh));
      q = &out.points.back();
    }
    q->mult_minus = p.multiplicity;
    q->rho_minus = restrict_triple(minus.nn, p.frame);
    q->w_minus = su2_weights(q->rho_minus);
  }
  std::sort(out.points.begin(), out.points.end(),
            [](const SingularPoint& a, const SingularPoint& b) { return lex_less(a.xi.coeffs, b.xi.coeffs); });
  return out;
}

ModelSolution twist(const ModelSolution& ms, const Eigen::Vector3d& covector) {
  ModelSolution out = ms;
  const int r = ms.rank();
  const cplx I(0, 1);
  for (int i = 0; i < 3; ++i)
    out.gamma[i] -= 2 * std::numbers::pi * I * covector[i] * CMatrix::Identity(r, r);
  return out;
}

ModelSolution twist(const ModelSolution& ms, const DualTorusPoint& xi, const DualLattice3& dl) {
  return twist(ms, dl.covector(xi.coeffs));
}

ModelSolution random_model_solution(std::mt19937_64& rng, int rank, const Lattice3& l, double min_separation) {
  if (rank < 1) throw std::invalid_argument("random_model_solution: rank must be positive");
  const DualLattice3 dl = dual_lattice(l);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> npts(1, rank);
  const int m = npts(rng);
  // split the rank into m positive block sizes
  std::vector<int> sizes(m, 1);
  for (int k = m; k < rank; ++k) sizes[std::uniform_int_distribution<int>(0, m - 1)(rng)]++;
  std::vector<DualTorusPoint> pts;
  while (static_cast<int>(pts.size()) < m) {
    DualTorusPoint p = reduce_coefficients(Eigen::Vector3d(u01(rng), u01(rng), u01(rng)));
    bool ok = true;
    for (const auto& q : pts) ok = ok && torus_distance(p, q, dl) > min_separation;
    if (ok) pts.push_back(p);
  }
  const cplx I(0, 1);
  Triple gamma = zero_triple(0), nn = zero_triple(0);
  std::uniform_int_distribution<int> shift(-1, 1);
  for (int a = 0; a < m; ++a) {
    // random partition of the block into irreducible dimensions
    std::vector<int> dims;
    int left = sizes[a];
    while (left > 0) {
      const int d = std::uniform_int_distribution<int>(1, left)(rng);
      dims.push_back(d);
      left -= d;
    }
    const Triple na = su2_sum(dims);
    // lift by a random lattice vector so the raw eigenvalues are not all in the fundamental domain
    const Eigen::Vector3d c = pts[a].coeffs + Eigen::Vector3d(shift(rng), shift(rng), shift(rng));
    const Eigen::Vector3d cov = dl.covector(c);
    Triple ga;
    for (int i = 0; i < 3; ++i)
      ga[i] = 2 * std::numbers::pi * I * cov[i] * CMatrix::Identity(sizes[a], sizes[a]);
    gamma = direct_sum(gamma, ga);
    nn = direct_sum(nn, na);
  }
  const CMatrix u = random_unitary(rank, rng);
  return ModelSolution{conjugate(gamma, u), conjugate(nn, u)};
}

}  // namespace nahm
