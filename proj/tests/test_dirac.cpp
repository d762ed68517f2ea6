#include <doctest.h>

#include <random>

#include "nahm/core.hpp"
#include "nahm/dirac.hpp"
#include "nahm/errors.hpp"
#include "oracles.hpp"

using namespace nahm;

namespace {

const cplx I(0, 1);

Triple diag_gamma(const std::vector<Eigen::Vector3d>& xs) {
  const int r = static_cast<int>(xs.size());
  Triple g;
  for (int i = 0; i < 3; ++i) {
    g[i] = CMatrix::Zero(r, r);
    for (int a = 0; a < r; ++a) g[i](a, a) = 2 * oracle::kPi * I * xs[a][i];
  }
  return g;
}

std::shared_ptr<const NahmCurve> constant_curve(const Triple& g, double T, int n) {
  auto c = std::make_shared<NahmCurve>();
  c->grid = uniform_grid(-T, T, n);
  c->a.assign(c->grid.size(), g);
  c->minus = c->plus = validate_model_solution(g, zero_triple(static_cast<int>(g[0].rows())));
  return c;
}

// Rank 1, A_3 = i c tanh(t): D = -sigma_3 c tanh(t) in mode 0 at xi = 0, so the
// kernel of f' = D f is (cosh(t)^(-c), 0) up to normalisation.
constexpr double kC = 2.0;

std::shared_ptr<const NahmCurve> tanh_curve(double T, int n) {
  auto c = std::make_shared<NahmCurve>();
  c->grid = uniform_grid(-T, T, n);
  for (double t : c->grid) {
    Triple a = zero_triple(1);
    a[2](0, 0) = I * kC * std::tanh(t);
    c->a.push_back(a);
  }
  Triple gm = zero_triple(1), gp = zero_triple(1);
  gm[2](0, 0) = -I * kC;
  gp[2](0, 0) = I * kC;
  c->minus = validate_model_solution(gm, zero_triple(1));
  c->plus = validate_model_solution(gp, zero_triple(1));
  return c;
}

}  // namespace

TEST_CASE("Clifford relations") {
  const auto cm = CliffordModel::standard();
  CHECK(cm.relation_defect() == 0.0);
}

TEST_CASE("flat rank-1 mode operator has eigenvalues +-2 pi |n - xi|") {
  const auto curve = constant_curve(zero_triple(1), 5, 11);
  const auto dl = dual_lattice(Lattice3::cubic());
  const auto cm = CliffordModel::standard();
  for (const ModeIndex n : {ModeIndex{0, 0, 0}, ModeIndex{1, -1, 0}, ModeIndex{0, 2, 1}}) {
    const DualTorusPoint xi = reduce_coefficients({0.31, 0.17, 0.62});
    const auto op = build_mode_operator(curve, n, xi, dl, cm);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<CMatrix>(op.at(0.0)).eigenvalues();
    const double expect = 2 * oracle::kPi * oracle::pauli_eigen(Eigen::Vector3d(n[0], n[1], n[2]) - xi.coeffs);
    REQUIRE(ev.size() == 2);
    CHECK(ev[0] == doctest::Approx(-expect).epsilon(1e-13));
    CHECK(ev[1] == doctest::Approx(expect).epsilon(1e-13));
    CHECK(op.gap() == doctest::Approx(expect).epsilon(1e-13));
  }
}

TEST_CASE("mode operator is Hermitian and depends on n - xi only") {
  std::mt19937_64 rng(3);
  const Lattice3 l = Lattice3::cubic();
  const auto dl = dual_lattice(l);
  const auto cm = CliffordModel::standard();
  auto c = std::make_shared<NahmCurve>();
  c->grid = uniform_grid(-1, 1, 5);
  for (std::size_t k = 0; k < c->grid.size(); ++k)
    c->a.push_back({random_skew(3, rng), random_skew(3, rng), random_skew(3, rng)});
  c->minus = c->plus = random_model_solution(rng, 3, l);
  const DualTorusPoint xi = reduce_coefficients({0.2, 0.4, 0.7});
  const ModeOperator op(c, {0, 1, 0}, xi, dl, cm);
  for (std::size_t k = 0; k < c->grid.size(); ++k) {
    const CMatrix d = op.at_sample(k);
    CHECK((d - d.adjoint()).norm() <= 1e-12);
  }
  CHECK(op.hermiticity_defect() <= 1e-12);
  DualTorusPoint moved = xi;
  moved.coeffs += Eigen::Vector3d(1, 0, -1);
  const ModeOperator op2(c, {1, 1, -1}, moved, dl, cm);
  CHECK((op.at_sample(2) - op2.at_sample(2)).norm() < 1e-13);
}

TEST_CASE("gap check at the ends") {
  const auto curve = constant_curve(zero_triple(1), 5, 11);
  const auto dl = dual_lattice(Lattice3::cubic());
  CHECK_THROWS_AS(build_mode_operator(curve, {0, 0, 0}, DualTorusPoint{}, dl, CliffordModel::standard()), GapError);
}

TEST_CASE("flat limits split evenly") {
  // Hermitian sum sigma_i v_i (x) 1 has r positive and r negative eigenvalues
  const auto curve = constant_curve(diag_gamma({{0.1, 0.2, 0.3}, {0.6, 0.7, 0.1}}), 5, 11);
  const auto dl = dual_lattice(Lattice3::cubic());
  const auto op = build_mode_operator(curve, {0, 0, 0}, reduce_coefficients({0.4, 0.45, 0.9}), dl,
                                      CliffordModel::standard());
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<CMatrix>(op.limit_plus()).eigenvalues();
  CHECK((ev.array() < 0).count() == 2);
  CHECK((ev.array() > 0).count() == 2);
}

TEST_CASE("flat rank-1 modes have no kernel") {
  const auto curve = constant_curve(diag_gamma({{0.1, 0.2, 0.3}}), 8, 161);
  const auto dl = dual_lattice(Lattice3::cubic());
  const auto cm = CliffordModel::standard();
  const DualTorusPoint xi = reduce_coefficients({0.37, 0.81, 0.05});
  for (const ModeIndex n : {ModeIndex{0, 0, 0}, ModeIndex{1, 0, 0}, ModeIndex{0, -1, 1}})
    for (const auto sign : {DiracSign::Minus, DiracSign::Plus}) {
      KernelOptions opt;
      opt.sign = sign;
      CHECK(mode_kernel(build_mode_operator(curve, n, xi, dl, cm), opt).dim == 0);
    }
}

TEST_CASE("analytic kernel of the tanh profile") {
  const auto curve = tanh_curve(10.0, 801);
  const auto dl = dual_lattice(Lattice3::cubic());
  const auto cm = CliffordModel::standard();
  const auto op = build_mode_operator(curve, {0, 0, 0}, DualTorusPoint{}, dl, cm);
  const ModeKernel k = mode_kernel(op);
  REQUIRE(k.dim == 1);
  CHECK_FALSE(k.uncertain);
  CHECK(k.gram_defect < 1e-8);
  CHECK(std::abs(l2_product(k, 0, k, 0) - 1.0) < 1e-8);
  CHECK(kernel_ode_residual(op, k, 0, DiracSign::Minus) < 1e-4);
  const CMatrix& f = k.basis[0];
  const std::size_t mid = k.t.size() / 2;
  // spinor index outer: component 0 is the upper spinor entry
  const double f0 = std::abs(f(0, mid));
  for (std::size_t j = 0; j < k.t.size(); j += 40) {
    const double expect = std::pow(std::cosh(k.t[j]), -kC);
    CHECK(std::abs(f(0, j)) / f0 == doctest::Approx(expect).epsilon(1e-6));
    CHECK(std::abs(f(1, j)) < 1e-10);
  }
  // the profile is even, so the first moment vanishes
  CHECK(std::abs(l2_product(k, 0, k, 0, true)) < 1e-8);

  KernelOptions flip;
  flip.sign = DiracSign::Plus;
  const ModeKernel kf = mode_kernel(op, flip);
  REQUIRE(kf.dim == 1);
  CHECK(std::abs(kf.basis[0](0, mid)) < 1e-10);

  const SliceEnergyProfile prof = slice_energy(k);
  CHECK(prof.monotone);
  CHECK(prof.K <= 0.1);
  for (std::size_t j = mid + 1; j < prof.t.size(); ++j) CHECK(prof.F[j] < prof.F[j - 1]);
  // F ~ cosh(t)^(-2c): decay rate 2c
  CHECK(prof.kappa_plus == doctest::Approx(2 * kC).epsilon(0.02));
  CHECK(prof.kappa_minus == doctest::Approx(2 * kC).epsilon(0.02));
  CHECK(prof.gap_bound == doctest::Approx(2 * kC).epsilon(1e-6));
}

TEST_CASE("empty kernel gives an empty slice profile") {
  ModeKernel k;
  CHECK(slice_energy(k).t.empty());
}

TEST_CASE("total kernel of flat configurations") {
  const auto cm = CliffordModel::standard();
  const Lattice3 l = Lattice3::cubic();
  SUBCASE("rank 1") {
    const auto curve = constant_curve(diag_gamma({{0.3, 0.1, 0.2}}), 8, 161);
    const auto tk = total_kernel(curve, reduce_coefficients({0.7, 0.5, 0.5}), l, cm);
    CHECK(tk.dim == 0);
    CHECK(tk.flipped_dim == 0);
    CHECK(tk.certified);
  }
  SUBCASE("rank 2 away from both spectrum points, stable under an extra shell") {
    const auto curve = constant_curve(diag_gamma({{0.3, 0.1, 0.2}, {0.1, 0.35, 0.4}}), 8, 161);
    for (const Eigen::Vector3d xi : {Eigen::Vector3d(0.35, 0.15, 0.25), Eigen::Vector3d(0.05, 0.3, 0.45)}) {
      TotalKernelOptions opt;
      opt.policy.convexity_shortcut = false;
      const auto tk = total_kernel(curve, reduce_coefficients(xi), l, cm, opt);
      CHECK(tk.dim == 0);
      CHECK(tk.flipped_dim == 0);
      CHECK(tk.certified);
      CHECK(tk.modes_examined > 0);
      opt.policy.extra_shells = 1;
      const auto wider = total_kernel(curve, reduce_coefficients(xi), l, cm, opt);
      CHECK(wider.dim == tk.dim);
      CHECK(wider.cutoff > tk.cutoff);
    }
  }
}

TEST_CASE("cutoff bounds of a constant curve") {
  const auto curve = constant_curve(diag_gamma({{0.3, 0.1, 0.2}}), 4, 41);
  const auto b = curve_bounds(*curve, CliffordModel::standard());
  CHECK(b.sup_deriv < 1e-12);
  CHECK(b.sup_a == doctest::Approx(2 * oracle::kPi * Eigen::Vector3d(0.3, 0.1, 0.2).norm()).epsilon(1e-12));
}

TEST_CASE("tanh profile total kernel and mode orthogonality") {
  const auto curve = tanh_curve(10.0, 801);
  TotalKernelOptions opt;
  opt.policy.convexity_shortcut = false;
  const auto tk = total_kernel(curve, DualTorusPoint{}, Lattice3::cubic(), CliffordModel::standard(), opt);
  CHECK(tk.dim == 1);
  REQUIRE(tk.modes.size() == 1);
  CHECK(tk.modes.begin()->first == ModeIndex{0, 0, 0});
}
