#include <doctest.h>

#include <random>

#include "nahm/core.hpp"
#include "nahm/errors.hpp"
#include "nahm/flow.hpp"
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

Triple model_at(const ModelSolution& ms, double t) { return ms.gamma + (1.0 / t) * ms.nn; }

// Model solution with a small spectrum around 0: the commuting part is linearly
// unstable with rates ~ 2 pi |xi_a - xi_b|, so long integrations need it small.
ModelSolution small_model(std::mt19937_64& rng, int r) {
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  std::vector<int> parts;
  for (int left = r; left > 0;) {
    const int d = std::uniform_int_distribution<int>(1, left)(rng);
    parts.push_back(d);
    left -= d;
  }
  Triple g = zero_triple(0), n = zero_triple(0);
  for (int d : parts) {
    const Eigen::Vector3d xi(u(rng), u(rng), u(rng));
    Triple gb;
    for (int i = 0; i < 3; ++i) gb[i] = 2 * oracle::kPi * I * xi[i] * CMatrix::Identity(d, d);
    g = direct_sum(g, gb);
    n = direct_sum(n, su2_irrep(d));
  }
  const CMatrix w = random_unitary(r, rng);
  return validate_model_solution(conjugate(g, w), conjugate(n, w));
}

double triple_diff(const Triple& a, const Triple& b) {
  double m = 0;
  for (int i = 0; i < 3; ++i) m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return m;
}

NahmCurve sampled_model(const ModelSolution& ms, double t0, double t1, int n) {
  NahmCurve c;
  c.grid = uniform_grid(t0, t1, n);
  for (double t : c.grid) c.a.push_back(model_at(ms, t));
  c.minus = ms;
  c.plus = ms;
  return c;
}

// f_i N_i with N the spin-1/2 triple: the Nahm equation reduces to f_i' = -f_j f_k.
Triple euler_top(double f1, double f2, double f3) {
  const Triple n = su2_irrep(2);
  return {f1 * n[0], f2 * n[1], f3 * n[2]};
}

}  // namespace

TEST_CASE("Nahm right-hand side") {
  const Triple g = diag_gamma({{0.1, 0.2, 0.3}, {0.5, 0.1, 0.9}});
  CHECK(max_norm(nahm_rhs(g)) == 0.0);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ms = random_model_solution(rng, 4, Lattice3::cubic());
    for (double t : {1.0, 2.5, 40.0}) {
      // hand check: d/dt (Gamma + N/t) = -N/t^2
      const Triple expect = (-1.0 / (t * t)) * ms.nn;
      CHECK(triple_diff(nahm_rhs(model_at(ms, t)), expect) < 1e-12);
    }
  }

  const Triple a{random_skew(3, rng), random_skew(3, rng), random_skew(3, rng)};
  const Triple r = nahm_rhs(a);
  const Triple swapped = nahm_rhs({a[0], a[2], a[1]});
  CHECK((swapped[0] + r[0]).norm() < 1e-14);
  CHECK((swapped[1] + r[2]).norm() < 1e-14);
  CHECK((swapped[2] + r[1]).norm() < 1e-14);
}

TEST_CASE("integration of constant commuting data stays constant") {
  const Triple g = diag_gamma({{0.1, 0.2, 0.3}, {0.5, 0.1, 0.9}});
  const auto seg = integrate(g, 0.0, 3.0, 1e-10);
  for (const auto& a : seg.a) CHECK(triple_diff(a, g) == 0.0);
}

TEST_CASE("integration reproduces the model solution") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ms = small_model(rng, 4);
    const auto seg = integrate(model_at(ms, 1.0), 1.0, 10.0, 1e-10);
    CHECK(seg.t.back() == doctest::Approx(10.0));
    CHECK(triple_diff(seg.a.back(), model_at(ms, 10.0)) < 1e-8);
  }
}

TEST_CASE("finite-time blow-up is detected") {
  // f' = -f^2, f(0) = -1 blows up at t = 1
  const double tb = oracle::riccati_blowup_time(-1.0, 0.0);
  try {
    integrate(euler_top(-1, -1, -1), 0.0, 2.0, 1e-9);
    FAIL("expected BlowUp");
  } catch (const BlowUp& e) {
    CHECK(e.last_t() == doctest::Approx(tb).epsilon(1e-3));
    CHECK(e.last_t() < tb);
  }
  // generic start with all f_i of one sign blows up no later than the slowest scalar comparison
  try {
    integrate(euler_top(-1.0, -1.3, -0.8), 0.0, 5.0, 1e-9);
    FAIL("expected BlowUp");
  } catch (const BlowUp& e) {
    CHECK(e.last_t() < oracle::riccati_blowup_time(-0.8, 0.0));
    CHECK(e.last_t() > oracle::riccati_blowup_time(-1.3, 0.0));
  }
}

TEST_CASE("Lax eigenvalues are conserved") {
  SUBCASE("commuting constant data") {
    const auto seg = integrate(diag_gamma({{0.1, 0.2, 0.3}, {0.5, 0.1, 0.9}}), 0.0, 1.0, 1e-10);
    CHECK(spectral_invariants(seg).drift == 0.0);
  }
  SUBCASE("random su(2) and su(3) data") {
    std::mt19937_64 rng(3);
    const double tol = 1e-9;
    int tested = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const int r = trial % 2 ? 3 : 2;
      Triple a0{random_skew(r, rng, 0.3), random_skew(r, rng, 0.3), random_skew(r, rng, 0.3)};
      for (auto& m : a0) m -= (m.trace() / double(r)) * CMatrix::Identity(r, r);
      try {
        const auto seg = integrate(a0, 0.0, 1.0, tol);
        CHECK(spectral_invariants(seg).drift < 100 * tol);
        ++tested;
      } catch (const BlowUp&) {
      }
    }
    CHECK(tested > 25);
  }
  SUBCASE("model solution: B minus its closed form stays zero") {
    // eigenvalues at a Jordan block are too ill-conditioned to compare directly
    std::mt19937_64 rng(4);
    const auto ms = small_model(rng, 5);
    const auto seg = integrate(model_at(ms, 1.0), 1.0, 5.0, 1e-10);
    double worst = 0;
    for (std::size_t k = 0; k < seg.t.size(); ++k) {
      const Triple m = model_at(ms, seg.t[k]);
      const CMatrix d = (seg.a[k][1] + I * seg.a[k][2]) - (m[1] + I * m[2]);
      worst = std::max(worst, d.eigenvalues().cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("linearised split at a commuting triple") {
  const Triple g = diag_gamma({{0.1, 0.2, 0.3}, {0.5, 0.1, 0.9}});
  const auto s = linearized_split(g);
  // u(2): 4 real directions per slot, the off-diagonal pair splits symmetrically
  CHECK(s.stable == s.unstable);
  CHECK(s.stable + s.unstable + s.center == 3 * 4);
  CHECK(s.center == 3 * 2 + 2);
}

TEST_CASE("heteroclinic solver: constant and perturbed data") {
  const Triple g = diag_gamma({{0.1, 0.2, 0.3}, {0.5, 0.15, 0.9}});
  const auto ms = validate_model_solution(g, zero_triple(2));
  const auto exact = solve_heteroclinic(ms, ms, 10.0, 201, 1e-8);
  REQUIRE(exact.found);
  CHECK(exact.collocation_residual < 1e-12);
  for (const auto& a : exact.curve->a) CHECK(triple_diff(a, g) < 1e-12);

  HeteroclinicOptions opt;
  opt.perturbation = 0.05;
  opt.seed = 9;
  const auto pert = solve_heteroclinic(ms, ms, 10.0, 201, 1e-8, opt);
  REQUIRE(pert.found);
  CHECK(pert.residual_history.size() > 1);
  CHECK(pert.residual_history.front() > 1e-3);
  for (const auto& a : pert.curve->a) CHECK(triple_diff(a, g) < 1e-7);
  const auto res = asd_residual(*pert.curve);
  CHECK(*std::max_element(res.begin(), res.end()) < 1e-6);
}

TEST_CASE("heteroclinic solver: mismatched ends are reported, not faked") {
  const auto a = validate_model_solution(diag_gamma({{0.1, 0.2, 0.3}}), zero_triple(1));
  const auto b = validate_model_solution(diag_gamma({{0.4, 0.2, 0.3}}), zero_triple(1));
  const auto r = solve_heteroclinic(a, b, 10.0, 101, 1e-8);
  CHECK_FALSE(r.found);
  CHECK_FALSE(r.reason.empty());
  CHECK(r.collocation_residual > 1e-8);
}

TEST_CASE("heteroclinic solver: argument checks") {
  const auto a = validate_model_solution(zero_triple(1), zero_triple(1));
  const auto b = validate_model_solution(zero_triple(2), zero_triple(2));
  CHECK_THROWS_AS(solve_heteroclinic(a, b, 10.0, 101, 1e-8), std::invalid_argument);
  CHECK_THROWS_AS(solve_heteroclinic(a, a, 10.0, 2, 1e-8), std::invalid_argument);
  CHECK_THROWS_AS(solve_heteroclinic(a, a, -1.0, 101, 1e-8), std::invalid_argument);
}

TEST_CASE("curvature energy") {
  const Lattice3 l = Lattice3::cubic();
  SUBCASE("flat curve") {
    const auto ms = validate_model_solution(diag_gamma({{0.1, 0.2, 0.3}}), zero_triple(1));
    NahmCurve c;
    c.grid = uniform_grid(-5, 5, 101);
    c.a.assign(c.grid.size(), ms.gamma);
    c.minus = c.plus = ms;
    CHECK(curvature_energy(c, l, 1e-10) < 1e-20);
  }
  SUBCASE("model tail closed form against quadrature") {
    std::mt19937_64 rng(5);
    const auto ms = random_model_solution(rng, 4, l);
    const double T = 7.0;
    // |F|^2 = 2 sum |[A_j, A_k]|^2 along the model; substitute u = 1/t on [T, inf)
    auto density = [&](double u) {
      if (u == 0.0) return 0.0;
      const Triple a = model_at(ms, 1.0 / u);
      double s = 0;
      for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        s += (a[j] * a[k] - a[k] * a[j]).squaredNorm();
      }
      return 2 * s / (u * u);
    };
    CHECK(model_tail_energy(ms, T) == doctest::Approx(oracle::integral_simpson(density, 0.0, 1.0 / T)).epsilon(1e-8));
  }
  SUBCASE("pointwise self-duality on model samples") {
    std::mt19937_64 rng(6);
    const auto ms = random_model_solution(rng, 4, l);
    for (double t : {1.0, 3.0, 11.0}) {
      double ft = 0, fx = 0;
      const Triple a = model_at(ms, t);
      for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        ft += (ms.nn[i] / (t * t)).squaredNorm();
        fx += commutator(a[j], a[k]).squaredNorm();
      }
      CHECK(ft == doctest::Approx(fx).epsilon(1e-12));
    }
  }
  SUBCASE("refuses curves that do not solve the equation") {
    std::mt19937_64 rng(7);
    NahmCurve c;
    c.grid = uniform_grid(-1, 1, 21);
    const Triple a{random_skew(2, rng), random_skew(2, rng), random_skew(2, rng)};
    c.a.assign(c.grid.size(), a);
    c.minus = c.plus = validate_model_solution(zero_triple(2), zero_triple(2));
    CHECK_THROWS_AS(curvature_energy(c, l, 1e-8), NumericalError);
  }
}

TEST_CASE("ASD residual") {
  std::mt19937_64 rng(8);
  SUBCASE("exact model samples are within the stencil error") {
    const auto ms = random_model_solution(rng, 3, Lattice3::cubic());
    const auto c = sampled_model(ms, 1.0, 3.0, 201);
    const auto r = asd_residual(c);
    // 5-point stencil, h = 0.01: error ~ h^4 |A^(5)| ~ 1e-8 * 120 |N|
    CHECK(*std::max_element(r.begin(), r.end()) < 1e-5 * (1 + max_norm(ms.nn)));
  }
  SUBCASE("constant non-commuting triple") {
    const Triple a{random_skew(2, rng), random_skew(2, rng), random_skew(2, rng)};
    NahmCurve c;
    c.grid = uniform_grid(0, 1, 11);
    c.a.assign(c.grid.size(), a);
    double expect = 0;
    for (int i = 0; i < 3; ++i) expect = std::max(expect, (a[(i + 1) % 3] * a[(i + 2) % 3] - a[(i + 2) % 3] * a[(i + 1) % 3]).norm());
    for (double v : asd_residual(c)) CHECK(v == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("asymptotic fit of a constant curve") {
  const auto ms = validate_model_solution(diag_gamma({{0.1, 0.2, 0.3}, {0.4, 0.7, 0.2}}), zero_triple(2));
  const auto r = solve_heteroclinic(ms, ms, 10.0, 201, 1e-8);
  REQUIRE(r.found);
  const auto af = asymptotic_fit(*r.curve);
  CHECK(af.minus.center_exact);
  CHECK(af.plus.perp_exact);
  CHECK(af.plus.nonconstant_residual == 0.0);
}
