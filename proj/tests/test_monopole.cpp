#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "nahm/dirac.hpp"
#include "nahm/errors.hpp"
#include "nahm/monopole.hpp"

using namespace nahm;
using fixture::kI;

namespace {

std::shared_ptr<const TotalKernel> kernel_of(std::shared_ptr<const NahmCurve> c) {
  TotalKernelOptions opt;
  opt.policy.convexity_shortcut = false;
  opt.check_flipped = false;
  return std::make_shared<const TotalKernel>(
      total_kernel(std::move(c), DualTorusPoint{}, Lattice3::cubic(), CliffordModel::standard(), opt));
}

// <t> for |f|^2 = cosh(t)^(-2c) exp(-2bt)
double mean_t(double c, double b) {
  auto w = [&](double t) { return std::pow(std::cosh(t), -2 * c) * std::exp(-2 * b * t); };
  const double z = oracle::integral_simpson(w, -40, 40, 20000);
  return oracle::integral_simpson([&](double t) { return t * w(t); }, -40, 40, 20000) / z;
}

// Linear fit of log(residual) against log(h).
double fitted_order(const std::vector<double>& h, const std::vector<double>& r) {
  Eigen::MatrixXd a(h.size(), 2);
  Eigen::VectorXd y(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    a(i, 0) = 1;
    a(i, 1) = std::log(h[i]);
    y[i] = std::log(r[i]);
  }
  return Eigen::VectorXd(a.colPivHouseholderQr().solve(y))[1];
}

RaySamples synthetic_ray(const Eigen::Vector3d& dir, const std::vector<double>& radii, const std::vector<double>& ks,
                         double offset = 0.0) {
  RaySamples r;
  r.direction = dir;
  for (double R : radii) {
    r.radius.push_back(R);
    std::vector<double> ev;
    for (double k : ks) ev.push_back(k / (2 * R) + offset);
    std::sort(ev.begin(), ev.end(), std::greater<>());
    r.eigenvalues.push_back(ev);
  }
  return r;
}

const std::vector<Eigen::Vector3d> kDirs = {{1, 0, 0}, {0, 0.6, 0.8}, {-0.48, 0.6, 0.64}};

}  // namespace

TEST_CASE("Higgs field of an empty kernel is empty") {
  const auto tk = kernel_of(fixture::constant_curve(fixture::diag_gamma({{0.3, 0.1, 0.2}}), 6, 121));
  const auto s = higgs_field(tk);
  CHECK(s.rank == 0);
  CHECK(s.phi.size() == 0);
}

TEST_CASE("Higgs field: even profile gives zero, odd shift matches quadrature") {
  const auto even = higgs_field(kernel_of(fixture::tanh_curve({2.0}, {0.0}, 10, 801)));
  REQUIRE(even.rank == 1);
  CHECK(std::abs(even.phi(0, 0)) < 1e-10);

  const double c = 2.0, b = 0.5;
  const auto tk = kernel_of(fixture::tanh_curve({c}, {b}, 10, 801));
  const auto s = higgs_field(tk);
  REQUIRE(s.rank == 1);
  CHECK(std::abs(s.phi(0, 0).real()) < 1e-14);
  CHECK(s.phi(0, 0).imag() == doctest::Approx(2 * oracle::kPi * mean_t(c, b)).epsilon(1e-6));

  // bound pattern: |<t f, f>| <= (2K + 1/kappa) |f|^2
  const auto prof = slice_energy(*tk);
  CHECK(std::abs(mean_t(c, b)) <= 2 * prof.K + 1 / prof.kappa);
}

TEST_CASE("Higgs field converges at fourth order in the grid step") {
  std::vector<double> phi;
  for (int n : {101, 201, 401}) phi.push_back(higgs_field(kernel_of(fixture::tanh_curve({1.5}, {0.4}, 10, n))).phi(0, 0).imag());
  const double d1 = std::abs(phi[0] - phi[1]), d2 = std::abs(phi[1] - phi[2]);
  CHECK(d1 / d2 > 12.0);
}

TEST_CASE("Higgs field is skew-Hermitian on a rank-2 kernel") {
  const auto s = higgs_field(kernel_of(fixture::tanh_curve({2.0, 1.5}, {0.3, -0.2}, 10, 801)));
  REQUIRE(s.rank == 2);
  CHECK((s.phi + s.phi.adjoint()).norm() == 0.0);
}

TEST_CASE("links: identity on the same point, covariance under frame changes") {
  const auto tk = kernel_of(fixture::tanh_curve({2.0, 1.5}, {0.3, -0.2}, 10, 801));
  REQUIRE(tk->dim == 2);
  const auto same = connection_links(*tk, *tk);
  CHECK((same.u - CMatrix::Identity(2, 2)).norm() < 1e-10);
  CHECK(same.smin == doctest::Approx(1.0).epsilon(1e-8));

  // both basis elements live in mode 0: rotate them by W
  std::mt19937_64 rng(5);
  auto rotated = [&](const CMatrix& w) {
    TotalKernel r = *tk;
    ModeKernel& k = r.modes.begin()->second;
    const auto old = k.basis;
    for (int b = 0; b < 2; ++b) k.basis[b] = old[0] * w(0, b) + old[1] * w(1, b);
    for (auto* tails : {&k.tail_minus, &k.tail_plus}) {
      const auto ot = *tails;
      for (int b = 0; b < 2; ++b) {
        // tails of the rotated element: concatenate the two tails with weights
        ExpTail t = ot[0];
        t.rates.resize(ot[0].rates.size() + ot[1].rates.size());
        t.rates << ot[0].rates, ot[1].rates;
        t.vecs.resize(ot[0].vecs.rows(), t.rates.size());
        t.vecs << ot[0].vecs, ot[1].vecs;
        t.coeff.resize(t.rates.size());
        t.coeff << ot[0].coeff * w(0, b), ot[1].coeff * w(1, b);
        (*tails)[b] = t;
      }
    }
    return r;
  };
  const CMatrix wa = random_unitary(2, rng), wb = random_unitary(2, rng);
  const auto ov = connection_links(rotated(wa), rotated(wb));
  CHECK((ov.u - wa.adjoint() * wb).norm() < 1e-8);
}

TEST_CASE("links between empty kernels are empty") {
  const auto tk = kernel_of(fixture::constant_curve(fixture::diag_gamma({{0.3, 0.1, 0.2}}), 6, 121));
  CHECK(connection_links(*tk, *tk).u.size() == 0);
}

TEST_CASE("Bogomolny residual: empty region") {
  LatticeMonopole m;
  m.resize({3, 3, 3}, 0.1);
  for (std::size_t s = 0; s < m.phi.size(); ++s) {
    m.valid[s] = true;
    m.phi[s] = CMatrix::Zero(0, 0);
    for (auto& l : m.links) l[s] = CMatrix::Zero(0, 0);
  }
  CHECK(bogomolny_residual(m, {1, 1, 1}).max() == 0.0);
}

TEST_CASE("Bogomolny residual on a Dirac monopole converges at second order") {
  // box [-0.5, 0.5]^2 x [1, 2], away from the singularity and the string
  std::vector<double> hs, res;
  for (int n : {8, 16, 32}) {
    const double h = 1.0 / n;
    const auto m = fixture::dirac_monopole({2, -1}, {-0.5, -0.5, 1.0}, h, {n + 1, n + 1, n + 1});
    const auto r = bogomolny_residual_max(m);
    REQUIRE(r.has_value());
    hs.push_back(h);
    res.push_back(r->max());
  }
  CHECK(res[2] < 5e-3);
  CHECK(fitted_order(hs, res) >= 1.7);
  // the opposite orientation does not solve the equation
  const auto wrong = bogomolny_residual_max(fixture::dirac_monopole({2, -1}, {-0.5, -0.5, 1.0}, 1.0 / 16, {17, 17, 17}), -1);
  CHECK(wrong->max() > 0.1);
}

TEST_CASE("Bogomolny residual is gauge invariant") {
  auto m = fixture::dirac_monopole({2, -1}, {-0.5, -0.5, 1.0}, 0.125, {6, 6, 6});
  const auto before = bogomolny_residual(m, {2, 3, 2});
  std::mt19937_64 rng(8);
  std::vector<CMatrix> g(m.phi.size());
  for (auto& x : g) x = random_unitary(2, rng);
  auto gauged = m;
  for (int k = 0; k < 6; ++k)
    for (int j = 0; j < 6; ++j)
      for (int i = 0; i < 6; ++i) {
        const int s = m.index(i, j, k);
        gauged.phi[s] = g[s] * m.phi[s] * g[s].adjoint();
        const std::array<int, 3> x{i, j, k};
        for (int mu = 0; mu < 3; ++mu) {
          auto y = x;
          if (++y[mu] >= 6) continue;
          gauged.links[mu][s] = g[s] * m.links[mu][s] * g[m.index(y[0], y[1], y[2])].adjoint();
        }
      }
  const auto after = bogomolny_residual(gauged, {2, 3, 2});
  for (int l = 0; l < 3; ++l) CHECK(after.plane[l] == doctest::Approx(before.plane[l]).epsilon(1e-10));
}

TEST_CASE("weight fit on synthetic k/(2R) data") {
  const std::vector<double> radii{0.04, 0.02, 0.01};
  std::vector<RaySamples> rays;
  for (const auto& d : kDirs) rays.push_back(synthetic_ray(d, radii, {1.0}));
  const auto rep = fit_singularity_weights(DualTorusPoint{}, rays, make_weights({1}), make_weights({}));
  REQUIRE(rep.fitted.size() == 1);
  CHECK(rep.fitted[0] == 1);
  CHECK(rep.fitted_raw[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(rep.offsets[0]) < 1e-10);
  CHECK(rep.status() == "PASS");
}

TEST_CASE("weight fit: spin-1/2 on the plus side only") {
  const std::vector<double> radii{0.1, 0.05, 0.025, 0.0125, 0.00625};
  std::vector<RaySamples> rays;
  for (const auto& d : kDirs) rays.push_back(synthetic_ray(d, radii, {2.0}, 0.3));
  const auto rep = fit_singularity_weights(DualTorusPoint{}, rays, make_weights({2}), make_weights({}));
  CHECK(rep.k_plus == std::vector<int>{2});
  CHECK(rep.k_minus.empty());
  CHECK(rep.status() == "PASS");
}

TEST_CASE("weight fit flags non-integral or anisotropic data and reports mismatches") {
  const std::vector<double> radii{0.04, 0.02, 0.01};
  std::vector<RaySamples> rays;
  for (const auto& d : kDirs) rays.push_back(synthetic_ray(d, radii, {1.5}));
  CHECK(fit_singularity_weights(DualTorusPoint{}, rays, make_weights({1}), make_weights({})).status() == "FLAGGED");
  rays.clear();
  rays.push_back(synthetic_ray(kDirs[0], radii, {1.0}));
  rays.push_back(synthetic_ray(kDirs[1], radii, {1.0}));
  rays.push_back(synthetic_ray(kDirs[2], radii, {1.3}));
  CHECK(fit_singularity_weights(DualTorusPoint{}, rays, make_weights({1}), make_weights({})).flagged);
  rays.clear();
  for (const auto& d : kDirs) rays.push_back(synthetic_ray(d, radii, {1.0, -1.0}));
  const auto rep = fit_singularity_weights(DualTorusPoint{}, rays, make_weights({1}), make_weights({}));
  CHECK(rep.k_minus == std::vector<int>{1});
  CHECK(rep.status() == "FAIL");
}

TEST_CASE("weight fit along rays of the lattice Dirac monopole") {
  std::vector<RaySamples> rays;
  for (const auto& d : kDirs) {
    RaySamples r;
    r.direction = d;
    for (int j = 0; j < 5; ++j) {
      const double R = 0.2 * std::ldexp(1.0, -j);
      const auto m = fixture::dirac_monopole({2, -1}, R * d, 1.0, {1, 1, 1});
      r.radius.push_back(R);
      r.eigenvalues.push_back(higgs_eigenvalues(m.phi[0]));
    }
    rays.push_back(r);
  }
  const auto rep = fit_singularity_weights(DualTorusPoint{}, rays, make_weights({2}), make_weights({1}));
  CHECK(rep.k_plus == std::vector<int>{2});
  CHECK(rep.k_minus == std::vector<int>{1});
  CHECK(rep.status() == "PASS");
}

TEST_CASE("determinant winding") {
  std::vector<cplx> outside, around, wrapped;
  for (int j = 0; j < 64; ++j) {
    const cplx w = 0.5 * std::exp(kI * (2 * oracle::kPi * j / 64));
    outside.push_back(2.0 + w);
    // Psi = diag(w, 1)
    CMatrix psi = CMatrix::Identity(2, 2);
    psi(0, 0) = w;
    around.push_back(psi.determinant());
    wrapped.push_back(w * w * w);
  }
  CHECK(det_winding_weight_sum(outside) == 0);
  CHECK(det_winding_weight_sum(around) == 1);
  CHECK(det_winding_weight_sum(wrapped) == 3);
  std::vector<cplx> coarse{1.0, kI * 1.0, -1.0, -kI * 1.0};
  CHECK_THROWS_AS(det_winding_weight_sum({1.0, 1e-9, 1.0}), NumericalError);
  CHECK(det_winding_weight_sum(coarse) == 1);
  CHECK_THROWS_AS(det_winding_weight_sum({1.0, -1.0, 1.0}), NumericalError);
}

TEST_CASE("scattering transport of a constant diagonal Higgs field") {
  const int n = 10;
  const double h = 0.1;
  CMatrix phi = CMatrix::Zero(2, 2);
  phi(0, 0) = kI * 0.7;
  phi(1, 1) = -kI * 0.2;
  const std::vector<CMatrix> links(n, CMatrix::Identity(2, 2)), phis(n, phi);
  const CMatrix psi = scattering_transport(links, phis, h);
  // exp(h i Phi) per step: diag(exp(-0.7 h), exp(0.2 h))
  CHECK(std::abs(psi(0, 0) - std::exp(-0.7 * h * n)) < 1e-14);
  CHECK(std::abs(psi(1, 1) - std::exp(0.2 * h * n)) < 1e-14);
}

TEST_CASE("Higgs eigenvalues and norm") {
  CMatrix phi = CMatrix::Zero(2, 2);
  phi(0, 0) = kI * 0.5;
  phi(1, 1) = -kI * 2.0;
  const auto ev = higgs_eigenvalues(phi);
  CHECK(ev[0] == doctest::Approx(0.5));
  CHECK(ev[1] == doctest::Approx(-2.0));
  CHECK(higgs_norm(phi) == doctest::Approx(2.0));
}
