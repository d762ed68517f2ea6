#include "nahm/algnahm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace nahm {

namespace {
const cplx kI(0, 1);
}

AntiHolomorphicParts antiholomorphic_parts(const Triple& m) {
  return {0.5 * kI * m[0], 0.5 * (m[1] + kI * m[2])};
}

int SemistableDeg0::rank() const {
  int s = 0;
  for (const auto& x : summands)
    for (int j : x.jordan) s += j;
  return s;
}

int FMStalkTable::total_length() const {
  int s = h0_length + h2_length;
  for (const auto& x : stalks)
    for (int j : x.jordan) s += j;
  return s;
}

SemistableDeg0 graded_from_model(const ModelSolution& ms, const ComplexCoords& cc, double tol) {
  const AntiHolomorphicParts g = antiholomorphic_parts(ms.gamma);
  const AntiHolomorphicParts n = antiholomorphic_parts(ms.nn);
  const CMatrix total = g.w_bar + n.w_bar;
  SemistableDeg0 out;
  for (const auto& js : joint_eigenspaces(ms.gamma)) {
    // eigenvalue of Gamma_taubar is -pi xi_1; zero on the S^1 factor means xi_1 in Z
    const double xi1 = js.covector[0];
    if (std::abs(xi1 - std::round(xi1)) > tol) continue;
    const CMatrix& f = js.frame;
    const CMatrix m = f.adjoint() * total * f;
    // Gamma_wbar acts by pi i (xi_2 + i xi_3) on the eigenspace
    const cplx mu = m.trace() / static_cast<double>(m.rows());
    const Eigen::Vector2d t2cov(mu.imag() / std::numbers::pi, -mu.real() / std::numbers::pi);
    const CMatrix nil = m - mu * CMatrix::Identity(m.rows(), m.cols());
    StalkSummand s;
    s.alpha = cc.t2_point(t2cov);
    s.jordan = nilpotent_jordan_blocks(nil, tol);
    // summands at the same point of the dual T^2 merge
    auto it = std::find_if(out.summands.begin(), out.summands.end(),
                           [&](const StalkSummand& x) { return cc.t2_distance(x.alpha, s.alpha) <= 1e-8; });
    if (it == out.summands.end()) {
      out.summands.push_back(std::move(s));
    } else {
      it->jordan.insert(it->jordan.end(), s.jordan.begin(), s.jordan.end());
      std::sort(it->jordan.begin(), it->jordan.end(), std::greater<>());
    }
  }
  std::sort(out.summands.begin(), out.summands.end(), [](const StalkSummand& a, const StalkSummand& b) {
    return a.alpha[0] != b.alpha[0] ? a.alpha[0] < b.alpha[0] : a.alpha[1] < b.alpha[1];
  });
  return out;
}

FMStalkTable fm_stalks(const SemistableDeg0& v) {
  FMStalkTable t;
  for (const auto& s : v.summands) {
    if (s.jordan.empty()) throw std::invalid_argument("fm_stalks: summand without Jordan data");
    t.stalks.push_back(s);
  }
  return t;
}

std::pair<Su2WeightVector, Su2WeightVector> predicted_weights(const SemistableDeg0& plus,
                                                              const SemistableDeg0& minus,
                                                              const ComplexCoords& cc, const Triple* rho_plus,
                                                              const Triple* rho_minus) {
  auto at_zero = [&](const SemistableDeg0& v) {
    for (const auto& s : v.summands)
      if (cc.t2_distance(s.alpha, Eigen::Vector2d::Zero()) <= 1e-8) return make_weights(s.jordan);
    return Su2WeightVector{};
  };
  const Su2WeightVector wp = at_zero(plus), wm = at_zero(minus);
  if (rho_plus && rho_plus->at(0).size() > 0 && !(su2_weights(*rho_plus) == wp))
    throw NumericalError("predicted weights: Jordan route " + wp.str() + " disagrees with su(2) route " +
                         su2_weights(*rho_plus).str());
  if (rho_plus && rho_plus->at(0).size() == 0 && !wp.weights.empty())
    throw NumericalError("predicted weights: Jordan data present where the representation is zero");
  if (rho_minus && rho_minus->at(0).size() > 0 && !(su2_weights(*rho_minus) == wm))
    throw NumericalError("predicted weights: Jordan route " + wm.str() + " disagrees with su(2) route " +
                         su2_weights(*rho_minus).str());
  if (rho_minus && rho_minus->at(0).size() == 0 && !wm.weights.empty())
    throw NumericalError("predicted weights: Jordan data present where the representation is zero");
  return {wp, wm};
}

void validate_ledger(const ParabolicLedger& l) {
  for (const auto& div : l.divisors) {
    int ranks = 0;
    for (const auto& w : div) {
      if (!(w.a > Rational(-1) && w.a <= Rational(0)))
        throw std::invalid_argument("parabolic weight outside (-1, 0]");
      if (w.rank <= 0) throw std::invalid_argument("parabolic graded rank must be positive");
      ranks += w.rank;
    }
    if (!div.empty() && ranks != l.rank)
      throw std::invalid_argument("graded ranks on a divisor do not add up to the rank");
  }
}

Rational parabolic_degree(const ParabolicLedger& l) {
  validate_ledger(l);
  Rational d(l.c1);
  for (const auto& div : l.divisors)
    for (const auto& w : div) d -= w.a * Rational(w.rank);
  return d;
}

Rational to_rational(double x, long long max_den) {
  if (!std::isfinite(x)) throw std::invalid_argument("to_rational: non-finite input");
  // continued fraction convergents
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double v = x;
  for (int it = 0; it < 64; ++it) {
    const double fl = std::floor(v);
    const long long a = static_cast<long long>(fl);
    const long long p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double frac = v - fl;
    if (std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) < 1e-15 * std::max(1.0, std::abs(x)) ||
        frac < 1e-15)
      break;
    v = 1.0 / frac;
  }
  return Rational(p1, q1);
}

namespace {

Rational rfloor(const Rational& r) {
  long long q = r.numerator() / r.denominator();
  if (r.numerator() < 0 && q * r.denominator() != r.numerator()) --q;
  return Rational(q);
}

void add_weight(std::vector<ParabolicWeight>& div, const Rational& a, int rank) {
  for (auto& w : div)
    if (w.a == a) {
      w.rank += rank;
      return;
    }
  div.push_back({a, rank});
  std::sort(div.begin(), div.end(), [](const ParabolicWeight& x, const ParabolicWeight& y) { return x.a > y.a; });
}

}  // namespace

ParabolicLedger line_ledger(const Rational& beta0, const Rational& beta_inf) {
  ParabolicLedger l;
  l.rank = 1;
  const Rational f0 = rfloor(beta0), finf = rfloor(-beta_inf);
  l.c1 = (f0 + finf).numerator();
  add_weight(l.divisors[0], -(beta0 - f0), 1);
  add_weight(l.divisors[1], -(-beta_inf - finf), 1);
  return l;
}

ParabolicLedger ledger_sum(const ParabolicLedger& a, const ParabolicLedger& b) {
  ParabolicLedger s;
  s.rank = a.rank + b.rank;
  s.c1 = a.c1 + b.c1;
  for (int d = 0; d < 2; ++d) {
    for (const auto& w : a.divisors[d]) add_weight(s.divisors[d], w.a, w.rank);
    for (const auto& w : b.divisors[d]) add_weight(s.divisors[d], w.a, w.rank);
  }
  return s;
}

ParabolicLedger flat_instanton_ledger(const ModelSolution& minus, const ModelSolution& plus, const Lattice3& l) {
  (void)ComplexCoords(l);  // throws unless T^3 = S^1 x T^2
  for (int i = 0; i < 3; ++i) {
    if (frob(minus.gamma[i] - plus.gamma[i]) > 1e-10 * std::max(1.0, frob(plus.gamma[i])) ||
        frob(minus.nn[i]) > 1e-12 || frob(plus.nn[i]) > 1e-12)
      throw std::invalid_argument("flat_instanton_ledger: ends must carry the same Gamma and N = 0");
  }
  ParabolicLedger out;
  for (const auto& js : joint_eigenspaces(plus.gamma)) {
    // a holomorphic frame of the summand grows like |z|^{xi_1} at both ends, z = exp(2 pi tau)
    const Rational beta = to_rational(js.covector[0]);
    for (int k = 0; k < js.frame.cols(); ++k) out = ledger_sum(out, line_ledger(beta, beta));
  }
  return out;
}

}  // namespace nahm
