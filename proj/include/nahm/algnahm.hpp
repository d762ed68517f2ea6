#pragma once

#include <array>
#include <boost/rational.hpp>
#include <utility>
#include <vector>

#include "nahm/core.hpp"

namespace nahm {

// Components of sum_i M_i dx^i along dtau-bar and dw-bar (tau = t + i x^1, w = x^2 + i x^3).
struct AntiHolomorphicParts {
  CMatrix tau_bar;  // (i/2) M_1
  CMatrix w_bar;    // (M_2 + i M_3) / 2
};
AntiHolomorphicParts antiholomorphic_parts(const Triple& m);

struct StalkSummand {
  Eigen::Vector2d alpha;    // point of the dual T^2, reduced coefficients
  std::vector<int> jordan;  // descending
};

// Direct sum of flat line bundles twisted by nilpotent Jordan blocks.
struct SemistableDeg0 {
  std::vector<StalkSummand> summands;
  int rank() const;
};

struct FMStalkTable {
  std::vector<StalkSummand> stalks;  // alpha -> lengths of O/m^i summands of H^1
  int h0_length = 0;
  int h2_length = 0;
  int total_length() const;
};

// Graded piece at 0: restrict Gamma_wbar + N_wbar to the kernel X0 of Gamma_taubar
// (S^1 eigenvalue zero modulo the lattice) and read off eigenvalue points and Jordan blocks.
SemistableDeg0 graded_from_model(const ModelSolution& twisted, const ComplexCoords& cc, double tol = 1e-8);

FMStalkTable fm_stalks(const SemistableDeg0& v);

// Jordan multisets at alpha = 0 on each side; when representations are supplied,
// they are checked against the su(2) route.
std::pair<Su2WeightVector, Su2WeightVector> predicted_weights(const SemistableDeg0& plus,
                                                              const SemistableDeg0& minus,
                                                              const ComplexCoords& cc,
                                                              const Triple* rho_plus = nullptr,
                                                              const Triple* rho_minus = nullptr);

using Rational = boost::rational<long long>;

struct ParabolicWeight {
  Rational a;
  int rank = 0;
};

struct ParabolicLedger {
  long long c1 = 0;
  int rank = 0;
  std::array<std::vector<ParabolicWeight>, 2> divisors;  // {0} x T^2 and {inf} x T^2
};

void validate_ledger(const ParabolicLedger& l);
Rational parabolic_degree(const ParabolicLedger& l);

// Best rational approximation with bounded denominator.
Rational to_rational(double x, long long max_den = 1000000);

// Ledger of a flat line whose holomorphic frame grows like |z|^beta0 at 0 and
// |z|^beta_inf at infinity.
ParabolicLedger line_ledger(const Rational& beta0, const Rational& beta_inf);
ParabolicLedger ledger_sum(const ParabolicLedger& a, const ParabolicLedger& b);

// Ledger of the flat instanton (constant commuting Gamma, N = 0 on both ends).
ParabolicLedger flat_instanton_ledger(const ModelSolution& minus, const ModelSolution& plus, const Lattice3& l);

}  // namespace nahm
