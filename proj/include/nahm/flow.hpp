#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nahm/core.hpp"

namespace nahm {

Triple nahm_rhs(const Triple& a);

// Samples of a trajectory without asymptotic data.
struct NahmSegment {
  std::vector<double> t;
  std::vector<Triple> a;
};

// A curve on [-T, T] (temporal gauge) with the model solutions governing the ends.
struct NahmCurve {
  std::vector<double> grid;
  std::vector<Triple> a;
  ModelSolution minus;
  ModelSolution plus;

  int rank() const { return a.empty() ? 0 : static_cast<int>(a.front()[0].rows()); }
  double t_min() const { return grid.front(); }
  double t_max() const { return grid.back(); }
  // Gamma + N/t of the end governing t (t < 0 uses minus).
  Triple model_value(double t) const;
  // Cubic interpolation inside the grid, the model form outside.
  Triple value(double t) const;
  // Largest deviation of A(+-T) from the model form.
  double tail_mismatch() const;
  double skew_defect() const;
};

struct IntegrateOptions {
  double min_step_fraction = 1e-12;
  std::size_t max_steps = 2'000'000;
  double blowup_norm = 1e8;
};

// Adaptive Dormand-Prince integration; throws BlowUp when the step collapses.
NahmSegment integrate(const Triple& a0, double t0, double t1, double tol, const IntegrateOptions& opt = {});

struct SpectralInvariants {
  std::vector<double> t;
  std::vector<std::vector<cplx>> eigenvalues;  // matched to the first sample's ordering
  double drift = 0.0;
};

std::vector<cplx> lax_eigenvalues(const Triple& a);
SpectralInvariants spectral_invariants(const NahmSegment& seg);
SpectralInvariants spectral_invariants(const NahmCurve& curve);

struct BoundarySplit {
  int stable = 0;
  int unstable = 0;
  int center = 0;
};
// Sign split of the (self-adjoint) linearisation at a commuting triple.
BoundarySplit linearized_split(const Triple& gamma, Eigen::MatrixXd* stable = nullptr,
                               Eigen::MatrixXd* unstable = nullptr);

struct HeteroclinicOptions {
  int max_iter = 40;
  // bound on the Nahm residual of the cubic interpolant between collocation points
  double interp_tol = 1e-5;
  std::optional<std::vector<Triple>> initial_guess;
  double perturbation = 0.0;  // random perturbation added to the default guess
  unsigned long long seed = 1;
};

struct HeteroclinicResult {
  bool found = false;
  std::optional<NahmCurve> curve;
  std::vector<double> residual_history;
  double collocation_residual = 0.0;
  double interpolant_residual = 0.0;
  int iterations = 0;
  BoundarySplit split_minus, split_plus;
  std::string reason;
};

std::vector<double> uniform_grid(double a, double b, int n);

HeteroclinicResult solve_heteroclinic(const ModelSolution& minus, const ModelSolution& plus, double T, int grid_n,
                                      double tol, const HeteroclinicOptions& opt = {});

// Pointwise max_i |dA_i/dt + [A_j, A_k]| with 4th order finite differences.
std::vector<double> asd_residual(const NahmCurve& curve);

// Time derivative of the samples (5-point stencils).
std::vector<Triple> sample_derivative(const std::vector<double>& t, const std::vector<Triple>& a);

// |F|^2 over R x T^3 including the closed-form model tails; refuses curves whose
// residual exceeds residual_tol.
double curvature_energy(const NahmCurve& curve, const Lattice3& l, double residual_tol);
// Closed-form contribution of one model tail on [T, inf) (per unit volume).
double model_tail_energy(const ModelSolution& ms, double T);

struct AsymptoticFit {
  // power exponent of |eps_center| ~ t^(-p) and exponential rate of |eps_perp|
  double center_exponent = 0.0;
  double perp_rate = 0.0;
  double nonconstant_residual = 0.0;  // x-dependent part: identically zero here
  double center_amplitude = 0.0;
  double perp_amplitude = 0.0;
  bool center_exact = false;  // residual below resolution: no rate to fit
  bool perp_exact = false;
};

struct AsymptoticReport {
  AsymptoticFit minus;
  AsymptoticFit plus;
};

AsymptoticReport asymptotic_fit(const NahmCurve& curve);

}  // namespace nahm
