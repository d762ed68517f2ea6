#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "nahm/flow.hpp"

namespace nahm {

// c_i = i sigma_i on the T^3 spinors, assembled into the 4x4 blocks of dt and dx^i.
struct CliffordModel {
  std::array<CMatrix, 3> c;
  static CliffordModel standard();
  CMatrix clif_dt() const;
  CMatrix clif_dx(int i) const;
  // max deviation from c_i c_j + c_j c_i = -2 delta_ij
  double relation_defect() const;
};

// Which half of the Dirac operator: kernel of -d/dt + D (f' = D f) or of
// d/dt + D (f' = -D f).
enum class DiracSign { Minus, Plus };

// D_n(t) = sum_i c_i (x) (A_i(t) + 2 pi i (n - xi)_i), spinor index outer.
class ModeOperator {
 public:
  ModeOperator(std::shared_ptr<const NahmCurve> curve, ModeIndex n, DualTorusPoint xi, const DualLattice3& dl,
               const CliffordModel& cm);

  const ModeIndex& n() const { return n_; }
  const DualTorusPoint& xi() const { return xi_; }
  const Eigen::Vector3d& shift() const { return shift_; }
  const NahmCurve& curve() const { return *curve_; }
  std::shared_ptr<const NahmCurve> curve_ptr() const { return curve_; }
  int dim() const { return 2 * curve_->rank(); }

  CMatrix assemble(const Triple& a) const;
  CMatrix at(double t) const { return assemble(curve_->value(t)); }
  CMatrix at_sample(std::size_t k) const { return assemble(curve_->a[k]); }
  // Limits built from Gamma (t -> -inf / +inf).
  const CMatrix& limit_minus() const { return limit_minus_; }
  const CMatrix& limit_plus() const { return limit_plus_; }
  // min |eig| of the two limits
  double gap() const { return gap_; }
  // |sum c_i (x) N_i| / T at the two ends: bound on the distance from the limit at the grid edge
  double tail_correction() const { return tail_correction_; }
  double hermiticity_defect() const;

 private:
  std::shared_ptr<const NahmCurve> curve_;
  ModeIndex n_;
  DualTorusPoint xi_;
  Eigen::Vector3d shift_;
  CliffordModel cm_;
  CMatrix limit_minus_, limit_plus_;
  double gap_ = 0.0;
  double tail_correction_ = 0.0;
};

ModeOperator build_mode_operator(std::shared_ptr<const NahmCurve> curve, const ModeIndex& n,
                                 const DualTorusPoint& xi, const DualLattice3& dl, const CliffordModel& cm,
                                 double gap_min = 1e-8);

struct KernelOptions {
  DiracSign sign = DiracSign::Minus;
  double angle_tol = 1e-6;
  double angle_uncertain = 1e-4;
  double volume = 1.0;  // Vol(T^3) in the L^2 product
};

// Exponential tail beyond an end: f(t) = sum_k coeff_k exp(rate_k (t - t_end)) vec_k.
struct ExpTail {
  double t_end = 0.0;
  Eigen::VectorXd rates;
  CMatrix vecs;  // columns
  CVector coeff;
};

struct ModeKernel {
  ModeIndex n{};
  int dim = 0;
  std::vector<double> t;                // grid (empty when dim == 0)
  Eigen::VectorXd weights;              // quadrature weights on t
  std::vector<CMatrix> basis;           // each 2r x grid
  std::vector<ExpTail> tail_minus, tail_plus;
  Eigen::VectorXd principal_sines;      // sines of the principal angles at the matching point
  bool uncertain = false;
  double gram_defect = 0.0;
  double volume = 1.0;
};

ModeKernel mode_kernel(const ModeOperator& op, const KernelOptions& opt = {});

// L^2 product of basis element a of ka with basis element b of kb
// (Vol * integral of f_a^H g_b, grids must coincide); `moment` weights the integrand by t.
cplx l2_product(const ModeKernel& ka, int a, const ModeKernel& kb, int b, bool moment = false);

// Residual of f' = s D f along a basis element (finite differences on the grid).
double kernel_ode_residual(const ModeOperator& op, const ModeKernel& k, int index, DiracSign sign);

struct CutoffPolicy {
  double margin = 1.0;
  int extra_shells = 0;
  bool convexity_shortcut = true;
  std::size_t hard_limit = 20000;
  double gap_min = 1e-8;
};

struct CurveBounds {
  double sup_a = 0.0;      // sup_t |sum c_i (x) A_i(t)|
  double sup_deriv = 0.0;  // sup_t |sum c_i (x) A_i'(t)|
};
CurveBounds curve_bounds(const NahmCurve& curve, const CliffordModel& cm);

struct TotalKernel {
  DualTorusPoint xi;
  std::map<ModeIndex, ModeKernel> modes;  // only modes with dim > 0
  int dim = 0;
  int flipped_dim = -1;  // kernel of the sign-flipped problem (-1: not computed)
  int modes_examined = 0;
  int modes_shortcut = 0;
  double cutoff = 0.0;
  bool certified = true;
  bool uncertain = false;
  std::vector<std::string> warnings;
};

struct TotalKernelOptions {
  CutoffPolicy policy;
  KernelOptions kernel;
  bool check_flipped = true;
  int threads = 1;
};

TotalKernel total_kernel(std::shared_ptr<const NahmCurve> curve, const DualTorusPoint& xi, const Lattice3& l,
                         const CliffordModel& cm, const TotalKernelOptions& opt = {});

struct SliceEnergyProfile {
  std::vector<double> t;
  std::vector<double> F;
  double K = 0.0;
  double kappa_minus = 0.0;  // growth rate of F for t < -K
  double kappa_plus = 0.0;   // decay rate of F for t > K
  double kappa = 0.0;        // min of the two
  double gap_bound = 0.0;    // 2 * smallest |eigenvalue| of the frozen tails
  bool monotone = true;
};

SliceEnergyProfile slice_energy(const ModeKernel& k);
SliceEnergyProfile slice_energy(const TotalKernel& k);

}  // namespace nahm
