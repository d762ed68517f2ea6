#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nahm/dirac.hpp"

namespace nahm {

struct MonopoleSample {
  DualTorusPoint xi;
  int rank = 0;
  CMatrix phi;  // rank x rank, skew-Hermitian
  std::string frame_id;
  std::shared_ptr<const TotalKernel> frame;
};

// Phi_ab = <f_a, 2 pi i t f_b>; basis ordered by mode index, then by position in the mode basis.
MonopoleSample higgs_field(std::shared_ptr<const TotalKernel> kernel, std::string frame_id = {});

struct LinkOverlap {
  CMatrix u;            // transports the frame at `to` into the frame at `from`
  CMatrix gram;
  double smin = 1.0;
};

// Overlap <f_a(from), f_b(to)>. `wrap` is the dual lattice vector v with
// (unreduced position of `to`) = to.xi + v; mode n at `from` pairs with mode n - v at `to`.
LinkOverlap connection_links(const TotalKernel& from, const TotalKernel& to, const ModeIndex& wrap = {0, 0, 0},
                             double reject_below = 0.1);

// Sites on an open box with links to the +mu neighbour.
struct LatticeMonopole {
  std::array<int, 3> dims{0, 0, 0};
  double h = 0.0;
  std::vector<CMatrix> phi;                    // per site
  std::array<std::vector<CMatrix>, 3> links;   // links[mu][site]: fibre at site+mu -> fibre at site
  std::vector<bool> valid;                     // site usable

  int index(int i, int j, int k) const { return i + dims[0] * (j + dims[1] * k); }
  void resize(std::array<int, 3> d, double spacing);
};

struct BogomolnyResidual {
  std::array<double, 3> plane{0, 0, 0};  // planes (23), (31), (12)
  double max() const { return std::max({plane[0], plane[1], plane[2]}); }
};

// F_{mu nu} (clover average of plaquette logarithms) against the Hodge dual of the
// centred covariant difference of Phi at an interior site. `orientation` fixes
// the sign convention of the Hodge star.
BogomolnyResidual bogomolny_residual(const LatticeMonopole& m, std::array<int, 3> site, int orientation = 1);
// Max over all interior sites whose stencil is valid; nullopt if none.
std::optional<BogomolnyResidual> bogomolny_residual_max(const LatticeMonopole& m, int orientation = 1);

struct RaySamples {
  Eigen::Vector3d direction;
  std::vector<double> radius;
  std::vector<std::vector<double>> eigenvalues;  // eigenvalues of -i Phi per radius, descending
};

struct WeightFitOptions {
  double integrality_tol = 0.1;
  double isotropy_tol = 0.1;
};

struct WeightReport {
  DualTorusPoint p;
  std::vector<double> fitted_raw;   // mean k per eigenvalue branch
  std::vector<double> offsets;      // mean c per branch
  std::vector<double> spread;       // max - min of k across rays
  std::vector<double> residuals;    // rms fit residual per branch (max over rays)
  std::vector<int> fitted;
  std::vector<int> k_plus;          // positive fitted weights, descending
  std::vector<int> k_minus;         // |negative fitted weights|, descending
  Su2WeightVector predicted_plus;
  Su2WeightVector predicted_minus;
  std::optional<int> winding;
  bool flagged = false;
  bool match = false;
  std::vector<std::string> notes;
  std::string status() const { return flagged ? "FLAGGED" : (match ? "PASS" : "FAIL"); }
};

WeightReport fit_singularity_weights(const DualTorusPoint& p, const std::vector<RaySamples>& rays,
                                     const Su2WeightVector& predicted_plus, const Su2WeightVector& predicted_minus,
                                     const WeightFitOptions& opt = {});

// Winding number of a closed loop of determinant samples.
int det_winding_weight_sum(const std::vector<cplx>& samples);

// Transport of the mini-holomorphic structure along a line of sites: product of
// U^H exp(h i Phi) factors, applied from the first site onwards.
CMatrix scattering_transport(const std::vector<CMatrix>& links, const std::vector<CMatrix>& phis, double h);

// Eigenvalues of -i Phi, descending.
std::vector<double> higgs_eigenvalues(const CMatrix& phi);

// Operator norm of Phi (largest |eigenvalue|).
double higgs_norm(const CMatrix& phi);

}  // namespace nahm
