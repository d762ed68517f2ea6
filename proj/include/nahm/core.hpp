#pragma once

#include <random>
#include <string>
#include <vector>

#include "nahm/errors.hpp"
#include "nahm/linalg.hpp"
#include "nahm/torus.hpp"

namespace nahm {

// Gamma commuting, N an su(2)-triple inside the centralizer of Gamma; the
// curve Gamma + N/t solves the Nahm equation.
struct ModelSolution {
  Triple gamma;
  Triple nn;
  int rank() const { return static_cast<int>(gamma[0].rows()); }
};

std::vector<Violation> model_violations(const Triple& gamma, const Triple& nn, double tol = 1e-10);
ModelSolution validate_model_solution(const Triple& gamma, const Triple& nn, double tol = 1e-10);

// Dimensions of the irreducible summands, sorted descending.
struct Su2WeightVector {
  std::vector<int> weights;
  int dimension() const;
  bool operator==(const Su2WeightVector&) const = default;
  std::string str() const;
};
Su2WeightVector make_weights(std::vector<int> w);

Su2WeightVector su2_weights(const Triple& nn, double tol = 1e-8);
Su2WeightVector su2_weights_jordan(const Triple& nn, double tol = 1e-8);
Su2WeightVector su2_weights_casimir(const Triple& nn, double tol = 1e-8);

// Block sizes of a nilpotent matrix from the ranks of its powers.
std::vector<int> nilpotent_jordan_blocks(const CMatrix& m, double tol = 1e-8);
int numerical_rank(const CMatrix& m, double tol);

// N_i = -i J_i for the spin-(dim-1)/2 representation; satisfies N_1 = [N_2, N_3].
Triple su2_irrep(int dim);
Triple su2_sum(const std::vector<int>& dims);
Triple direct_sum(const Triple& a, const Triple& b);
Triple conjugate(const Triple& a, const CMatrix& u);
Triple restrict_triple(const Triple& a, const CMatrix& frame);

struct JointEigenspace {
  Eigen::Vector3d covector;  // Gamma_j acts as 2 pi i covector_j
  CMatrix frame;             // orthonormal columns
};
std::vector<JointEigenspace> joint_eigenspaces(const Triple& gamma, double rel_tol = 1e-8);

struct SpectrumPoint {
  DualTorusPoint xi;
  Eigen::Vector3d lift;  // unreduced covector
  int multiplicity = 0;
  CMatrix frame;
};

struct SpectrumSet {
  std::vector<SpectrumPoint> points;
  int total_multiplicity() const;
  // Set equality with multiplicities, up to tol in torus distance.
  bool same_as(const SpectrumSet& other, const DualLattice3& dl, double tol = 1e-8) const;
};

SpectrumSet spectrum_set(const ModelSolution& ms, const Lattice3& l);

struct SingularPoint {
  DualTorusPoint xi;
  int mult_plus = 0;
  int mult_minus = 0;
  Triple rho_plus;   // N_+ restricted to the joint eigenspace (empty when absent)
  Triple rho_minus;
  Su2WeightVector w_plus;
  Su2WeightVector w_minus;
};

struct SingularitySet {
  std::vector<SingularPoint> points;
  SpectrumSet as_spectrum() const;
};

SingularitySet singularity_set(const ModelSolution& plus, const ModelSolution& minus, const Lattice3& l);

// Gamma_i -> Gamma_i - 2 pi i xi_i I with xi a Euclidean covector.
ModelSolution twist(const ModelSolution& ms, const Eigen::Vector3d& covector);
ModelSolution twist(const ModelSolution& ms, const DualTorusPoint& xi, const DualLattice3& dl);

// Random valid model solution: well separated spectrum points, each carrying a
// random su(2) representation, conjugated by a random unitary.
ModelSolution random_model_solution(std::mt19937_64& rng, int rank, const Lattice3& l,
                                    double min_separation = 0.05);

}  // namespace nahm
