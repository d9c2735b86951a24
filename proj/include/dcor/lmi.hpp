#pragma once
// Self-contained feasibility solver for affine symmetric-matrix inequalities
// M(z) = M0 + sum_k z_k M_k >= margin*I, by alternating projections between
// the affine image manifold and the shifted positive-semidefinite cone.
// Multiple constraint blocks are composed block-diagonally (projection onto
// the cone then acts blockwise), which LMIBuilder automates.

#include <Eigen/Dense>

#include <optional>
#include <utility>
#include <vector>

namespace dcor {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class LMISense { psd, psd_strict };

struct AffineLMI {
  int n_vars = 0;
  MatrixXd constant_term;  // M0, symmetric
  std::vector<std::pair<int, MatrixXd>> coefficient_terms;  // (var index, M_k)
  LMISense sense = LMISense::psd_strict;
  double margin = 1e-6;                 // required only for psd_strict
  std::vector<int> nonneg_vars;         // indices k with z_k >= 0
  std::optional<VectorXd> initial;      // deterministic start (defaults to 0)
};

enum class LMIStatus { feasible, infeasible_evidence, max_iter };

struct LMICertificate {
  VectorXd z;
  double residual = 0.0;  // min eigenvalue of M(z) minus the required margin
  int iterations = 0;
  LMIStatus status = LMIStatus::max_iter;
};

LMICertificate solve_feasibility(const AffineLMI& problem, int max_iter = 20000,
                                 double tol = 1e-9);

// True iff the minimum eigenvalue of (m + m^T)/2 is >= margin.
bool psd_check(const MatrixXd& m, double margin);

// Nearest matrix (Frobenius) with all eigenvalues >= floor.
MatrixXd project_psd(const MatrixXd& m, double floor);

// Evaluate M(z).
MatrixXd lmi_eval(const AffineLMI& problem, const VectorXd& z);

// Assembles several affine blocks into one block-diagonal AffineLMI.
class LMIBuilder {
public:
  // terms: list of (var index, block-sized coefficient matrix).
  void add_block(const MatrixXd& constant,
                 const std::vector<std::pair<int, MatrixXd>>& terms);
  AffineLMI finish(int n_vars, LMISense sense, double margin) const;

private:
  std::vector<MatrixXd> constants_;
  std::vector<std::vector<std::pair<int, MatrixXd>>> terms_;
};

}  // namespace dcor
