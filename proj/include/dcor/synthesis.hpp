#pragma once
// Data-informativity tests and controller synthesis from coefficient-encoded
// trajectory data: state-feedback gain K1 (exact-data LMI or the noisy
// robust LMI), data-driven regulator equations for M / Pi / Gamma, K2
// assembly, the output-synchronization variant, and the noisy
// approximate-regulator optimization with its reported residual bound.

#include "dcor/cheb.hpp"
#include "dcor/lmi.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <vector>

namespace dcor {

using Eigen::MatrixXd;
using Eigen::VectorXcd;

// Coefficient-space data of one agent over a common window. Column counts of
// x, u, err, exo agree. e_mat/f_mat are the known disturbance/error matrices.
// noise_c present means noisy mode with truncation-noise level c; absent
// means exact mode.
struct AgentData {
  MatrixXd x;    // n x (N+1)
  MatrixXd u;    // m x (N+1)
  MatrixXd err;  // p x (N+1)
  MatrixXd exo;  // q x (N+1)
  MatrixXd e_mat;  // n x q
  MatrixXd f_mat;  // p x q
  std::optional<double> noise_c;
  double t0 = -1.0;
  double t1 = 1.0;

  int n() const { return static_cast<int>(x.rows()); }
  int m() const { return static_cast<int>(u.rows()); }
  int p() const { return static_cast<int>(err.rows()); }
  int q() const { return static_cast<int>(exo.rows()); }
  int cols() const { return static_cast<int>(x.cols()); }
};

struct ExoSpec {
  MatrixXd s;
  VectorXcd spectrum;
};

ExoSpec make_exo_spec(const MatrixXd& s);

// Derivative-data matrix G = X * D11 * chain - E * V and friends, shared by
// the synthesis operations.
struct DataOps {
  MatrixXd g;     // n x (N+1)
  MatrixXd errv;  // p x (N+1): err - F * V
  MatrixXd psi;   // (n+m) x (N+1): [X; U]
  MatrixXd proj;  // (N+1) x (N+1): pinv(psi) * psi
};

DataOps make_data_ops(const AgentData& data, const DiffOperator& diff);

struct StabilizabilityReport {
  bool ok = false;             // Moore-Penrose right inverse yields a stable product
  bool full_row_rank = false;  // rank(X) == n (required for informativity)
  MatrixXd x_pinv;
  double max_re = 0.0;  // max Re eig((X D11 - E V) X^+)
};

// Sufficient stabilizability certificate from the Moore-Penrose right inverse
// of X. ok=false does not refute informativity (other right inverses may
// work); the K1 feasibility problem is the decision procedure.
StabilizabilityReport stabilizability_check(const AgentData& data, const DiffOperator& diff);

struct K1ExactOptions {
  double decay_rate = 0.5;  // shifts closed-loop spectrum to Re < -decay_rate
  double margin = 1e-6;
  int max_iter = 20000;
  double tol = 1e-9;
  double rank_rtol = -1.0;
};

struct K1ExactResult {
  bool ok = false;
  MatrixXd k1;
  MatrixXd theta;
  LMICertificate cert;
  double closed_loop_max_re = 0.0;  // from data: eig(G theta (X theta)^-1)
  double decay_used = 0.0;
};

// Feasibility problem over theta restricted to the affine set where X*theta
// is symmetric: X*theta >= (1+margin) I and
// -(G theta + theta' G') - 2*decay*(X theta) >= margin I. K1 = U theta (X theta)^-1.
K1ExactResult synthesize_k1_exact(const AgentData& data, const DiffOperator& diff,
                                  const K1ExactOptions& opts = {});

struct TransmissionZeroReport {
  bool ok = false;
  int required = 0;
  std::vector<std::pair<std::complex<double>, int>> ranks;  // per tested eigenvalue
};

// Rank test of [G - lambda X; err - F V] at every distinct exosystem
// eigenvalue (conjugate pairs tested once).
TransmissionZeroReport transmission_zero_check(const AgentData& data, const ExoSpec& exo,
                                               const DiffOperator& diff, double rank_rtol = -1.0);

struct RegulatorDataSolution {
  bool ok = false;
  MatrixXd m;      // (N+1) x q
  MatrixXd pi;     // X * M
  MatrixXd gamma;  // U * M
  double residual = 0.0;
};

// Least-squares solve of G M = X M S - E, (err - F V) M = -F by Kronecker
// vectorization; ok requires residual <= tol.
RegulatorDataSolution solve_regulator_data(const AgentData& data, const ExoSpec& exo,
                                           const DiffOperator& diff, double tol = 1e-8);

// K2 = (U - K1 X) M.
MatrixXd synthesize_k2(const AgentData& data, const MatrixXd& k1, const MatrixXd& m);

struct OutputSyncSolution {
  bool ok = false;
  MatrixXd m;
  double residual = 0.0;
};

// Leader-tracking variant: with leader state/output coefficient series
// (X0, Y0), solves X D11 M = X M (X0 D11 X0^+) and Y M = Y0 X0^+.
OutputSyncSolution output_sync_regulator(const AgentData& follower, const ChebSeries& leader_x,
                                         const ChebSeries& leader_y, const DiffOperator& diff,
                                         double tol = 1e-8);

// Quadratic constraint matrix of the noisy consistency set:
//   N = [ cI - G G'   G Psi' ; Psi G'   -Psi Psi' ],
// so that [I A B] N [I; A'; B'] >= 0 characterizes data-consistent systems.
struct NoiseQuadratic {
  MatrixXd n_mat;  // (2n+m) x (2n+m)
  int n = 0;
  int m = 0;
  bool kernel_ok = false;  // kernel(N22) inside kernel(N12)
};

NoiseQuadratic build_noise_quadratic(const AgentData& data, const DiffOperator& diff);

struct K1NoisyOptions {
  double p_floor = 1e-6;
  double beta_floor = 1e-6;
  int max_iter = 60000;
  double tol = 1e-9;
  // Data-generating system for the strict feasibility (Slater) spot check;
  // when absent the condition is assumed and flagged.
  std::optional<std::pair<MatrixXd, MatrixXd>> slater_system;
};

struct K1NoisyResult {
  bool ok = false;
  MatrixXd k1;
  MatrixXd p;
  double alpha = 1.0;  // multiplier pinned by homogeneity (alpha=0 forces P=0)
  double beta = 0.0;
  LMICertificate cert;
  std::optional<bool> slater_ok;
};

// Robust LMI over (P, J, beta) with multiplier alpha := 1:
//   [ -beta I  -P  -J' ; -P  0  0 ; -J  0  0 ] - N >= 0, P >= p_floor I,
//   beta >= beta_floor. K1 = J P^-1 quadratically stabilizes every consistent
//   system.
K1NoisyResult synthesize_k1_noisy(const NoiseQuadratic& nq, const K1NoisyOptions& opts = {});

struct ApproxRegulatorOptions {
  int irls_iters = 80;
  int bisect_steps = 30;
  int ap_iters = 4000;
  double tol = 1e-9;
  double eq_tol = 1e-8;
};

struct ApproxRegulatorResult {
  bool ok = false;
  MatrixXd m;
  MatrixXd pi;
  MatrixXd gamma;
  double omega_spectral = 0.0;
  double omega_frobenius = 0.0;
  double eq_residual = 0.0;
};

// Minimizes ||G P M + E - X M S|| + sqrt(c) ||P M|| over M subject to
// (err - F V) M = -F, where P projects onto the row space of [X; U].
// Three deterministic stages: the equality-constrained least-squares
// surrogate, reweighted refinement of the Frobenius objective, and a
// bisection polish of the true 2-norm objective through the feasibility
// solver. The achieved 2-norm objective is the reported residual bound.
ApproxRegulatorResult approx_regulator_noisy(const AgentData& data, const ExoSpec& exo,
                                             const DiffOperator& diff,
                                             const ApproxRegulatorOptions& opts = {});

struct OmegaBound {
  double spectral = 0.0;
  double frobenius = 0.0;
};

// Evaluates the residual bound at a given M (2-norm for reporting, Frobenius
// for the optimizer's surrogate; both returned).
OmegaBound omega_bound(const AgentData& data, const MatrixXd& m, const ExoSpec& exo,
                       const DiffOperator& diff);

// Deterministic sample of systems consistent with the noisy data: perturbs
// the least-squares system along Gaussian directions scaled to keep the data
// residual inside the admissible ball (radii spread up to rho*sqrt(c)).
std::vector<std::pair<MatrixXd, MatrixXd>> sample_consistency_set(const AgentData& data,
                                                                  const DiffOperator& diff,
                                                                  int count, double rho,
                                                                  unsigned seed);

}  // namespace dcor
