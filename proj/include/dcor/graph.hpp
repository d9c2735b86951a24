#pragma once
// Leader-follower communication graph: Laplacian partition, spanning-tree
// verification, topology-free lower bounds on the minimum real part of the
// follower-block spectrum, and coupling-gain selection.

#include <Eigen/Dense>

#include <string>

namespace dcor {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Node 0 is the leader. adjacency(i,j) = a_ij > 0 iff the directed edge
// v_j -> v_i exists. Every nonzero weight must lie in [eps1, eps2]; the leader
// has no incoming edges.
struct GraphSpec {
  int n_followers = 0;
  MatrixXd adjacency;  // (N+1) x (N+1)
  double eps1 = 0.0;
  double eps2 = 0.0;
};

struct LaplacianParts {
  MatrixXd full;           // (N+1) x (N+1), rows sum to zero
  MatrixXd h;              // N x N follower block
  VectorXd leader_column;  // [a_10 .. a_N0]
};

enum class SpecialGraphKind { complete, undirected_path, star };

// Throws std::invalid_argument on weight-bound violations, nonzero diagonal,
// or leader in-edges.
void validate_graph(const GraphSpec& graph);

LaplacianParts build_laplacian(const GraphSpec& graph);

// True iff every follower is reachable from the leader along directed edges.
bool has_leader_rooted_spanning_tree(const GraphSpec& graph);

// eps1^n / (n (2 eps2)^(n-1)).
double lambda_min_lower_bound(double eps1, double eps2, int n);

// 1 / w_n with
//   w_n = A(n-1, n-2) (4 eps2/eps1)^(n-2) (2 eps1 + eps2)/eps1^2
//       + (2/eps1) sum_{k=0}^{n-3} A(n-1, k) (4 eps2/eps1)^k,
// A(n,m) = n!/(n-m)!. Requires n >= 3.
double lambda_min_lower_bound_combinatorial(double eps1, double eps2, int n);

// Unit-weight named topologies, leader attached to a single follower:
//   complete -> n^(n-2)/(n+1)^(n-1)
//   undirected_path -> 1/delta_n, delta_n = 3 delta_{n-1} - delta_{n-2},
//                      delta_1 = 1, delta_2 = 3
//   star -> 1/((n+1) 2^(n-2))
double special_graph_bound(SpecialGraphKind kind, int n);

// mu = max(safety * max(max_re_lambda_s, 0) / lambda_bound, safety). The floor
// keeps the coupling positive when the exosystem spectrum sits on the
// imaginary axis.
double coupling_gain_mu(double max_re_lambda_s, double lambda_bound, double safety = 1.05);

// Exosystem matrix unknown, every |S_ij| <= eps: the Gerschgorin bound
// Re(lambda_S) <= q*eps gives mu = max(safety * q * eps / lambda_bound, safety).
double coupling_gain_mu_unknown_s(double eps, int q, double lambda_bound, double safety = 1.05);

// Leader connected to every follower with in-weight > eps_leader: returns
// max_i(S_ii + sum_{j != i} |S_ij|) / eps_leader (the strict threshold itself).
double coupling_gain_mu_diag_dominant(const MatrixXd& s, double eps_leader);

SpecialGraphKind special_graph_kind_from_string(const std::string& name);

}  // namespace dcor
