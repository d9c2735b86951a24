#include "dcor/graph.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dcor {

void validate_graph(const GraphSpec& graph) {
  const int np1 = graph.n_followers + 1;
  if (graph.n_followers < 1) throw std::invalid_argument("graph: need at least one follower");
  if (graph.adjacency.rows() != np1 || graph.adjacency.cols() != np1)
    throw std::invalid_argument("graph: adjacency must be (N+1)x(N+1)");
  if (!(graph.eps1 > 0) || !(graph.eps1 <= graph.eps2))
    throw std::invalid_argument("graph: need 0 < eps1 <= eps2");
  for (int i = 0; i < np1; ++i) {
    if (graph.adjacency(i, i) != 0.0)
      throw std::invalid_argument("graph: adjacency diagonal must be zero");
    for (int j = 0; j < np1; ++j) {
      const double w = graph.adjacency(i, j);
      if (w < 0) throw std::invalid_argument("graph: negative weight");
      if (w > 0 && (w < graph.eps1 || w > graph.eps2))
        throw std::invalid_argument("graph: weight outside [eps1, eps2]");
      if (i == 0 && w > 0) throw std::invalid_argument("graph: leader has an incoming edge");
    }
  }
}

LaplacianParts build_laplacian(const GraphSpec& graph) {
  validate_graph(graph);
  const int np1 = graph.n_followers + 1;
  LaplacianParts parts;
  parts.full = MatrixXd::Zero(np1, np1);
  for (int i = 0; i < np1; ++i) {
    double deg = 0.0;
    for (int j = 0; j < np1; ++j) {
      if (j == i) continue;
      parts.full(i, j) = -graph.adjacency(i, j);
      deg += graph.adjacency(i, j);
    }
    parts.full(i, i) = deg;
  }
  parts.h = parts.full.bottomRightCorner(graph.n_followers, graph.n_followers);
  parts.leader_column = graph.adjacency.col(0).tail(graph.n_followers);
  return parts;
}

bool has_leader_rooted_spanning_tree(const GraphSpec& graph) {
  const int np1 = graph.n_followers + 1;
  std::vector<bool> seen(np1, false);
  std::vector<int> stack = {0};
  seen[0] = true;
  while (!stack.empty()) {
    const int j = stack.back();
    stack.pop_back();
    for (int i = 0; i < np1; ++i)
      if (!seen[i] && graph.adjacency(i, j) > 0) {
        seen[i] = true;
        stack.push_back(i);
      }
  }
  for (bool s : seen)
    if (!s) return false;
  return true;
}

double lambda_min_lower_bound(double eps1, double eps2, int n) {
  if (!(eps1 > 0) || !(eps1 <= eps2) || n < 1)
    throw std::invalid_argument("lambda_min_lower_bound: need 0 < eps1 <= eps2, n >= 1");
  return std::pow(eps1, n) / (n * std::pow(2.0 * eps2, n - 1));
}

namespace {
double falling_factorial(int n, int m) {
  double r = 1.0;
  for (int k = 0; k < m; ++k) r *= n - k;
  return r;
}
}  // namespace

double lambda_min_lower_bound_combinatorial(double eps1, double eps2, int n) {
  if (!(eps1 > 0) || !(eps1 <= eps2))
    throw std::invalid_argument("lambda_min_lower_bound_combinatorial: need 0 < eps1 <= eps2");
  if (n < 3) throw std::invalid_argument("lambda_min_lower_bound_combinatorial: need n >= 3");
  const double r = 4.0 * eps2 / eps1;
  double w = falling_factorial(n - 1, n - 2) * std::pow(r, n - 2) *
             ((2.0 * eps1 + eps2) / (eps1 * eps1));
  double tail = 0.0;
  for (int k = 0; k <= n - 3; ++k) tail += falling_factorial(n - 1, k) * std::pow(r, k);
  w += (2.0 / eps1) * tail;
  return 1.0 / w;
}

double special_graph_bound(SpecialGraphKind kind, int n) {
  if (n < 1) throw std::invalid_argument("special_graph_bound: need n >= 1");
  switch (kind) {
    case SpecialGraphKind::complete:
      return std::pow(double(n), n - 2) / std::pow(double(n + 1), n - 1);
    case SpecialGraphKind::undirected_path: {
      double dm1 = 1.0, d = n >= 2 ? 3.0 : 1.0;
      for (int k = 3; k <= n; ++k) {
        const double next = 3.0 * d - dm1;
        dm1 = d;
        d = next;
      }
      return 1.0 / d;
    }
    case SpecialGraphKind::star:
      return 1.0 / ((n + 1) * std::pow(2.0, n - 2));
  }
  throw std::invalid_argument("special_graph_bound: unknown kind");
}

double coupling_gain_mu(double max_re_lambda_s, double lambda_bound, double safety) {
  if (!(lambda_bound > 0)) throw std::invalid_argument("coupling_gain_mu: need lambda_bound > 0");
  if (!(safety >= 1.0)) throw std::invalid_argument("coupling_gain_mu: need safety >= 1");
  return std::max(safety * std::max(max_re_lambda_s, 0.0) / lambda_bound, safety);
}

double coupling_gain_mu_unknown_s(double eps, int q, double lambda_bound, double safety) {
  if (!(lambda_bound > 0) || eps < 0 || q < 1)
    throw std::invalid_argument("coupling_gain_mu_unknown_s: invalid inputs");
  return std::max(safety * q * eps / lambda_bound, safety);
}

double coupling_gain_mu_diag_dominant(const MatrixXd& s, double eps_leader) {
  if (!(eps_leader > 0))
    throw std::invalid_argument("coupling_gain_mu_diag_dominant: need eps_leader > 0");
  double worst = 0.0;
  for (int i = 0; i < s.rows(); ++i) {
    double row = s(i, i);
    for (int j = 0; j < s.cols(); ++j)
      if (j != i) row += std::abs(s(i, j));
    worst = std::max(worst, row);
  }
  return worst / eps_leader;
}

SpecialGraphKind special_graph_kind_from_string(const std::string& name) {
  if (name == "complete") return SpecialGraphKind::complete;
  if (name == "undirected_path") return SpecialGraphKind::undirected_path;
  if (name == "star") return SpecialGraphKind::star;
  throw std::invalid_argument("unknown special graph kind: " + name);
}

}  // namespace dcor
