#include "dcor/lmi.hpp"

#include "dcor/linalg.hpp"

#include <stdexcept>

namespace dcor {

bool psd_check(const MatrixXd& m, double margin) { return min_eig_sym(m) >= margin; }

MatrixXd project_psd(const MatrixXd& m, double floor) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(m));
  VectorXd lam = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

MatrixXd lmi_eval(const AffineLMI& problem, const VectorXd& z) {
  MatrixXd m = problem.constant_term;
  for (const auto& [k, mk] : problem.coefficient_terms) m += z(k) * mk;
  return m;
}

LMICertificate solve_feasibility(const AffineLMI& problem, int max_iter, double tol) {
  const Eigen::Index s = problem.constant_term.rows();
  if (problem.constant_term.cols() != s)
    throw std::invalid_argument("solve_feasibility: constant term not square");
  for (const auto& [k, mk] : problem.coefficient_terms) {
    if (mk.rows() != s || mk.cols() != s)
      throw std::invalid_argument("solve_feasibility: coefficient size mismatch");
    if (k < 0 || k >= problem.n_vars)
      throw std::invalid_argument("solve_feasibility: variable index out of range");
  }
  const double margin = problem.sense == LMISense::psd_strict ? problem.margin : 0.0;
  if (problem.sense == LMISense::psd_strict && !(problem.margin > 0))
    throw std::invalid_argument("solve_feasibility: strict sense needs margin > 0");

  LMICertificate cert;
  cert.z = problem.initial.value_or(VectorXd::Zero(problem.n_vars));
  if (cert.z.size() != problem.n_vars)
    throw std::invalid_argument("solve_feasibility: initial point size mismatch");

  // Constant-term-decidable case: no effective variables.
  bool has_effective_vars = false;
  for (const auto& [k, mk] : problem.coefficient_terms)
    if (mk.cwiseAbs().maxCoeff() > 0) has_effective_vars = true;
  if (problem.n_vars == 0 || !has_effective_vars) {
    const double me = min_eig_sym(problem.constant_term);
    cert.residual = me - margin;
    cert.status = me >= margin - tol ? LMIStatus::feasible : LMIStatus::infeasible_evidence;
    return cert;
  }

  // Least-squares map from z to the stacked matrix entries (plus one row per
  // nonnegativity bound), factored once.
  const Eigen::Index rows = s * s + static_cast<Eigen::Index>(problem.nonneg_vars.size());
  MatrixXd a_ls = MatrixXd::Zero(rows, problem.n_vars);
  for (const auto& [k, mk] : problem.coefficient_terms)
    a_ls.col(k).head(s * s) += vec(mk);
  for (size_t i = 0; i < problem.nonneg_vars.size(); ++i)
    a_ls(s * s + i, problem.nonneg_vars[i]) = 1.0;
  VectorXd base = VectorXd::Zero(rows);
  base.head(s * s) = vec(problem.constant_term);
  // Minimum-norm least squares keeps the iterate bounded when the affine map
  // has a nullspace (basic QR solutions can blow up the variable norm).
  const Eigen::CompleteOrthogonalDecomposition<MatrixXd> qr(a_ls);

  VectorXd z = cert.z;
  int it = 0;
  // Project onto a slightly inflated cone so the iterates cross the required
  // margin strictly instead of approaching it from below; the loop exits on
  // the same eigenvalue test used to accept the certificate.
  const double floor = margin + 10.0 * tol;
  auto bounds_ok = [&](const VectorXd& v) {
    for (int k : problem.nonneg_vars)
      if (v(k) < 0.0) return false;
    return true;
  };
  for (; it < max_iter; ++it) {
    MatrixXd m = lmi_eval(problem, z);
    if (min_eig_sym(m) >= margin && bounds_ok(z)) break;
    MatrixXd target = project_psd(m, floor);
    VectorXd rhs(rows);
    rhs.head(s * s) = vec(target);
    for (size_t i = 0; i < problem.nonneg_vars.size(); ++i)
      rhs(s * s + i) = std::max(z(problem.nonneg_vars[i]), 0.0);
    z = qr.solve(rhs - base);
  }

  cert.z = z;
  cert.iterations = it;
  const double me = min_eig_sym(lmi_eval(problem, z));
  cert.residual = me - margin;
  cert.status =
      (me >= margin && bounds_ok(z)) ? LMIStatus::feasible : LMIStatus::max_iter;
  return cert;
}

void LMIBuilder::add_block(const MatrixXd& constant,
                           const std::vector<std::pair<int, MatrixXd>>& terms) {
  if (constant.rows() != constant.cols())
    throw std::invalid_argument("LMIBuilder: block not square");
  for (const auto& [k, mk] : terms)
    if (mk.rows() != constant.rows() || mk.cols() != constant.cols())
      throw std::invalid_argument("LMIBuilder: term size mismatch");
  constants_.push_back(constant);
  terms_.push_back(terms);
}

AffineLMI LMIBuilder::finish(int n_vars, LMISense sense, double margin) const {
  Eigen::Index total = 0;
  for (const auto& c : constants_) total += c.rows();
  AffineLMI p;
  p.n_vars = n_vars;
  p.sense = sense;
  p.margin = margin;
  p.constant_term = MatrixXd::Zero(total, total);
  std::vector<std::vector<MatrixXd>> per_var;  // accumulate dense per-variable matrices
  MatrixXd zero = MatrixXd::Zero(total, total);
  std::vector<MatrixXd> acc(static_cast<size_t>(n_vars), zero);
  std::vector<bool> used(static_cast<size_t>(n_vars), false);
  Eigen::Index off = 0;
  for (size_t b = 0; b < constants_.size(); ++b) {
    const Eigen::Index sz = constants_[b].rows();
    p.constant_term.block(off, off, sz, sz) = constants_[b];
    for (const auto& [k, mk] : terms_[b]) {
      if (k < 0 || k >= n_vars)
        throw std::invalid_argument("LMIBuilder: variable index out of range");
      acc[static_cast<size_t>(k)].block(off, off, sz, sz) += mk;
      used[static_cast<size_t>(k)] = true;
    }
    off += sz;
  }
  for (int k = 0; k < n_vars; ++k)
    if (used[static_cast<size_t>(k)])
      p.coefficient_terms.emplace_back(k, acc[static_cast<size_t>(k)]);
  return p;
}

}  // namespace dcor
