#pragma once
// Small shared linear-algebra helpers used across the library.

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <complex>
#include <stdexcept>

namespace dcor {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// Default relative SVD cutoff: max(rows, cols) * eps * sigma_max.
// A caller-supplied rtol >= 0 overrides the default.
inline double svd_threshold(const Eigen::JacobiSVD<MatrixXd>& svd, double rtol) {
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  const double r = rtol >= 0 ? rtol
                             : std::max(svd.rows(), svd.cols()) *
                                   std::numeric_limits<double>::epsilon();
  return r * smax;
}

inline int numerical_rank(const MatrixXd& m, double rtol = -1.0) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const double thr = svd_threshold(svd, rtol);
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > thr) ++r;
  return r;
}

inline int numerical_rank(const MatrixXcd& m, double rtol = -1.0) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXcd> svd(m);
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  const double r = rtol >= 0 ? rtol
                             : std::max(m.rows(), m.cols()) *
                                   std::numeric_limits<double>::epsilon();
  const double thr = r * smax;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > thr) ++rank;
  return rank;
}

// Moore-Penrose pseudoinverse via SVD.
inline MatrixXd pinv(const MatrixXd& m, double rtol = -1.0) {
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double thr = svd_threshold(svd, rtol);
  VectorXd inv = svd.singularValues();
  for (int i = 0; i < inv.size(); ++i) inv(i) = inv(i) > thr ? 1.0 / inv(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// Orthonormal basis of the null space (columns), deterministic via SVD.
inline MatrixXd null_space(const MatrixXd& m, double rtol = -1.0) {
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeFullV);
  const double thr = svd_threshold(svd, rtol);
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > thr) ++r;
  return svd.matrixV().rightCols(m.cols() - r);
}

// Orthonormal basis (columns) of the row space, deterministic via SVD.
inline MatrixXd row_space_basis(const MatrixXd& m, double rtol = -1.0) {
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinV);
  const double thr = svd_threshold(svd, rtol);
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > thr) ++r;
  return svd.matrixV().leftCols(r);
}

inline VectorXd vec(const MatrixXd& m) {
  return Eigen::Map<const VectorXd>(m.data(), m.size());
}

inline MatrixXd unvec(const VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const MatrixXd>(v.data(), rows, cols);
}

inline MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

inline double max_real_eig(const MatrixXd& m) {
  Eigen::EigenSolver<MatrixXd> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

inline double min_real_eig(const MatrixXd& m) {
  Eigen::EigenSolver<MatrixXd> es(m, false);
  return es.eigenvalues().real().minCoeff();
}

inline bool is_hurwitz(const MatrixXd& m, double margin = 0.0) {
  return max_real_eig(m) < -margin;
}

inline double min_eig_sym(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

// Model-based regulator equations for a plant (A,B,C,D,E,F) and exosystem S:
//   A Pi + B Gamma + E = Pi S,   C Pi + D Gamma + F = 0.
// Solved by Kronecker vectorization as one least-squares system.
struct RegulatorModelSolution {
  MatrixXd pi;     // n x q
  MatrixXd gamma;  // m x q
  double residual = 0.0;
};

inline RegulatorModelSolution solve_regulator_model(const MatrixXd& a, const MatrixXd& b,
                                                    const MatrixXd& c, const MatrixXd& d,
                                                    const MatrixXd& e, const MatrixXd& f,
                                                    const MatrixXd& s) {
  const Eigen::Index n = a.rows(), m = b.cols(), q = s.rows();
  const MatrixXd iq = MatrixXd::Identity(q, q);
  // vec(Pi S - A Pi) = (S^T kron I - I kron A) vec(Pi)
  MatrixXd top_pi = Eigen::kroneckerProduct(s.transpose(), MatrixXd::Identity(n, n)) -
                    Eigen::kroneckerProduct(iq, a);
  MatrixXd top_ga = -Eigen::kroneckerProduct(iq, b);
  MatrixXd bot_pi = Eigen::kroneckerProduct(iq, c);
  MatrixXd bot_ga = Eigen::kroneckerProduct(iq, d);
  MatrixXd lhs(top_pi.rows() + bot_pi.rows(), top_pi.cols() + top_ga.cols());
  lhs << top_pi, top_ga, bot_pi, bot_ga;
  VectorXd rhs(lhs.rows());
  rhs << vec(e), vec(-f);
  VectorXd sol = lhs.completeOrthogonalDecomposition().solve(rhs);
  RegulatorModelSolution out;
  out.pi = unvec(sol.head(n * q), n, q);
  out.gamma = unvec(sol.tail(m * q), m, q);
  out.residual = (lhs * sol - rhs).norm();
  return out;
}

}  // namespace dcor
