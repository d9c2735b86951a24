#pragma once
// Chebyshev coefficient encoding of trajectories: fitting at
// Chebyshev-Gauss-Lobatto nodes (cosine-transform fast path) or by least
// squares, stable evaluation, coefficient-space differentiation, and the
// truncation-noise bound used by the noisy synthesis path.

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace dcor {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Coefficient matrix of a vector-valued signal: row i holds the coefficients
// of component i, column k is the coefficient of basis element C_k.
struct ChebSeries {
  MatrixXd coeffs;  // dim x (degree+1)
  double t0 = -1.0;
  double t1 = 1.0;

  int degree() const { return static_cast<int>(coeffs.cols()) - 1; }
  int dim() const { return static_cast<int>(coeffs.rows()); }
  double chain_factor() const { return 2.0 / (t1 - t0); }
};

// Coefficient-space differentiation operator. Row k of `full` expresses
// d/dtau C_k in the basis {C_j}. The top-left split x split block acts on a
// truncated series; rows split.. of the first split columns map the discarded
// tail into the truncated derivative.
struct DiffOperator {
  MatrixXd full;  // size x size
  int split = 0;  // N+1

  Eigen::Block<const MatrixXd> d11() const { return full.topLeftCorner(split, split); }
  Eigen::Block<const MatrixXd> d21() const {
    return full.bottomLeftCorner(full.rows() - split, split);
  }
};

// Truncation-noise bound: representing a signal by its first n+1 Chebyshev
// coefficients leaves a tail whose contribution to the derivative data is
// bounded by 2*V(f'')/(sqrt(pi)*(n-1)), where V(f'') is the total variation
// of the second derivative on the interval. c is the squared bound.
struct NoiseBound {
  double v_f2 = 0.0;
  int n = 0;
  double c = 0.0;
};

// Entry (k,j) of the operator is the coefficient of C_j in d/dtau C_k.
// `size` is the full square dimension, `split` the truncation point N+1.
DiffOperator cheb_diff_operator(int size, int split);

// Affine map of [t0,t1] onto [-1,1].
double map_interval(double t, double t0, double t1);

// Chebyshev-Gauss-Lobatto nodes of degree n mapped to [t0,t1], in the
// canonical order tau_j = cos(pi j / n), j = 0..n (descending tau).
std::vector<double> cgl_nodes(int n, double t0 = -1.0, double t1 = 1.0);

// Fit a series of the given degree to samples (times[k], values.col(k)).
// Samples lying exactly on CGL nodes (either endpoint order) take the
// cosine-transform path; otherwise an overdetermined least-squares fit is
// used. Throws std::invalid_argument on too few samples, samples outside the
// interval, or a rank-deficient fit.
ChebSeries fit_series(const std::vector<double>& times, const MatrixXd& values, int degree,
                      double t0, double t1);

// Clenshaw evaluation. Throws std::domain_error outside [t0,t1].
VectorXd eval_series(const ChebSeries& series, double t);

// Truncated derivative: coeffs * d11 * (2/(t1-t0)). The operator's split must
// equal degree+1.
ChebSeries differentiate_coeffs(const ChebSeries& series, const DiffOperator& op);

// c = (2 v_f2 / (sqrt(pi) (n-1)))^2. Requires n >= 2, v_f2 >= 0.
NoiseBound truncation_noise_bound(double v_f2, int n);

// Total variation of the second derivative of each component, computed from a
// high-degree reference fit as the quadrature of |f'''| over the interval.
VectorXd total_variation_f2(const ChebSeries& reference);

// Convenience: fit a scalar function sampled at the CGL nodes of the interval.
ChebSeries fit_function(const std::function<double(double)>& f, int degree, double t0 = -1.0,
                        double t1 = 1.0);

}  // namespace dcor
