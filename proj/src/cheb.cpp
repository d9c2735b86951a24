#include "dcor/cheb.hpp"

#include <cmath>
#include <stdexcept>

namespace dcor {

DiffOperator cheb_diff_operator(int size, int split) {
  if (size < 2 || split < 2 || split > size)
    throw std::invalid_argument("cheb_diff_operator: need size >= split >= 2");
  DiffOperator op;
  op.full = MatrixXd::Zero(size, size);
  // d/dtau C_k = k C_{k-1}' recurrence in coefficient form: the derivative of
  // C_k has coefficient 2k on every C_j with j = k-1, k-3, ... > 0 and k on C_0.
  for (int k = 1; k < size; ++k)
    for (int j = k - 1; j >= 0; j -= 2) op.full(k, j) = j > 0 ? 2.0 * k : double(k);
  op.split = split;
  return op;
}

double map_interval(double t, double t0, double t1) {
  if (!(t0 < t1)) throw std::invalid_argument("map_interval: need t0 < t1");
  return (2.0 * t - (t1 + t0)) / (t1 - t0);
}

std::vector<double> cgl_nodes(int n, double t0, double t1) {
  if (n < 1) throw std::invalid_argument("cgl_nodes: need n >= 1");
  std::vector<double> ts(n + 1);
  for (int j = 0; j <= n; ++j) {
    const double tau = std::cos(M_PI * j / n);
    ts[j] = 0.5 * ((t1 - t0) * tau + (t1 + t0));
  }
  return ts;
}

namespace {

// Returns j-index permutation if `taus` equals the CGL grid cos(pi j / n) in
// either descending or ascending order; empty vector otherwise.
std::vector<int> match_cgl(const std::vector<double>& taus, int n) {
  const double tol = 1e-9;
  std::vector<int> idx(n + 1);
  bool desc = true, asc = true;
  for (int i = 0; i <= n; ++i) {
    if (std::abs(taus[i] - std::cos(M_PI * i / n)) > tol) desc = false;
    if (std::abs(taus[i] - std::cos(M_PI * (n - i) / n)) > tol) asc = false;
  }
  if (!desc && !asc) return {};
  for (int i = 0; i <= n; ++i) idx[i] = desc ? i : n - i;
  return idx;
}

double clenshaw(const Eigen::Ref<const Eigen::RowVectorXd>& a, double tau) {
  double b1 = 0.0, b2 = 0.0;
  for (int k = static_cast<int>(a.size()) - 1; k >= 1; --k) {
    const double tmp = 2.0 * tau * b1 - b2 + a(k);
    b2 = b1;
    b1 = tmp;
  }
  return tau * b1 - b2 + a(0);
}

}  // namespace

ChebSeries fit_series(const std::vector<double>& times, const MatrixXd& values, int degree,
                      double t0, double t1) {
  const int nsamp = static_cast<int>(times.size());
  if (degree < 1) throw std::invalid_argument("fit_series: need degree >= 1");
  if (nsamp < degree + 1) throw std::invalid_argument("fit_series: fewer samples than coefficients");
  if (values.cols() != nsamp) throw std::invalid_argument("fit_series: times/values size mismatch");
  const double slack = 1e-9 * (t1 - t0);
  std::vector<double> taus(nsamp);
  for (int i = 0; i < nsamp; ++i) {
    if (times[i] < t0 - slack || times[i] > t1 + slack)
      throw std::invalid_argument("fit_series: sample time outside declared interval");
    taus[i] = map_interval(times[i], t0, t1);
  }

  ChebSeries out;
  out.t0 = t0;
  out.t1 = t1;
  const int dim = static_cast<int>(values.rows());
  const int n = degree;

  if (nsamp == n + 1) {
    const std::vector<int> perm = match_cgl(taus, n);
    if (!perm.empty()) {
      // Cosine-transform path: a_k = (2/n) sum'' f(tau_j) cos(pi k j / n),
      // with half weights at both ends, and a_0, a_n halved once more.
      out.coeffs = MatrixXd::Zero(dim, n + 1);
      for (int k = 0; k <= n; ++k) {
        VectorXd acc = VectorXd::Zero(dim);
        for (int j = 0; j <= n; ++j) {
          const double w = (j == 0 || j == n) ? 0.5 : 1.0;
          // values column for node index j (perm maps sample position -> j).
          // perm[i] = node index of sample i, so invert by scanning.
          acc += w * std::cos(M_PI * k * perm[j] / n) * values.col(j);
        }
        out.coeffs.col(k) = (2.0 / n) * acc;
      }
      out.coeffs.col(0) *= 0.5;
      out.coeffs.col(n) *= 0.5;
      return out;
    }
  }

  // Least-squares fit on a Chebyshev-Vandermonde matrix.
  MatrixXd vand(nsamp, n + 1);
  for (int i = 0; i < nsamp; ++i) {
    double tkm1 = 1.0, tk = taus[i];
    vand(i, 0) = 1.0;
    if (n >= 1) vand(i, 1) = tk;
    for (int k = 2; k <= n; ++k) {
      const double tkp1 = 2.0 * taus[i] * tk - tkm1;
      vand(i, k) = tkp1;
      tkm1 = tk;
      tk = tkp1;
    }
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(vand);
  if (qr.rank() < n + 1)
    throw std::invalid_argument("fit_series: rank-deficient fit (collinear sample times)");
  out.coeffs = qr.solve(values.transpose()).transpose();
  return out;
}

VectorXd eval_series(const ChebSeries& series, double t) {
  const double slack = 1e-9 * (series.t1 - series.t0);
  if (t < series.t0 - slack || t > series.t1 + slack)
    throw std::domain_error("eval_series: t outside interval");
  const double tau = map_interval(std::min(std::max(t, series.t0), series.t1), series.t0, series.t1);
  VectorXd out(series.dim());
  for (int i = 0; i < series.dim(); ++i) out(i) = clenshaw(series.coeffs.row(i), tau);
  return out;
}

ChebSeries differentiate_coeffs(const ChebSeries& series, const DiffOperator& op) {
  if (op.split != series.degree() + 1)
    throw std::invalid_argument("differentiate_coeffs: operator split does not match degree");
  ChebSeries out;
  out.t0 = series.t0;
  out.t1 = series.t1;
  out.coeffs = series.coeffs * op.d11() * series.chain_factor();
  return out;
}

NoiseBound truncation_noise_bound(double v_f2, int n) {
  if (n < 2) throw std::invalid_argument("truncation_noise_bound: need n >= 2");
  if (v_f2 < 0) throw std::invalid_argument("truncation_noise_bound: need v_f2 >= 0");
  NoiseBound nb;
  nb.v_f2 = v_f2;
  nb.n = n;
  const double b = 2.0 * v_f2 / (std::sqrt(M_PI) * (n - 1));
  nb.c = b * b;
  return nb;
}

VectorXd total_variation_f2(const ChebSeries& reference) {
  const int np1 = reference.degree() + 1;
  const DiffOperator op = cheb_diff_operator(std::max(2 * np1, 4), np1);
  ChebSeries d3 = reference;
  for (int k = 0; k < 3; ++k) d3 = differentiate_coeffs(d3, op);
  // Composite Simpson quadrature of |f'''| on a uniform grid.
  const int panels = 2000;
  const double h = (reference.t1 - reference.t0) / (2 * panels);
  VectorXd v = VectorXd::Zero(reference.dim());
  for (int i = 0; i <= 2 * panels; ++i) {
    const double t = reference.t0 + i * h;
    const double w = (i == 0 || i == 2 * panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    v += w * eval_series(d3, t).cwiseAbs();
  }
  return v * (h / 3.0);
}

ChebSeries fit_function(const std::function<double(double)>& f, int degree, double t0, double t1) {
  const std::vector<double> ts = cgl_nodes(degree, t0, t1);
  MatrixXd vals(1, degree + 1);
  for (int j = 0; j <= degree; ++j) vals(0, j) = f(ts[j]);
  return fit_series(ts, vals, degree, t0, t1);
}

}  // namespace dcor
