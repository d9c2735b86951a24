#include "dcor/synthesis.hpp"

#include "dcor/linalg.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dcor {

namespace {

void check_data(const AgentData& d) {
  if (d.u.cols() != d.x.cols() || d.err.cols() != d.x.cols() || d.exo.cols() != d.x.cols())
    throw std::invalid_argument("agent data: coefficient column counts differ");
  if (d.e_mat.rows() != d.n() || d.e_mat.cols() != d.q())
    throw std::invalid_argument("agent data: E dimension mismatch");
  if (d.f_mat.rows() != d.p() || d.f_mat.cols() != d.q())
    throw std::invalid_argument("agent data: F dimension mismatch");
  if (d.noise_c && *d.noise_c < 0) throw std::invalid_argument("agent data: negative noise c");
}

MatrixXd kron_id(int q, const MatrixXd& a) {
  return Eigen::kroneckerProduct(MatrixXd::Identity(q, q), a);
}

// Interior starting iterate for the exact-data gain LMI. With [X; U] of full
// row rank the data admit exactly one consistent pair [A B] = G [X; U]^+;
// solving the decay-shifted Riccati equation via the stable invariant
// subspace of its Hamiltonian gives P > 0 with K = -B' P, and
// theta = [X; U]^+ [Q; K Q] (Q = P^{-1}, rescaled) satisfies both LMI blocks
// strictly. Alternating projections from a generic start can stall on thin
// feasible sets; from this point they terminate almost immediately. Returns
// an empty matrix when the subspace splitting fails (shifted pair not
// stabilizable, or data not full row rank so the identification is only a
// least-squares proxy); the caller then keeps the generic start, and the
// certificate acceptance test is unchanged either way.
MatrixXd interior_start_theta(const MatrixXd& psi, const MatrixXd& g, int n, double decay,
                              double margin) {
  const MatrixXd psi_pinv = pinv(psi);
  const MatrixXd ab = g * psi_pinv;
  const MatrixXd a_sh = ab.leftCols(n) + decay * MatrixXd::Identity(n, n);
  const MatrixXd b = ab.rightCols(ab.cols() - n);

  MatrixXd ham(2 * n, 2 * n);
  ham << a_sh, -b * b.transpose(), -MatrixXd::Identity(n, n), -a_sh.transpose();
  Eigen::EigenSolver<MatrixXd> es(ham);
  MatrixXcd stable(2 * n, n);
  int count = 0;
  for (int i = 0; i < 2 * n; ++i) {
    if (es.eigenvalues()(i).real() >= 0.0) continue;
    if (count == n) return MatrixXd();
    stable.col(count++) = es.eigenvectors().col(i);
  }
  if (count != n) return MatrixXd();
  Eigen::FullPivLU<MatrixXcd> lu(stable.topRows(n));
  if (!lu.isInvertible()) return MatrixXd();
  const MatrixXd p = sym((stable.bottomRows(n) * lu.inverse()).real());
  Eigen::SelfAdjointEigenSolver<MatrixXd> pe(p);
  if (pe.eigenvalues().minCoeff() <= 0.0) return MatrixXd();
  MatrixXd q = sym(p.inverse());
  const double lmin = Eigen::SelfAdjointEigenSolver<MatrixXd>(q).eigenvalues().minCoeff();
  if (!(lmin > 0.0)) return MatrixXd();
  q *= (1.0 + 2.0 * margin) / lmin;  // clears X theta >= (1 + margin) I strictly
  MatrixXd stacked(psi.rows(), n);
  stacked << q, MatrixXd(-b.transpose() * p * q);
  return psi_pinv * stacked;
}

}  // namespace

ExoSpec make_exo_spec(const MatrixXd& s) {
  if (s.rows() != s.cols()) throw std::invalid_argument("exosystem matrix must be square");
  ExoSpec exo;
  exo.s = s;
  Eigen::EigenSolver<MatrixXd> es(s, false);
  exo.spectrum = es.eigenvalues();
  return exo;
}

DataOps make_data_ops(const AgentData& data, const DiffOperator& diff) {
  check_data(data);
  if (diff.split != data.cols())
    throw std::invalid_argument("make_data_ops: operator split does not match data degree");
  const double chain = 2.0 / (data.t1 - data.t0);
  DataOps ops;
  ops.g = data.x * diff.d11() * chain - data.e_mat * data.exo;
  ops.errv = data.err - data.f_mat * data.exo;
  ops.psi.resize(data.n() + data.m(), data.cols());
  ops.psi << data.x, data.u;
  ops.proj = pinv(ops.psi) * ops.psi;
  return ops;
}

StabilizabilityReport stabilizability_check(const AgentData& data, const DiffOperator& diff) {
  const DataOps ops = make_data_ops(data, diff);
  StabilizabilityReport rep;
  rep.full_row_rank = numerical_rank(data.x) == data.n();
  rep.x_pinv = pinv(data.x);
  rep.max_re = max_real_eig(ops.g * rep.x_pinv);
  rep.ok = rep.full_row_rank && rep.max_re < 0.0;
  return rep;
}

K1ExactResult synthesize_k1_exact(const AgentData& data, const DiffOperator& diff,
                                  const K1ExactOptions& opts) {
  const DataOps ops = make_data_ops(data, diff);
  const int n = data.n(), np1 = data.cols();
  K1ExactResult res;
  if (numerical_rank(data.x, opts.rank_rtol) < n) return res;  // not informative

  // Work inside the row space of [X; U]: components of theta orthogonal to
  // it add only round-off to X theta / U theta / G theta but can carry
  // arbitrary norm, amplifying coefficient-tail noise into the extracted
  // gain. The feasible image is unchanged since G's rows lie in that space.
  MatrixXd psi(data.n() + data.m(), np1);
  psi << data.x, data.u;
  const MatrixXd rbasis = row_space_basis(psi);  // np1 x r, theta = rbasis * w
  const int r = static_cast<int>(rbasis.cols());
  const MatrixXd xr = data.x * rbasis;
  const MatrixXd gr = ops.g * rbasis;

  // Restrict w (r x n) to the subspace where X*theta is symmetric.
  const int nskew = n * (n - 1) / 2;
  MatrixXd skew_map = MatrixXd::Zero(std::max(nskew, 1), r * n);
  {
    int row = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++row)
        for (int l = 0; l < r; ++l) {
          skew_map(row, l + j * r) += xr(i, l);
          skew_map(row, l + i * r) -= xr(j, l);
        }
  }
  const MatrixXd basis = nskew > 0 ? null_space(skew_map) : MatrixXd::Identity(r * n, r * n);
  const int nfree = static_cast<int>(basis.cols());

  auto build = [&](double decay) {
    LMIBuilder builder;
    std::vector<std::pair<int, MatrixXd>> pos_terms, stab_terms;
    for (int k = 0; k < nfree; ++k) {
      const MatrixXd w = unvec(basis.col(k), r, n);
      const MatrixXd xth = sym(xr * w);
      pos_terms.emplace_back(k, xth);
      stab_terms.emplace_back(k, MatrixXd(-2.0 * sym(gr * w) - 2.0 * decay * xth));
    }
    builder.add_block(-MatrixXd::Identity(n, n), pos_terms);
    builder.add_block(MatrixXd::Zero(n, n), stab_terms);
    AffineLMI lmi = builder.finish(nfree, LMISense::psd_strict, opts.margin);
    const MatrixXd th0 = interior_start_theta(psi, ops.g, n, decay, opts.margin);
    lmi.initial = basis.transpose() *
                  vec(rbasis.transpose() * (th0.size() ? th0 : MatrixXd(pinv(data.x))));
    return lmi;
  };

  double decay = opts.decay_rate;
  AffineLMI lmi = build(decay);
  LMICertificate cert = solve_feasibility(lmi, opts.max_iter, opts.tol);
  if (cert.status != LMIStatus::feasible && decay > 0.0) {
    decay = 0.0;
    lmi = build(decay);
    cert = solve_feasibility(lmi, opts.max_iter, opts.tol);
  }
  res.cert = cert;
  res.decay_used = decay;
  if (cert.status != LMIStatus::feasible) return res;

  res.theta = rbasis * unvec(basis * cert.z, r, n);
  const MatrixXd xth = data.x * res.theta;
  const MatrixXd xth_inv = xth.inverse();
  res.k1 = data.u * res.theta * xth_inv;
  res.closed_loop_max_re = max_real_eig(ops.g * res.theta * xth_inv);
  res.ok = res.closed_loop_max_re < 0.0;
  return res;
}

TransmissionZeroReport transmission_zero_check(const AgentData& data, const ExoSpec& exo,
                                               const DiffOperator& diff, double rank_rtol) {
  const DataOps ops = make_data_ops(data, diff);
  TransmissionZeroReport rep;
  rep.required = data.n() + data.p();
  std::vector<std::complex<double>> tested;
  rep.ok = true;
  for (Eigen::Index i = 0; i < exo.spectrum.size(); ++i) {
    std::complex<double> lam = exo.spectrum(i);
    if (lam.imag() < 0) lam = std::conj(lam);  // conjugate pairs tested once
    bool dup = false;
    for (const auto& t : tested)
      if (std::abs(t - lam) < 1e-9) dup = true;
    if (dup) continue;
    tested.push_back(lam);
    MatrixXcd stack(data.n() + data.p(), data.cols());
    stack.topRows(data.n()) = ops.g.cast<std::complex<double>>() - lam * data.x.cast<std::complex<double>>();
    stack.bottomRows(data.p()) = ops.errv.cast<std::complex<double>>();
    const int r = numerical_rank(stack, rank_rtol);
    rep.ranks.emplace_back(lam, r);
    if (r != rep.required) rep.ok = false;
  }
  return rep;
}

RegulatorDataSolution solve_regulator_data(const AgentData& data, const ExoSpec& exo,
                                           const DiffOperator& diff, double tol) {
  const DataOps ops = make_data_ops(data, diff);
  const int q = data.q(), np1 = data.cols();
  MatrixXd top = kron_id(q, ops.g) -
                 Eigen::kroneckerProduct(exo.s.transpose(), data.x);
  MatrixXd bot = kron_id(q, ops.errv);
  MatrixXd lhs(top.rows() + bot.rows(), np1 * q);
  lhs << top, bot;
  VectorXd rhs(lhs.rows());
  rhs << vec(MatrixXd(-data.e_mat)), vec(MatrixXd(-data.f_mat));
  VectorXd sol = lhs.completeOrthogonalDecomposition().solve(rhs);
  RegulatorDataSolution out;
  out.m = unvec(sol, np1, q);
  out.pi = data.x * out.m;
  out.gamma = data.u * out.m;
  out.residual = (lhs * sol - rhs).norm();
  out.ok = out.residual <= tol;
  return out;
}

MatrixXd synthesize_k2(const AgentData& data, const MatrixXd& k1, const MatrixXd& m) {
  if (k1.rows() != data.m() || k1.cols() != data.n())
    throw std::invalid_argument("synthesize_k2: K1 dimension mismatch");
  if (m.rows() != data.cols()) throw std::invalid_argument("synthesize_k2: M dimension mismatch");
  return (data.u - k1 * data.x) * m;
}

OutputSyncSolution output_sync_regulator(const AgentData& follower, const ChebSeries& leader_x,
                                         const ChebSeries& leader_y, const DiffOperator& diff,
                                         double tol) {
  OutputSyncSolution out;
  const int n0 = leader_x.dim(), np1 = follower.cols();
  if (leader_x.coeffs.cols() != np1 || leader_y.coeffs.cols() != np1)
    throw std::invalid_argument("output_sync_regulator: leader data column mismatch");
  if (numerical_rank(leader_x.coeffs) < n0) return out;  // leader not identifiable
  const double chain_f = 2.0 / (follower.t1 - follower.t0);
  const double chain_l = leader_x.chain_factor();
  const MatrixXd x0_pinv = pinv(leader_x.coeffs);
  const MatrixXd s_hat = leader_x.coeffs * diff.d11() * chain_l * x0_pinv;
  const MatrixXd g = follower.x * diff.d11() * chain_f;  // disturbance-free variant
  MatrixXd top = kron_id(n0, g) - Eigen::kroneckerProduct(s_hat.transpose(), follower.x);
  MatrixXd bot = kron_id(n0, MatrixXd(follower.err));
  MatrixXd lhs(top.rows() + bot.rows(), np1 * n0);
  lhs << top, bot;
  VectorXd rhs(lhs.rows());
  rhs << VectorXd::Zero(top.rows()), vec(MatrixXd(leader_y.coeffs * x0_pinv));
  VectorXd sol = lhs.completeOrthogonalDecomposition().solve(rhs);
  out.m = unvec(sol, np1, n0);
  out.residual = (lhs * sol - rhs).norm();
  out.ok = out.residual <= tol;
  return out;
}

NoiseQuadratic build_noise_quadratic(const AgentData& data, const DiffOperator& diff) {
  if (!data.noise_c) throw std::invalid_argument("build_noise_quadratic: noise level c missing");
  const DataOps ops = make_data_ops(data, diff);
  const int n = data.n(), m = data.m();
  NoiseQuadratic nq;
  nq.n = n;
  nq.m = m;
  nq.n_mat.resize(2 * n + m, 2 * n + m);
  const MatrixXd n11 = *data.noise_c * MatrixXd::Identity(n, n) - ops.g * ops.g.transpose();
  const MatrixXd n12 = ops.g * ops.psi.transpose();
  const MatrixXd n22 = -ops.psi * ops.psi.transpose();
  nq.n_mat << n11, n12, n12.transpose(), n22;
  // kernel(N22) must sit inside kernel(N12).
  const MatrixXd null22 = null_space(MatrixXd(-n22));
  nq.kernel_ok = true;
  const double scale = std::max(n12.cwiseAbs().maxCoeff(), 1.0);
  for (Eigen::Index k = 0; k < null22.cols(); ++k)
    if ((n12 * null22.col(k)).norm() > 1e-8 * scale) nq.kernel_ok = false;
  return nq;
}

K1NoisyResult synthesize_k1_noisy(const NoiseQuadratic& nq, const K1NoisyOptions& opts) {
  const int n = nq.n, m = nq.m;
  const int np = n * (n + 1) / 2;
  const int n_vars = np + m * n + 1;  // P (sym), J, beta
  const int sz = 2 * n + m;

  auto p_index = [&](int i, int j) {  // i <= j
    int idx = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b, ++idx)
        if (a == i && b == j) return idx;
    throw std::logic_error("p_index");
  };

  LMIBuilder builder;
  // Block 1: L(P, J, beta) - N >= 0 with alpha pinned to 1.
  {
    std::vector<std::pair<int, MatrixXd>> terms;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        MatrixXd t = MatrixXd::Zero(sz, sz);
        t(i, n + j) = t(n + j, i) = -1.0;
        if (i != j) {
          t(j, n + i) = t(n + i, j) = -1.0;
        }
        terms.emplace_back(p_index(i, j), t);
      }
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) {
        MatrixXd t = MatrixXd::Zero(sz, sz);
        t(c, 2 * n + r) = t(2 * n + r, c) = -1.0;
        terms.emplace_back(np + r + c * m, t);
      }
    {
      MatrixXd t = MatrixXd::Zero(sz, sz);
      t.topLeftCorner(n, n) = -MatrixXd::Identity(n, n);
      terms.emplace_back(np + m * n, t);
    }
    builder.add_block(-nq.n_mat, terms);
  }
  // Block 2: P - p_floor I >= 0.
  {
    std::vector<std::pair<int, MatrixXd>> terms;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        MatrixXd t = MatrixXd::Zero(n, n);
        t(i, j) = t(j, i) = 1.0;
        terms.emplace_back(p_index(i, j), t);
      }
    builder.add_block(MatrixXd(-opts.p_floor * MatrixXd::Identity(n, n)), terms);
  }
  // Block 3: beta - beta_floor >= 0.
  {
    MatrixXd t = MatrixXd::Ones(1, 1);
    builder.add_block(MatrixXd(-opts.beta_floor * MatrixXd::Ones(1, 1)), {{np + m * n, t}});
  }

  AffineLMI lmi = builder.finish(n_vars, LMISense::psd, 0.0);
  VectorXd z0 = VectorXd::Zero(n_vars);
  for (int i = 0; i < n; ++i) z0(p_index(i, i)) = 1.0;  // P = I
  z0(np + m * n) = opts.beta_floor;
  lmi.initial = z0;

  K1NoisyResult res;
  res.cert = solve_feasibility(lmi, opts.max_iter, opts.tol);
  res.alpha = 1.0;
  MatrixXd p(n, n);
  {
    int idx = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b, ++idx) p(a, b) = p(b, a) = res.cert.z(idx);
  }
  MatrixXd j(m, n);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) j(r, c) = res.cert.z(np + r + c * m);
  res.p = p;
  res.beta = res.cert.z(n_vars - 1);
  if (res.cert.status == LMIStatus::feasible) {
    res.k1 = j * p.inverse();
    res.ok = true;
  }
  if (opts.slater_system) {
    const auto& [a, b] = *opts.slater_system;
    MatrixXd iab(a.rows(), 2 * n + m);
    iab << MatrixXd::Identity(a.rows(), a.rows()), a, b;
    res.slater_ok = min_eig_sym(iab * nq.n_mat * iab.transpose()) > 0.0;
  }
  return res;
}

OmegaBound omega_bound(const AgentData& data, const MatrixXd& m, const ExoSpec& exo,
                       const DiffOperator& diff) {
  const DataOps ops = make_data_ops(data, diff);
  const double sc = data.noise_c ? std::sqrt(*data.noise_c) : 0.0;
  const MatrixXd r1 = ops.g * ops.proj * m + data.e_mat - data.x * m * exo.s;
  const MatrixXd r2 = ops.proj * m;
  OmegaBound out;
  out.spectral = spectral_norm(r1) + sc * spectral_norm(r2);
  out.frobenius = r1.norm() + sc * r2.norm();
  return out;
}

ApproxRegulatorResult approx_regulator_noisy(const AgentData& data, const ExoSpec& exo,
                                             const DiffOperator& diff,
                                             const ApproxRegulatorOptions& opts) {
  const DataOps ops = make_data_ops(data, diff);
  const int n = data.n(), q = data.q(), np1 = data.cols();
  ApproxRegulatorResult res;
  if (numerical_rank(ops.psi) < data.n() + data.m()) return res;  // rank hypothesis fails
  const double c = data.noise_c.value_or(0.0);
  const double sc = std::sqrt(c);

  const MatrixXd a1 = kron_id(q, MatrixXd(ops.g * ops.proj)) -
                      Eigen::kroneckerProduct(exo.s.transpose(), data.x);
  const MatrixXd a2 = kron_id(q, ops.proj);
  const VectorXd ce = vec(data.e_mat);
  const MatrixXd aeq = kron_id(q, ops.errv);
  const VectorXd beq = vec(MatrixXd(-data.f_mat));
  const MatrixXd aeq_pinv = pinv(aeq);
  // Constraint consistency.
  if ((aeq * (aeq_pinv * beq) - beq).cwiseAbs().maxCoeff() > opts.eq_tol) return res;

  auto restore_eq = [&](const VectorXd& mv) {
    return VectorXd(mv + aeq_pinv * (beq - aeq * mv));
  };
  auto report_at = [&](const VectorXd& mv) {
    return omega_bound(data, unvec(mv, np1, q), exo, diff).spectral;
  };

  // Stage 1: equality-constrained least squares on the squared surrogate.
  const int nv = np1 * q;
  VectorXd best_m;
  {
    MatrixXd h = a1.transpose() * a1 + sc * (a2.transpose() * a2);
    MatrixXd kkt(nv + aeq.rows(), nv + aeq.rows());
    kkt << h, aeq.transpose(), aeq, MatrixXd::Zero(aeq.rows(), aeq.rows());
    VectorXd rhs(nv + aeq.rows());
    rhs << VectorXd(-a1.transpose() * ce), beq;
    best_m = restore_eq(kkt.completeOrthogonalDecomposition().solve(rhs).head(nv));
  }
  double best = report_at(best_m);

  // Stage 2: iteratively reweighted refinement of the Frobenius-norm sum.
  {
    double w1 = 1.0, w2 = sc;
    VectorXd mv = best_m;
    for (int it = 0; it < opts.irls_iters; ++it) {
      MatrixXd h = w1 * (a1.transpose() * a1) + w2 * (a2.transpose() * a2);
      MatrixXd kkt(nv + aeq.rows(), nv + aeq.rows());
      kkt << h, aeq.transpose(), aeq, MatrixXd::Zero(aeq.rows(), aeq.rows());
      VectorXd rhs(nv + aeq.rows());
      rhs << VectorXd(-w1 * (a1.transpose() * ce)), beq;
      mv = restore_eq(kkt.completeOrthogonalDecomposition().solve(rhs).head(nv));
      const double r1 = std::max((a1 * mv + ce).norm(), 1e-12);
      const double r2 = std::max((a2 * mv).norm(), 1e-12);
      w1 = 1.0 / r1;
      w2 = sc / r2;
      const double rep = report_at(mv);
      if (rep < best) {
        best = rep;
        best_m = mv;
      }
    }
  }

  // Stage 3: bisection on the 2-norm objective level; each level is one
  // feasibility problem over (M, t1, t2) with the norm-bound blocks
  // [[t I, R],[R', t I]] >= 0 and t1 + sqrt(c) t2 <= s.
  if (sc > 0.0) {
    const VectorXd mpart = aeq_pinv * beq;
    const MatrixXd bnull = null_space(aeq);
    const int nfree = static_cast<int>(bnull.cols());
    const int vt1 = nfree, vt2 = nfree + 1;
    double lo = 0.0, hi = best;
    for (int step = 0; step < opts.bisect_steps && hi - lo > 1e-5 * (1.0 + hi); ++step) {
      const double s = 0.5 * (lo + hi);
      LMIBuilder builder;
      {
        std::vector<std::pair<int, MatrixXd>> terms;
        MatrixXd c1 = MatrixXd::Zero(n + q, n + q);
        const MatrixXd r1p = unvec(a1 * mpart + ce, n, q);
        c1.topRightCorner(n, q) = r1p;
        c1.bottomLeftCorner(q, n) = r1p.transpose();
        for (int k = 0; k < nfree; ++k) {
          MatrixXd t = MatrixXd::Zero(n + q, n + q);
          const MatrixXd rk = unvec(a1 * bnull.col(k), n, q);
          t.topRightCorner(n, q) = rk;
          t.bottomLeftCorner(q, n) = rk.transpose();
          terms.emplace_back(k, t);
        }
        terms.emplace_back(vt1, MatrixXd(MatrixXd::Identity(n + q, n + q)));
        builder.add_block(c1, terms);
      }
      {
        std::vector<std::pair<int, MatrixXd>> terms;
        MatrixXd c2 = MatrixXd::Zero(np1 + q, np1 + q);
        const MatrixXd r2p = unvec(a2 * mpart, np1, q);
        c2.topRightCorner(np1, q) = r2p;
        c2.bottomLeftCorner(q, np1) = r2p.transpose();
        for (int k = 0; k < nfree; ++k) {
          MatrixXd t = MatrixXd::Zero(np1 + q, np1 + q);
          const MatrixXd rk = unvec(a2 * bnull.col(k), np1, q);
          t.topRightCorner(np1, q) = rk;
          t.bottomLeftCorner(q, np1) = rk.transpose();
          terms.emplace_back(k, t);
        }
        terms.emplace_back(vt2, MatrixXd(MatrixXd::Identity(np1 + q, np1 + q)));
        builder.add_block(c2, terms);
      }
      builder.add_block(MatrixXd(s * MatrixXd::Ones(1, 1)),
                        {{vt1, MatrixXd(-MatrixXd::Ones(1, 1))},
                         {vt2, MatrixXd(-sc * MatrixXd::Ones(1, 1))}});
      AffineLMI lmi = builder.finish(nfree + 2, LMISense::psd, 0.0);
      VectorXd z0(nfree + 2);
      z0.head(nfree) = bnull.transpose() * (best_m - mpart);
      const OmegaBound ob = omega_bound(data, unvec(best_m, np1, q), exo, diff);
      z0(vt1) = ob.spectral;  // generous start, trimmed by the projections
      z0(vt2) = ob.spectral;
      lmi.initial = z0;
      const LMICertificate cert = solve_feasibility(lmi, opts.ap_iters, opts.tol);
      const VectorXd cand = restore_eq(mpart + bnull * cert.z.head(nfree));
      const double rep = report_at(cand);
      if (rep < best) {
        best = rep;
        best_m = cand;
      }
      if (rep <= s + 1e-8)
        hi = s;
      else
        lo = s;
    }
  }

  res.m = unvec(best_m, np1, q);
  res.pi = data.x * res.m;
  res.gamma = data.u * res.m;
  const OmegaBound ob = omega_bound(data, res.m, exo, diff);
  res.omega_spectral = ob.spectral;
  res.omega_frobenius = ob.frobenius;
  res.eq_residual = (aeq * best_m - beq).norm();
  res.ok = res.eq_residual <= opts.eq_tol && std::isfinite(best);
  return res;
}

std::vector<std::pair<MatrixXd, MatrixXd>> sample_consistency_set(const AgentData& data,
                                                                  const DiffOperator& diff,
                                                                  int count, double rho,
                                                                  unsigned seed) {
  if (!(rho >= 0.0 && rho < 1.0))
    throw std::invalid_argument("sample_consistency_set: need 0 <= rho < 1");
  const DataOps ops = make_data_ops(data, diff);
  const int n = data.n(), m = data.m(), np1 = data.cols();
  const double c = data.noise_c.value_or(0.0);
  const MatrixXd psi_pinv = pinv(ops.psi);
  const MatrixXd base = ops.g * psi_pinv;  // least-squares [A B]
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::pair<MatrixXd, MatrixXd>> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    MatrixXd t(n, np1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < np1; ++j) t(i, j) = gauss(rng);
    MatrixXd delta = t * psi_pinv;
    const double norm_dir = spectral_norm(delta * ops.psi);
    const double radius = rho * std::sqrt(c) * (count > 1 ? double(k) / (count - 1) : 1.0);
    if (norm_dir > 0) delta *= radius / norm_dir;
    const MatrixXd ab = base + delta;
    out.emplace_back(ab.leftCols(n), ab.rightCols(m));
  }
  return out;
}

}  // namespace dcor
