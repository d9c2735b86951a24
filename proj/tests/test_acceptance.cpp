// Acceptance harness: one line per criterion, PASS/FAIL with the measured
// values, the pinned limits, and the wall-clock runtime. Exit code is the
// number of failed criteria.

#include "dcor/cheb.hpp"
#include "dcor/graph.hpp"
#include "dcor/linalg.hpp"
#include "dcor/pipeline.hpp"
#include "dcor/scenario.hpp"
#include "dcor/sim.hpp"
#include "dcor/synthesis.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace dcor;

namespace {

const std::string kScenarioDir = std::string(DCOR_SOURCE_DIR) + "/scenarios";

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Check {
  bool ok = true;
  std::ostringstream out;

  template <typename T>
  Check& operator<<(const T& v) {
    out << v;
    return *this;
  }
  void require(bool cond) { ok = ok && cond; }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------- criterion 1
Outcome criterion_graph_bounds() {
  Check c;
  const double direct = lambda_min_lower_bound(5.0, 12.0, 4);
  const double comb = lambda_min_lower_bound_combinatorial(5.0, 12.0, 4);
  c.require(std::abs(direct - 0.0113) <= 5e-4);
  c.require(std::abs(comb - 0.0020) <= 5e-4);

  GraphSpec g;
  g.n_followers = 4;
  g.eps1 = 5.0;
  g.eps2 = 12.0;
  g.adjacency = MatrixXd::Zero(5, 5);
  g.adjacency(1, 0) = 5.0;
  g.adjacency(1, 4) = 7.0;
  g.adjacency(2, 1) = 5.0;
  g.adjacency(2, 4) = 5.0;
  g.adjacency(3, 2) = 5.0;
  g.adjacency(3, 4) = 5.0;
  g.adjacency(4, 1) = 5.0;
  const double min_re = min_real_eig(build_laplacian(g).h);
  c.require(std::abs(min_re - 1.6261) <= 1e-3);
  c << "direct=" << fmt(direct) << " (target 0.0113±5e-4), comb=" << fmt(comb)
    << " (target 0.0020±5e-4), min_re_lambda_h=" << fmt(min_re) << " (target 1.6261±1e-3)";
  return {c.ok, c.out.str()};
}

// ---------------------------------------------------------------- criterion 2
Outcome criterion_mu_selection() {
  Check c;
  const double bound = lambda_min_lower_bound(2.0, 4.0, 4);
  c.require(bound == 16.0 / 2048.0);  // dyadic, must be bit-exact
  c.require(1.0 / bound == 128.0);
  const double mu = coupling_gain_mu(1.0, bound, 1.05);
  c.require(std::abs(mu - 134.4) <= 1e-12);

  const GraphSpec g1 = load_graph(kScenarioDir + "/graph_g1.json");
  const LaplacianParts parts = build_laplacian(g1);
  const MatrixXd s = MatrixXd::Identity(2, 2);
  const MatrixXd err_dyn =
      Eigen::kroneckerProduct(MatrixXd::Identity(4, 4), s) -
      mu * Eigen::kroneckerProduct(parts.h, MatrixXd::Identity(2, 2));
  const double abscissa = max_real_eig(err_dyn);
  c.require(abscissa < 0.0);
  c << "1/bound=" << fmt(1.0 / bound) << " (=128 exact), mu=" << fmt(mu)
    << ", observer error abscissa=" << fmt(abscissa) << " (<0)";
  return {c.ok, c.out.str()};
}

// ---------------------------------------------------------------- criterion 3
Outcome criterion_coefficient_table() {
  Check c;
  const ChebSeries series = fit_function([](double t) { return std::exp(-t); }, 15);
  // Printed reference column; entry k=5 appears with a positive sign in the
  // printed table but the expansion of e^{-t} alternates, so the magnitude is
  // compared against the sign-corrected value.
  const double expected[8] = {1.26, -1.13, 2.72e-1, -4.43e-2, 5.5e-3, -5.43e-4, 4.50e-5, -3.20e-6};
  const double ulp[8] = {1e-2, 1e-2, 1e-3, 1e-4, 1e-4, 1e-6, 1e-7, 1e-8};
  double worst = 0.0;
  int worst_k = 0;
  for (int k = 0; k < 8; ++k) {
    const double diff = std::abs(series.coeffs(0, k) - expected[k]);
    if (diff / ulp[k] > worst) {
      worst = diff / ulp[k];
      worst_k = k;
    }
    c.require(diff <= ulp[k]);
  }
  c << "first 8 coefficients within one printed-digit ulp each (worst entry k=" << worst_k
    << " at " << fmt(worst) << " ulp; k=5 sign-corrected to " << fmt(expected[5]) << ")";
  return {c.ok, c.out.str()};
}

// ---------------------------------------------------------------- criterion 4
Outcome criterion_gain_reproduction() {
  Check c;
  Scenario injected = load_scenario(kScenarioDir + "/four_follower_exact.json");
  MatrixXd k1a(1, 2), k1b(1, 2);
  k1a << -1.0, -0.5;
  k1b << -0.5, -2.0;
  injected.k1_override = {k1a, k1a, k1b, k1b};
  const PipelineReport rep_inj = run_pipeline(injected);
  c.require(rep_inj.status == "ok");
  MatrixXd k2a(1, 2), k2b(1, 2);
  k2a << 1.0, -1.0;
  k2b << 2.5, 0.0;
  double worst = 0.0;
  if (rep_inj.status == "ok")
    for (int i = 0; i < 4; ++i) {
      const MatrixXd& expect = i < 2 ? k2a : k2b;
      worst = std::max(worst, (rep_inj.gains.k2[static_cast<size_t>(i)] - expect)
                                  .cwiseAbs()
                                  .maxCoeff());
    }
  c.require(worst <= 1e-6);

  const Scenario plain = load_scenario(kScenarioDir + "/four_follower_exact.json");
  const PipelineReport rep = run_pipeline(plain);
  c.require(rep.status == "ok");
  double max_re = -1e300;
  if (rep.status == "ok")
    for (size_t i = 0; i < rep.gains.k1.size(); ++i) {
      const PlantModel& pl = plain.plants[i].model;
      max_re = std::max(max_re, max_real_eig(MatrixXd(pl.a + pl.b * rep.gains.k1[i])));
    }
  c.require(max_re < 0.0);
  c << "injected K2 max deviation=" << fmt(worst)
    << " (<=1e-6), synthesized closed-loop max Re=" << fmt(max_re) << " (<0)";
  return {c.ok, c.out.str()};
}

// ---------------------------------------------------------------- criterion 5
Outcome criterion_transmission_zero() {
  Check c;
  const Scenario s = load_scenario(kScenarioDir + "/four_follower_exact.json");
  std::vector<PlantModel> models;
  std::vector<VectorXd> x0;
  for (const auto& pl : s.plants) {
    models.push_back(pl.model);
    x0.push_back(pl.x0);
  }
  const InputFn input = [&s](int agent, double t) {
    return s.plants[static_cast<size_t>(agent)].input.eval(t);
  };
  const SimResult res = simulate_open_loop(models, s.exo, input, x0, s.v0, s.window0,
                                           s.window1, s.step, s.anchor);
  const auto data = collect_data(res, s.degree, s.window0, s.window1);
  const DiffOperator diff = cheb_diff_operator(s.degree + 1, s.degree + 1);
  bool all_ok = true;
  int data_rank = -1, model_rank = -1;
  for (size_t i = 0; i < data.size(); ++i) {
    const TransmissionZeroReport rep = transmission_zero_check(data[i], s.exo, diff);
    all_ok = all_ok && rep.ok && rep.required == 3;
    for (const auto& [lambda, rank] : rep.ranks) {
      data_rank = rank;
      // model-based pencil at the same eigenvalue
      const PlantModel& pl = models[i];
      Eigen::MatrixXcd pencil(pl.n() + pl.p(), pl.n() + pl.m());
      pencil.setZero();
      pencil.topLeftCorner(pl.n(), pl.n()) =
          pl.a.cast<std::complex<double>>() -
          lambda * Eigen::MatrixXcd::Identity(pl.n(), pl.n());
      pencil.topRightCorner(pl.n(), pl.m()) = pl.b.cast<std::complex<double>>();
      pencil.bottomLeftCorner(pl.p(), pl.n()) = pl.c.cast<std::complex<double>>();
      pencil.bottomRightCorner(pl.p(), pl.m()) = pl.d.cast<std::complex<double>>();
      model_rank = numerical_rank(Eigen::MatrixXcd(pencil));
      all_ok = all_ok && rank == model_rank;
    }
  }
  c.require(all_ok);
  c << "all four agents: data rank=" << data_rank << ", model rank=" << model_rank
    << ", required=3";
  return {c.ok, c.out.str()};
}

// ---------------------------------------------------------------- criterion 6
Outcome criterion_closed_loop_regulation() {
  Check c;
  const Scenario s = load_scenario(kScenarioDir + "/four_follower_exact.json");
  const PipelineReport rep = run_pipeline(s);
  c.require(rep.status == "ok");
  c.require(rep.verified);
  double worst = 1e300;
  if (rep.verified) {
    worst = rep.tail.per_agent.maxCoeff();
    for (Eigen::Index i = 0; i < rep.tail.per_agent.size(); ++i)
      c.require(rep.tail.per_agent(i) < 1e-2);
  }
  c << "tail sup per agent max=" << fmt(worst) << " over t>=" << fmt(rep.tail_window_start)
    << " (<1e-2, includes the topology switch at t=10)";
  return {c.ok, c.out.str()};
}

// ---------------------------------------------------------------- criterion 7
Outcome criterion_noisy_case() {
  Check c;
  const Scenario s = load_scenario(kScenarioDir + "/four_follower_noisy.json");
  const PipelineReport rep = run_pipeline(s);
  c.require(rep.status == "ok");
  double omega1 = 1e300, omega3 = 1e300, gamma_base = 1e300;
  if (rep.status == "ok") {
    omega1 = rep.agents[0].omega_bound;
    omega3 = rep.agents[2].omega_bound;
    gamma_base = rep.tail.sup_tail;
  }
  c.require(omega1 <= 1.57);
  c.require(omega3 <= 1.19);
  c.require(std::isfinite(gamma_base));

  // Doubling the encoding degree shrinks the truncation-noise level by
  // (14/29)^2 and must shrink the empirical tail error strictly.
  Scenario doubled = s;
  doubled.degree = 30;
  const double shrink = (14.0 / 29.0) * (14.0 / 29.0);
  for (double& cval : doubled.noise_c) cval *= shrink;
  const PipelineReport rep2 = run_pipeline(doubled);
  c.require(rep2.status == "ok");
  const double gamma_doubled = rep2.status == "ok" ? rep2.tail.sup_tail : 1e300;
  c.require(gamma_doubled < gamma_base);

  // Soundness of the synthesized gains over sampled members of the noisy
  // consistency set (50 systems per distinct agent kind).
  std::vector<PlantModel> models;
  std::vector<VectorXd> x0;
  for (const auto& pl : s.plants) {
    models.push_back(pl.model);
    x0.push_back(pl.x0);
  }
  const InputFn input = [&s](int agent, double t) {
    return s.plants[static_cast<size_t>(agent)].input.eval(t);
  };
  const SimResult sim = simulate_open_loop(models, s.exo, input, x0, s.v0, s.window0,
                                           s.window1, s.step, s.anchor);
  auto data = collect_data(sim, s.degree, s.window0, s.window1);
  const DiffOperator diff = cheb_diff_operator(s.degree + 1, s.degree + 1);
  int unstable_samples = 0;
  if (rep.status == "ok")
    for (size_t i = 0; i < data.size(); ++i) {
      data[i].noise_c = s.noise_c[i];
      for (const auto& [a, b] : sample_consistency_set(data[i], diff, 50, 0.9, 13)) {
        if (!is_hurwitz(MatrixXd(a + b * rep.gains.k1[i]))) ++unstable_samples;
      }
    }
  c.require(unstable_samples == 0);
  c << "omega1=" << fmt(omega1) << " (<=1.57), omega3=" << fmt(omega3)
    << " (<=1.19), gamma=" << fmt(gamma_base) << " -> " << fmt(gamma_doubled)
    << " after degree doubling (strictly smaller), unstable consistency samples="
    << unstable_samples << "/200";
  return {c.ok, c.out.str()};
}

// ---------------------------------------------------------------- criterion 8
Outcome criterion_truncation_bound_suite() {
  Check c;
  const std::vector<std::function<double(double)>> signals = {
      [](double t) { return std::exp(-t); },
      [](double t) { return std::exp(0.5 * t); },
      [](double t) { return std::sin(t); },
      [](double t) { return std::cos(2.0 * t); },
      [](double t) { return std::sin(3.0 * t) + std::cos(t); },
      [](double t) { return 1.0 / (2.0 + t); },
      [](double t) { return std::pow(t, 5) - t * t; },
      [](double t) { return std::exp(-t * t); },
      [](double t) { return std::sinh(t); },
      [](double t) { return std::log(t + 3.0); },
  };
  const int ref_degree = 120;
  int violations = 0;
  double tightest = 1e300;
  for (const auto& f : signals) {
    const ChebSeries ref = fit_function(f, ref_degree);
    const double v2 = total_variation_f2(ref)(0);
    for (int n : {8, 16, 32}) {
      const DiffOperator op = cheb_diff_operator(ref_degree + 1, n + 1);
      const MatrixXd tail = ref.coeffs.rightCols(ref_degree - n);
      const double measured = (tail * op.d21()).norm() * ref.chain_factor();
      const double bound = std::sqrt(truncation_noise_bound(v2, n).c);
      if (measured > bound) ++violations;
      if (bound > 0) tightest = std::min(tightest, bound - measured);
    }
  }
  c.require(violations == 0);
  c << "30 signal/degree pairs, violations=" << violations
    << ", smallest slack=" << fmt(tightest);
  return {c.ok, c.out.str()};
}

// ---------------------------------------------------------------- criterion 9
Outcome criterion_oracle_equivalence() {
  Check c;
  std::mt19937 rng(2026);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 3);
  std::uniform_int_distribution<int> s_pick(0, 2);

  auto rand_mat = [&](int r, int co) {
    MatrixXd m(r, co);
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < co; ++b) m(a, b) = unit(rng);
    return m;
  };

  std::vector<MatrixXd> s_family;
  s_family.push_back(MatrixXd::Identity(2, 2));
  MatrixXd rot(2, 2);
  rot << 0, 1, -1, 0;
  s_family.push_back(rot);
  MatrixXd shear(2, 2);
  shear << 0, 1, 0, 0;
  s_family.push_back(shear);

  const DiffOperator diff = cheb_diff_operator(16, 16);
  double worst_pi = 0.0, worst_gamma = 0.0;
  int verdict_mismatches = 0;
  int negatives_seen = 0;

  for (int trial = 0; trial < 20; ++trial) {
    const bool force_non_stabilizable = trial >= 14;
    const int n = force_non_stabilizable ? 2 : dim(rng);
    const int m = 1;
    PlantModel pl;
    if (force_non_stabilizable) {
      // Unreachable unstable mode: decoupled second state with positive drift.
      pl.a = MatrixXd::Zero(2, 2);
      pl.a(0, 0) = unit(rng);
      pl.a(1, 1) = 0.5 + 0.5 * std::abs(unit(rng));
      pl.b = MatrixXd::Zero(2, 1);
      pl.b(0, 0) = 1.0;
    } else {
      pl.a = rand_mat(n, n);
      pl.b = rand_mat(n, m);
    }
    pl.c = rand_mat(1, n);
    pl.d = rand_mat(1, m);
    pl.e = rand_mat(n, 2);
    pl.f = rand_mat(1, 2);
    const MatrixXd s = s_family[static_cast<size_t>(s_pick(rng))];
    const ExoSpec exo = make_exo_spec(s);

    const double freq = 1.0 + std::abs(unit(rng));
    const double phase = unit(rng);
    const InputFn input = [&](int, double t) {
      VectorXd u(1);
      u << std::sin(freq * t + phase) + 0.2;
      return u;
    };
    const VectorXd x0 = rand_mat(n, 1);
    const VectorXd v0 = rand_mat(2, 1);
    const SimResult res =
        simulate_open_loop({pl}, exo, input, {x0}, v0, -1.0, 1.0, 1e-3, 0.0);
    const auto data = collect_data(res, 15, -1.0, 1.0);

    // Regulator-equation equivalence (solvable draws only; rank verdicts must
    // agree in all draws).
    const TransmissionZeroReport zrep = transmission_zero_check(data[0], exo, diff);
    bool model_zero_ok = true;
    for (const auto& [lambda, rank] : zrep.ranks) {
      Eigen::MatrixXcd pencil(n + 1, n + m);
      pencil.setZero();
      pencil.topLeftCorner(n, n) = pl.a.cast<std::complex<double>>() -
                                   lambda * Eigen::MatrixXcd::Identity(n, n);
      pencil.topRightCorner(n, m) = pl.b.cast<std::complex<double>>();
      pencil.bottomLeftCorner(1, n) = pl.c.cast<std::complex<double>>();
      pencil.bottomRightCorner(1, m) = pl.d.cast<std::complex<double>>();
      const int mrank = numerical_rank(Eigen::MatrixXcd(pencil));
      if (mrank != n + 1) model_zero_ok = false;
      if ((rank == n + 1) != (mrank == n + 1)) ++verdict_mismatches;
    }
    if (model_zero_ok) {
      const RegulatorDataSolution sol = solve_regulator_data(data[0], exo, diff);
      const RegulatorModelSolution oracle =
          solve_regulator_model(pl.a, pl.b, pl.c, pl.d, pl.e, pl.f, s);
      if (sol.ok && oracle.residual < 1e-8) {
        worst_pi = std::max(worst_pi, (sol.pi - oracle.pi).cwiseAbs().maxCoeff());
        worst_gamma = std::max(worst_gamma, (sol.gamma - oracle.gamma).cwiseAbs().maxCoeff());
      } else if (sol.ok != (oracle.residual < 1e-8)) {
        ++verdict_mismatches;
      }
    }

    // Stabilizability verdict: the exact-data LMI against the model PBH test.
    K1ExactOptions opts;
    opts.max_iter = 5000;
    const K1ExactResult k1 = synthesize_k1_exact(data[0], diff, opts);
    bool model_stabilizable = true;
    Eigen::EigenSolver<MatrixXd> es(pl.a);
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
      if (es.eigenvalues()(k).real() < 0) continue;
      Eigen::MatrixXcd pbh(n, n + m);
      pbh << pl.a.cast<std::complex<double>>() -
                 es.eigenvalues()(k) * Eigen::MatrixXcd::Identity(n, n),
          pl.b.cast<std::complex<double>>();
      if (numerical_rank(Eigen::MatrixXcd(pbh)) < n) model_stabilizable = false;
    }
    if (!model_stabilizable) ++negatives_seen;
    if (k1.ok != model_stabilizable) ++verdict_mismatches;
    if (k1.ok && !is_hurwitz(MatrixXd(pl.a + pl.b * k1.k1))) ++verdict_mismatches;
  }

  c.require(worst_pi <= 1e-8);
  c.require(worst_gamma <= 1e-8);
  c.require(verdict_mismatches == 0);
  c.require(negatives_seen >= 3);  // the sweep genuinely exercises both branches
  c << "20 scenarios: max |Pi-oracle|=" << fmt(worst_pi) << ", max |Gamma-oracle|="
    << fmt(worst_gamma) << " (<=1e-8), verdict mismatches=" << verdict_mismatches
    << ", non-stabilizable draws=" << negatives_seen;
  return {c.ok, c.out.str()};
}

// --------------------------------------------------------------- criterion 10
Outcome criterion_bound_soundness_sweep() {
  Check c;
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> weight(1.0, 4.0);
  std::uniform_int_distribution<int> nf(2, 7);
  std::bernoulli_distribution edge(0.4);
  int violations = 0;
  double min_gap = 1e300;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = nf(rng);
    GraphSpec g;
    g.n_followers = n;
    g.eps1 = 1.0;
    g.eps2 = 4.0;
    g.adjacency = MatrixXd::Zero(n + 1, n + 1);
    g.adjacency(1, 0) = weight(rng);
    for (int i = 2; i <= n; ++i) g.adjacency(i, i - 1) = weight(rng);
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j)
        if (i != j && g.adjacency(i, j) == 0.0 && edge(rng)) g.adjacency(i, j) = weight(rng);
    validate_graph(g);
    const double truth = min_real_eig(build_laplacian(g).h);
    const double direct = lambda_min_lower_bound(g.eps1, g.eps2, n);
    if (direct > truth + 1e-12) ++violations;
    min_gap = std::min(min_gap, truth - direct);
    if (n >= 3) {
      const double comb = lambda_min_lower_bound_combinatorial(g.eps1, g.eps2, n);
      if (comb > truth + 1e-12) ++violations;
      min_gap = std::min(min_gap, truth - comb);
    }
  }
  c.require(violations == 0);
  c << "200 random admissible graphs, bound violations=" << violations
    << ", smallest truth-bound gap=" << fmt(min_gap);
  return {c.ok, c.out.str()};
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    double limit_ms;
    std::function<Outcome()> fn;
  };
  const std::vector<Entry> criteria = {
      {"graph bounds vs printed example", 1000, criterion_graph_bounds},
      {"coupling gain selection", 1000, criterion_mu_selection},
      {"coefficient-table fidelity", 1000, criterion_coefficient_table},
      {"feedforward gain reproduction", 5000, criterion_gain_reproduction},
      {"transmission-zero rank", 1000, criterion_transmission_zero},
      {"closed-loop tail regulation", 30000, criterion_closed_loop_regulation},
      {"noisy synthesis and residual bounds", 60000, criterion_noisy_case},
      {"truncation-noise bound suite", 5000, criterion_truncation_bound_suite},
      {"data/model oracle equivalence", 30000, criterion_oracle_equivalence},
      {"spectrum bound soundness sweep", 10000, criterion_bound_soundness_sweep},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].fn();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    const bool in_time = ms < criteria[i].limit_ms;
    const bool pass = out.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s  %2zu %s: %s  [%.0f ms, limit %.0f ms]\n", pass ? "PASS" : "FAIL", i + 1,
                criteria[i].name, out.detail.c_str(), ms, criteria[i].limit_ms);
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
