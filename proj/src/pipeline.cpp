#include "dcor/pipeline.hpp"

#include "dcor/cheb.hpp"
#include "dcor/linalg.hpp"

#include <Eigen/SVD>

#include <filesystem>
#include <fstream>

namespace dcor {

namespace {

const char* lmi_status_name(LMIStatus s) {
  switch (s) {
    case LMIStatus::feasible:
      return "feasible";
    case LMIStatus::infeasible_evidence:
      return "infeasible_evidence";
    default:
      return "max_iter";
  }
}

json complex_rank_list(const std::vector<std::pair<std::complex<double>, int>>& ranks) {
  json list = json::array();
  for (const auto& [lambda, rank] : ranks)
    list.push_back({{"re", lambda.real()}, {"im", lambda.imag()}, {"rank", rank}});
  return list;
}

json agent_to_json(const AgentSynthesisReport& a, ScenarioMode mode) {
  json j;
  j["index"] = a.index;
  j["informative_stabilizability"] = a.informative_stabilizability;
  j["informative_regulation"] = a.informative_regulation;
  j["psi_rank"] = a.psi_rank;
  j["psi_rows"] = a.psi_rows;
  j["psi_min_sv"] = a.psi_min_sv;
  j["x_pinv_max_re"] = a.x_pinv_max_re;
  if (mode == ScenarioMode::exact) {
    j["zero_ranks"] = complex_rank_list(a.zero_ranks);
    j["zero_rank_required"] = a.zero_rank_required;
  }
  if (a.k1.size() > 0) j["k1"] = matrix_to_json(a.k1);
  if (a.k2.size() > 0) j["k2"] = matrix_to_json(a.k2);
  j["k1_overridden"] = a.k1_overridden;
  j["lmi"] = {{"status", a.lmi_status},
              {"residual", a.lmi_residual},
              {"iterations", a.lmi_iterations}};
  j["closed_loop_max_re"] = a.closed_loop_max_re;
  j["regulator_residual"] = a.regulator_residual;
  if (mode == ScenarioMode::noisy) {
    j["noise_c"] = a.noise_c;
    j["omega_bound"] = a.omega_bound;
    j["omega_frobenius"] = a.omega_frobenius;
  }
  if (!a.failure.empty()) j["failure"] = a.failure;
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << "\n";
}

}  // namespace

json report_to_json(const PipelineReport& report) {
  json j;
  j["scenario"] = report.scenario_name;
  j["mode"] = report.mode;
  j["status"] = report.status;
  if (report.status != "ok")
    j["failure"] = {{"stage", report.failure_stage}, {"message", report.failure_message}};
  j["graph"] = {{"bound_direct", report.bound_direct},
                {"bound_combinatorial", report.bound_combinatorial},
                {"bound_used", report.bound_used},
                {"min_re_lambda_h", report.min_re_lambda_h},
                {"max_re_s", report.max_re_s},
                {"mu", report.mu}};
  const ScenarioMode mode =
      report.mode == "noisy" ? ScenarioMode::noisy : ScenarioMode::exact;
  json agents = json::array();
  for (const auto& a : report.agents) agents.push_back(agent_to_json(a, mode));
  j["agents"] = std::move(agents);
  if (!report.gains.k1.empty()) j["gains"] = gains_to_json(report.gains);
  json ver;
  ver["ran"] = report.verified;
  if (report.verified) {
    ver["tail_sup"] = report.tail.sup_tail;
    ver["tail_per_agent"] = vector_to_json(report.tail.per_agent);
    ver["tail_window_start"] = report.tail_window_start;
  }
  j["verification"] = std::move(ver);
  j["artifacts"] = report.artifacts;
  return j;
}

SynthesisOutcome synthesize_agents(const std::vector<AgentData>& data, const ExoSpec& exo,
                                   ScenarioMode mode, const std::vector<MatrixXd>& k1_override,
                                   double decay_rate, double margin) {
  if (data.empty()) throw ScenarioError("synthesis: no agent data");
  if (!k1_override.empty() && k1_override.size() != data.size())
    throw ScenarioError("synthesis: k1_override needs one matrix per agent");

  SynthesisOutcome out;
  const DiffOperator diff = cheb_diff_operator(data.front().cols(), data.front().cols());

  for (size_t i = 0; i < data.size(); ++i) {
    const AgentData& d = data[i];
    AgentSynthesisReport rep;
    rep.index = static_cast<int>(i);
    auto fail = [&](const std::string& status, const std::string& what) {
      rep.failure = what;
      out.agents.push_back(rep);
      out.status = status;
      out.failure_stage = "synthesis(agent " + std::to_string(i + 1) + ")";
      out.failure_message = what;
    };

    if (d.cols() != data.front().cols()) {
      fail("informativity_failure", "agents use different encoding degrees");
      return out;
    }

    // rank / right-inverse evidence
    const StabilizabilityReport stab = stabilizability_check(d, diff);
    MatrixXd psi(d.n() + d.m(), d.cols());
    psi << d.x, d.u;
    Eigen::JacobiSVD<MatrixXd> svd(psi);
    rep.psi_rows = d.n() + d.m();
    rep.psi_rank = numerical_rank(psi);
    rep.psi_min_sv = svd.singularValues().minCoeff();
    rep.x_pinv_max_re = stab.max_re;
    // data-driven closed-loop spectral abscissa of A + B K1 at a gain K1:
    // [A B] agrees with G psi^+ on the data, so A + B K1 = G psi^+ [I; K1].
    auto closed_loop_abscissa = [&](const MatrixXd& k1) {
      MatrixXd stacked(d.n() + d.m(), d.n());
      stacked << MatrixXd::Identity(d.n(), d.n()), k1;
      return max_real_eig(make_data_ops(d, diff).g * pinv(psi) * stacked);
    };
    if (!stab.full_row_rank) {
      fail("informativity_failure", "state coefficient matrix is rank deficient");
      return out;
    }
    if (mode == ScenarioMode::noisy && rep.psi_rank < rep.psi_rows) {
      fail("informativity_failure", "[X; U] is not full row rank");
      return out;
    }

    // K1: injected or synthesized via the stabilization certificate
    if (!k1_override.empty()) {
      rep.k1 = k1_override[i];
      rep.k1_overridden = true;
      rep.lmi_status = "skipped";
      rep.closed_loop_max_re = closed_loop_abscissa(rep.k1);
      rep.informative_stabilizability = true;
    } else if (mode == ScenarioMode::exact) {
      K1ExactOptions opts;
      opts.decay_rate = decay_rate;
      opts.margin = margin;
      const K1ExactResult k1res = synthesize_k1_exact(d, diff, opts);
      rep.lmi_status = lmi_status_name(k1res.cert.status);
      rep.lmi_residual = k1res.cert.residual;
      rep.lmi_iterations = k1res.cert.iterations;
      rep.closed_loop_max_re = k1res.closed_loop_max_re;
      if (!k1res.ok) {
        if (k1res.cert.status == LMIStatus::max_iter) {
          fail("numerical_failure", "gain certificate hit the iteration limit");
        } else {
          fail("informativity_failure",
               "data are not informative for stabilization (certificate infeasible)");
        }
        return out;
      }
      rep.k1 = k1res.k1;
      rep.informative_stabilizability = true;
    } else {
      if (!d.noise_c)
        throw ScenarioError("synthesis: noisy mode requires noise_c for every agent");
      rep.noise_c = *d.noise_c;
      const NoiseQuadratic nq = build_noise_quadratic(d, diff);
      const K1NoisyResult k1res = synthesize_k1_noisy(nq);
      rep.lmi_status = lmi_status_name(k1res.cert.status);
      rep.lmi_residual = k1res.cert.residual;
      rep.lmi_iterations = k1res.cert.iterations;
      if (!k1res.ok) {
        if (k1res.cert.status == LMIStatus::max_iter) {
          fail("numerical_failure", "robust gain certificate hit the iteration limit");
        } else {
          fail("informativity_failure",
               "noisy data are not informative for quadratic stabilization");
        }
        return out;
      }
      rep.k1 = k1res.k1;
      rep.informative_stabilizability = true;
      rep.closed_loop_max_re = closed_loop_abscissa(rep.k1);
    }

    // feedforward: regulator solve (exact) or residual-bounded surrogate
    if (mode == ScenarioMode::exact) {
      const TransmissionZeroReport zero = transmission_zero_check(d, exo, diff);
      rep.zero_rank_required = zero.required;
      rep.zero_ranks = zero.ranks;
      const RegulatorDataSolution reg = solve_regulator_data(d, exo, diff);
      rep.regulator_residual = reg.residual;
      if (!reg.ok) {
        fail("informativity_failure",
             "regulator equations have no solution (transmission zero condition fails)");
        return out;
      }
      rep.regulator_m = reg.m;
      rep.informative_regulation = true;
      rep.k2 = synthesize_k2(d, rep.k1, reg.m);
    } else {
      const ApproxRegulatorResult reg = approx_regulator_noisy(d, exo, diff);
      rep.regulator_residual = reg.eq_residual;
      if (!reg.ok) {
        fail("numerical_failure", "residual-bounded feedforward solve failed");
        return out;
      }
      rep.regulator_m = reg.m;
      rep.omega_bound = reg.omega_spectral;
      rep.omega_frobenius = reg.omega_frobenius;
      rep.informative_regulation = true;
      rep.k2 = synthesize_k2(d, rep.k1, reg.m);
    }

    out.gains.k1.push_back(rep.k1);
    out.gains.k2.push_back(rep.k2);
    out.agents.push_back(std::move(rep));
  }
  return out;
}

PipelineReport run_pipeline(const Scenario& scenario, const std::string& out_dir) {
  PipelineReport report;
  report.scenario_name = scenario.name;
  report.mode = to_string(scenario.mode);
  if (scenario.plants.empty())
    throw ScenarioError("pipeline: scenario has no plant models to simulate");

  namespace fs = std::filesystem;
  const bool emit = !out_dir.empty();
  if (emit) fs::create_directories(out_dir);
  auto artifact = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };

  std::vector<PlantModel> models;
  std::vector<VectorXd> x0;
  for (const auto& sp : scenario.plants) {
    models.push_back(sp.model);
    x0.push_back(sp.x0);
  }

  // 1-2: collect signals over the window and encode them
  std::vector<AgentData> data;
  try {
    const InputFn input = [&](int agent, double t) {
      return scenario.plants[agent].input.eval(t);
    };
    const SimResult open =
        simulate_open_loop(models, scenario.exo, input, x0, scenario.v0, scenario.window0,
                           scenario.window1, scenario.step, scenario.anchor);
    data = collect_data(open, scenario.degree, scenario.window0, scenario.window1);
    if (scenario.mode == ScenarioMode::noisy)
      for (size_t i = 0; i < data.size(); ++i)
        data[i].noise_c = scenario.noise_c.size() == 1 ? scenario.noise_c[0] : scenario.noise_c[i];
    if (emit) {
      export_csv(open, artifact("training.csv"), artifact("training_manifest.json"));
      write_json_file(data_to_json(data, scenario.exo), artifact("data.json"));
      report.artifacts = {artifact("training.csv"), artifact("training_manifest.json"),
                          artifact("data.json")};
    }
  } catch (const std::exception& e) {
    report.status = "numerical_failure";
    report.failure_stage = "collection";
    report.failure_message = e.what();
    return report;
  }

  // 3: coupling gain from the topology-free spectrum bound
  report.max_re_s = scenario.exo.spectrum.size() > 0
                        ? scenario.exo.spectrum.real().maxCoeff()
                        : 0.0;
  report.bound_direct = std::numeric_limits<double>::infinity();
  report.bound_combinatorial = std::numeric_limits<double>::infinity();
  report.min_re_lambda_h = std::numeric_limits<double>::infinity();
  for (const auto& entry : scenario.schedule) {
    const auto& g = entry.graph;
    report.bound_direct =
        std::min(report.bound_direct, lambda_min_lower_bound(g.eps1, g.eps2, g.n_followers));
    report.bound_combinatorial =
        std::min(report.bound_combinatorial,
                 g.n_followers >= 3
                     ? lambda_min_lower_bound_combinatorial(g.eps1, g.eps2, g.n_followers)
                     : 0.0);
    report.min_re_lambda_h =
        std::min(report.min_re_lambda_h, min_real_eig(build_laplacian(g).h));
  }
  report.bound_used = report.bound_direct;
  report.mu = coupling_gain_mu(report.max_re_s, report.bound_used, scenario.mu_safety);

  // 4-6: per-agent gain synthesis
  SynthesisOutcome synth = synthesize_agents(data, scenario.exo, scenario.mode,
                                             scenario.k1_override, scenario.decay_rate,
                                             scenario.lmi_margin);
  report.agents = std::move(synth.agents);
  if (synth.status != "ok") {
    report.status = synth.status;
    report.failure_stage = synth.failure_stage;
    report.failure_message = synth.failure_message;
    return report;
  }
  report.gains = std::move(synth.gains);
  report.gains.mu = report.mu;
  if (emit) {
    write_json_file(gains_to_json(report.gains), artifact("gains.json"));
    report.artifacts.push_back(artifact("gains.json"));
  }

  // 7-8: close the loop and verify tracking
  try {
    std::vector<VectorXd> eta0(scenario.plants.size(), VectorXd::Zero(scenario.exo.s.rows()));
    const SimResult closed =
        simulate_closed_loop(models, scenario.exo, scenario.schedule, report.gains, x0, eta0,
                             scenario.v0, 0.0, scenario.t_end, scenario.step);
    report.tail = tracking_error_metrics(closed, scenario.tail_fraction);
    report.tail_window_start = scenario.t_end * (1.0 - scenario.tail_fraction);
    report.verified = true;
    if (emit) {
      export_csv(closed, artifact("closed_loop.csv"), artifact("closed_loop_manifest.json"));
      report.artifacts.push_back(artifact("closed_loop.csv"));
      report.artifacts.push_back(artifact("closed_loop_manifest.json"));
    }
  } catch (const std::exception& e) {
    report.status = "numerical_failure";
    report.failure_stage = "verification";
    report.failure_message = e.what();
    return report;
  }
  return report;
}

}  // namespace dcor
