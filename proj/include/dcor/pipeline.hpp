#pragma once

#include "dcor/scenario.hpp"

#include <string>
#include <vector>

namespace dcor {

// Per-agent synthesis record. Every verdict carries its numerical evidence;
// `failure` is empty unless this agent's stage aborted the pipeline.
struct AgentSynthesisReport {
  int index = 0;

  // informativity verdicts + evidence
  bool informative_stabilizability = false;
  bool informative_regulation = false;
  int psi_rank = 0;      // rank of [X; U]
  int psi_rows = 0;      // n + m
  double psi_min_sv = 0.0;
  double x_pinv_max_re = 0.0;  // max Re eig((X D11 chain - E V) X^+)
  std::vector<std::pair<std::complex<double>, int>> zero_ranks;  // exact mode
  int zero_rank_required = 0;

  // gains + certificates
  bool k1_overridden = false;
  MatrixXd k1;
  MatrixXd k2;
  MatrixXd regulator_m;
  std::string lmi_status;  // "feasible" | "infeasible_evidence" | "max_iter" | "skipped"
  double lmi_residual = 0.0;
  int lmi_iterations = 0;
  double closed_loop_max_re = 0.0;  // data-driven closed-loop spectral abscissa
  double regulator_residual = 0.0;

  // noisy mode only
  double noise_c = 0.0;
  double omega_bound = 0.0;
  double omega_frobenius = 0.0;

  std::string failure;
};

struct PipelineReport {
  std::string scenario_name;
  std::string mode;
  // "ok" | "informativity_failure" | "numerical_failure"; on failure the
  // stage and the violated condition are recorded and the report is partial.
  std::string status = "ok";
  std::string failure_stage;
  std::string failure_message;

  // graph stage
  double bound_direct = 0.0;
  double bound_combinatorial = 0.0;
  double bound_used = 0.0;
  double min_re_lambda_h = 0.0;  // eigensolver oracle over all scheduled graphs
  double max_re_s = 0.0;
  double mu = 0.0;

  std::vector<AgentSynthesisReport> agents;
  GainSet gains;

  bool verified = false;  // closed-loop stage ran
  TrackingMetrics tail;
  double tail_window_start = 0.0;

  std::vector<std::string> artifacts;  // emitted file paths
};

// Deterministic JSON rendering (no timestamp inside; the CLI adds one in a
// separate top-level field so reports stay byte-comparable).
json report_to_json(const PipelineReport& report);

struct SynthesisOutcome {
  std::vector<AgentSynthesisReport> agents;  // partial on failure, up to the failing agent
  std::string status = "ok";  // "ok" | "informativity_failure" | "numerical_failure"
  std::string failure_stage;
  std::string failure_message;
  GainSet gains;  // k1/k2 filled when status == "ok"; mu left for the caller
};

// Synthesis stage shared by the pipeline and the stand-alone `synthesize`
// subcommand so both produce identical gains from identical data. The first
// failing agent halts the stage with its evidence recorded.
SynthesisOutcome synthesize_agents(const std::vector<AgentData>& data, const ExoSpec& exo,
                                   ScenarioMode mode, const std::vector<MatrixXd>& k1_override,
                                   double decay_rate, double margin);

// Full flow: simulate the open-loop collection run, encode the window,
// select the coupling gain from the topology-free spectrum bound, synthesize
// per-agent gains, close the loop, and measure tail tracking error. Artifact
// files (trajectories, collected data, gains) are written under `out_dir`
// when it is nonempty. Stage failures return a partial report; scenario-level
// misuse throws ScenarioError.
PipelineReport run_pipeline(const Scenario& scenario, const std::string& out_dir = "");

}  // namespace dcor
