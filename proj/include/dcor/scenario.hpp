#pragma once

#include "dcor/graph.hpp"
#include "dcor/sim.hpp"
#include "dcor/synthesis.hpp"

#include "json.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dcor {

using json = nlohmann::json;

// Error taxonomy mapped to process exit codes by the CLI:
//   ScenarioError -> 4 (invalid scenario / malformed input file)
//   InformativityError -> 2 (data fail an informativity condition)
//   NumericalError -> 3 (solver iteration limit / residual failure)
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InformativityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Matrices in every file format are row-major nested JSON arrays.
MatrixXd matrix_from_json(const json& j);
json matrix_to_json(const MatrixXd& m);
VectorXd vector_from_json(const json& j);
json vector_to_json(const VectorXd& v);

// Graph file: {"n_followers": N, "edges": [[i, j, w], ...], "eps1": .., "eps2": ..}
// with node 0 the leader and an edge [i, j, w] meaning j -> i with weight w.
GraphSpec graph_from_json(const json& j);
json graph_to_json(const GraphSpec& graph);
GraphSpec load_graph(const std::string& path);

// Open-loop excitation u_i(t) used during data collection.
struct InputSpec {
  std::string type;  // "exp" | "sin" | "cos" | "poly" | "zero"
  MatrixXd coef;     // m x K; exp/sin/cos read column 0, poly sums coef.col(k) t^k
  double rate = 0.0;

  VectorXd eval(double t) const;
};

struct ScenarioPlant {
  PlantModel model;
  VectorXd x0;
  InputSpec input;
};

enum class ScenarioMode { exact, noisy };

std::string to_string(ScenarioMode mode);
ScenarioMode scenario_mode_from_string(const std::string& name);

struct Scenario {
  std::string name;
  ScenarioMode mode = ScenarioMode::exact;
  ExoSpec exo;
  VectorXd v0;
  std::vector<ScenarioPlant> plants;  // optional: data-only flows leave this empty
  std::vector<GraphSchedule> schedule;

  // data collection
  double window0 = -1.0;
  double window1 = 1.0;
  double anchor = 0.0;  // time at which x0/v0 hold
  int degree = 15;
  std::vector<double> noise_c;  // per agent (or one value broadcast); noisy mode only

  // closed-loop verification
  double t_end = 20.0;
  double step = 1e-3;
  double tail_fraction = 0.25;

  // gain selection
  double mu_safety = 1.05;
  double decay_rate = 0.5;
  double lmi_margin = 1e-6;
  std::vector<MatrixXd> k1_override;  // empty = synthesize K1
  std::uint64_t seed = 0;

  int n_agents() const { return static_cast<int>(plants.size()); }
};

// Parses and validates. Violated modeling assumptions (exosystem spectrum in
// the closed right half plane, leader-rooted spanning tree, admissible weight
// bounds) are rejected here, before any computation runs.
Scenario scenario_from_json(const json& j);
json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::string& path);

// Collected-data interchange file: everything synthesis needs, no plant
// models. {"exo": {"s": ...}, "window": [t0, t1], "agents": [...]}.
json data_to_json(const std::vector<AgentData>& agents, const ExoSpec& exo);
std::pair<std::vector<AgentData>, ExoSpec> data_from_json(const json& j);

// Gain file: {"mu": .., "agents": [{"k1": ..., "k2": ...}, ...]}. Reading
// also accepts a full pipeline report (uses its "gains" object).
json gains_to_json(const GainSet& gains);
GainSet gains_from_json(const json& j);

// Trajectory CSV (header `t, x_1..x_n`) and coefficient CSV (header
// `k, c_1..c_n`) with a JSON sidecar carrying interval and degree.
std::pair<std::vector<double>, MatrixXd> read_trajectory_csv(const std::string& path);
void write_coefficient_csv(const ChebSeries& series, const std::string& csv_path,
                           const std::string& sidecar_path);
ChebSeries read_coefficient_csv(const std::string& csv_path, const std::string& sidecar_path);

}  // namespace dcor
