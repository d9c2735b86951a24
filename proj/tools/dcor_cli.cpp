#include "dcor/cheb.hpp"
#include "dcor/graph.hpp"
#include "dcor/linalg.hpp"
#include "dcor/pipeline.hpp"
#include "dcor/scenario.hpp"
#include "dcor/sim.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using dcor::json;

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm;
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << "\n";
}

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dcor::ScenarioError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw dcor::ScenarioError(path + ": " + e.what());
  }
}

int status_exit_code(const std::string& status) {
  if (status == "ok") return 0;
  if (status == "informativity_failure") return 2;
  return 3;
}

std::vector<dcor::MatrixXd> k1_list_from_json(const json& j) {
  std::vector<dcor::MatrixXd> list;
  if (j.is_array() && !j.empty() && j.front().is_array() && !j.front().empty() &&
      j.front().front().is_array()) {
    for (const auto& kj : j) list.push_back(dcor::matrix_from_json(kj));
  } else if (j.contains("agents")) {
    for (const auto& aj : j["agents"])
      list.push_back(dcor::matrix_from_json(aj.at("k1")));
  } else {
    throw dcor::ScenarioError(
        "inject-k1 file must be a list of matrices or a gains file with per-agent k1");
  }
  return list;
}

int run_pipeline_cmd(const std::string& scenario_path, const std::string& out_path) {
  const dcor::Scenario scenario = dcor::load_scenario(scenario_path);
  const std::string out_dir = std::filesystem::path(out_path).parent_path().string();
  const dcor::PipelineReport report = dcor::run_pipeline(scenario, out_dir.empty() ? "." : out_dir);
  json j = dcor::report_to_json(report);
  j["generated_at"] = utc_now();
  write_json_file(j, out_path);

  std::cout << "scenario: " << report.scenario_name << " (" << report.mode << ")\n"
            << "status:   " << report.status << "\n";
  if (report.status != "ok")
    std::cout << "failed:   " << report.failure_stage << ": " << report.failure_message << "\n";
  std::cout << "bound:    " << report.bound_used << "  mu: " << report.mu << "\n";
  for (const auto& a : report.agents) {
    std::cout << "agent " << a.index + 1 << ": ";
    if (a.k1.size() > 0) std::cout << "k1 = [" << a.k1 << "] ";
    if (a.k2.size() > 0) std::cout << "k2 = [" << a.k2 << "]";
    if (!a.failure.empty()) std::cout << "FAILED: " << a.failure;
    std::cout << "\n";
  }
  if (report.verified)
    std::cout << "tail error sup (t >= " << report.tail_window_start
              << "): " << report.tail.sup_tail << "\n";
  std::cout << "report:   " << out_path << "\n";
  return status_exit_code(report.status);
}

int run_bounds_cmd(const std::string& graph_path, double max_re_s, double safety, bool oracle) {
  const dcor::GraphSpec graph = dcor::load_graph(graph_path);
  json j;
  j["n_followers"] = graph.n_followers;
  j["eps1"] = graph.eps1;
  j["eps2"] = graph.eps2;
  j["leader_rooted_spanning_tree"] = dcor::has_leader_rooted_spanning_tree(graph);
  const double direct = dcor::lambda_min_lower_bound(graph.eps1, graph.eps2, graph.n_followers);
  j["bound_direct"] = direct;
  if (graph.n_followers >= 3)
    j["bound_combinatorial"] =
        dcor::lambda_min_lower_bound_combinatorial(graph.eps1, graph.eps2, graph.n_followers);
  j["mu"] = dcor::coupling_gain_mu(max_re_s, direct, safety);
  j["max_re_s"] = max_re_s;
  if (oracle) j["min_re_lambda_h"] = dcor::min_real_eig(dcor::build_laplacian(graph).h);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_simulate_cmd(const std::string& scenario_path, const std::string& csv_dir) {
  const dcor::Scenario s = dcor::load_scenario(scenario_path);
  if (s.plants.empty()) throw dcor::ScenarioError("simulate: scenario has no plant models");
  std::filesystem::create_directories(csv_dir);
  std::vector<dcor::PlantModel> models;
  std::vector<dcor::VectorXd> x0;
  for (const auto& sp : s.plants) {
    models.push_back(sp.model);
    x0.push_back(sp.x0);
  }
  const dcor::InputFn input = [&](int agent, double t) { return s.plants[agent].input.eval(t); };
  const dcor::SimResult open = dcor::simulate_open_loop(models, s.exo, input, x0, s.v0, s.window0,
                                                        s.window1, s.step, s.anchor);
  const auto csv = (std::filesystem::path(csv_dir) / "training.csv").string();
  const auto manifest = (std::filesystem::path(csv_dir) / "training_manifest.json").string();
  dcor::export_csv(open, csv, manifest);
  std::cout << "wrote " << csv << " (" << open.times.size() << " samples)\n";
  return 0;
}

int run_collect_cmd(const std::string& csv_path, int degree, std::vector<double> window,
                    std::string out_base) {
  auto [times, values] = dcor::read_trajectory_csv(csv_path);
  const double w0 = window[0], w1 = window[1];
  std::vector<double> sel_t;
  std::vector<int> sel_idx;
  for (size_t k = 0; k < times.size(); ++k)
    if (times[k] >= w0 - 1e-12 && times[k] <= w1 + 1e-12) {
      sel_t.push_back(times[k]);
      sel_idx.push_back(static_cast<int>(k));
    }
  if (static_cast<int>(sel_t.size()) < degree + 1)
    throw dcor::ScenarioError("collect: fewer samples inside the window than degree + 1");
  dcor::MatrixXd sel_v(values.rows(), sel_t.size());
  for (size_t k = 0; k < sel_idx.size(); ++k) sel_v.col(k) = values.col(sel_idx[k]);
  const dcor::ChebSeries series = dcor::fit_series(sel_t, sel_v, degree, w0, w1);
  if (out_base.empty()) {
    std::filesystem::path p(csv_path);
    out_base = (p.parent_path() / p.stem()).string() + "_coeffs";
  }
  dcor::write_coefficient_csv(series, out_base + ".csv", out_base + ".json");
  std::cout << "wrote " << out_base << ".csv and " << out_base << ".json (degree " << degree
            << " on [" << w0 << ", " << w1 << "])\n";
  return 0;
}

int run_synthesize_cmd(const std::string& data_path, std::string mode_name,
                       const std::string& inject_path, const std::string& out_path) {
  auto [agents, exo] = dcor::data_from_json(parse_json_file(data_path));
  if (mode_name.empty())
    mode_name = agents.front().noise_c.has_value() ? "noisy" : "exact";
  const dcor::ScenarioMode mode = dcor::scenario_mode_from_string(mode_name);
  std::vector<dcor::MatrixXd> inject;
  if (!inject_path.empty()) inject = k1_list_from_json(parse_json_file(inject_path));

  const dcor::SynthesisOutcome outcome =
      dcor::synthesize_agents(agents, exo, mode, inject, 0.5, 1e-6);

  dcor::PipelineReport shell;  // reuse the report renderer for the agent records
  shell.scenario_name = data_path;
  shell.mode = mode_name;
  shell.status = outcome.status;
  shell.failure_stage = outcome.failure_stage;
  shell.failure_message = outcome.failure_message;
  shell.agents = outcome.agents;
  shell.gains = outcome.gains;
  json j = dcor::report_to_json(shell);
  j.erase("graph");
  j.erase("verification");
  j.erase("artifacts");
  j["generated_at"] = utc_now();
  if (out_path.empty())
    std::cout << j.dump(2) << "\n";
  else
    write_json_file(j, out_path);
  return status_exit_code(outcome.status);
}

int run_verify_cmd(const std::string& scenario_path, const std::string& gains_path,
                   double mu_override, const std::string& csv_dir) {
  const dcor::Scenario s = dcor::load_scenario(scenario_path);
  if (s.plants.empty()) throw dcor::ScenarioError("verify: scenario has no plant models");
  dcor::GainSet gains = dcor::gains_from_json(parse_json_file(gains_path));
  if (mu_override > 0.0) gains.mu = mu_override;
  if (!(gains.mu > 0.0))
    throw dcor::ScenarioError(
        "verify: coupling gain mu is not positive; synthesize-only gain files carry no mu "
        "(it needs the graph) -- pass --mu, e.g. the value printed by `bounds`");
  if (gains.k1.size() != s.plants.size())
    throw dcor::ScenarioError("verify: gain count != plant count");
  std::vector<dcor::PlantModel> models;
  std::vector<dcor::VectorXd> x0;
  for (const auto& sp : s.plants) {
    models.push_back(sp.model);
    x0.push_back(sp.x0);
  }
  std::vector<dcor::VectorXd> eta0(s.plants.size(), dcor::VectorXd::Zero(s.exo.s.rows()));
  dcor::SimResult closed;
  try {
    closed = dcor::simulate_closed_loop(models, s.exo, s.schedule, gains, x0, eta0, s.v0, 0.0,
                                        s.t_end, s.step);
  } catch (const std::runtime_error& e) {
    throw dcor::NumericalError(e.what());
  }
  const dcor::TrackingMetrics tail = dcor::tracking_error_metrics(closed, s.tail_fraction);
  json j;
  j["scenario"] = s.name;
  j["mu"] = gains.mu;
  j["tail_window_start"] = s.t_end * (1.0 - s.tail_fraction);
  j["tail_sup"] = tail.sup_tail;
  j["tail_per_agent"] = dcor::vector_to_json(tail.per_agent);
  if (!csv_dir.empty()) {
    std::filesystem::create_directories(csv_dir);
    const auto csv = (std::filesystem::path(csv_dir) / "closed_loop.csv").string();
    const auto manifest =
        (std::filesystem::path(csv_dir) / "closed_loop_manifest.json").string();
    dcor::export_csv(closed, csv, manifest);
    j["artifacts"] = {csv, manifest};
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-driven distributed output-regulation toolkit"};
  app.require_subcommand(1);
  int exit_code = 0;

  auto* pipe = app.add_subcommand("pipeline", "run collection, synthesis, and verification");
  std::string pipe_scenario, pipe_out;
  pipe->add_option("--scenario", pipe_scenario, "scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  pipe->add_option("--out", pipe_out, "report JSON output path")->required();
  pipe->callback([&] { exit_code = run_pipeline_cmd(pipe_scenario, pipe_out); });

  auto* bounds = app.add_subcommand("bounds", "spectrum lower bounds and coupling gain");
  std::string bounds_graph;
  double bounds_max_re_s = 0.0, bounds_safety = 1.05;
  bool bounds_no_oracle = false;
  bounds->add_option("--graph", bounds_graph, "graph JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  bounds->add_option("--max-re-s", bounds_max_re_s, "max real part of the exosystem spectrum");
  bounds->add_option("--safety", bounds_safety, "coupling gain safety factor");
  bounds->add_flag("--no-oracle", bounds_no_oracle, "skip the eigensolver cross-check");
  bounds->callback([&] {
    exit_code = run_bounds_cmd(bounds_graph, bounds_max_re_s, bounds_safety, !bounds_no_oracle);
  });

  auto* sim = app.add_subcommand("simulate", "open-loop collection run, exported as CSV");
  std::string sim_scenario, sim_csv;
  sim->add_option("--scenario", sim_scenario, "scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  sim->add_option("--csv", sim_csv, "output directory")->required();
  sim->callback([&] { exit_code = run_simulate_cmd(sim_scenario, sim_csv); });

  auto* collect = app.add_subcommand("collect", "fit coefficient series to a trajectory CSV");
  std::string collect_csv, collect_out;
  int collect_degree = 15;
  std::vector<double> collect_window{-1.0, 1.0};
  collect->add_option("--csv", collect_csv, "trajectory CSV (header t, x_1..x_n)")
      ->required()
      ->check(CLI::ExistingFile);
  collect->add_option("--degree", collect_degree, "series degree")->required();
  collect->add_option("--window", collect_window, "fit interval t0 t1")
      ->required()
      ->expected(2);
  collect->add_option("--out", collect_out, "output base path (default: alongside input)");
  collect->callback([&] {
    exit_code = run_collect_cmd(collect_csv, collect_degree, collect_window, collect_out);
  });

  auto* synth = app.add_subcommand("synthesize", "gains from a collected data file");
  std::string synth_data, synth_mode, synth_inject, synth_out;
  synth->add_option("--data", synth_data, "collected data JSON")
      ->required()
      ->check(CLI::ExistingFile);
  synth->add_option("--mode", synth_mode, "exact | noisy (default: inferred from data)")
      ->check(CLI::IsMember({"exact", "noisy"}));
  synth->add_option("--inject-k1", synth_inject, "skip gain synthesis, use these feedback gains")
      ->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "gain report path (default: stdout)");
  synth->callback([&] {
    exit_code = run_synthesize_cmd(synth_data, synth_mode, synth_inject, synth_out);
  });

  auto* verify = app.add_subcommand("verify", "closed-loop run with given gains, tail metrics");
  std::string verify_scenario, verify_gains, verify_csv;
  double verify_mu = 0.0;
  verify->add_option("--scenario", verify_scenario, "scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_option("--gains", verify_gains, "gain JSON file (or pipeline report)")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_option("--mu", verify_mu,
                     "coupling gain override (required when the gain file has none)");
  verify->add_option("--csv", verify_csv, "optional output directory for the trajectory");
  verify->callback(
      [&] { exit_code = run_verify_cmd(verify_scenario, verify_gains, verify_mu, verify_csv); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const dcor::ScenarioError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return 4;
  } catch (const dcor::InformativityError& e) {
    std::cerr << "informativity failure: " << e.what() << "\n";
    return 2;
  } catch (const dcor::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
