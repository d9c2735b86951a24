#include "doctest.h"

#include "dcor/pipeline.hpp"
#include "dcor/scenario.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace dcor;

namespace {

const std::string kScenarioDir = std::string(DCOR_SOURCE_DIR) + "/scenarios";

json minimal_scenario_json() {
  json j;
  j["name"] = "unit";
  j["mode"] = "exact";
  j["exo"]["s"] = json::parse("[[1.0, 0.0], [0.0, 1.0]]");
  j["exo"]["v0"] = json::parse("[0.5, 0.5]");
  json plant;
  plant["a"] = json::parse("[[0.0, 1.0], [0.0, 0.0]]");
  plant["b"] = json::parse("[[0.0], [1.0]]");
  plant["c"] = json::parse("[[1.0, 0.0]]");
  plant["d"] = json::parse("[[0.0]]");
  plant["e"] = json::parse("[[1.0, 0.0], [0.0, 1.0]]");
  plant["f"] = json::parse("[[-1.0, 0.0]]");
  plant["x0"] = json::parse("[1.0, 1.0]");
  plant["input"] = json::parse(R"({"type": "exp", "coef": [[1.0]], "rate": -1.0})");
  j["plants"] = json::array({plant});
  json graph;
  graph["t_switch"] = 0.0;
  graph["graph"]["n_followers"] = 1;
  graph["graph"]["edges"] = json::parse("[[1, 0, 2.0]]");
  graph["graph"]["eps1"] = 2.0;
  graph["graph"]["eps2"] = 4.0;
  j["graphs"] = json::array({graph});
  j["collect"]["window"] = json::parse("[-1.0, 1.0]");
  j["collect"]["anchor"] = 0.0;
  j["collect"]["degree"] = 15;
  j["sim"]["t_end"] = 4.0;
  j["sim"]["step"] = 1e-3;
  j["sim"]["tail_fraction"] = 0.25;
  return j;
}

}  // namespace

TEST_CASE("matrix and vector json round trips preserve values and shapes") {
  MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 0.125;
  const MatrixXd back = matrix_from_json(matrix_to_json(m));
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);
  VectorXd v(3);
  v << -1, 0.5, 2;
  CHECK((vector_from_json(vector_to_json(v)) - v).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(matrix_from_json(json::parse("[[1, 2], [3]]")), ScenarioError);
  CHECK_THROWS_AS(matrix_from_json(json::parse("42")), ScenarioError);
}

TEST_CASE("graph json round trip and edge semantics") {
  json gj;
  gj["n_followers"] = 2;
  gj["edges"] = json::parse("[[1, 0, 2.0], [2, 1, 3.0]]");
  gj["eps1"] = 2.0;
  gj["eps2"] = 3.0;
  const GraphSpec g = graph_from_json(gj);
  CHECK(g.adjacency(1, 0) == 2.0);  // [i, j, w] means j -> i
  CHECK(g.adjacency(2, 1) == 3.0);
  CHECK(g.adjacency(0, 1) == 0.0);
  const GraphSpec g2 = graph_from_json(graph_to_json(g));
  CHECK((g2.adjacency - g.adjacency).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g2.eps1 == g.eps1);
  CHECK(g2.eps2 == g.eps2);
}

TEST_CASE("input spec evaluates every excitation family") {
  InputSpec exp_in{"exp", MatrixXd::Ones(1, 1), -1.0};
  CHECK(exp_in.eval(2.0)(0) == doctest::Approx(std::exp(-2.0)));
  InputSpec sin_in{"sin", 2.0 * MatrixXd::Ones(1, 1), 3.0};
  CHECK(sin_in.eval(0.5)(0) == doctest::Approx(2.0 * std::sin(1.5)));
  InputSpec cos_in{"cos", MatrixXd::Ones(1, 1), 2.0};
  CHECK(cos_in.eval(0.25)(0) == doctest::Approx(std::cos(0.5)));
  MatrixXd poly_coef(1, 3);
  poly_coef << 1.0, -2.0, 0.5;  // 1 - 2 t + 0.5 t^2
  InputSpec poly_in{"poly", poly_coef, 0.0};
  CHECK(poly_in.eval(2.0)(0) == doctest::Approx(1.0 - 4.0 + 2.0));
  InputSpec zero_in{"zero", MatrixXd::Zero(1, 1), 0.0};
  CHECK(zero_in.eval(7.0)(0) == 0.0);
}

TEST_CASE("scenario json round trip is lossless") {
  const Scenario s = scenario_from_json(minimal_scenario_json());
  const json j1 = scenario_to_json(s);
  const Scenario s2 = scenario_from_json(j1);
  const json j2 = scenario_to_json(s2);
  CHECK(j1.dump() == j2.dump());
  CHECK(s2.name == "unit");
  CHECK(s2.mode == ScenarioMode::exact);
  CHECK(s2.degree == 15);
  CHECK(s2.n_agents() == 1);
}

TEST_CASE("scenario validation rejects modeling-assumption violations at load time") {
  // Exosystem with a strictly decaying mode.
  json bad_exo = minimal_scenario_json();
  bad_exo["exo"]["s"] = json::parse("[[-1.0, 0.0], [0.0, 1.0]]");
  CHECK_THROWS_AS(scenario_from_json(bad_exo), ScenarioError);

  // Follower unreachable from the leader.
  json no_tree = minimal_scenario_json();
  no_tree["graphs"][0]["graph"]["edges"] = json::parse("[]");
  CHECK_THROWS_AS(scenario_from_json(no_tree), ScenarioError);

  // Weight outside the admissible band.
  json bad_weight = minimal_scenario_json();
  bad_weight["graphs"][0]["graph"]["edges"] = json::parse("[[1, 0, 9.0]]");
  CHECK_THROWS_AS(scenario_from_json(bad_weight), ScenarioError);

  // Schedule must start at or before zero and strictly increase.
  json late_start = minimal_scenario_json();
  late_start["graphs"][0]["t_switch"] = 1.0;
  CHECK_THROWS_AS(scenario_from_json(late_start), ScenarioError);
  json not_increasing = minimal_scenario_json();
  not_increasing["graphs"].push_back(not_increasing["graphs"][0]);
  CHECK_THROWS_AS(scenario_from_json(not_increasing), ScenarioError);

  // Noise level bookkeeping is mode-dependent and explicit.
  json exact_with_noise = minimal_scenario_json();
  exact_with_noise["collect"]["noise_c"] = json::parse("[0.16]");
  CHECK_THROWS_AS(scenario_from_json(exact_with_noise), ScenarioError);
  json noisy_without = minimal_scenario_json();
  noisy_without["mode"] = "noisy";
  CHECK_THROWS_AS(scenario_from_json(noisy_without), ScenarioError);
  json noisy_bad_count = minimal_scenario_json();
  noisy_bad_count["mode"] = "noisy";
  noisy_bad_count["collect"]["noise_c"] = json::parse("[0.1, 0.2, 0.3]");
  CHECK_THROWS_AS(scenario_from_json(noisy_bad_count), ScenarioError);

  // Override shape must match each agent.
  json bad_override = minimal_scenario_json();
  bad_override["synthesis"]["k1_override"] = json::parse("[[[1.0, 2.0, 3.0]]]");
  CHECK_THROWS_AS(scenario_from_json(bad_override), ScenarioError);

  // Simulation and gain-selection parameter sanity.
  json bad_step = minimal_scenario_json();
  bad_step["sim"]["step"] = 0.0;
  CHECK_THROWS_AS(scenario_from_json(bad_step), ScenarioError);
  json bad_tail = minimal_scenario_json();
  bad_tail["sim"]["tail_fraction"] = 1.5;
  CHECK_THROWS_AS(scenario_from_json(bad_tail), ScenarioError);
  json bad_safety = minimal_scenario_json();
  bad_safety["mu"]["safety"] = 0.5;
  CHECK_THROWS_AS(scenario_from_json(bad_safety), ScenarioError);
}

TEST_CASE("checked-in scenario files load and validate") {
  const Scenario exact = load_scenario(kScenarioDir + "/four_follower_exact.json");
  CHECK(exact.mode == ScenarioMode::exact);
  CHECK(exact.n_agents() == 4);
  CHECK(exact.schedule.size() == 2);
  const Scenario noisy = load_scenario(kScenarioDir + "/four_follower_noisy.json");
  CHECK(noisy.mode == ScenarioMode::noisy);
  CHECK(noisy.noise_c.size() == 4);
  const GraphSpec g1 = load_graph(kScenarioDir + "/graph_g1.json");
  CHECK(g1.n_followers == 4);
  CHECK(has_leader_rooted_spanning_tree(g1));
}

TEST_CASE("collected-data interchange file round trips including noise levels") {
  const Scenario s = scenario_from_json(minimal_scenario_json());
  // Assemble a small synthetic data block.
  AgentData d;
  d.x = MatrixXd::Random(2, 6);
  d.u = MatrixXd::Random(1, 6);
  d.err = MatrixXd::Random(1, 6);
  d.exo = MatrixXd::Random(2, 6);
  d.e_mat = s.plants[0].model.e;
  d.f_mat = s.plants[0].model.f;
  d.noise_c = 0.04;
  d.t0 = -1.0;
  d.t1 = 1.0;
  const json j = data_to_json({d}, s.exo);
  auto [agents, exo] = data_from_json(j);
  REQUIRE(agents.size() == 1);
  CHECK((agents[0].x - d.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((agents[0].u - d.u).cwiseAbs().maxCoeff() == 0.0);
  CHECK((agents[0].err - d.err).cwiseAbs().maxCoeff() == 0.0);
  CHECK((agents[0].exo - d.exo).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(agents[0].noise_c.has_value());
  CHECK(*agents[0].noise_c == 0.04);
  CHECK((exo.s - s.exo.s).cwiseAbs().maxCoeff() == 0.0);

  AgentData exact_d = d;
  exact_d.noise_c.reset();
  auto [agents2, exo2] = data_from_json(data_to_json({exact_d}, s.exo));
  CHECK_FALSE(agents2[0].noise_c.has_value());
}

TEST_CASE("gain file round trip, including reading a full report") {
  GainSet gains;
  MatrixXd k1(1, 2), k2(1, 2);
  k1 << -1.0, -0.5;
  k2 << 1.0, -1.0;
  gains.k1 = {k1};
  gains.k2 = {k2};
  gains.mu = 134.4;
  const GainSet back = gains_from_json(gains_to_json(gains));
  CHECK(back.mu == 134.4);
  REQUIRE(back.k1.size() == 1);
  CHECK((back.k1[0] - k1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.k2[0] - k2).cwiseAbs().maxCoeff() == 0.0);

  json report;
  report["status"] = "ok";
  report["gains"] = gains_to_json(gains);
  const GainSet from_report = gains_from_json(report);
  CHECK(from_report.mu == 134.4);
}

TEST_CASE("coefficient csv round trip with sidecar") {
  ChebSeries series;
  series.coeffs = MatrixXd::Random(2, 7);
  series.t0 = -0.5;
  series.t1 = 1.5;
  const std::string csv = "/tmp/dcor_test_coef.csv";
  const std::string sidecar = "/tmp/dcor_test_coef.json";
  write_coefficient_csv(series, csv, sidecar);
  const ChebSeries back = read_coefficient_csv(csv, sidecar);
  CHECK(back.t0 == series.t0);
  CHECK(back.t1 == series.t1);
  CHECK(back.degree() == 6);
  CHECK((back.coeffs - series.coeffs).cwiseAbs().maxCoeff() < 1e-12);
  std::remove(csv.c_str());
  std::remove(sidecar.c_str());
}

TEST_CASE("trajectory csv error paths") {
  CHECK_THROWS_AS(read_trajectory_csv("/tmp/dcor_does_not_exist.csv"), ScenarioError);
  const std::string path = "/tmp/dcor_test_bad.csv";
  {
    std::ofstream out(path);
    out << "t,x_1\n0.0,1.0\n0.1,2.0,3.0\n";
  }
  CHECK_THROWS_AS(read_trajectory_csv(path), ScenarioError);
  {
    std::ofstream out(path);
    out << "t,x_1\n0.0,1.0\n";
  }
  CHECK_THROWS_AS(read_trajectory_csv(path), ScenarioError);
  std::remove(path.c_str());
}

TEST_CASE("pipeline reports are deterministic for identical scenarios") {
  const Scenario s = load_scenario(kScenarioDir + "/four_follower_exact.json");
  const PipelineReport r1 = run_pipeline(s);
  const PipelineReport r2 = run_pipeline(s);
  CHECK(r1.status == "ok");
  CHECK(report_to_json(r1).dump() == report_to_json(r2).dump());
}

TEST_CASE("stand-alone synthesis equals the pipeline's synthesis stage") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "dcor_stage_isolation";
  fs::create_directories(dir);
  const Scenario s = load_scenario(kScenarioDir + "/four_follower_exact.json");
  const PipelineReport rep = run_pipeline(s, dir.string());
  REQUIRE(rep.status == "ok");

  std::ifstream in(dir / "data.json");
  REQUIRE(in.good());
  auto [agents, exo] = data_from_json(json::parse(in));
  const SynthesisOutcome iso =
      synthesize_agents(agents, exo, s.mode, s.k1_override, s.decay_rate, s.lmi_margin);
  REQUIRE(iso.status == "ok");
  REQUIRE(iso.gains.k1.size() == rep.gains.k1.size());
  for (size_t i = 0; i < iso.gains.k1.size(); ++i) {
    CHECK((iso.gains.k1[i] - rep.gains.k1[i]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((iso.gains.k2[i] - rep.gains.k2[i]).cwiseAbs().maxCoeff() < 1e-12);
  }
  fs::remove_all(dir);
}

TEST_CASE("pipeline failure reports carry the stage and the violated condition") {
  // Unexcited inputs make stabilization non-informative: the report must say
  // which agent failed and keep the verdicts gathered so far.
  json j = minimal_scenario_json();
  j["plants"][0]["input"] = json::parse(R"({"type": "zero"})");
  const Scenario s = scenario_from_json(j);
  const PipelineReport rep = run_pipeline(s);
  CHECK(rep.status != "ok");
  CHECK(rep.failure_stage.find("synthesis") != std::string::npos);
  CHECK_FALSE(rep.verified);
  const json rj = report_to_json(rep);
  CHECK(rj.contains("failure"));
}
