#include "dcor/scenario.hpp"

#include "dcor/linalg.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace dcor {

namespace {

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ScenarioError(path + ": " + e.what());
  }
}

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ScenarioError(where + ": missing \"" + key + "\"");
  return *it;
}

}  // namespace

MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ScenarioError("matrix must be a nonempty array");
  if (!j.front().is_array()) {  // flat array -> row vector
    MatrixXd m(1, j.size());
    for (size_t c = 0; c < j.size(); ++c) m(0, c) = j[c].get<double>();
    return m;
  }
  const size_t rows = j.size(), cols = j.front().size();
  MatrixXd m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ScenarioError("matrix rows must all have the same length");
    for (size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw ScenarioError("vector must be an array");
  VectorXd v(j.size());
  for (size_t k = 0; k < j.size(); ++k) v(k) = j[k].get<double>();
  return v;
}

json vector_to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

GraphSpec graph_from_json(const json& j) {
  GraphSpec g;
  g.n_followers = require(j, "n_followers", "graph").get<int>();
  if (g.n_followers < 1) throw ScenarioError("graph: n_followers must be >= 1");
  g.eps1 = require(j, "eps1", "graph").get<double>();
  g.eps2 = require(j, "eps2", "graph").get<double>();
  g.adjacency = MatrixXd::Zero(g.n_followers + 1, g.n_followers + 1);
  for (const auto& e : require(j, "edges", "graph")) {
    if (!e.is_array() || e.size() != 3)
      throw ScenarioError("graph: each edge must be [to, from, weight]");
    const int i = e[0].get<int>(), jn = e[1].get<int>();
    if (i < 0 || i > g.n_followers || jn < 0 || jn > g.n_followers)
      throw ScenarioError("graph: edge node index out of range");
    g.adjacency(i, jn) = e[2].get<double>();
  }
  try {
    validate_graph(g);
  } catch (const std::exception& e) {
    throw ScenarioError(std::string("graph: ") + e.what());
  }
  return g;
}

json graph_to_json(const GraphSpec& graph) {
  json j;
  j["n_followers"] = graph.n_followers;
  j["eps1"] = graph.eps1;
  j["eps2"] = graph.eps2;
  json edges = json::array();
  for (Eigen::Index i = 0; i <= graph.n_followers; ++i)
    for (Eigen::Index c = 0; c <= graph.n_followers; ++c)
      if (graph.adjacency(i, c) != 0.0)
        edges.push_back({i, c, graph.adjacency(i, c)});
  j["edges"] = std::move(edges);
  return j;
}

GraphSpec load_graph(const std::string& path) { return graph_from_json(parse_file(path)); }

VectorXd InputSpec::eval(double t) const {
  if (type == "zero") return VectorXd::Zero(coef.rows());
  if (type == "exp") return coef.col(0) * std::exp(rate * t);
  if (type == "sin") return coef.col(0) * std::sin(rate * t);
  if (type == "cos") return coef.col(0) * std::cos(rate * t);
  if (type == "poly") {
    VectorXd u = VectorXd::Zero(coef.rows());
    double tk = 1.0;
    for (Eigen::Index k = 0; k < coef.cols(); ++k, tk *= t) u += coef.col(k) * tk;
    return u;
  }
  throw ScenarioError("input: unknown type \"" + type + "\"");
}

std::string to_string(ScenarioMode mode) {
  return mode == ScenarioMode::exact ? "exact" : "noisy";
}

ScenarioMode scenario_mode_from_string(const std::string& name) {
  if (name == "exact") return ScenarioMode::exact;
  if (name == "noisy") return ScenarioMode::noisy;
  throw ScenarioError("mode must be \"exact\" or \"noisy\", got \"" + name + "\"");
}

namespace {

InputSpec input_from_json(const json& j, int m) {
  InputSpec in;
  in.type = require(j, "type", "input").get<std::string>();
  if (in.type == "zero") {
    in.coef = MatrixXd::Zero(m, 1);
    return in;
  }
  in.coef = matrix_from_json(require(j, "coef", "input"));
  if (in.coef.rows() == 1 && m == 1 && in.type != "poly")
    in.coef.transposeInPlace();  // accept a flat list for a scalar channel
  if (in.coef.rows() != m)
    throw ScenarioError("input: coef must have one row per input channel");
  if (j.contains("rate")) in.rate = j["rate"].get<double>();
  return in;
}

json input_to_json(const InputSpec& in) {
  json j;
  j["type"] = in.type;
  if (in.type != "zero") {
    j["coef"] = matrix_to_json(in.coef);
    j["rate"] = in.rate;
  }
  return j;
}

void validate_scenario(const Scenario& s) {
  const int q = static_cast<int>(s.exo.s.rows());
  if (q == 0 || s.exo.s.cols() != q) throw ScenarioError("exo: s must be square and nonempty");
  for (Eigen::Index k = 0; k < s.exo.spectrum.size(); ++k)
    if (s.exo.spectrum(k).real() < -1e-9)
      throw ScenarioError("exo: spectrum has an eigenvalue with negative real part (Re = " +
                          std::to_string(s.exo.spectrum(k).real()) + ")");
  if (s.v0.size() != q) throw ScenarioError("exo: v0 must have length " + std::to_string(q));

  if (s.schedule.empty()) throw ScenarioError("graphs: need at least one schedule entry");
  for (size_t k = 0; k < s.schedule.size(); ++k) {
    const auto& entry = s.schedule[k];
    if (k == 0 && entry.t_switch > 0.0)
      throw ScenarioError("graphs: first entry must be active from t = 0");
    if (k > 0 && !(s.schedule[k - 1].t_switch < entry.t_switch))
      throw ScenarioError("graphs: t_switch values must strictly increase");
    try {
      validate_graph(entry.graph);
    } catch (const std::exception& e) {
      throw ScenarioError("graphs[" + std::to_string(k) + "]: " + e.what());
    }
    if (!has_leader_rooted_spanning_tree(entry.graph))
      throw ScenarioError("graphs[" + std::to_string(k) +
                          "]: no spanning tree rooted at the leader");
    if (!s.plants.empty() && entry.graph.n_followers != s.n_agents())
      throw ScenarioError("graphs[" + std::to_string(k) + "]: follower count != plant count");
  }

  int p_common = -1;
  for (int i = 0; i < s.n_agents(); ++i) {
    const auto& pl = s.plants[i].model;
    const std::string where = "plants[" + std::to_string(i) + "]";
    if (pl.a.rows() != pl.a.cols() || pl.a.rows() == 0)
      throw ScenarioError(where + ": a must be square");
    if (pl.b.rows() != pl.n()) throw ScenarioError(where + ": b row count != state dim");
    if (pl.c.cols() != pl.n()) throw ScenarioError(where + ": c column count != state dim");
    if (pl.d.rows() != pl.p() || pl.d.cols() != pl.m())
      throw ScenarioError(where + ": d must be p x m");
    if (pl.e.rows() != pl.n() || pl.e.cols() != q)
      throw ScenarioError(where + ": e must be n x q");
    if (pl.f.rows() != pl.p() || pl.f.cols() != q)
      throw ScenarioError(where + ": f must be p x q");
    if (p_common < 0) p_common = pl.p();
    if (pl.p() != p_common) throw ScenarioError(where + ": output dim differs across agents");
    if (s.plants[i].x0.size() != pl.n()) throw ScenarioError(where + ": x0 length != state dim");
    if (s.plants[i].input.coef.rows() != pl.m())
      throw ScenarioError(where + ": input channel count != input dim");
  }

  if (!(s.window0 < s.window1)) throw ScenarioError("collect: window must satisfy w0 < w1");
  if (s.anchor < s.window0 || s.anchor > s.window1)
    throw ScenarioError("collect: anchor outside window");
  if (s.degree < 2) throw ScenarioError("collect: degree must be >= 2");
  if (s.mode == ScenarioMode::exact && !s.noise_c.empty())
    throw ScenarioError("collect: exact mode forbids noise_c");
  if (s.mode == ScenarioMode::noisy && s.noise_c.empty())
    throw ScenarioError("collect: noisy mode requires explicit noise_c values");
  if (!s.noise_c.empty() && s.noise_c.size() != 1 &&
      static_cast<int>(s.noise_c.size()) != s.schedule.front().graph.n_followers)
    throw ScenarioError("collect: noise_c must hold one value or one per agent");
  for (double c : s.noise_c)
    if (!(c > 0)) throw ScenarioError("collect: noise_c values must be positive");

  if (!(s.step > 0)) throw ScenarioError("sim: step must be positive");
  if (!(s.t_end > 0)) throw ScenarioError("sim: t_end must be positive");
  if (!(s.tail_fraction > 0 && s.tail_fraction < 1))
    throw ScenarioError("sim: tail_fraction must lie in (0, 1)");
  if (!(s.mu_safety >= 1.0)) throw ScenarioError("mu: safety must be >= 1");
  if (s.decay_rate < 0) throw ScenarioError("synthesis: decay_rate must be >= 0");
  if (!(s.lmi_margin > 0)) throw ScenarioError("synthesis: margin must be positive");
  if (!s.k1_override.empty()) {
    if (static_cast<int>(s.k1_override.size()) != s.n_agents())
      throw ScenarioError("synthesis: k1_override needs one matrix per agent");
    for (int i = 0; i < s.n_agents(); ++i)
      if (s.k1_override[i].rows() != s.plants[i].model.m() ||
          s.k1_override[i].cols() != s.plants[i].model.n())
        throw ScenarioError("synthesis: k1_override[" + std::to_string(i) +
                            "] must be m x n for that agent");
  }
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  Scenario s;
  try {
    s.name = j.value("name", "scenario");
    s.mode = scenario_mode_from_string(require(j, "mode", "scenario").get<std::string>());

    const json& exo = require(j, "exo", "scenario");
    s.exo = make_exo_spec(matrix_from_json(require(exo, "s", "exo")));
    s.v0 = vector_from_json(require(exo, "v0", "exo"));

    if (j.contains("plants")) {
      for (const auto& pj : j["plants"]) {
        ScenarioPlant sp;
        sp.model.a = matrix_from_json(require(pj, "a", "plant"));
        sp.model.b = matrix_from_json(require(pj, "b", "plant"));
        sp.model.c = matrix_from_json(require(pj, "c", "plant"));
        sp.model.d = matrix_from_json(require(pj, "d", "plant"));
        sp.model.e = matrix_from_json(require(pj, "e", "plant"));
        sp.model.f = matrix_from_json(require(pj, "f", "plant"));
        sp.x0 = vector_from_json(require(pj, "x0", "plant"));
        sp.input = input_from_json(require(pj, "input", "plant"), sp.model.m());
        s.plants.push_back(std::move(sp));
      }
    }

    for (const auto& gj : require(j, "graphs", "scenario")) {
      GraphSchedule entry;
      entry.t_switch = require(gj, "t_switch", "graphs").get<double>();
      entry.graph = graph_from_json(require(gj, "graph", "graphs"));
      s.schedule.push_back(std::move(entry));
    }

    const json& col = require(j, "collect", "scenario");
    const json& win = require(col, "window", "collect");
    if (!win.is_array() || win.size() != 2)
      throw ScenarioError("collect: window must be [t0, t1]");
    s.window0 = win[0].get<double>();
    s.window1 = win[1].get<double>();
    s.anchor = col.value("anchor", s.window0);
    s.degree = require(col, "degree", "collect").get<int>();
    if (col.contains("noise_c"))
      s.noise_c = col["noise_c"].get<std::vector<double>>();

    if (j.contains("sim")) {
      const json& sim = j["sim"];
      s.t_end = sim.value("t_end", s.t_end);
      s.step = sim.value("step", s.step);
      s.tail_fraction = sim.value("tail_fraction", s.tail_fraction);
    }
    if (j.contains("mu")) s.mu_safety = j["mu"].value("safety", s.mu_safety);
    if (j.contains("synthesis")) {
      const json& sy = j["synthesis"];
      s.decay_rate = sy.value("decay_rate", s.decay_rate);
      s.lmi_margin = sy.value("margin", s.lmi_margin);
      s.seed = sy.value("seed", s.seed);
      if (sy.contains("k1_override"))
        for (const auto& kj : sy["k1_override"]) s.k1_override.push_back(matrix_from_json(kj));
    }
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario: ") + e.what());
  }
  validate_scenario(s);
  return s;
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["mode"] = to_string(s.mode);
  j["exo"] = {{"s", matrix_to_json(s.exo.s)}, {"v0", vector_to_json(s.v0)}};
  if (!s.plants.empty()) {
    json plants = json::array();
    for (const auto& sp : s.plants) {
      json pj;
      pj["a"] = matrix_to_json(sp.model.a);
      pj["b"] = matrix_to_json(sp.model.b);
      pj["c"] = matrix_to_json(sp.model.c);
      pj["d"] = matrix_to_json(sp.model.d);
      pj["e"] = matrix_to_json(sp.model.e);
      pj["f"] = matrix_to_json(sp.model.f);
      pj["x0"] = vector_to_json(sp.x0);
      pj["input"] = input_to_json(sp.input);
      plants.push_back(std::move(pj));
    }
    j["plants"] = std::move(plants);
  }
  json graphs = json::array();
  for (const auto& entry : s.schedule)
    graphs.push_back({{"t_switch", entry.t_switch}, {"graph", graph_to_json(entry.graph)}});
  j["graphs"] = std::move(graphs);
  j["collect"] = {{"window", {s.window0, s.window1}}, {"anchor", s.anchor}, {"degree", s.degree}};
  if (!s.noise_c.empty()) j["collect"]["noise_c"] = s.noise_c;
  j["sim"] = {{"t_end", s.t_end}, {"step", s.step}, {"tail_fraction", s.tail_fraction}};
  j["mu"] = {{"safety", s.mu_safety}};
  j["synthesis"] = {{"decay_rate", s.decay_rate}, {"margin", s.lmi_margin}, {"seed", s.seed}};
  if (!s.k1_override.empty()) {
    json ov = json::array();
    for (const auto& k : s.k1_override) ov.push_back(matrix_to_json(k));
    j["synthesis"]["k1_override"] = std::move(ov);
  }
  return j;
}

Scenario load_scenario(const std::string& path) { return scenario_from_json(parse_file(path)); }

json data_to_json(const std::vector<AgentData>& agents, const ExoSpec& exo) {
  json j;
  j["exo"] = {{"s", matrix_to_json(exo.s)}};
  if (!agents.empty()) j["window"] = {agents.front().t0, agents.front().t1};
  json list = json::array();
  for (const auto& d : agents) {
    json aj;
    aj["x"] = matrix_to_json(d.x);
    aj["u"] = matrix_to_json(d.u);
    aj["err"] = matrix_to_json(d.err);
    aj["exo_coeffs"] = matrix_to_json(d.exo);
    aj["e"] = matrix_to_json(d.e_mat);
    aj["f"] = matrix_to_json(d.f_mat);
    if (d.noise_c) aj["noise_c"] = *d.noise_c;
    list.push_back(std::move(aj));
  }
  j["agents"] = std::move(list);
  return j;
}

std::pair<std::vector<AgentData>, ExoSpec> data_from_json(const json& j) {
  try {
    ExoSpec exo = make_exo_spec(matrix_from_json(require(require(j, "exo", "data"), "s", "exo")));
    double t0 = -1.0, t1 = 1.0;
    if (j.contains("window")) {
      t0 = j["window"][0].get<double>();
      t1 = j["window"][1].get<double>();
    }
    std::vector<AgentData> agents;
    for (const auto& aj : require(j, "agents", "data")) {
      AgentData d;
      d.x = matrix_from_json(require(aj, "x", "agent data"));
      d.u = matrix_from_json(require(aj, "u", "agent data"));
      d.err = matrix_from_json(require(aj, "err", "agent data"));
      d.exo = matrix_from_json(require(aj, "exo_coeffs", "agent data"));
      d.e_mat = matrix_from_json(require(aj, "e", "agent data"));
      d.f_mat = matrix_from_json(require(aj, "f", "agent data"));
      if (aj.contains("noise_c")) d.noise_c = aj["noise_c"].get<double>();
      d.t0 = t0;
      d.t1 = t1;
      const int cols = d.cols();
      if (d.u.cols() != cols || d.err.cols() != cols || d.exo.cols() != cols)
        throw ScenarioError("agent data: coefficient matrices must share column count");
      agents.push_back(std::move(d));
    }
    if (agents.empty()) throw ScenarioError("data: no agents");
    return {std::move(agents), std::move(exo)};
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("data: ") + e.what());
  }
}

json gains_to_json(const GainSet& gains) {
  json j;
  j["mu"] = gains.mu;
  json list = json::array();
  for (size_t i = 0; i < gains.k1.size(); ++i)
    list.push_back({{"k1", matrix_to_json(gains.k1[i])}, {"k2", matrix_to_json(gains.k2[i])}});
  j["agents"] = std::move(list);
  return j;
}

GainSet gains_from_json(const json& j) {
  const json& g = j.contains("gains") ? j["gains"] : j;
  GainSet gains;
  try {
    gains.mu = require(g, "mu", "gains").get<double>();
    for (const auto& aj : require(g, "agents", "gains")) {
      gains.k1.push_back(matrix_from_json(require(aj, "k1", "gains agent")));
      gains.k2.push_back(matrix_from_json(require(aj, "k2", "gains agent")));
    }
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("gains: ") + e.what());
  }
  if (gains.k1.empty()) throw ScenarioError("gains: no agents");
  return gains;
}

std::pair<std::vector<double>, MatrixXd> read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ScenarioError(path + ": empty file");
  int n_cols = 1;
  for (char ch : line)
    if (ch == ',') ++n_cols;
  if (n_cols < 2) throw ScenarioError(path + ": expected header t, x_1..x_n");
  std::vector<double> times;
  std::vector<double> flat;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int c = 0;
    while (std::getline(ss, cell, ',')) {
      const double val = std::stod(cell);
      if (c == 0)
        times.push_back(val);
      else
        flat.push_back(val);
      ++c;
    }
    if (c != n_cols) throw ScenarioError(path + ": ragged row");
  }
  if (times.size() < 2) throw ScenarioError(path + ": need at least two samples");
  MatrixXd values(n_cols - 1, times.size());
  for (size_t k = 0; k < times.size(); ++k)
    for (int r = 0; r < n_cols - 1; ++r) values(r, k) = flat[k * (n_cols - 1) + r];
  return {std::move(times), std::move(values)};
}

void write_coefficient_csv(const ChebSeries& series, const std::string& csv_path,
                           const std::string& sidecar_path) {
  std::ofstream out(csv_path);
  if (!out) throw ScenarioError("cannot open " + csv_path);
  out << "k";
  for (int r = 1; r <= series.dim(); ++r) out << ",c_" << r;
  out << "\n";
  out.precision(17);
  for (int k = 0; k <= series.degree(); ++k) {
    out << k;
    for (int r = 0; r < series.dim(); ++r) out << "," << series.coeffs(r, k);
    out << "\n";
  }
  json sidecar = {{"t0", series.t0}, {"t1", series.t1}, {"degree", series.degree()}};
  std::ofstream sc(sidecar_path);
  if (!sc) throw ScenarioError("cannot open " + sidecar_path);
  sc << sidecar.dump(2) << "\n";
}

ChebSeries read_coefficient_csv(const std::string& csv_path, const std::string& sidecar_path) {
  const json sidecar = parse_file(sidecar_path);
  auto [index, values] = read_trajectory_csv(csv_path);  // same layout, first column = k
  ChebSeries series;
  series.coeffs = values;
  series.t0 = require(sidecar, "t0", "sidecar").get<double>();
  series.t1 = require(sidecar, "t1", "sidecar").get<double>();
  const int degree = require(sidecar, "degree", "sidecar").get<int>();
  if (degree + 1 != static_cast<int>(index.size()))
    throw ScenarioError("coefficient file row count != sidecar degree + 1");
  return series;
}

}  // namespace dcor
