#include "dcor/sim.hpp"

#include "dcor/linalg.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace dcor {

namespace {

int checked_steps(double span, double step, const char* what) {
  if (!(step > 0)) throw std::invalid_argument("simulate: need step > 0");
  const double raw = span / step;
  const int n = static_cast<int>(std::llround(raw));
  if (std::abs(raw - n) > 1e-6)
    throw std::invalid_argument(std::string("simulate: ") + what + " not a multiple of step");
  return n;
}

using Rhs = std::function<VectorXd(double, const VectorXd&)>;

// One classic fourth-order step (h may be negative for backward segments).
VectorXd rk4_step(const Rhs& f, double t, const VectorXd& y, double h) {
  const VectorXd k1 = f(t, y);
  const VectorXd k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
  const VectorXd k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
  const VectorXd k4 = f(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_finite(const VectorXd& y, double t) {
  if (!y.allFinite())
    throw std::runtime_error("simulate: state diverged (nonfinite) at t = " + std::to_string(t));
}

struct Packing {
  std::vector<int> x_off;
  std::vector<int> eta_off;
  int v_off = 0;
  int total = 0;
};

Packing make_packing(const std::vector<PlantModel>& plants, int q, bool with_eta) {
  Packing p;
  int off = 0;
  p.v_off = off;
  off += q;
  for (const auto& pl : plants) {
    p.x_off.push_back(off);
    off += pl.n();
    if (with_eta) {
      p.eta_off.push_back(off);
      off += q;
    }
  }
  p.total = off;
  return p;
}

// Cubic Hermite interpolation of a column-sampled signal with derivatives.
VectorXd hermite_at(const std::vector<double>& times, const MatrixXd& vals, const MatrixXd& ders,
                    double t) {
  const double t0 = times.front(), tend = times.back();
  const double h = times.size() > 1 ? times[1] - times[0] : 1.0;
  int k = static_cast<int>(std::floor((t - t0) / h));
  k = std::max(0, std::min<int>(k, static_cast<int>(times.size()) - 2));
  const double s = (t - times[k]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  (void)tend;
  return h00 * vals.col(k) + h10 * h * ders.col(k) + h01 * vals.col(k + 1) +
         h11 * h * ders.col(k + 1);
}

}  // namespace

SimResult simulate_open_loop(const std::vector<PlantModel>& plants, const ExoSpec& exo,
                             const InputFn& input_fn, const std::vector<VectorXd>& x0,
                             const VectorXd& v0, double t0, double t1, double step,
                             double anchor) {
  if (!(t0 < t1)) throw std::invalid_argument("simulate: need t0 < t1");
  if (anchor < t0 || anchor > t1) throw std::invalid_argument("simulate: anchor outside span");
  if (x0.size() != plants.size()) throw std::invalid_argument("simulate: one x0 per plant");
  const int q = static_cast<int>(exo.s.rows());
  const int na = static_cast<int>(plants.size());
  for (int i = 0; i < na; ++i)
    if (x0[i].size() != plants[i].n())
      throw std::invalid_argument("simulate: x0 dimension mismatch");

  const Packing pk = make_packing(plants, q, /*with_eta=*/false);
  const int n_back = checked_steps(anchor - t0, step, "anchor offset");
  const int n_fwd = checked_steps(t1 - anchor, step, "span");
  const int total = n_back + n_fwd + 1;

  auto rhs = [&](double t, const VectorXd& yv) {
    VectorXd dy(pk.total);
    const auto v = yv.segment(pk.v_off, q);
    dy.segment(pk.v_off, q) = exo.s * v;
    for (int i = 0; i < na; ++i) {
      const auto xi = yv.segment(pk.x_off[i], plants[i].n());
      dy.segment(pk.x_off[i], plants[i].n()) =
          plants[i].a * xi + plants[i].b * input_fn(i, t) + plants[i].e * v;
    }
    return dy;
  };

  VectorXd y0(pk.total);
  y0.segment(pk.v_off, q) = v0;
  for (int i = 0; i < na; ++i) y0.segment(pk.x_off[i], plants[i].n()) = x0[i];

  MatrixXd grid(pk.total, total);
  grid.col(n_back) = y0;
  VectorXd y = y0;
  for (int k = 0; k < n_back; ++k) {  // backward segment
    const double t = anchor - k * step;
    y = rk4_step(rhs, t, y, -step);
    check_finite(y, t - step);
    grid.col(n_back - k - 1) = y;
  }
  y = y0;
  for (int k = 0; k < n_fwd; ++k) {
    const double t = anchor + k * step;
    y = rk4_step(rhs, t, y, step);
    check_finite(y, t + step);
    grid.col(n_back + k + 1) = y;
  }

  SimResult res;
  res.closed_loop = false;
  res.plants = plants;
  res.s = exo.s;
  res.input_fn = input_fn;
  res.times.resize(total);
  for (int k = 0; k < total; ++k) res.times[k] = t0 + k * step;
  res.v = grid.middleRows(pk.v_off, q);
  res.vdot = exo.s * res.v;
  res.x.resize(na);
  res.xdot.resize(na);
  res.u.resize(na);
  res.y.resize(na);
  res.err.resize(na);
  for (int i = 0; i < na; ++i) {
    const auto& pl = plants[i];
    res.x[i] = grid.middleRows(pk.x_off[i], pl.n());
    res.u[i].resize(pl.m(), total);
    for (int k = 0; k < total; ++k) res.u[i].col(k) = input_fn(i, res.times[k]);
    res.xdot[i] = pl.a * res.x[i] + pl.b * res.u[i] + pl.e * res.v;
    res.y[i] = pl.c * res.x[i] + pl.d * res.u[i];
    res.err[i] = res.y[i] + pl.f * res.v;
  }
  return res;
}

SimResult simulate_open_loop(const std::vector<PlantModel>& plants, const ExoSpec& exo,
                             const InputFn& input_fn, const std::vector<VectorXd>& x0,
                             const VectorXd& v0, double t0, double t1, double step) {
  return simulate_open_loop(plants, exo, input_fn, x0, v0, t0, t1, step, t0);
}

SimResult simulate_closed_loop(const std::vector<PlantModel>& plants, const ExoSpec& exo,
                               const std::vector<GraphSchedule>& schedule, const GainSet& gains,
                               const std::vector<VectorXd>& x0, const std::vector<VectorXd>& eta0,
                               const VectorXd& v0, double t0, double t1, double step) {
  const int na = static_cast<int>(plants.size());
  const int q = static_cast<int>(exo.s.rows());
  if (schedule.empty()) throw std::invalid_argument("simulate: empty graph schedule");
  if (gains.k1.size() != plants.size() || gains.k2.size() != plants.size())
    throw std::invalid_argument("simulate: one gain pair per plant");
  if (x0.size() != plants.size() || eta0.size() != plants.size())
    throw std::invalid_argument("simulate: one initial state pair per plant");
  for (size_t k = 0; k + 1 < schedule.size(); ++k)
    if (!(schedule[k].t_switch < schedule[k + 1].t_switch))
      throw std::invalid_argument("simulate: schedule switch times must increase");
  std::vector<MatrixXd> adj;
  for (const auto& entry : schedule) {
    if (entry.graph.n_followers != na)
      throw std::invalid_argument("simulate: graph follower count mismatch");
    if (!has_leader_rooted_spanning_tree(entry.graph))
      throw std::invalid_argument("simulate: scheduled graph lacks a leader-rooted spanning tree");
    validate_graph(entry.graph);
    adj.push_back(entry.graph.adjacency);
  }
  auto graph_at = [&](double t) {
    size_t k = 0;
    for (size_t s = 1; s < schedule.size(); ++s)
      if (schedule[s].t_switch < t) k = s;  // left-continuous weights
    return k;
  };

  const Packing pk = make_packing(plants, q, /*with_eta=*/true);
  const int n_steps = checked_steps(t1 - t0, step, "span");
  const int total = n_steps + 1;

  auto rhs = [&](double t, const VectorXd& yv) {
    VectorXd dy(pk.total);
    const auto v = yv.segment(pk.v_off, q);
    dy.segment(pk.v_off, q) = exo.s * v;
    const MatrixXd& a = adj[graph_at(t)];
    for (int i = 0; i < na; ++i) {
      const auto xi = yv.segment(pk.x_off[i], plants[i].n());
      const auto etai = yv.segment(pk.eta_off[i], q);
      const VectorXd ui = gains.k1[i] * xi + gains.k2[i] * etai;
      dy.segment(pk.x_off[i], plants[i].n()) = plants[i].a * xi + plants[i].b * ui + plants[i].e * v;
      VectorXd coupling = a(i + 1, 0) * (v - etai);
      for (int j = 0; j < na; ++j)
        if (j != i) coupling += a(i + 1, j + 1) * (yv.segment(pk.eta_off[j], q) - etai);
      dy.segment(pk.eta_off[i], q) = exo.s * etai + gains.mu * coupling;
    }
    return dy;
  };

  VectorXd y(pk.total);
  y.segment(pk.v_off, q) = v0;
  for (int i = 0; i < na; ++i) {
    y.segment(pk.x_off[i], plants[i].n()) = x0[i];
    y.segment(pk.eta_off[i], q) = eta0[i];
  }

  MatrixXd grid(pk.total, total);
  MatrixXd dgrid(pk.total, total);
  grid.col(0) = y;
  dgrid.col(0) = rhs(t0, y);
  for (int k = 0; k < n_steps; ++k) {
    const double t = t0 + k * step;
    y = rk4_step(rhs, t, y, step);
    check_finite(y, t + step);
    grid.col(k + 1) = y;
    dgrid.col(k + 1) = rhs(t + step, y);
  }

  SimResult res;
  res.closed_loop = true;
  res.plants = plants;
  res.s = exo.s;
  res.gains = gains;
  for (const auto& entry : schedule)
    if (entry.t_switch > t0 && entry.t_switch <= t1) res.switch_times.push_back(entry.t_switch);
  res.times.resize(total);
  for (int k = 0; k < total; ++k) res.times[k] = t0 + k * step;
  res.v = grid.middleRows(pk.v_off, q);
  res.vdot = dgrid.middleRows(pk.v_off, q);
  res.x.resize(na);
  res.xdot.resize(na);
  res.u.resize(na);
  res.y.resize(na);
  res.err.resize(na);
  res.eta.resize(na);
  res.etadot.resize(na);
  for (int i = 0; i < na; ++i) {
    const auto& pl = plants[i];
    res.x[i] = grid.middleRows(pk.x_off[i], pl.n());
    res.xdot[i] = dgrid.middleRows(pk.x_off[i], pl.n());
    res.eta[i] = grid.middleRows(pk.eta_off[i], q);
    res.etadot[i] = dgrid.middleRows(pk.eta_off[i], q);
    res.u[i] = gains.k1[i] * res.x[i] + gains.k2[i] * res.eta[i];
    res.y[i] = pl.c * res.x[i] + pl.d * res.u[i];
    res.err[i] = res.y[i] + pl.f * res.v;
  }
  return res;
}

std::vector<AgentData> collect_data(const SimResult& result, int degree, double w0, double w1) {
  if (result.times.size() < 2) throw std::invalid_argument("collect_data: empty simulation");
  const double slack = 1e-9;
  if (w0 < result.times.front() - slack || w1 > result.times.back() + slack || !(w0 < w1))
    throw std::invalid_argument("collect_data: window outside simulated span");
  const double span_h = result.times[1] - result.times[0];
  if (!(w1 - w0 > 2 * span_h)) throw std::invalid_argument("collect_data: window too short");

  const int na = static_cast<int>(result.plants.size());
  const int q = static_cast<int>(result.v.rows());
  const std::vector<double> nodes = cgl_nodes(degree, w0, w1);
  const int nn = static_cast<int>(nodes.size());

  MatrixXd v_s(q, nn);
  for (int k = 0; k < nn; ++k) v_s.col(k) = hermite_at(result.times, result.v, result.vdot, nodes[k]);

  std::vector<AgentData> out(na);
  for (int i = 0; i < na; ++i) {
    const auto& pl = result.plants[i];
    MatrixXd x_s(pl.n(), nn), u_s(pl.m(), nn), e_s(pl.p(), nn);
    for (int k = 0; k < nn; ++k) {
      const VectorXd xi = hermite_at(result.times, result.x[i], result.xdot[i], nodes[k]);
      VectorXd ui;
      if (result.closed_loop) {
        const VectorXd etai = hermite_at(result.times, result.eta[i], result.etadot[i], nodes[k]);
        ui = result.gains.k1[i] * xi + result.gains.k2[i] * etai;
      } else {
        ui = result.input_fn(i, nodes[k]);
      }
      x_s.col(k) = xi;
      u_s.col(k) = ui;
      e_s.col(k) = pl.c * xi + pl.d * ui + pl.f * v_s.col(k);
    }
    AgentData d;
    d.x = fit_series(nodes, x_s, degree, w0, w1).coeffs;
    d.u = fit_series(nodes, u_s, degree, w0, w1).coeffs;
    d.err = fit_series(nodes, e_s, degree, w0, w1).coeffs;
    d.exo = fit_series(nodes, v_s, degree, w0, w1).coeffs;
    d.e_mat = pl.e;
    d.f_mat = pl.f;
    d.t0 = w0;
    d.t1 = w1;
    out[i] = std::move(d);
  }
  return out;
}

TrackingMetrics tracking_error_metrics(const SimResult& result, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0))
    throw std::invalid_argument("tracking_error_metrics: need 0 < tail_fraction < 1");
  const double t_start = result.times.front(), t_end = result.times.back();
  const double t_tail = t_end - tail_fraction * (t_end - t_start);
  TrackingMetrics m;
  const int na = static_cast<int>(result.err.size());
  m.per_agent = VectorXd::Zero(na);
  for (int i = 0; i < na; ++i)
    for (size_t k = 0; k < result.times.size(); ++k)
      if (result.times[k] >= t_tail)
        m.per_agent(i) = std::max(m.per_agent(i), result.err[i].col(k).norm());
  m.sup_tail = na > 0 ? m.per_agent.maxCoeff() : 0.0;
  return m;
}

void export_csv(const SimResult& result, const std::string& csv_path,
                const std::string& manifest_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("export_csv: cannot open " + csv_path);
  const int na = static_cast<int>(result.plants.size());
  const int q = static_cast<int>(result.v.rows());
  csv << "t";
  for (int j = 1; j <= q; ++j) csv << ",v_" << j;
  for (int i = 0; i < na; ++i) {
    const auto& pl = result.plants[i];
    for (int j = 1; j <= pl.n(); ++j) csv << ",x_" << i + 1 << "_" << j;
    for (int j = 1; j <= pl.m(); ++j) csv << ",u_" << i + 1 << "_" << j;
    for (int j = 1; j <= pl.p(); ++j) csv << ",y_" << i + 1 << "_" << j;
    for (int j = 1; j <= pl.p(); ++j) csv << ",e_" << i + 1 << "_" << j;
    if (result.closed_loop)
      for (int j = 1; j <= q; ++j) csv << ",eta_" << i + 1 << "_" << j;
  }
  csv << "\n";
  csv.precision(15);
  for (size_t k = 0; k < result.times.size(); ++k) {
    csv << result.times[k];
    for (int j = 0; j < q; ++j) csv << "," << result.v(j, k);
    for (int i = 0; i < na; ++i) {
      for (int j = 0; j < result.plants[i].n(); ++j) csv << "," << result.x[i](j, k);
      for (int j = 0; j < result.plants[i].m(); ++j) csv << "," << result.u[i](j, k);
      for (int j = 0; j < result.plants[i].p(); ++j) csv << "," << result.y[i](j, k);
      for (int j = 0; j < result.plants[i].p(); ++j) csv << "," << result.err[i](j, k);
      if (result.closed_loop)
        for (int j = 0; j < q; ++j) csv << "," << result.eta[i](j, k);
    }
    csv << "\n";
  }

  nlohmann::json manifest;
  manifest["n_agents"] = na;
  manifest["exo_dim"] = q;
  manifest["closed_loop"] = result.closed_loop;
  manifest["t0"] = result.times.front();
  manifest["t1"] = result.times.back();
  manifest["samples"] = result.times.size();
  manifest["switch_events"] = result.switch_times;
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& pl : result.plants)
    dims.push_back({{"n", pl.n()}, {"m", pl.m()}, {"p", pl.p()}});
  manifest["agents"] = dims;
  std::ofstream mf(manifest_path);
  if (!mf) throw std::runtime_error("export_csv: cannot open " + manifest_path);
  mf << manifest.dump(2) << "\n";
}

}  // namespace dcor
