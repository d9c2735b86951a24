#pragma once
// Ground-truth continuous-time simulation: heterogeneous follower plants, an
// autonomous exosystem, the distributed dynamic controller with graph
// coupling and topology switching, trajectory collection into coefficient
// data, and tracking-error metrics.

#include "dcor/graph.hpp"
#include "dcor/synthesis.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace dcor {

// Follower plant x' = a x + b u + e v, y = c x + d u, tracking error
// err = y + f v. The a/b/c/d blocks are simulator- and oracle-only; the
// synthesis path sees only collected data plus the known e/f.
struct PlantModel {
  MatrixXd a, b, c, d, e, f;

  int n() const { return static_cast<int>(a.rows()); }
  int m() const { return static_cast<int>(b.cols()); }
  int p() const { return static_cast<int>(c.rows()); }
};

using InputFn = std::function<VectorXd(int agent, double t)>;

struct GraphSchedule {
  double t_switch = 0.0;
  GraphSpec graph;
};

struct GainSet {
  std::vector<MatrixXd> k1;
  std::vector<MatrixXd> k2;
  double mu = 0.0;
};

struct SimResult {
  std::vector<double> times;
  MatrixXd v, vdot;  // q x T
  std::vector<MatrixXd> x, xdot;  // per agent, n_i x T
  std::vector<MatrixXd> u;        // m_i x T
  std::vector<MatrixXd> y, err;   // p x T
  std::vector<MatrixXd> eta, etadot;  // q x T, closed loop only
  std::vector<double> switch_times;

  // Reconstruction context for dense resampling between grid points.
  bool closed_loop = false;
  std::vector<PlantModel> plants;
  MatrixXd s;
  InputFn input_fn;  // open loop
  GainSet gains;     // closed loop
};

// Fixed-step classic Runge-Kutta integration of the followers and exosystem
// over [t0, t1]. Initial states are given at `anchor` (default t0); the
// segment before the anchor is integrated backward. (t1-t0)/step and
// (anchor-t0)/step must be integral to within roundoff.
SimResult simulate_open_loop(const std::vector<PlantModel>& plants, const ExoSpec& exo,
                             const InputFn& input_fn, const std::vector<VectorXd>& x0,
                             const VectorXd& v0, double t0, double t1, double step,
                             double anchor);

SimResult simulate_open_loop(const std::vector<PlantModel>& plants, const ExoSpec& exo,
                             const InputFn& input_fn, const std::vector<VectorXd>& x0,
                             const VectorXd& v0, double t0, double t1, double step);

// Closed loop of plants + distributed controller
//   u_i = K1_i x_i + K2_i eta_i,
//   eta_i' = S eta_i + mu (sum_j a_ij (eta_j - eta_i) + a_i0 (v - eta_i)),
// under a piecewise-constant topology schedule (weights are left-continuous
// at a switch; states stay continuous).
SimResult simulate_closed_loop(const std::vector<PlantModel>& plants, const ExoSpec& exo,
                               const std::vector<GraphSchedule>& schedule, const GainSet& gains,
                               const std::vector<VectorXd>& x0, const std::vector<VectorXd>& eta0,
                               const VectorXd& v0, double t0, double t1, double step);

// Resamples every signal at the CGL nodes of [w0, w1] (cubic Hermite dense
// output on stored state/derivative pairs; inputs and outputs are
// reconstructed exactly from the interpolated states), fits coefficient
// series of the given degree, and assembles per-agent data.
std::vector<AgentData> collect_data(const SimResult& result, int degree, double w0, double w1);

struct TrackingMetrics {
  double sup_tail = 0.0;
  VectorXd per_agent;
};

// Supremum of ||err_i(t)|| over the trailing fraction of the horizon.
TrackingMetrics tracking_error_metrics(const SimResult& result, double tail_fraction);

// CSV export: header t, v_1..v_q, then per agent x_{i,*}, u_{i,*}, y_{i,*},
// e_{i,*} and (closed loop) eta_{i,*}. A JSON manifest with dimensions and
// switch events is written next to it.
void export_csv(const SimResult& result, const std::string& csv_path,
                const std::string& manifest_path);

}  // namespace dcor
