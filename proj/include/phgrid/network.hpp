#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace phgrid {

/// One transmission line. Endpoints are 0-based machine indices; `from` is
/// the positive end of the edge in the incidence matrix.
struct EdgeSpec {
  int from = 0;
  int to = 0;
  double reactance = 0.0;  // series reactance X_T in p.u., >= 0
};

struct WeightedEdge {
  int from = 0;
  int to = 0;
  double weight = 0.0;  // > 0
};

/// Immutable electrical graph. Machine subtransient reactances are folded
/// into the line susceptances, so X_l = Xd_s[i] + X_T + Xd_s[k] per edge and
/// the dynamics never see a separate terminal reactance.
struct NetworkTopology {
  int n = 0;
  std::vector<EdgeSpec> edges;
  Eigen::MatrixXd incidence;         // n x m, one +1 and one -1 per column
  Eigen::MatrixXd susceptance;       // B: B_ik = -1/X_l (parallel edges add up)
  Eigen::VectorXd edge_susceptance;  // per-edge B_l = -1/X_l, all < 0

  int m() const { return static_cast<int>(edges.size()); }
};

/// Communication graph of the distributed controller, kept as its Laplacian.
struct CommGraph {
  int n = 0;
  std::vector<WeightedEdge> edges;
  Eigen::MatrixXd laplacian;  // symmetric PSD, row sums zero, connected
};

/// Node-edge incidence matrix; column order equals edge order.
/// Throws std::invalid_argument on self-loops or out-of-range endpoints.
Eigen::MatrixXd build_incidence(int n, const std::vector<EdgeSpec>& edges);

/// Susceptance matrix with machine subtransient reactances included in each
/// line: B_ik = -1/(Xd_s[i] + X_T + Xd_s[k]), B_ii = sum over neighbors.
/// Requires every total line reactance X_l > 0 and X_T >= 0.
Eigen::MatrixXd build_susceptance(int n, const std::vector<EdgeSpec>& edges,
                                  const Eigen::VectorXd& machine_subtransient);

/// Validated topology bundle. Requires a connected graph.
NetworkTopology build_topology(int n, std::vector<EdgeSpec> edges,
                               const Eigen::VectorXd& machine_subtransient);

/// Weighted Laplacian of a connected communication graph; rejects
/// nonpositive weights and disconnected graphs.
CommGraph build_comm_laplacian(int n, std::vector<WeightedEdge> edges);

/// Union-find reachability: true iff all n nodes are in one component.
bool is_connected(int n, const std::vector<std::pair<int, int>>& endpoints);

/// Angles relative to machine 0 recovered from edge differences eta along a
/// spanning tree. eta must lie in range(D^T), which holds for any state
/// constructed from machine angles.
Eigen::VectorXd delta_relative(const NetworkTopology& topo, const Eigen::VectorXd& eta);

}  // namespace phgrid
