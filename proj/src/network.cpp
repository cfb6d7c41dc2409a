#include "phgrid/network.hpp"

#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>

namespace phgrid {

namespace {

void check_endpoints(int n, int from, int to, const char* what) {
  if (from < 0 || from >= n || to < 0 || to >= n) {
    throw std::invalid_argument(std::string(what) + " endpoint out of range: (" +
                                std::to_string(from) + ", " + std::to_string(to) +
                                ") with n = " + std::to_string(n));
  }
  if (from == to) {
    throw std::invalid_argument(std::string(what) + " self-loop at node " + std::to_string(from));
  }
}

// Union-find with path halving.
class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  int find(int a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }

  void unite(int a, int b) { parent_[find(a)] = find(b); }

 private:
  std::vector<int> parent_;
};

}  // namespace

Eigen::MatrixXd build_incidence(int n, const std::vector<EdgeSpec>& edges) {
  if (n < 1) throw std::invalid_argument("need at least one node");
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(edges.size()));
  for (std::size_t l = 0; l < edges.size(); ++l) {
    check_endpoints(n, edges[l].from, edges[l].to, "grid edge");
    D(edges[l].from, static_cast<Eigen::Index>(l)) = 1.0;
    D(edges[l].to, static_cast<Eigen::Index>(l)) = -1.0;
  }
  return D;
}

Eigen::MatrixXd build_susceptance(int n, const std::vector<EdgeSpec>& edges,
                                  const Eigen::VectorXd& machine_subtransient) {
  if (machine_subtransient.size() != n) {
    throw std::invalid_argument("need one subtransient reactance per machine");
  }
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (const EdgeSpec& e : edges) {
    check_endpoints(n, e.from, e.to, "grid edge");
    if (e.reactance < 0.0) {
      throw std::invalid_argument("negative line reactance on edge (" + std::to_string(e.from) +
                                  ", " + std::to_string(e.to) + ")");
    }
    const double X_l = machine_subtransient[e.from] + e.reactance + machine_subtransient[e.to];
    if (X_l <= 0.0) {
      throw std::invalid_argument("nonpositive total reactance on edge (" +
                                  std::to_string(e.from) + ", " + std::to_string(e.to) + ")");
    }
    const double B_l = -1.0 / X_l;
    B(e.from, e.to) += B_l;
    B(e.to, e.from) += B_l;
    B(e.from, e.from) += B_l;
    B(e.to, e.to) += B_l;
  }
  return B;
}

NetworkTopology build_topology(int n, std::vector<EdgeSpec> edges,
                               const Eigen::VectorXd& machine_subtransient) {
  NetworkTopology topo;
  topo.n = n;
  topo.incidence = build_incidence(n, edges);
  topo.susceptance = build_susceptance(n, edges, machine_subtransient);
  topo.edge_susceptance.resize(static_cast<Eigen::Index>(edges.size()));
  for (std::size_t l = 0; l < edges.size(); ++l) {
    const EdgeSpec& e = edges[l];
    const double X_l = machine_subtransient[e.from] + e.reactance + machine_subtransient[e.to];
    topo.edge_susceptance[static_cast<Eigen::Index>(l)] = -1.0 / X_l;
  }
  topo.edges = std::move(edges);

  std::vector<std::pair<int, int>> endpoints;
  endpoints.reserve(topo.edges.size());
  for (const EdgeSpec& e : topo.edges) endpoints.emplace_back(e.from, e.to);
  if (!is_connected(n, endpoints)) {
    throw std::invalid_argument("electrical grid is not connected");
  }
  return topo;
}

CommGraph build_comm_laplacian(int n, std::vector<WeightedEdge> edges) {
  if (n < 1) throw std::invalid_argument("need at least one node");
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::pair<int, int>> endpoints;
  endpoints.reserve(edges.size());
  for (const WeightedEdge& e : edges) {
    check_endpoints(n, e.from, e.to, "communication edge");
    if (!(e.weight > 0.0)) {
      throw std::invalid_argument("nonpositive communication weight on edge (" +
                                  std::to_string(e.from) + ", " + std::to_string(e.to) + ")");
    }
    L(e.from, e.from) += e.weight;
    L(e.to, e.to) += e.weight;
    L(e.from, e.to) -= e.weight;
    L(e.to, e.from) -= e.weight;
    endpoints.emplace_back(e.from, e.to);
  }
  if (!is_connected(n, endpoints)) {
    throw std::invalid_argument("communication graph is not connected");
  }
  CommGraph g;
  g.n = n;
  g.edges = std::move(edges);
  g.laplacian = std::move(L);
  return g;
}

bool is_connected(int n, const std::vector<std::pair<int, int>>& endpoints) {
  if (n <= 1) return true;
  DisjointSets sets(n);
  for (const auto& [a, b] : endpoints) sets.unite(a, b);
  const int root = sets.find(0);
  for (int i = 1; i < n; ++i) {
    if (sets.find(i) != root) return false;
  }
  return true;
}

Eigen::VectorXd delta_relative(const NetworkTopology& topo, const Eigen::VectorXd& eta) {
  if (eta.size() != topo.m()) throw std::invalid_argument("eta size does not match edge count");
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(topo.n);
  std::vector<bool> visited(static_cast<std::size_t>(topo.n), false);
  // adjacency as (neighbor, edge index) pairs
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(topo.n));
  for (int l = 0; l < topo.m(); ++l) {
    adj[static_cast<std::size_t>(topo.edges[static_cast<std::size_t>(l)].from)].emplace_back(
        topo.edges[static_cast<std::size_t>(l)].to, l);
    adj[static_cast<std::size_t>(topo.edges[static_cast<std::size_t>(l)].to)].emplace_back(
        topo.edges[static_cast<std::size_t>(l)].from, l);
  }
  std::queue<int> frontier;
  frontier.push(0);
  visited[0] = true;
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (const auto& [k, l] : adj[static_cast<std::size_t>(i)]) {
      if (visited[static_cast<std::size_t>(k)]) continue;
      // eta_l = delta_from - delta_to
      if (topo.edges[static_cast<std::size_t>(l)].from == i) {
        delta[k] = delta[i] - eta[l];
      } else {
        delta[k] = delta[i] + eta[l];
      }
      visited[static_cast<std::size_t>(k)] = true;
      frontier.push(k);
    }
  }
  return delta;
}

}  // namespace phgrid
