#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "drwgeom/errors.hpp"
#include "drwgeom/graph.hpp"
#include "drwgeom/rng.hpp"

namespace drwgeom {

enum class Topology { Line, Star, Sbm };

inline Topology topology_from_string(const std::string& s) {
  if (s == "line") return Topology::Line;
  if (s == "star") return Topology::Star;
  if (s == "sbm") return Topology::Sbm;
  throw ParseError("unknown topology '" + s + "'");
}

inline std::string to_string(Topology t) {
  switch (t) {
    case Topology::Line: return "line";
    case Topology::Star: return "star";
    default: return "sbm";
  }
}

struct ExperimentConfig {
  Topology topology = Topology::Line;
  int n = 10;
  int p = 1;
  double theta_min = -1.0;
  double theta_max = 1.0;
  int realizations = 100;
  int horizon = 0;  // 0 = exact
  std::uint64_t rng_seed = 1;
  int sbm_block = 5;        // size of the first block, second gets n - sbm_block
  double sbm_p_in = 0.8;
  double sbm_p_out = 0.2;
  double rank_tol = 1e-8;
  int threads = 0;          // 0 = DRWGEOM_THREADS or hardware default

  void validate() const {
    if (realizations < 1) throw ParseError("realizations must be >= 1");
    if (n < 3) throw ParseError("n must be >= 3");
    if (!(sbm_p_in > 0.0 && sbm_p_in <= 1.0 && sbm_p_out > 0.0 && sbm_p_out <= 1.0))
      throw ParseError("sbm probabilities must lie in (0, 1]");
  }
};

struct Realization {
  LabeledGraph graph;
  Eigen::VectorXd theta;
};

// One experiment instance: unit base weights, features U[-1,1]^p per edge,
// theta drawn uniformly from the configured range.  Streams are keyed by
// (seed, index), so any realization can be regenerated in isolation.
inline Realization generate(const ExperimentConfig& cfg, int realization_index) {
  cfg.validate();
  CounterRng rng(cfg.rng_seed, static_cast<std::uint64_t>(realization_index));
  const int n = cfg.n;

  std::vector<std::pair<int, int>> pairs;
  std::map<int, int> labels;
  switch (cfg.topology) {
    case Topology::Line:
      for (int i = 0; i + 1 < n; ++i) pairs.emplace_back(i, i + 1);
      labels = {{0, 1}, {n - 1, 2}};
      break;
    case Topology::Star:
      for (int k = 1; k < n; ++k) pairs.emplace_back(0, k);
      labels = {{1, 1}, {n - 1, 2}};  // two leaves of opposite classes
      break;
    case Topology::Sbm: {
      const int b = cfg.sbm_block;
      bool connected = false;
      for (int attempt = 0; attempt < 1000 && !connected; ++attempt) {
        pairs.clear();
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) {
            const bool same = (i < b) == (j < b);
            if (rng.uniform() < (same ? cfg.sbm_p_in : cfg.sbm_p_out))
              pairs.emplace_back(i, j);
          }
        // cheap connectivity probe before committing
        std::vector<std::vector<int>> nbr(n);
        for (auto& [u, v] : pairs) {
          nbr[u].push_back(v);
          nbr[v].push_back(u);
        }
        std::vector<char> seen(n, 0);
        std::vector<int> stack = {0};
        seen[0] = 1;
        int cnt = 1;
        while (!stack.empty()) {
          int u = stack.back();
          stack.pop_back();
          for (int w : nbr[u])
            if (!seen[w]) {
              seen[w] = 1;
              ++cnt;
              stack.push_back(w);
            }
        }
        connected = (cnt == n);
      }
      if (!connected) throw GenerationFailed("sbm stayed disconnected after 1000 attempts");
      labels = {{0, 1}, {n - 1, 2}};  // one node per block
      break;
    }
  }

  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (auto& [u, v] : pairs) {
    Edge e;
    e.u = u;
    e.v = v;
    e.base_weight = 1.0;
    e.feature.resize(cfg.p);
    for (int a = 0; a < cfg.p; ++a) e.feature(a) = rng.uniform(-1.0, 1.0);
    edges.push_back(std::move(e));
  }
  Eigen::VectorXd theta(cfg.p);
  for (int a = 0; a < cfg.p; ++a) theta(a) = rng.uniform(cfg.theta_min, cfg.theta_max);
  return {build_graph(n, cfg.p, std::move(edges), std::move(labels)), std::move(theta)};
}

// Sparse random connected graph for oracle cross-checks: a random spanning
// tree plus a few extra edges, random weights and features.
inline LabeledGraph random_connected_graph(int n, int p, int extra_edges, CounterRng& rng,
                                           std::map<int, int> labels) {
  std::vector<Edge> edges;
  std::set<std::pair<int, int>> used;
  for (int i = 1; i < n; ++i) {
    const int j = static_cast<int>(rng.uniform_index(i));
    used.insert({j, i});
  }
  int added = 0;
  int guard = 0;
  while (added < extra_edges && ++guard < 200) {
    int u = static_cast<int>(rng.uniform_index(n));
    int v = static_cast<int>(rng.uniform_index(n));
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (used.insert({u, v}).second) ++added;
  }
  for (auto& [u, v] : used) {
    Edge e;
    e.u = u;
    e.v = v;
    e.base_weight = rng.uniform(0.5, 2.0);
    e.feature.resize(p);
    for (int a = 0; a < p; ++a) e.feature(a) = rng.uniform(-1.0, 1.0);
    edges.push_back(std::move(e));
  }
  return build_graph(n, p, std::move(edges), std::move(labels));
}

}  // namespace drwgeom
