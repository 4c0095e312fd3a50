#pragma once

#include <map>
#include <vector>

#include "drwgeom/generators.hpp"
#include "drwgeom/graph.hpp"

namespace testsupport {

inline drwgeom::Edge edge(int u, int v, double w, std::vector<double> phi) {
  drwgeom::Edge e;
  e.u = u;
  e.v = v;
  e.base_weight = w;
  e.feature = Eigen::Map<Eigen::VectorXd>(phi.data(), static_cast<int>(phi.size()));
  return e;
}

// path 1-2-...-n with unit weights and the given per-edge scalar features
inline drwgeom::LabeledGraph path_graph(int n, std::map<int, int> labels,
                                        std::vector<double> phis = {}) {
  std::vector<drwgeom::Edge> edges;
  for (int i = 0; i + 1 < n; ++i)
    edges.push_back(edge(i, i + 1, 1.0, {phis.empty() ? 0.0 : phis[i]}));
  return drwgeom::build_graph(n, 1, std::move(edges), std::move(labels));
}

inline drwgeom::LabeledGraph star_graph(int n, std::map<int, int> labels,
                                        std::vector<double> phis = {}) {
  std::vector<drwgeom::Edge> edges;
  for (int k = 1; k < n; ++k)
    edges.push_back(edge(0, k, 1.0, {phis.empty() ? 0.0 : phis[k - 1]}));
  return drwgeom::build_graph(n, 1, std::move(edges), std::move(labels));
}

// small random corpus with two singleton classes
struct Instance {
  drwgeom::LabeledGraph graph;
  Eigen::VectorXd theta;
};

inline std::vector<Instance> corpus(int count, std::uint64_t seed) {
  std::vector<Instance> out;
  for (int g = 0; g < count; ++g) {
    drwgeom::CounterRng rng(seed, static_cast<std::uint64_t>(g));
    const int n = 6 + static_cast<int>(rng.uniform_index(5));
    const int p = 1 + static_cast<int>(rng.uniform_index(3));
    const int extra = static_cast<int>(rng.uniform_index(4));
    int l1 = static_cast<int>(rng.uniform_index(n));
    int l2 = static_cast<int>(rng.uniform_index(n));
    while (l2 == l1) l2 = static_cast<int>(rng.uniform_index(n));
    auto graph = drwgeom::random_connected_graph(n, p, extra, rng, {{l1, 1}, {l2, 2}});
    Eigen::VectorXd theta(p);
    for (int a = 0; a < p; ++a) theta(a) = rng.uniform(-1.0, 1.0);
    out.push_back({std::move(graph), std::move(theta)});
  }
  return out;
}

}  // namespace testsupport
