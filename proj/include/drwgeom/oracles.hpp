#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "drwgeom/decomposition.hpp"
#include "drwgeom/errors.hpp"
#include "drwgeom/graph.hpp"
#include "drwgeom/kernel.hpp"
#include "drwgeom/rng.hpp"

namespace drwgeom {

// ---------------------------------------------------------------------------
// Exact pmf by explicit path enumeration.  Deliberately shares nothing with
// the linear-algebra route: a depth-first walk over transient sequences,
// multiplying entries as it goes.  Guarded because the path count is
// exponential in the branching factor.
// ---------------------------------------------------------------------------

inline Eigen::VectorXd enumerate_pmf(const ClassDecomposition& dec, int q, int T_max) {
  const int m = dec.size();
  if (m > 12 || T_max > 20)
    throw TooLarge("enumeration guarded to m <= 12, T_max <= 20");
  Eigen::VectorXd pmf = Eigen::VectorXd::Zero(T_max);
  const int start = dec.local(q);

  // neighbors within the transient block, to skip zero entries
  std::vector<std::vector<int>> nbr(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (dec.M(i, j) > 0.0) nbr[i].push_back(j);

  std::function<void(int, int, double)> walk = [&](int state, int steps, double prob) {
    // absorbing at the next step closes a path of length steps + 1
    if (dec.R(state) > 0.0) pmf(steps) += prob * dec.R(state);
    if (steps + 1 >= T_max) return;
    for (int j : nbr[state]) walk(j, steps + 1, prob * dec.M(state, j));
  };
  walk(start, 0, 1.0);
  return pmf;
}

// ---------------------------------------------------------------------------
// Walk sampling under the full kernel.
// ---------------------------------------------------------------------------

struct WalkSample {
  std::vector<int> path;      // node ids, first transient, last absorbing
  int length = 0;
  int absorbed_at = -1;
  std::map<int, int> passes;  // interior visit counts (includes the start)
};

// One attempted class-y walk from `start`; accepted iff absorbed into class
// y within `max_len` steps without an interior visit to class y (always) or
// to any labeled node (`strict`).  Rejected attempts return nullopt.
inline std::optional<WalkSample> sample_drw(const WeightedKernel& kernel,
                                            const LabeledGraph& graph, int y, int start,
                                            int max_len, CounterRng& rng,
                                            bool strict = false) {
  const int n = graph.node_count();
  WalkSample w;
  w.path.push_back(start);
  w.passes[start] = 1;
  int state = start;
  for (int step = 1; step <= max_len; ++step) {
    double u = rng.uniform();
    int next = n - 1;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      acc += kernel.P(state, j);
      if (u < acc) {
        next = j;
        break;
      }
    }
    w.path.push_back(next);
    if (graph.is_labeled(next)) {
      const int cls = graph.labels().at(next);
      if (cls == y) {
        w.length = step;
        w.absorbed_at = next;
        return w;
      }
      if (strict) return std::nullopt;
    }
    w.passes[next] += 1;
    state = next;
  }
  return std::nullopt;
}

// Monte-Carlo mean hitting time of class y from `start`.
struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  long accepted = 0;
  long attempts = 0;
};

inline McEstimate mc_mean_hitting_time(const WeightedKernel& kernel,
                                       const LabeledGraph& graph, int y, int start,
                                       long samples, std::uint64_t seed,
                                       int max_len = 1000000) {
  McEstimate est;
  double sum = 0.0, sumsq = 0.0;
  CounterRng rng(seed);
  const long cap = 10000000;
  while (est.accepted < samples && est.attempts < cap) {
    ++est.attempts;
    auto w = sample_drw(kernel, graph, y, start, max_len, rng, false);
    if (!w) continue;
    ++est.accepted;
    sum += w->length;
    sumsq += static_cast<double>(w->length) * w->length;
  }
  if (est.accepted > 0) {
    est.mean = sum / est.accepted;
    const double var = sumsq / est.accepted - est.mean * est.mean;
    est.stderr_ = std::sqrt(std::max(var, 0.0) / est.accepted);
  }
  return est;
}

// Monte-Carlo estimate of E[visits to q * 1{completion}] for walks launched
// at `source`, interior restricted to unlabeled nodes, absorbed into class y.
inline Eigen::VectorXd mc_visit_counts(const WeightedKernel& kernel,
                                       const LabeledGraph& graph, int y, int source,
                                       long samples, std::uint64_t seed,
                                       int max_len = 1000000) {
  const int n = graph.node_count();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
  CounterRng rng(seed);
  for (long s = 0; s < samples; ++s) {
    auto w = sample_drw(kernel, graph, y, source, max_len, rng, true);
    if (!w) continue;
    for (const auto& [node, cnt] : w->passes)
      if (node != source) acc(node) += cnt;
  }
  return acc / static_cast<double>(samples);
}

// ---------------------------------------------------------------------------
// Central finite differences, one coordinate at a time.
// ---------------------------------------------------------------------------

template <typename F>
auto finite_diff(F&& f, const Eigen::VectorXd& theta, int coord, double h) {
  Eigen::VectorXd tp = theta, tm = theta;
  tp(coord) += h;
  tm(coord) -= h;
  return ((f(tp) - f(tm)) / (2.0 * h)).eval();
}

template <typename F>
double finite_diff_scalar(F&& f, const Eigen::VectorXd& theta, int coord, double h) {
  Eigen::VectorXd tp = theta, tm = theta;
  tp(coord) += h;
  tm(coord) -= h;
  return (f(tp) - f(tm)) / (2.0 * h);
}

template <typename F>
Eigen::VectorXd finite_diff_gradient(F&& f, const Eigen::VectorXd& theta, double h = 1e-5) {
  Eigen::VectorXd g(theta.size());
  for (int a = 0; a < theta.size(); ++a) g(a) = finite_diff_scalar(f, theta, a, h);
  return g;
}

// ---------------------------------------------------------------------------
// Truncated series oracles, accumulated through explicit matrix powers.
// ---------------------------------------------------------------------------

inline Eigen::MatrixXd truncated_neumann(const Eigen::MatrixXd& M, int K) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(M.rows(), M.cols());
  Eigen::MatrixXd pw = acc;
  for (int k = 1; k <= K; ++k) {
    pw = pw * M;
    acc += pw;
  }
  return acc;
}

// sum_{k,l <= K} M^k dM M^l, regrouped as sum_k M^k (dM S_K)
inline std::vector<Eigen::MatrixXd> truncated_xi(const ClassDecomposition& dec, int K) {
  const int m = dec.size();
  if (static_cast<long>(K) * m > 2000000)
    throw TooLarge("truncated series budget exceeded");
  const Eigen::MatrixXd S = truncated_neumann(dec.M, K);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(dec.dM.size());
  for (const Eigen::MatrixXd& dMa : dec.dM) {
    const Eigen::MatrixXd right = dMa * S;
    Eigen::MatrixXd acc = right;
    Eigen::MatrixXd pw = Eigen::MatrixXd::Identity(m, m);
    for (int k = 1; k <= K; ++k) {
      pw = pw * dec.M;
      acc += pw * right;
    }
    out.push_back(acc);
  }
  return out;
}

// Brute-force power-sum betweenness with explicitly formed matrix powers.
inline double betweenness_bruteforce(const WeightedKernel& kernel, const LabeledGraph& graph,
                                     int y, int q, int L) {
  const std::vector<int> lab = graph.labeled_nodes(y);
  std::vector<Eigen::MatrixXd> powers(L + 1);
  powers[0] = Eigen::MatrixXd::Identity(graph.node_count(), graph.node_count());
  for (int t = 1; t <= L; ++t) powers[t] = powers[t - 1] * kernel.P;
  double acc = 0.0;
  for (int l = 1; l <= L; ++l)
    for (int i : lab)
      for (int j : lab)
        for (int t = 1; t <= l - 1; ++t) acc += powers[t](i, q) * powers[l - t](q, j);
  return acc;
}

}  // namespace drwgeom
