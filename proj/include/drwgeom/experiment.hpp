#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "drwgeom/generators.hpp"
#include "drwgeom/score.hpp"

namespace drwgeom {

struct SbmSplitStats {
  double boundary_mean = 0.0;     // run mean of per-realization boundary means
  double interior_mean = 0.0;
  int comparisons = 0;            // realizations with both sets nonempty
  int boundary_wins = 0;
};

struct TopologySummary {
  std::string topology;
  std::uint64_t seed = 0;
  int realizations_used = 0;
  int horizon = 0;
  std::vector<int> nodes;        // unlabeled node ids (fixed per topology)
  Eigen::VectorXd mean;          // mean normalized zeta per node
  Eigen::VectorXd stderr_;       // standard error of the mean
  std::vector<int> argmax_nodes; // nodes within 2 stderr of the max mean
  std::vector<int> argmax_count; // how often each node was the realization argmax
  SbmSplitStats sbm;             // filled for the sbm topology only
};

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DRWGEOM_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

inline TopologySummary reproduce_topology(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Slot {
    bool ok = false;
    Eigen::VectorXd zn;
    int argmax_node = -1;
    bool has_split = false;
    double boundary = 0.0, interior = 0.0;
  };
  std::vector<Slot> slots(cfg.realizations);

  auto run_one = [&](int idx) {
    Realization real = generate(cfg, idx);
    ZetaOptions opts;
    opts.horizon = cfg.horizon;
    opts.rank_tol = cfg.rank_tol;
    SensitivityReport rep = zeta(real.graph, real.theta, opts);
    if (rep.all_zero) return;
    Slot& s = slots[idx];
    s.ok = true;
    s.zn = rep.zeta_normalized;
    int best = 0;
    for (int i = 1; i < s.zn.size(); ++i)
      if (s.zn(i) > s.zn(best)) best = i;
    s.argmax_node = rep.nodes[best];

    if (cfg.topology == Topology::Sbm) {
      std::set<int> boundary;
      for (const Edge& e : real.graph.edges())
        if ((e.u < cfg.sbm_block) != (e.v < cfg.sbm_block)) {
          boundary.insert(e.u);
          boundary.insert(e.v);
        }
      double bsum = 0.0, isum = 0.0;
      int bcnt = 0, icnt = 0;
      for (std::size_t i = 0; i < rep.nodes.size(); ++i) {
        if (boundary.count(rep.nodes[i])) {
          bsum += s.zn(i);
          ++bcnt;
        } else {
          isum += s.zn(i);
          ++icnt;
        }
      }
      if (bcnt > 0 && icnt > 0) {
        s.has_split = true;
        s.boundary = bsum / bcnt;
        s.interior = isum / icnt;
      }
    }
  };

  const int threads = resolve_threads(cfg.threads);
  if (threads <= 1) {
    for (int i = 0; i < cfg.realizations; ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < cfg.realizations; i = next.fetch_add(1))
          run_one(i);
      });
    for (auto& th : pool) th.join();
  }

  TopologySummary out;
  out.topology = to_string(cfg.topology);
  out.seed = cfg.rng_seed;
  out.horizon = cfg.horizon;

  // node set is fixed by the topology (labels are deterministic)
  {
    Realization probe = generate(cfg, 0);
    out.nodes = probe.graph.unlabeled_nodes();
  }
  const int nu = static_cast<int>(out.nodes.size());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(nu);
  Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(nu);
  out.argmax_count.assign(nu, 0);
  for (const Slot& s : slots) {
    if (!s.ok) continue;
    ++out.realizations_used;
    sum += s.zn;
    sumsq += s.zn.cwiseProduct(s.zn);
    for (int i = 0; i < nu; ++i)
      if (out.nodes[i] == s.argmax_node) ++out.argmax_count[i];
    if (s.has_split) {
      ++out.sbm.comparisons;
      out.sbm.boundary_mean += s.boundary;
      out.sbm.interior_mean += s.interior;
      if (s.boundary > s.interior) ++out.sbm.boundary_wins;
    }
  }
  const int R = std::max(out.realizations_used, 1);
  out.mean = sum / R;
  out.stderr_ = ((sumsq / R - out.mean.cwiseProduct(out.mean)).cwiseMax(0.0) /
                 std::max(R - 1, 1))
                    .cwiseSqrt();
  if (out.sbm.comparisons > 0) {
    out.sbm.boundary_mean /= out.sbm.comparisons;
    out.sbm.interior_mean /= out.sbm.comparisons;
  }

  double peak = out.mean.size() > 0 ? out.mean.maxCoeff() : 0.0;
  for (int i = 0; i < nu; ++i)
    if (out.mean(i) >= peak - 2.0 * out.stderr_(i)) out.argmax_nodes.push_back(out.nodes[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic text outputs (1-based node ids).
// ---------------------------------------------------------------------------

inline std::string summary_csv(const std::vector<TopologySummary>& rows) {
  std::string out = "topology,seed,node,mean_zeta,stderr,argmax_share,realizations\n";
  char buf[160];
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.nodes.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s,%llu,%d,%.9f,%.9f,%.4f,%d\n",
                    row.topology.c_str(), static_cast<unsigned long long>(row.seed),
                    row.nodes[i] + 1, row.mean(i), row.stderr_(i),
                    row.realizations_used > 0
                        ? static_cast<double>(row.argmax_count[i]) / row.realizations_used
                        : 0.0,
                    row.realizations_used);
      out += buf;
    }
  }
  return out;
}

inline std::string summary_table(const std::vector<TopologySummary>& rows) {
  std::ostringstream os;
  for (const auto& row : rows) {
    os << "topology " << row.topology << "  (seed " << row.seed << ", "
       << row.realizations_used << " realizations)\n";
    os << "  node :";
    for (int v : row.nodes) {
      char b[16];
      std::snprintf(b, sizeof b, "%7d", v + 1);
      os << b;
    }
    os << "\n  zeta :";
    for (int i = 0; i < row.mean.size(); ++i) {
      char b[16];
      std::snprintf(b, sizeof b, "%7.3f", row.mean(i));
      os << b;
    }
    os << "\n  max at:";
    for (int v : row.argmax_nodes) os << ' ' << (v + 1);
    os << '\n';
    if (row.topology == "sbm" && row.sbm.comparisons > 0) {
      char b[160];
      std::snprintf(b, sizeof b,
                    "  boundary mean %.4f vs interior mean %.4f (boundary ahead in %d/%d)\n",
                    row.sbm.boundary_mean, row.sbm.interior_mean, row.sbm.boundary_wins,
                    row.sbm.comparisons);
      os << b;
    }
  }
  return os.str();
}

}  // namespace drwgeom
