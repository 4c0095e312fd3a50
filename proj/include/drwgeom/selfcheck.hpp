#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "drwgeom/experiment.hpp"
#include "drwgeom/generators.hpp"
#include "drwgeom/hitting_law.hpp"
#include "drwgeom/oracles.hpp"
#include "drwgeom/quotient.hpp"
#include "drwgeom/score.hpp"
#include "drwgeom/sensitivity.hpp"

namespace drwgeom {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CheckInstance {
  LabeledGraph graph;
  Eigen::VectorXd theta;
};

// Sparse random corpus: labels on two distinct random nodes, p in {1,2,3}.
inline std::vector<CheckInstance> check_corpus(int count, std::uint64_t seed) {
  std::vector<CheckInstance> out;
  for (int g = 0; g < count; ++g) {
    CounterRng rng(seed, static_cast<std::uint64_t>(g));
    const int n = 5 + static_cast<int>(rng.uniform_index(6));   // 5..10
    const int p = 1 + static_cast<int>(rng.uniform_index(3));   // 1..3
    const int extra = static_cast<int>(rng.uniform_index(4));   // 0..3
    int l1 = static_cast<int>(rng.uniform_index(n));
    int l2 = static_cast<int>(rng.uniform_index(n));
    while (l2 == l1) l2 = static_cast<int>(rng.uniform_index(n));
    std::map<int, int> labels = {{l1, 1}, {l2, 2}};
    LabeledGraph graph = random_connected_graph(n, p, extra, rng, std::move(labels));
    Eigen::VectorXd theta(p);
    for (int a = 0; a < p; ++a) theta(a) = rng.uniform(-1.0, 1.0);
    out.push_back({std::move(graph), std::move(theta)});
  }
  return out;
}

namespace checks {

inline bool rel_close(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), abs_floor);
}

}  // namespace checks

inline std::vector<CheckResult> run_selfcheck(bool fast) {
  std::vector<CheckResult> results;
  const int ngraphs = fast ? 6 : 12;
  const auto corpus = check_corpus(ngraphs, 20260809);
  char detail[160];

  auto add = [&](const std::string& name, bool ok, const std::string& d = "") {
    results.push_back({name, ok, d});
  };

  // pmf vs explicit enumeration, and normalization with the exact tail
  {
    double worst = 0.0;
    bool ok = true;
    for (const auto& inst : corpus) {
      const WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
      for (int y : inst.graph.class_ids()) {
        const ClassDecomposition dec = decompose_for_class(k, inst.graph, y);
        const HittingLaw law(dec);
        for (int q : dec.transient) {
          const Eigen::VectorXd oracle = enumerate_pmf(dec, q, 12);
          const Eigen::VectorXd direct = hitting_pmf_prefix(law, q, 12);
          worst = std::max(worst, (oracle - direct).cwiseAbs().maxCoeff());
          const double tail = pmf_tail_mass(law, q, 12);
          if (direct.sum() + tail < 1.0 - 1e-9 || direct.sum() > 1.0 + 1e-12) ok = false;
        }
      }
    }
    std::snprintf(detail, sizeof detail, "max |pmf - enumeration| = %.3g", worst);
    add("pmf-vs-enumeration", ok && worst < 1e-12, detail);
  }

  // fundamental matrix vs truncated Neumann series
  {
    double worst = 0.0;
    for (const auto& inst : corpus) {
      const WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
      for (int y : inst.graph.class_ids()) {
        const ClassDecomposition dec = decompose_for_class(k, inst.graph, y);
        const HittingLaw law(dec);
        const int K = truncation_horizon(dec.spectral_radius_bound, 1e-12);
        worst = std::max(
            worst, (law.Z - truncated_neumann(dec.M, K)).cwiseAbs().maxCoeff());
      }
    }
    std::snprintf(detail, sizeof detail, "max entry error = %.3g", worst);
    add("fundamental-vs-neumann", worst < 1e-10, detail);
  }

  // moments vs truncated sums; the two second-moment forms
  {
    bool ok = true;
    double worst = 0.0;
    for (const auto& inst : corpus) {
      const WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
      for (int y : inst.graph.class_ids()) {
        const ClassDecomposition dec = decompose_for_class(k, inst.graph, y);
        const HittingLaw law(dec);
        const double rho = dec.spectral_radius_bound;
        for (int q : dec.transient) {
          const HittingMoments mom = hitting_moments(law, q);
          int T = truncation_horizon(rho, 1e-13);
          while (pmf_tail_mass(law, q, T) * std::pow(T + 2.0 / (1.0 - rho), 2.0) > 1e-10)
            T *= 2;
          const Eigen::VectorXd pmf = hitting_pmf_prefix(law, q, T);
          double s1 = 0.0, s2 = 0.0;
          for (int t = 1; t <= T; ++t) {
            s1 += t * pmf(t - 1);
            s2 += static_cast<double>(t) * t * pmf(t - 1);
          }
          if (!checks::rel_close(mom.mean, s1, 0.0, 1e-8)) ok = false;
          if (!checks::rel_close(mom.second_moment, s2, 0.0, 1e-8)) ok = false;
          worst = std::max(worst,
                           std::abs(mom.second_moment - second_moment_factored(law, q)));
          if (!checks::rel_close(mom.mean, mean_via_resolvent(law, q), 0.0, 1e-10))
            ok = false;
          if (mom.variance < -1e-12 || mom.mean < 1.0 - 1e-12) ok = false;
        }
      }
    }
    std::snprintf(detail, sizeof detail, "second-moment form gap = %.3g", worst);
    add("moments-vs-truncated-sums", ok && worst < 1e-10, detail);
  }

  // spectral expansion equals the direct pmf
  {
    double worst = 0.0;
    int used = 0;
    for (const auto& inst : corpus) {
      const WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
      const int y = inst.graph.class_ids().front();
      const ClassDecomposition dec = decompose_for_class(k, inst.graph, y);
      const HittingLaw law(dec);
      for (int q : dec.transient) {
        try {
          const SpectralLaw sl = spectral_law(law, q);
          const Eigen::VectorXd direct = hitting_pmf_prefix(law, q, 30);
          for (int t = 1; t <= 30; ++t)
            worst = std::max(worst, std::abs(spectral_pmf(sl, t) - direct(t - 1)));
          ++used;
        } catch (const NonDiagonalizable&) {
          // defective block: the direct pmf remains the only route
        }
      }
    }
    std::snprintf(detail, sizeof detail, "%d seeds, max gap %.3g", used, worst);
    add("spectral-vs-direct", worst < 1e-9 && used > 0, detail);
  }

  // kernel derivative slices vs central finite differences
  {
    double worst = 0.0;
    for (const auto& inst : corpus) {
      const int p = inst.graph.feature_dim();
      const WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
      for (int a = 0; a < p; ++a) {
        const Eigen::MatrixXd fd = finite_diff(
            [&](const Eigen::VectorXd& th) { return build_kernel(inst.graph, th).P; },
            inst.theta, a, 1e-5);
        worst = std::max(worst, (fd - k.dP[a]).cwiseAbs().maxCoeff() /
                                    std::max(1.0, fd.cwiseAbs().maxCoeff()));
        for (int b = 0; b < p; ++b) {
          const Eigen::MatrixXd fd2 = finite_diff(
              [&](const Eigen::VectorXd& th) {
                return build_kernel_with_derivatives(inst.graph, th).dP[b];
              },
              inst.theta, a, 1e-5);
          worst = std::max(worst, (fd2 - k.ddP[b][a]).cwiseAbs().maxCoeff() /
                                      std::max(1.0, fd2.cwiseAbs().maxCoeff()));
        }
      }
    }
    std::snprintf(detail, sizeof detail, "max relative error = %.3g", worst);
    add("kernel-derivatives-vs-fd", worst < 1e-5, detail);
  }

  // dZ, score, mean gradient vs finite differences
  {
    double worst = 0.0;
    bool ok = true;
    for (const auto& inst : corpus) {
      const int p = inst.graph.feature_dim();
      const WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
      const int y = inst.graph.class_ids().front();
      const ClassDecomposition dec = decompose_for_class(k, inst.graph, y);
      const Eigen::MatrixXd Z = fundamental_matrix(dec);
      const auto dZ = derivative_of_Z(dec, Z);
      for (int a = 0; a < p; ++a) {
        const Eigen::MatrixXd fd = finite_diff(
            [&](const Eigen::VectorXd& th) {
              const WeightedKernel kk = build_kernel_with_derivatives(inst.graph, th);
              return fundamental_matrix(decompose_for_class(kk, inst.graph, y));
            },
            inst.theta, a, 1e-5);
        worst = std::max(worst, (fd - dZ[a]).cwiseAbs().maxCoeff() /
                                    std::max(1.0, fd.cwiseAbs().maxCoeff()));
      }
      const int q = dec.transient.front();
      for (int t : {1, 2, 5}) {
        const HittingLaw law(dec);
        if (hitting_pmf(law, q, t) < 1e-12) continue;
        const Eigen::VectorXd sc = score_function(dec, q, t);
        const Eigen::VectorXd fd = finite_diff_gradient(
            [&](const Eigen::VectorXd& th) {
              const WeightedKernel kk = build_kernel_with_derivatives(inst.graph, th);
              const HittingLaw ll(decompose_for_class(kk, inst.graph, y));
              return std::log(hitting_pmf(ll, q, t));
            },
            inst.theta);
        for (int a = 0; a < p; ++a)
          if (!checks::rel_close(sc(a), fd(a), 1e-5, 1e-8)) ok = false;
      }
      const Eigen::VectorXd mg = mean_gradient(dec, Z, q);
      const Eigen::VectorXd fdm = finite_diff_gradient(
          [&](const Eigen::VectorXd& th) {
            const WeightedKernel kk = build_kernel_with_derivatives(inst.graph, th);
            const HittingLaw ll(decompose_for_class(kk, inst.graph, y));
            return hitting_moments(ll, q).mean;
          },
          inst.theta);
      for (int a = 0; a < p; ++a)
        if (!checks::rel_close(mg(a), fdm(a), 1e-5, 1e-8)) ok = false;
    }
    std::snprintf(detail, sizeof detail, "max dZ relative error = %.3g", worst);
    add("law-derivatives-vs-fd", ok && worst < 1e-5, detail);
  }

  // accumulated-sensitivity identity and the truncated double series
  {
    double worst_id = 0.0, worst_series = 0.0;
    for (const auto& inst : corpus) {
      const WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
      for (int y : inst.graph.class_ids()) {
        const ClassDecomposition dec = decompose_for_class(k, inst.graph, y);
        const auto Xi = xi(dec);
        const int m = dec.size();
        const Eigen::MatrixXd ImM = Eigen::MatrixXd::Identity(m, m) - dec.M;
        const int K = truncation_horizon(dec.spectral_radius_bound, 1e-12);
        const auto XiK = truncated_xi(dec, K);
        for (int a = 0; a < dec.feature_dim(); ++a) {
          worst_id = std::max(worst_id,
                              (ImM * Xi[a] * ImM - dec.dM[a]).cwiseAbs().maxCoeff());
          worst_series = std::max(worst_series, (Xi[a] - XiK[a]).cwiseAbs().maxCoeff());
        }
      }
    }
    std::snprintf(detail, sizeof detail, "identity %.3g, series %.3g", worst_id,
                  worst_series);
    add("xi-identity-and-series", worst_id < 1e-10 && worst_series < 1e-8, detail);
  }

  // closed Fisher: rank one, null directions, mean-zero score, series psd
  {
    bool ok = true;
    double worst_rank = 0.0, worst_mean = 0.0;
    for (const auto& inst : corpus) {
      const WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
      const int y = inst.graph.class_ids().front();
      const ClassDecomposition dec = decompose_for_class(k, inst.graph, y);
      const SensitivityField field = build_sensitivity_field(dec);
      for (int i = 0; i < field.zmat.cols(); ++i) {
        if (field.mass(i) == 0.0) continue;
        const FisherClosed fc = fisher_closed(dec, field.Xi, field.seeds[i]);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(fc.fisher);
        const Eigen::VectorXd sv = svd.singularValues();
        if (sv.size() > 1 && sv(0) > 0.0)
          worst_rank = std::max(worst_rank, sv(1) / sv(0));
        if (sv.size() > 1 && sv(0) == 0.0 && sv(1) > 1e-12) ok = false;
      }
      const int q = dec.transient.front();
      const FisherSeriesResult fs = fisher_series_full(dec, q, 1e-12);
      worst_mean = std::max(worst_mean, fs.mean_score.cwiseAbs().maxCoeff());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fs.fisher);
      if (es.eigenvalues().minCoeff() < -1e-10) ok = false;
    }
    std::snprintf(detail, sizeof detail, "rank ratio %.3g, |mean score| %.3g", worst_rank,
                  worst_mean);
    add("fisher-closed-rank-one", ok && worst_rank < 1e-10 && worst_mean < 1e-8, detail);
  }

  // projector and chart identities
  {
    bool ok = true;
    for (const auto& inst : corpus) {
      const WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
      for (int y : inst.graph.class_ids()) {
        const ClassDecomposition dec = decompose_for_class(k, inst.graph, y);
        const SensitivityField field = build_sensitivity_field(dec);
        QuotientChart chart;
        try {
          chart = build_chart(field);
        } catch (const ZeroRank&) {
          continue;
        }
        const auto& Q = chart.Q;
        if ((Q * Q - Q).cwiseAbs().maxCoeff() > 1e-10) ok = false;
        if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-10) ok = false;
        if (std::abs(Q.trace() - chart.rank) > 1e-8) ok = false;
        if ((Q * chart.V - chart.V).cwiseAbs().maxCoeff() > 1e-10) ok = false;
        Eigen::LLT<Eigen::MatrixXd> llt(chart.g_tilde);
        if (llt.info() != Eigen::Success) ok = false;
      }
    }
    add("projector-and-chart", ok);
  }

  // power-sum betweenness vs dense-power brute force, and its gradient vs fd
  {
    double worst = 0.0, worst_fd = 0.0;
    for (const auto& inst : corpus) {
      const WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
      const int y = inst.graph.class_ids().front();
      const int L = 5;
      const Eigen::VectorXd field = betweenness_field(k, inst.graph, y, L);
      const Eigen::MatrixXd grad = betweenness_gradient_field(k, inst.graph, y, L);
      for (int q : inst.graph.unlabeled_nodes()) {
        worst = std::max(worst,
                         std::abs(field(q) - betweenness_bruteforce(k, inst.graph, y, q, L)));
        const Eigen::VectorXd fd = finite_diff_gradient(
            [&](const Eigen::VectorXd& th) {
              const WeightedKernel kk = build_kernel(inst.graph, th);
              return betweenness_field(kk, inst.graph, y, L)(q);
            },
            inst.theta);
        for (int a = 0; a < inst.graph.feature_dim(); ++a)
          if (!checks::rel_close(grad(a, q), fd(a), 1e-5, 1e-8))
            worst_fd = std::max(worst_fd, std::abs(grad(a, q) - fd(a)));
      }
    }
    std::snprintf(detail, sizeof detail, "brute force %.3g, fd %.3g", worst, worst_fd);
    add("betweenness-vs-bruteforce", worst < 1e-12 && worst_fd == 0.0, detail);
  }

  // visit betweenness: finite horizon converges to the exact form; fd check
  {
    bool ok = true;
    for (const auto& inst : corpus) {
      const WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
      const int y = inst.graph.class_ids().front();
      const VisitBetweenness exact = visit_betweenness(k, inst.graph, y);
      const VisitBetweenness trunc = visit_betweenness(k, inst.graph, y, 400);
      if ((exact.value - trunc.value).cwiseAbs().maxCoeff() > 1e-8) ok = false;
      for (std::size_t i = 0; i < exact.nodes.size(); ++i) {
        const int col = static_cast<int>(i);
        const Eigen::VectorXd fd = finite_diff_gradient(
            [&](const Eigen::VectorXd& th) {
              const WeightedKernel kk = build_kernel_with_derivatives(inst.graph, th);
              return visit_betweenness(kk, inst.graph, y).value(col);
            },
            inst.theta);
        for (int a = 0; a < inst.graph.feature_dim(); ++a)
          if (!checks::rel_close(exact.gradient(a, col), fd(a), 1e-5, 1e-8)) ok = false;
      }
    }
    add("visit-betweenness-consistency", ok);
  }

  // gradient norm identity and the directional-variation bound
  {
    bool ok = true;
    CounterRng rng(99);
    for (const auto& inst : corpus) {
      const WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
      const int y = inst.graph.class_ids().front();
      const ClassDecomposition dec = decompose_for_class(k, inst.graph, y);
      const SensitivityField field = build_sensitivity_field(dec);
      QuotientChart chart;
      try {
        chart = build_chart(field);
      } catch (const ZeroRank&) {
        continue;
      }
      const int p = inst.graph.feature_dim();
      for (int rep = 0; rep < 4; ++rep) {
        Eigen::VectorXd g(p);
        for (int a = 0; a < p; ++a) g(a) = rng.normal();
        const double n1 = gradient_gnorm(chart, g);
        const double n2 = std::sqrt(std::max(0.0, g.dot(chart.Q * g)));
        if (std::abs(n1 - n2) > 1e-9 * std::max(1.0, n2)) ok = false;
      }
      std::vector<Eigen::VectorXd> grads;
      for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd g(p);
        for (int a = 0; a < p; ++a) g(a) = rng.normal();
        grads.push_back(chart.Q * g);
      }
      const PropositionCheck pc =
          proposition_check(grads, Eigen::MatrixXd::Identity(p, p), fast ? 200 : 1000, 5);
      if (!pc.bounded) ok = false;
      const PropositionCheck single =
          proposition_check({grads[0]}, Eigen::MatrixXd::Identity(p, p), 50, 6);
      if (std::abs(single.delta_max - single.zeta) > 1e-9) ok = false;
    }
    add("gradient-norm-and-variation-bound", ok);
  }

  // structural null directions: invariance of zeta, exact zero for constant features
  {
    bool ok = true;
    // constant feature: everything vanishes exactly
    {
      ExperimentConfig cfg;
      cfg.topology = Topology::Line;
      cfg.rng_seed = 3;
      Realization real = generate(cfg, 0);
      std::vector<Edge> edges = real.graph.edges();
      for (Edge& e : edges) e.feature.setConstant(0.37);
      LabeledGraph g =
          build_graph(real.graph.node_count(), 1, std::move(edges), real.graph.labels());
      const SensitivityReport rep = zeta(g, real.theta);
      if (!rep.all_zero || rep.zeta.cwiseAbs().maxCoeff() != 0.0) ok = false;
    }
    // duplicated coordinate: (e1 - e2) is a structural null direction
    {
      CounterRng rng(17);
      LabeledGraph base = random_connected_graph(8, 1, 2, rng, {{0, 1}, {7, 2}});
      std::vector<Edge> edges = base.edges();
      for (Edge& e : edges) {
        Eigen::VectorXd f(2);
        f << e.feature(0), e.feature(0);
        e.feature = f;
      }
      LabeledGraph g = build_graph(8, 2, std::move(edges), base.labels());
      Eigen::VectorXd theta(2);
      theta << 0.4, -0.1;
      const SensitivityReport r1 = zeta(g, theta);
      Eigen::VectorXd null_dir(2);
      null_dir << 0.3, -0.3;
      const SensitivityReport r2 = zeta(g, theta + null_dir);
      if ((r1.zeta - r2.zeta).cwiseAbs().maxCoeff() > 1e-9) ok = false;
    }
    add("null-direction-invariance", ok);
  }

  // Monte-Carlo cross-checks against the analytic law
  {
    std::vector<Edge> edges;
    for (int i = 0; i < 3; ++i) {
      Edge e;
      e.u = i;
      e.v = i + 1;
      e.base_weight = 1.0;
      e.feature = Eigen::VectorXd::Zero(1);
      edges.push_back(e);
    }
    LabeledGraph path4 = build_graph(4, 1, std::move(edges), {{0, 1}, {3, 1}});
    const WeightedKernel k =
        build_kernel_with_derivatives(path4, Eigen::VectorXd::Zero(1));
    const long samples = fast ? 20000 : 100000;
    const McEstimate est = mc_mean_hitting_time(k, path4, 1, 1, samples, 4242);
    std::snprintf(detail, sizeof detail, "mc mean %.4f (analytic 2), stderr %.4f",
                  est.mean, est.stderr_);
    add("mc-mean-hitting-time", std::abs(est.mean - 2.0) < 0.03, detail);
  }

  // reproduce determinism on a miniature config
  {
    ExperimentConfig cfg;
    cfg.topology = Topology::Star;
    cfg.realizations = fast ? 5 : 20;
    cfg.rng_seed = 11;
    cfg.threads = 2;
    const std::string a = summary_csv({reproduce_topology(cfg)});
    const std::string b = summary_csv({reproduce_topology(cfg)});
    add("reproduce-determinism", !a.empty() && a == b);
  }

  return results;
}

}  // namespace drwgeom
