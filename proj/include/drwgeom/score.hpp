#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drwgeom/decomposition.hpp"
#include "drwgeom/errors.hpp"
#include "drwgeom/graph.hpp"
#include "drwgeom/kernel.hpp"
#include "drwgeom/quotient.hpp"
#include "drwgeom/rng.hpp"
#include "drwgeom/sensitivity.hpp"

namespace drwgeom {

// ---------------------------------------------------------------------------
// Power-sum betweenness: sum_{l<=L} sum_{i,j labeled y} sum_{t<l}
// P^t(i,q) P^{l-t}(q,j), evaluated with the full kernel by forward/backward
// vector recurrences.
// ---------------------------------------------------------------------------

namespace detail {
inline Eigen::RowVectorXd class_indicator_row(const LabeledGraph& graph, int y) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(graph.node_count());
  for (int v : graph.labeled_nodes(y)) row(v) = 1.0;
  return row;
}
}  // namespace detail

inline Eigen::VectorXd betweenness_field(const WeightedKernel& kernel,
                                         const LabeledGraph& graph, int y, int L) {
  if (L < 1) throw DimensionMismatch("horizon must be >= 1");
  const int n = graph.node_count();
  const Eigen::RowVectorXd ind_row = detail::class_indicator_row(graph, y);
  if (ind_row.sum() == 0.0) throw EmptyClass("no labeled nodes of class " + std::to_string(y));

  // forward rows alpha_t = 1_y^T P^t, backward cumulative C_k = sum_{s<=k} P^s 1_y
  std::vector<Eigen::VectorXd> cum(L);
  Eigen::VectorXd v = ind_row.transpose();
  Eigen::VectorXd run = Eigen::VectorXd::Zero(n);
  for (int s = 1; s <= L - 1; ++s) {
    v = kernel.P * v;
    run += v;
    cum[s] = run;
  }
  Eigen::VectorXd B = Eigen::VectorXd::Zero(n);
  Eigen::RowVectorXd alpha = ind_row;
  for (int t = 1; t <= L - 1; ++t) {
    alpha = alpha * kernel.P;
    B += alpha.transpose().cwiseProduct(cum[L - t]);
  }
  return B;
}

inline Eigen::MatrixXd betweenness_gradient_field(const WeightedKernel& kernel,
                                                  const LabeledGraph& graph, int y, int L) {
  if (!kernel.has_derivatives()) throw DimensionMismatch("kernel derivatives missing");
  const int n = graph.node_count();
  const int p = graph.feature_dim();
  const Eigen::RowVectorXd ind_row = detail::class_indicator_row(graph, y);
  if (ind_row.sum() == 0.0) throw EmptyClass("no labeled nodes of class " + std::to_string(y));

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, n);
  for (int a = 0; a < p; ++a) {
    std::vector<Eigen::VectorXd> cum(L), dcum(L);
    Eigen::VectorXd v = ind_row.transpose();
    Eigen::VectorXd dv = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd run = Eigen::VectorXd::Zero(n), drun = Eigen::VectorXd::Zero(n);
    for (int s = 1; s <= L - 1; ++s) {
      dv = kernel.dP[a] * v + kernel.P * dv;
      v = kernel.P * v;
      run += v;
      drun += dv;
      cum[s] = run;
      dcum[s] = drun;
    }
    Eigen::RowVectorXd alpha = ind_row;
    Eigen::RowVectorXd dalpha = Eigen::RowVectorXd::Zero(n);
    for (int t = 1; t <= L - 1; ++t) {
      dalpha = dalpha * kernel.P + alpha * kernel.dP[a];
      alpha = alpha * kernel.P;
      out.row(a) += (dalpha.transpose().cwiseProduct(cum[L - t]) +
                     alpha.transpose().cwiseProduct(dcum[L - t]))
                        .transpose();
    }
  }
  return out;
}

inline double betweenness(const WeightedKernel& kernel, const LabeledGraph& graph, int y,
                          int q, int L) {
  if (graph.is_labeled(q)) throw LabeledQuery("node " + std::to_string(q + 1) + " is labeled");
  return betweenness_field(kernel, graph, y, L)(q);
}

inline Eigen::VectorXd betweenness_gradient(const WeightedKernel& kernel,
                                            const LabeledGraph& graph, int y, int q, int L) {
  if (graph.is_labeled(q)) throw LabeledQuery("node " + std::to_string(q + 1) + " is labeled");
  return betweenness_gradient_field(kernel, graph, y, L).col(q);
}

// ---------------------------------------------------------------------------
// Discriminative-walk visit betweenness: walks launched from the labeled
// complement of class y, interior restricted to unlabeled nodes, absorbed
// into class y.  B(q) = E[arrivals at q] * P[completion from q]; horizon 0
// means the exact geometric sum through the unlabeled-block fundamental
// matrix, otherwise sums are truncated at total length `horizon`.
// ---------------------------------------------------------------------------

inline constexpr int kExactHorizon = 0;

struct VisitBetweenness {
  std::vector<int> nodes;    // unlabeled node ids, ascending
  Eigen::VectorXd value;     // B(q), aligned with nodes
  Eigen::MatrixXd gradient;  // p x |nodes|
};

inline VisitBetweenness visit_betweenness(const WeightedKernel& kernel,
                                          const LabeledGraph& graph, int y,
                                          int horizon = kExactHorizon) {
  if (!kernel.has_derivatives()) throw DimensionMismatch("kernel derivatives missing");
  if (graph.labeled_nodes(y).empty())
    throw EmptyClass("no labeled nodes of class " + std::to_string(y));

  const std::vector<int> U = graph.unlabeled_nodes();
  const int m = static_cast<int>(U.size());
  const int p = graph.feature_dim();

  std::vector<int> sources, sinks;
  for (const auto& [node, cls] : graph.labels())
    (cls == y ? sinks : sources).push_back(node);

  Eigen::MatrixXd M(m, m);
  std::vector<Eigen::MatrixXd> dM(p, Eigen::MatrixXd(m, m));
  Eigen::RowVectorXd a0 = Eigen::RowVectorXd::Zero(m);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
  std::vector<Eigen::RowVectorXd> da0(p, Eigen::RowVectorXd::Zero(m));
  std::vector<Eigen::VectorXd> dr(p, Eigen::VectorXd::Zero(m));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      M(i, j) = kernel.P(U[i], U[j]);
      for (int a = 0; a < p; ++a) dM[a](i, j) = kernel.dP[a](U[i], U[j]);
    }
    for (int s : sources) {
      a0(i) += kernel.P(s, U[i]);
      for (int a = 0; a < p; ++a) da0[a](i) += kernel.dP[a](s, U[i]);
    }
    for (int c : sinks) {
      r(i) += kernel.P(U[i], c);
      for (int a = 0; a < p; ++a) dr[a](i) += kernel.dP[a](U[i], c);
    }
  }

  VisitBetweenness out;
  out.nodes = U;
  out.gradient.resize(p, m);

  if (horizon == kExactHorizon) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(m, m) - M);
    Eigen::PartialPivLU<Eigen::MatrixXd> luT(
        (Eigen::MatrixXd::Identity(m, m) - M).transpose());
    const Eigen::VectorXd arr = luT.solve(a0.transpose());  // (a0 Z)^T
    const Eigen::VectorXd comp = lu.solve(r);               // Z r
    out.value = arr.cwiseProduct(comp);
    for (int a = 0; a < p; ++a) {
      const Eigen::VectorXd darr =
          luT.solve(da0[a].transpose() + dM[a].transpose() * arr);
      const Eigen::VectorXd dcomp = lu.solve(dr[a] + dM[a] * comp);
      out.gradient.row(a) =
          (darr.cwiseProduct(comp) + arr.cwiseProduct(dcomp)).transpose();
    }
    return out;
  }

  // truncated: B_L(q) = sum_{t,s>=1, t+s<=L} (a0 M^{t-1})_q (M^{s-1} r)_q
  const int L = horizon;
  std::vector<Eigen::VectorXd> cum(L), dcum_all(static_cast<std::size_t>(L) * p);
  Eigen::VectorXd vv = r, run = Eigen::VectorXd::Zero(m);
  std::vector<Eigen::VectorXd> dvv(p), drun(p, Eigen::VectorXd::Zero(m));
  for (int a = 0; a < p; ++a) dvv[a] = dr[a];
  for (int s = 1; s <= L - 1; ++s) {
    run += vv;
    cum[s] = run;
    for (int a = 0; a < p; ++a) {
      drun[a] += dvv[a];
      dcum_all[static_cast<std::size_t>(s) * p + a] = drun[a];
      dvv[a] = dM[a] * vv + M * dvv[a];
    }
    vv = M * vv;
  }
  out.value = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(p, m);
  Eigen::RowVectorXd alpha = a0;
  std::vector<Eigen::RowVectorXd> dalpha(p);
  for (int a = 0; a < p; ++a) dalpha[a] = da0[a];
  for (int t = 1; t <= L - 1; ++t) {
    const Eigen::VectorXd& c = cum[L - t];
    out.value += alpha.transpose().cwiseProduct(c);
    for (int a = 0; a < p; ++a) {
      grad.row(a) += (dalpha[a].transpose().cwiseProduct(c) +
                      alpha.transpose().cwiseProduct(
                          dcum_all[static_cast<std::size_t>(L - t) * p + a]))
                         .transpose();
      dalpha[a] = dalpha[a] * M + alpha * dM[a];
    }
    alpha = alpha * M;
  }
  out.gradient = grad;
  return out;
}

// ---------------------------------------------------------------------------
// Riemannian gradient on the quotient chart and its metric norm.
// ---------------------------------------------------------------------------

// contravariant components g~^{-1} V^T grad_theta (g~^{-1} = V^T V)
inline Eigen::VectorXd riemannian_gradient(const QuotientChart& chart,
                                           const Eigen::VectorXd& grad_theta) {
  if (chart.rank < 1) throw ZeroRank("chart has rank zero");
  return (chart.V.transpose() * chart.V) * (chart.V.transpose() * grad_theta);
}

// ||grad beta||_g~ = sqrt(w^T g~ w) with the covariant differential
// w = V^T grad_theta; equals sqrt(grad^T Q grad) by the chart identity.
inline double gradient_gnorm(const QuotientChart& chart, const Eigen::VectorXd& grad_theta) {
  if (chart.rank < 1) throw ZeroRank("chart has rank zero");
  const Eigen::VectorXd w = chart.V.transpose() * grad_theta;
  const double sq = w.dot(chart.g_tilde * w);
  return std::sqrt(std::max(sq, 0.0));
}

// ---------------------------------------------------------------------------
// Directional-variation bound: Delta(v) = sum_y |<G_y, v>_g| over g-unit v
// never exceeds zeta = sum_y ||G_y||_g; the sign-pattern maxima attain the
// max, with equality iff the gradients are pairwise parallel.
// ---------------------------------------------------------------------------

struct PropositionCheck {
  double zeta = 0.0;
  double delta_max = 0.0;
  bool attained = false;
  double max_sampled_delta = 0.0;
  bool bounded = true;  // every probe satisfied Delta(v) <= zeta + 1e-9
};

inline PropositionCheck proposition_check(const std::vector<Eigen::VectorXd>& grads,
                                          const Eigen::MatrixXd& g, int trials,
                                          std::uint64_t seed = 0x5eedULL) {
  const int k = static_cast<int>(grads.size());
  if (k == 0) throw EmptyField("no gradients given");
  const auto inner = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& yv) {
    return x.dot(g * yv);
  };
  const auto gnorm = [&](const Eigen::VectorXd& x) {
    return std::sqrt(std::max(inner(x, x), 0.0));
  };

  PropositionCheck out;
  std::vector<double> norms(k);
  for (int i = 0; i < k; ++i) {
    norms[i] = gnorm(grads[i]);
    out.zeta += norms[i];
  }

  if (k > 20) throw TooLarge("sign-pattern search over 2^" + std::to_string(k) + " classes");
  for (std::uint32_t sigma = 0; sigma < (1u << k); ++sigma) {
    Eigen::VectorXd G = Eigen::VectorXd::Zero(grads[0].size());
    for (int i = 0; i < k; ++i) G += ((sigma >> i) & 1u) ? grads[i] : -grads[i];
    out.delta_max = std::max(out.delta_max, gnorm(G));
  }

  // pairwise parallelism through the g-rejection residual
  out.attained = true;
  for (int i = 0; i < k && out.attained; ++i) {
    if (norms[i] == 0.0) continue;
    for (int j = i + 1; j < k; ++j) {
      if (norms[j] == 0.0) continue;
      const Eigen::VectorXd rej =
          grads[j] - (inner(grads[i], grads[j]) / (norms[i] * norms[i])) * grads[i];
      if (gnorm(rej) > 1e-8 * norms[j]) {
        out.attained = false;
        break;
      }
    }
  }

  CounterRng rng(seed);
  const int r = static_cast<int>(grads[0].size());
  for (int trial = 0; trial < trials; ++trial) {
    Eigen::VectorXd v(r);
    for (int i = 0; i < r; ++i) v(i) = rng.normal();
    const double nrm = gnorm(v);
    if (nrm == 0.0) continue;
    v /= nrm;
    double delta = 0.0;
    for (int i = 0; i < k; ++i) delta += std::abs(inner(grads[i], v));
    out.max_sampled_delta = std::max(out.max_sampled_delta, delta);
    if (delta > out.zeta + 1e-9) out.bounded = false;
  }
  if (out.delta_max > out.zeta + 1e-9) out.bounded = false;
  return out;
}

// ---------------------------------------------------------------------------
// Full per-node sensitivity report.
// ---------------------------------------------------------------------------

enum class BetweennessForm { Visits, PowerSum };

struct ZetaOptions {
  int horizon = kExactHorizon;  // 0 = exact; >0 truncates at that length
  double rank_tol = kDefaultRankTol;
  BetweennessForm form = BetweennessForm::Visits;
  bool fisher_diagnostic = false;   // closed-vs-series distance per class (slow)
  double fisher_series_tol = 1e-8;
};

struct ClassDiagnostics {
  int class_id = 0;
  int rank = 0;
  double rank_tol = 0.0;
  double metric_gap = 0.0;
  bool degenerate = false;            // all seed sensitivities vanished
  std::vector<int> zero_mass_nodes;   // seeds excluded from the chart
  double fisher_distance = -1.0;      // mean Frobenius gap closed vs series, -1 if skipped
};

struct SensitivityReport {
  Eigen::VectorXd theta;
  int horizon = kExactHorizon;
  std::vector<int> classes;
  std::vector<int> nodes;           // unlabeled node ids
  Eigen::MatrixXd betweenness;      // |nodes| x |classes|
  Eigen::MatrixXd grad_norm;        // |nodes| x |classes|
  Eigen::VectorXd zeta;
  Eigen::VectorXd zeta_normalized;  // empty when all_zero
  Eigen::VectorXd delta_max;
  std::vector<int> predicted_class;
  std::vector<ClassDiagnostics> diagnostics;
  bool all_zero = false;

  int node_row(int node) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i] == node) return static_cast<int>(i);
    throw SeedNotTransient("node " + std::to_string(node + 1) + " not in report");
  }
};

// Spec'd mass-based horizon rule: smallest L with max residual transient
// mass below 1e-3 over all class blocks, capped at 2n.
inline int auto_horizon(const WeightedKernel& kernel, const LabeledGraph& graph,
                        double mass_tol = 1e-3) {
  const int cap = 2 * graph.node_count();
  std::vector<Eigen::VectorXd> masses;
  std::vector<Eigen::MatrixXd> blocks;
  for (int y : graph.class_ids()) {
    ClassDecomposition dec = decompose_for_class(kernel, graph, y);
    blocks.push_back(dec.M);
    masses.push_back(Eigen::VectorXd::Ones(dec.size()));
  }
  for (int L = 1; L <= cap; ++L) {
    double worst = 0.0;
    for (std::size_t c = 0; c < blocks.size(); ++c) {
      masses[c] = blocks[c] * masses[c];
      worst = std::max(worst, masses[c].maxCoeff());
    }
    if (worst < mass_tol) return L;
  }
  return cap;
}

inline SensitivityReport zeta(const LabeledGraph& graph, const Eigen::VectorXd& theta,
                              const ZetaOptions& opts = {}) {
  const std::vector<int> classes = graph.class_ids();
  if (classes.empty()) throw EmptyClass("graph has no labels");
  const std::vector<int> unlabeled = graph.unlabeled_nodes();
  if (unlabeled.empty()) throw AllAbsorbing("graph has no unlabeled nodes");

  const WeightedKernel kernel = build_kernel_with_derivatives(graph, theta);
  const int nu = static_cast<int>(unlabeled.size());
  const int nc = static_cast<int>(classes.size());
  const int p = graph.feature_dim();

  SensitivityReport rep;
  rep.theta = theta;
  rep.horizon = opts.horizon;
  rep.classes = classes;
  rep.nodes = unlabeled;
  rep.betweenness.setZero(nu, nc);
  rep.grad_norm.setZero(nu, nc);
  rep.zeta.setZero(nu);
  rep.delta_max.setZero(nu);
  rep.predicted_class.assign(nu, classes[0]);

  // per-unlabeled-node ambient projected gradients, for the variation bound
  std::vector<std::vector<Eigen::VectorXd>> ambient(nu);

  for (int c = 0; c < nc; ++c) {
    const int y = classes[c];
    ClassDecomposition dec = decompose_for_class(kernel, graph, y);
    SensitivityField field = build_sensitivity_field(dec);

    ClassDiagnostics diag;
    diag.class_id = y;
    diag.rank_tol = opts.rank_tol;
    diag.zero_mass_nodes = field.excluded;

    std::optional<QuotientChart> chart;
    try {
      chart = build_chart(field, opts.rank_tol);
      diag.rank = chart->rank;
      diag.metric_gap = chart->metric_gap;
    } catch (const ZeroRank&) {
      diag.degenerate = true;
    }

    if (opts.fisher_diagnostic) {
      double acc = 0.0;
      int cnt = 0;
      for (int i = 0; i < field.zmat.cols(); ++i) {
        if (field.mass(i) == 0.0) continue;
        const Eigen::MatrixXd closed =
            field.zmat.col(i) * field.zmat.col(i).transpose() / field.mass(i);
        const Eigen::MatrixXd series =
            fisher_series(dec, field.seeds[i], opts.fisher_series_tol);
        acc += (closed - series).norm();
        ++cnt;
      }
      diag.fisher_distance = cnt > 0 ? acc / cnt : 0.0;
    }
    rep.diagnostics.push_back(std::move(diag));

    Eigen::VectorXd values(nu);
    Eigen::MatrixXd grads(p, nu);
    if (opts.form == BetweennessForm::Visits) {
      const VisitBetweenness vb = visit_betweenness(kernel, graph, y, opts.horizon);
      values = vb.value;  // vb.nodes == unlabeled by construction
      grads = vb.gradient;
    } else {
      const int L = opts.horizon == kExactHorizon ? auto_horizon(kernel, graph)
                                                  : opts.horizon;
      const Eigen::VectorXd full = betweenness_field(kernel, graph, y, L);
      const Eigen::MatrixXd gfull = betweenness_gradient_field(kernel, graph, y, L);
      for (int i = 0; i < nu; ++i) {
        values(i) = full(unlabeled[i]);
        grads.col(i) = gfull.col(unlabeled[i]);
      }
    }

    for (int i = 0; i < nu; ++i) {
      rep.betweenness(i, c) = values(i);
      Eigen::VectorXd projected = Eigen::VectorXd::Zero(p);
      double nrm = 0.0;
      if (chart) {
        projected = chart->Q * grads.col(i);
        nrm = gradient_gnorm(*chart, grads.col(i));
      }
      rep.grad_norm(i, c) = nrm;
      rep.zeta(i) += nrm;
      ambient[i].push_back(projected);
    }
  }

  for (int i = 0; i < nu; ++i) {
    // argmax betweenness, lowest class id on ties
    int best = 0;
    for (int c = 1; c < nc; ++c)
      if (rep.betweenness(i, c) > rep.betweenness(i, best)) best = c;
    rep.predicted_class[i] = classes[best];

    const PropositionCheck pc =
        proposition_check(ambient[i], Eigen::MatrixXd::Identity(p, p), 0);
    rep.delta_max(i) = pc.delta_max;
  }

  const double total = rep.zeta.sum();
  if (total > 0.0) {
    rep.zeta_normalized = rep.zeta / total;
  } else {
    rep.all_zero = true;
  }
  return rep;
}

}  // namespace drwgeom
