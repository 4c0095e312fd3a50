#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "drwgeom/oracles.hpp"
#include "drwgeom/score.hpp"
#include "support.hpp"

using namespace drwgeom;
using testsupport::corpus;
using testsupport::path_graph;

TEST_CASE("power-sum betweenness closed cases", "[score]") {
  LabeledGraph g = path_graph(3, {{0, 1}, {2, 1}});
  WeightedKernel k = build_kernel_with_derivatives(g, Eigen::VectorXd::Zero(1));
  CHECK(betweenness(k, g, 1, 1, 1) == 0.0);  // no interior step at L = 1
  CHECK(betweenness(k, g, 1, 1, 2) == Catch::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(betweenness(k, g, 1, 0, 2), LabeledQuery);
}

TEST_CASE("power-sum betweenness equals the dense-power brute force", "[score]") {
  for (const auto& inst : corpus(6, 501)) {
    WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
    for (int y : inst.graph.class_ids()) {
      const Eigen::VectorXd field = betweenness_field(k, inst.graph, y, 5);
      for (int q : inst.graph.unlabeled_nodes())
        CHECK(field(q) ==
              Catch::Approx(betweenness_bruteforce(k, inst.graph, y, q, 5)).margin(1e-12));
    }
  }
}

TEST_CASE("power-sum betweenness gradient", "[score]") {
  SECTION("constant features give the zero vector") {
    LabeledGraph g = path_graph(5, {{0, 1}, {4, 2}}, {0.3, 0.3, 0.3, 0.3});
    Eigen::VectorXd theta(1);
    theta << -0.4;
    WeightedKernel k = build_kernel_with_derivatives(g, theta);
    CHECK(betweenness_gradient(k, g, 1, 2, 6).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("finite differences on random graphs") {
    for (const auto& inst : corpus(4, 502)) {
      WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
      const int y = inst.graph.class_ids().front();
      const Eigen::MatrixXd grad = betweenness_gradient_field(k, inst.graph, y, 5);
      for (int q : inst.graph.unlabeled_nodes()) {
        const Eigen::VectorXd fd = finite_diff_gradient(
            [&](const Eigen::VectorXd& th) {
              return betweenness_field(build_kernel(inst.graph, th), inst.graph, y, 5)(q);
            },
            inst.theta);
        for (int a = 0; a < inst.graph.feature_dim(); ++a)
          CHECK(grad(a, q) == Catch::Approx(fd(a)).epsilon(1e-5).margin(1e-8));
      }
    }
  }
  SECTION("doubling features doubles the gradient at theta = 0") {
    LabeledGraph g1 = path_graph(5, {{0, 1}, {4, 2}}, {0.3, -0.1, 0.6, 0.2});
    LabeledGraph g2 = path_graph(5, {{0, 1}, {4, 2}}, {0.6, -0.2, 1.2, 0.4});
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    const Eigen::MatrixXd d1 = betweenness_gradient_field(
        build_kernel_with_derivatives(g1, zero), g1, 1, 5);
    const Eigen::MatrixXd d2 = betweenness_gradient_field(
        build_kernel_with_derivatives(g2, zero), g2, 1, 5);
    CHECK((2.0 * d1 - d2).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("visit betweenness agrees with conditioned sampling", "[score]") {
  LabeledGraph g = path_graph(4, {{0, 1}, {3, 2}});
  Eigen::VectorXd theta(1);
  theta << 0.3;
  WeightedKernel k = build_kernel_with_derivatives(g, theta);
  const VisitBetweenness vb = visit_betweenness(k, g, 1);  // sources: node 3

  const Eigen::VectorXd mc = mc_visit_counts(k, g, 1, 3, 200000, 2024);
  for (std::size_t i = 0; i < vb.nodes.size(); ++i)
    CHECK(vb.value(static_cast<int>(i)) ==
          Catch::Approx(mc(vb.nodes[i])).margin(0.02));
}

TEST_CASE("visit betweenness horizon converges to the exact form", "[score]") {
  for (const auto& inst : corpus(4, 503)) {
    WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
    const int y = inst.graph.class_ids().front();
    const VisitBetweenness exact = visit_betweenness(k, inst.graph, y);
    double prev_gap = 1e300;
    for (int L : {10, 40, 200}) {
      const VisitBetweenness trunc = visit_betweenness(k, inst.graph, y, L);
      const double gap = (exact.value - trunc.value).cwiseAbs().maxCoeff();
      CHECK(gap <= prev_gap + 1e-15);
      prev_gap = gap;
    }
    CHECK(prev_gap < 1e-8);
  }
}

TEST_CASE("riemannian gradient and its metric norm", "[score]") {
  // chart from a hand-built field with orthogonal z directions
  SensitivityField f;
  f.zmat = Eigen::MatrixXd::Zero(3, 2);
  f.zmat.col(0) << 2.0, 0.0, 0.0;
  f.zmat.col(1) << 0.0, 0.5, 0.0;
  f.mass = Eigen::VectorXd::Ones(2);
  f.seeds = {0, 1};
  QuotientChart chart = build_chart(f);
  REQUIRE(chart.rank == 2);

  SECTION("gradients orthogonal to the span vanish") {
    Eigen::VectorXd ortho(3);
    ortho << 0.0, 0.0, 4.0;
    CHECK(riemannian_gradient(chart, ortho).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(gradient_gnorm(chart, ortho) < 1e-12);
  }
  SECTION("component formula") {
    Eigen::VectorXd grad(3);
    grad << 1.0, 2.0, 3.0;
    const Eigen::VectorXd r = riemannian_gradient(chart, grad);
    // (V^T V) V^T grad with V = diag-ish columns
    CHECK(r(0) == Catch::Approx(4.0 * 2.0));
    CHECK(r(1) == Catch::Approx(0.25 * 1.0));
  }
  SECTION("norm identity against the projector route") {
    CounterRng rng(9);
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::VectorXd grad(3);
      for (int i = 0; i < 3; ++i) grad(i) = rng.normal();
      const double n1 = gradient_gnorm(chart, grad);
      const double n2 = std::sqrt(std::max(0.0, grad.dot(chart.Q * grad)));
      CHECK(n1 == Catch::Approx(n2).margin(1e-9));
    }
  }
}

TEST_CASE("rank-one chart norm reduces to the projection ratio", "[score]") {
  SensitivityField f;
  f.zmat = Eigen::MatrixXd::Zero(2, 1);
  f.zmat.col(0) << 3.0, 4.0;  // norm 5
  f.mass = Eigen::VectorXd::Ones(1);
  f.seeds = {0};
  QuotientChart chart = build_chart(f);
  Eigen::VectorXd grad(2);
  grad << 1.0, 1.0;
  CHECK(gradient_gnorm(chart, grad) == Catch::Approx(std::abs(3.0 + 4.0) / 5.0));
}

TEST_CASE("directional variation bound", "[score]") {
  SECTION("orthogonal unit gradients under the identity metric") {
    std::vector<Eigen::VectorXd> grads = {Eigen::Vector2d(1.0, 0.0),
                                          Eigen::Vector2d(0.0, 1.0)};
    const PropositionCheck pc =
        proposition_check(grads, Eigen::MatrixXd::Identity(2, 2), 500, 77);
    CHECK(pc.zeta == Catch::Approx(2.0));
    CHECK(pc.delta_max == Catch::Approx(std::sqrt(2.0)));
    CHECK(pc.bounded);
    CHECK_FALSE(pc.attained);
    CHECK(pc.max_sampled_delta <= pc.zeta + 1e-9);
  }
  SECTION("single class attains the bound") {
    std::vector<Eigen::VectorXd> grads = {Eigen::Vector3d(0.3, -0.2, 0.9)};
    const PropositionCheck pc =
        proposition_check(grads, Eigen::MatrixXd::Identity(3, 3), 200, 5);
    CHECK(pc.attained);
    CHECK(pc.delta_max == Catch::Approx(pc.zeta).margin(1e-9));
  }
  SECTION("parallel gradients attain the bound") {
    Eigen::Vector3d base(0.5, 1.0, -0.25);
    std::vector<Eigen::VectorXd> grads = {base, -2.0 * base, 0.7 * base};
    const PropositionCheck pc =
        proposition_check(grads, Eigen::MatrixXd::Identity(3, 3), 200, 6);
    CHECK(pc.attained);
    CHECK(pc.delta_max == Catch::Approx(pc.zeta).margin(1e-9));
  }
  SECTION("random gradients under a random SPD metric stay bounded") {
    CounterRng rng(13);
    for (int rep = 0; rep < 5; ++rep) {
      Eigen::MatrixXd A(3, 3);
      for (int i = 0; i < 9; ++i) A(i / 3, i % 3) = rng.normal();
      const Eigen::MatrixXd g =
          A * A.transpose() + 0.1 * Eigen::MatrixXd::Identity(3, 3);
      std::vector<Eigen::VectorXd> grads;
      for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd v(3);
        for (int i = 0; i < 3; ++i) v(i) = rng.normal();
        grads.push_back(v);
      }
      const PropositionCheck pc = proposition_check(grads, g, 1000, 100 + rep);
      CHECK(pc.bounded);
      CHECK(pc.delta_max <= pc.zeta + 1e-9);
    }
  }
}

TEST_CASE("zeta report on the constant-feature line", "[score]") {
  LabeledGraph g = path_graph(6, {{0, 1}, {5, 2}}, {0.2, 0.2, 0.2, 0.2, 0.2});
  Eigen::VectorXd theta(1);
  theta << 0.5;
  const SensitivityReport rep = zeta(g, theta);
  CHECK(rep.all_zero);
  CHECK(rep.zeta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rep.zeta_normalized.size() == 0);
  for (const auto& diag : rep.diagnostics) CHECK(diag.degenerate);
}

TEST_CASE("zeta report structure and invariants", "[score]") {
  for (const auto& inst : corpus(4, 504)) {
    const SensitivityReport rep = zeta(inst.graph, inst.theta);
    REQUIRE(rep.nodes == inst.graph.unlabeled_nodes());
    if (!rep.all_zero) {
      CHECK(rep.zeta_normalized.sum() == Catch::Approx(1.0).margin(1e-12));
      CHECK(rep.zeta.minCoeff() >= 0.0);
    }
    for (int i = 0; i < rep.zeta.size(); ++i)
      CHECK(rep.delta_max(i) <= rep.zeta(i) + 1e-9);
    for (std::size_t i = 0; i < rep.nodes.size(); ++i) {
      // predicted class is the betweenness argmax with lowest-id ties
      int best = 0;
      for (int c = 1; c < static_cast<int>(rep.classes.size()); ++c)
        if (rep.betweenness(static_cast<int>(i), c) >
            rep.betweenness(static_cast<int>(i), best))
          best = c;
      CHECK(rep.predicted_class[i] == rep.classes[best]);
    }
  }
}

TEST_CASE("zeta is invariant along computed null directions", "[score]") {
  // coordinate 2 constant, coordinate 1 duplicates coordinate 0
  std::vector<Edge> edges;
  CounterRng rng(19);
  for (int i = 0; i + 1 < 8; ++i) {
    Edge e;
    e.u = i;
    e.v = i + 1;
    e.base_weight = 1.0;
    const double f = rng.uniform(-1.0, 1.0);
    e.feature = Eigen::VectorXd(3);
    e.feature << f, f, 0.4;
    edges.push_back(e);
  }
  LabeledGraph g = build_graph(8, 3, std::move(edges), {{0, 1}, {7, 2}});
  Eigen::VectorXd theta(3);
  theta << 0.2, -0.3, 0.6;

  WeightedKernel k = build_kernel_with_derivatives(g, theta);
  SensitivityField field =
      build_sensitivity_field(decompose_for_class(k, g, 1));
  const Eigen::MatrixXd N = null_space_basis(field);
  REQUIRE(N.cols() == 2);

  const SensitivityReport r0 = zeta(g, theta);
  CounterRng dir_rng(3);
  for (int rep = 0; rep < 3; ++rep) {
    Eigen::VectorXd coeffs(N.cols());
    for (int i = 0; i < N.cols(); ++i) coeffs(i) = dir_rng.uniform(-1.0, 1.0);
    const SensitivityReport r1 = zeta(g, theta + N * coeffs);
    CHECK((r0.zeta - r1.zeta).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("zeta reflection symmetry on the mirrored line", "[score]") {
  const int n = 8;
  std::vector<double> phis = {0.4, -0.2, 0.7, 0.7, -0.2, 0.4, 0.0};
  phis[6] = phis[0];
  phis[5] = phis[1];
  phis[4] = phis[2];  // fully mirrored
  LabeledGraph g = path_graph(n, {{0, 1}, {n - 1, 2}}, phis);
  Eigen::VectorXd theta(1);
  theta << 0.45;
  const SensitivityReport rep = zeta(g, theta);
  for (int i = 0; i < rep.zeta.size() / 2; ++i)
    CHECK(rep.zeta(i) ==
          Catch::Approx(rep.zeta(rep.zeta.size() - 1 - i)).epsilon(1e-10));
}

TEST_CASE("zeta permutation equivariance", "[score]") {
  const auto inst = corpus(1, 505).front();
  const SensitivityReport r0 = zeta(inst.graph, inst.theta);

  // relabel nodes by the reversal permutation
  const int n = inst.graph.node_count();
  auto perm = [n](int v) { return n - 1 - v; };
  std::vector<Edge> edges;
  for (Edge e : inst.graph.edges()) {
    e.u = perm(e.u);
    e.v = perm(e.v);
    edges.push_back(e);
  }
  std::map<int, int> labels;
  for (const auto& [node, cls] : inst.graph.labels()) labels[perm(node)] = cls;
  LabeledGraph g2 = build_graph(n, inst.graph.feature_dim(), std::move(edges),
                                std::move(labels));
  const SensitivityReport r1 = zeta(g2, inst.theta);
  for (std::size_t i = 0; i < r0.nodes.size(); ++i) {
    const int mapped = perm(r0.nodes[i]);
    CHECK(r0.zeta(static_cast<int>(i)) ==
          Catch::Approx(r1.zeta(r1.node_row(mapped))).epsilon(1e-10).margin(1e-12));
  }
}

TEST_CASE("auto horizon follows the residual-mass rule", "[score]") {
  LabeledGraph g = path_graph(10, {{0, 1}, {9, 2}});
  WeightedKernel k = build_kernel_with_derivatives(g, Eigen::VectorXd::Zero(1));
  CHECK(auto_horizon(k, g) == 20);  // slow line: the 2n cap binds
  LabeledGraph s = testsupport::star_graph(6, {{1, 1}, {5, 2}});
  WeightedKernel ks = build_kernel_with_derivatives(s, Eigen::VectorXd::Zero(1));
  const int L = auto_horizon(ks, s);
  CHECK(L >= 1);
  CHECK(L <= 12);
}
