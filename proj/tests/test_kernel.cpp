#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "drwgeom/kernel.hpp"
#include "drwgeom/oracles.hpp"
#include "support.hpp"

using namespace drwgeom;
using testsupport::corpus;
using testsupport::path_graph;

TEST_CASE("uniform path kernel splits evenly", "[kernel]") {
  LabeledGraph g = path_graph(3, {});
  WeightedKernel k = build_kernel(g, Eigen::VectorXd::Zero(1));
  CHECK(k.P(1, 0) == Catch::Approx(0.5));
  CHECK(k.P(1, 2) == Catch::Approx(0.5));
  CHECK(k.P(0, 1) == 1.0);
}

TEST_CASE("common feature factor cancels in the kernel", "[kernel]") {
  LabeledGraph g = path_graph(4, {}, {0.8, 0.8, 0.8});
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd theta(1);
  theta << 0.7;
  const Eigen::MatrixXd P0 = build_kernel(g, zero).P;
  const Eigen::MatrixXd P1 = build_kernel(g, theta).P;
  CHECK((P0 - P1).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("three-node star with opposing features", "[kernel]") {
  // hub 1, phi(1,2) = +1, phi(1,3) = -1, theta = ln 2
  std::vector<Edge> edges = {testsupport::edge(0, 1, 1.0, {1.0}),
                             testsupport::edge(0, 2, 1.0, {-1.0})};
  LabeledGraph g = build_graph(3, 1, std::move(edges), {});
  Eigen::VectorXd theta(1);
  theta << std::log(2.0);
  WeightedKernel k = build_kernel(g, theta);
  CHECK(k.P(0, 1) == Catch::Approx(0.8).margin(1e-14));
  CHECK(k.P(0, 2) == Catch::Approx(0.2).margin(1e-14));
}

TEST_CASE("kernel input validation", "[kernel]") {
  LabeledGraph g = path_graph(3, {});
  CHECK_THROWS_AS(build_kernel(g, Eigen::VectorXd::Zero(2)), DimensionMismatch);
  LabeledGraph gf = path_graph(3, {}, {300.0, 300.0});
  Eigen::VectorXd big(1);
  big << 3.0;
  CHECK_THROWS_AS(build_kernel(gf, big), ExponentOverflow);
}

TEST_CASE("rows stay stochastic across the parameter box", "[kernel]") {
  for (const auto& inst : corpus(8, 101)) {
    CounterRng rng(55);
    for (int rep = 0; rep < 5; ++rep) {
      Eigen::VectorXd theta(inst.graph.feature_dim());
      for (int a = 0; a < theta.size(); ++a) theta(a) = rng.uniform(-5.0, 5.0);
      WeightedKernel k = build_kernel(inst.graph, theta);
      const Eigen::VectorXd rowsum = k.P.rowwise().sum();
      CHECK((rowsum.array() - 1.0).abs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("derivative slices have zero row sums", "[kernel]") {
  for (const auto& inst : corpus(6, 102)) {
    WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
    for (const auto& slice : k.dP)
      CHECK(slice.rowwise().sum().cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("constant feature coordinate gives an exactly zero slice", "[kernel]") {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < 5; ++i) {
    Eigen::VectorXd f(2);
    f << 0.42, 0.1 * i - 0.2;  // coordinate 0 constant, coordinate 1 varies
    Edge e;
    e.u = i;
    e.v = i + 1;
    e.base_weight = 1.0 + 0.3 * i;
    e.feature = f;
    edges.push_back(e);
  }
  LabeledGraph g = build_graph(5, 2, std::move(edges), {});
  Eigen::VectorXd theta(2);
  theta << 0.3, -0.6;
  WeightedKernel k = build_kernel_with_derivatives(g, theta);
  CHECK(k.dP[0].cwiseAbs().maxCoeff() == 0.0);
  CHECK(k.dP[1].cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("first and second kernel derivatives match finite differences", "[kernel]") {
  for (const auto& inst : corpus(6, 103)) {
    const int p = inst.graph.feature_dim();
    WeightedKernel k = build_kernel_with_derivatives(inst.graph, inst.theta);
    for (int a = 0; a < p; ++a) {
      const Eigen::MatrixXd fd = finite_diff(
          [&](const Eigen::VectorXd& th) { return build_kernel(inst.graph, th).P; },
          inst.theta, a, 1e-5);
      const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
      CHECK((fd - k.dP[a]).cwiseAbs().maxCoeff() / scale < 1e-5);
      for (int b = 0; b < p; ++b) {
        const Eigen::MatrixXd fd2 = finite_diff(
            [&](const Eigen::VectorXd& th) {
              return build_kernel_with_derivatives(inst.graph, th).dP[b];
            },
            inst.theta, a, 1e-5);
        const double scale2 = std::max(1.0, fd2.cwiseAbs().maxCoeff());
        CHECK((fd2 - k.ddP[b][a]).cwiseAbs().maxCoeff() / scale2 < 1e-5);
      }
    }
  }
}

TEST_CASE("dP is linear in the features at theta = 0", "[kernel]") {
  LabeledGraph g1 = path_graph(4, {}, {0.3, -0.5, 0.2});
  LabeledGraph g2 = path_graph(4, {}, {0.6, -1.0, 0.4});
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  WeightedKernel k1 = build_kernel_with_derivatives(g1, zero);
  WeightedKernel k2 = build_kernel_with_derivatives(g2, zero);
  CHECK((2.0 * k1.dP[0] - k2.dP[0]).cwiseAbs().maxCoeff() < 1e-14);
}
