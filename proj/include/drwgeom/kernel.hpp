#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "drwgeom/errors.hpp"
#include "drwgeom/graph.hpp"

namespace drwgeom {

// Parameter-evaluated transition kernel.  A_ij = w0_ij * exp(theta . phi_ij)
// on edges, P = D^{-1} A.  First and second derivative tensors in theta are
// filled by kernel_derivatives(); slices are indexed [a] and [a][b].
struct WeightedKernel {
  Eigen::VectorXd theta;
  Eigen::MatrixXd A;
  Eigen::VectorXd degrees;
  Eigen::MatrixXd P;
  std::vector<Eigen::MatrixXd> dA;
  std::vector<Eigen::VectorXd> dD;
  std::vector<Eigen::MatrixXd> dP;
  std::vector<std::vector<Eigen::MatrixXd>> ddA;
  std::vector<std::vector<Eigen::VectorXd>> ddD;
  std::vector<std::vector<Eigen::MatrixXd>> ddP;

  bool has_derivatives() const { return !dP.empty(); }
};

inline WeightedKernel build_kernel(const LabeledGraph& graph, const Eigen::VectorXd& theta) {
  const int n = graph.node_count();
  const int p = graph.feature_dim();
  if (theta.size() != p)
    throw DimensionMismatch("theta has length " + std::to_string(theta.size()) +
                            ", expected " + std::to_string(p));

  WeightedKernel k;
  k.theta = theta;
  k.A = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : graph.edges()) {
    const double expo = theta.dot(e.feature);
    if (std::abs(expo) > 700.0)
      throw ExponentOverflow("edge exponent " + std::to_string(expo) +
                             " outside the safe range |x| <= 700");
    const double w = e.base_weight * std::exp(expo);
    k.A(e.u, e.v) = w;
    k.A(e.v, e.u) = w;
  }
  k.degrees = k.A.rowwise().sum();
  k.P = k.degrees.cwiseInverse().asDiagonal() * k.A;
  return k;
}

// Fills dA/dD/dP and the second-order tensors.
//
// dP is evaluated in the centered pairwise form
//   dP_a(i,j) = P_ij * sum_k P_ik (phi_ij[a] - phi_ik[a]),
// equal to -D^{-1} dD D^{-1} A + D^{-1} dA but with exact zeros when a
// feature coordinate is constant across edges.
inline void kernel_derivatives(const LabeledGraph& graph, WeightedKernel& k) {
  const int n = graph.node_count();
  const int p = graph.feature_dim();
  if (k.A.rows() != n) throw DimensionMismatch("kernel does not match graph");

  // per-node incident feature/probability lists
  struct Nbr {
    int j;
    double prob;
    const Eigen::VectorXd* phi;
  };
  std::vector<std::vector<Nbr>> nbrs(n);
  for (const Edge& e : graph.edges()) {
    nbrs[e.u].push_back({e.v, k.P(e.u, e.v), &e.feature});
    nbrs[e.v].push_back({e.u, k.P(e.v, e.u), &e.feature});
  }

  k.dA.assign(p, Eigen::MatrixXd::Zero(n, n));
  k.dD.assign(p, Eigen::VectorXd::Zero(n));
  k.dP.assign(p, Eigen::MatrixXd::Zero(n, n));
  k.ddA.assign(p, std::vector<Eigen::MatrixXd>(p, Eigen::MatrixXd::Zero(n, n)));
  k.ddD.assign(p, std::vector<Eigen::VectorXd>(p, Eigen::VectorXd::Zero(n)));
  k.ddP.assign(p, std::vector<Eigen::MatrixXd>(p, Eigen::MatrixXd::Zero(n, n)));

  for (const Edge& e : graph.edges()) {
    const double w = k.A(e.u, e.v);
    for (int a = 0; a < p; ++a) {
      const double da = w * e.feature(a);
      k.dA[a](e.u, e.v) = da;
      k.dA[a](e.v, e.u) = da;
      for (int b = a; b < p; ++b) {
        const double dab = da * e.feature(b);
        k.ddA[a][b](e.u, e.v) = dab;
        k.ddA[a][b](e.v, e.u) = dab;
      }
    }
  }
  for (int a = 0; a < p; ++a) {
    k.dD[a] = k.dA[a].rowwise().sum();
    for (int b = a; b < p; ++b) k.ddD[a][b] = k.ddA[a][b].rowwise().sum();
  }

  for (int a = 0; a < p; ++a) {
    Eigen::MatrixXd& dPa = k.dP[a];
    for (int i = 0; i < n; ++i) {
      for (const Nbr& nj : nbrs[i]) {
        double s = 0.0;
        const double fija = (*nj.phi)(a);
        for (const Nbr& nk : nbrs[i]) s += nk.prob * (fija - (*nk.phi)(a));
        dPa(i, nj.j) = nj.prob * s;
      }
    }
  }

  // ddP from the product rule on P = D^{-1} A; diagonal factors commute.
  const Eigen::VectorXd dinv = k.degrees.cwiseInverse();
  for (int a = 0; a < p; ++a) {
    const Eigen::VectorXd da_scaled = k.dD[a].cwiseProduct(dinv);  // D^{-1} dD_a
    for (int b = a; b < p; ++b) {
      const Eigen::VectorXd db_scaled = k.dD[b].cwiseProduct(dinv);
      Eigen::MatrixXd inner = 2.0 * (da_scaled.cwiseProduct(db_scaled)).asDiagonal() * k.A -
                              k.ddD[a][b].cwiseProduct(dinv).asDiagonal() * k.A -
                              da_scaled.asDiagonal() * k.dA[b] -
                              db_scaled.asDiagonal() * k.dA[a] + k.ddA[a][b];
      k.ddP[a][b] = dinv.asDiagonal() * inner;
      if (b != a) {
        k.ddA[b][a] = k.ddA[a][b];
        k.ddD[b][a] = k.ddD[a][b];
        k.ddP[b][a] = k.ddP[a][b];
      }
    }
  }
}

inline WeightedKernel build_kernel_with_derivatives(const LabeledGraph& graph,
                                                    const Eigen::VectorXd& theta) {
  WeightedKernel k = build_kernel(graph, theta);
  kernel_derivatives(graph, k);
  return k;
}

}  // namespace drwgeom
