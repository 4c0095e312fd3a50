#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <vector>

#include "drwgeom/errors.hpp"
#include "drwgeom/graph.hpp"
#include "drwgeom/kernel.hpp"

namespace drwgeom {

// Absorbing/transient split of the kernel for one class: M is the
// transient-to-transient block, R the one-step absorption vector, with
// matching derivative slices.  Indices in `transient`/`absorbing` are
// original node ids in ascending order.
struct ClassDecomposition {
  int class_id = 0;
  std::vector<int> absorbing;
  std::vector<int> transient;
  std::vector<int> local_index;  // node id -> transient-local index, -1 if absorbing
  Eigen::MatrixXd M;
  Eigen::VectorXd R;
  std::vector<Eigen::MatrixXd> dM;
  std::vector<Eigen::VectorXd> dR;
  double spectral_radius_bound = 0.0;

  int size() const { return static_cast<int>(transient.size()); }
  int feature_dim() const { return static_cast<int>(dM.size()); }

  int local(int node) const {
    if (node < 0 || node >= static_cast<int>(local_index.size()) || local_index[node] < 0)
      throw SeedNotTransient("node " + std::to_string(node + 1) +
                             " is not transient for class " + std::to_string(class_id));
    return local_index[node];
  }
};

inline double spectral_radius(const Eigen::MatrixXd& M) {
  const int m = static_cast<int>(M.rows());
  if (m <= 512) {
    return M.eigenvalues().cwiseAbs().maxCoeff();
  }
  // power iteration on |M| for larger blocks
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m) / std::sqrt(static_cast<double>(m));
  double lambda = 0.0;
  for (int it = 0; it < 2000; ++it) {
    Eigen::VectorXd w = M * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = std::abs(v.dot(M * v));
    if (std::abs(next - lambda) < 1e-14) return next;
    lambda = next;
    v = w;
  }
  return lambda;
}

inline ClassDecomposition decompose_for_class(const WeightedKernel& kernel,
                                              const LabeledGraph& graph, int class_id) {
  const int n = graph.node_count();
  ClassDecomposition dec;
  dec.class_id = class_id;
  dec.absorbing = graph.labeled_nodes(class_id);
  if (dec.absorbing.empty())
    throw EmptyClass("class " + std::to_string(class_id) + " has no labeled nodes");

  dec.local_index.assign(n, -1);
  for (int v = 0; v < n; ++v) {
    if (!std::binary_search(dec.absorbing.begin(), dec.absorbing.end(), v)) {
      dec.local_index[v] = static_cast<int>(dec.transient.size());
      dec.transient.push_back(v);
    }
  }
  if (dec.transient.empty())
    throw AllAbsorbing("every node is labeled with class " + std::to_string(class_id));

  const int m = dec.size();
  const int na = static_cast<int>(dec.absorbing.size());
  dec.M.resize(m, m);
  dec.R.resize(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) dec.M(i, j) = kernel.P(dec.transient[i], dec.transient[j]);
    double r = 0.0;
    for (int j = 0; j < na; ++j) r += kernel.P(dec.transient[i], dec.absorbing[j]);
    dec.R(i) = r;
  }

  if (kernel.has_derivatives()) {
    const int p = static_cast<int>(kernel.dP.size());
    dec.dM.assign(p, Eigen::MatrixXd(m, m));
    dec.dR.assign(p, Eigen::VectorXd(m));
    for (int a = 0; a < p; ++a) {
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j)
          dec.dM[a](i, j) = kernel.dP[a](dec.transient[i], dec.transient[j]);
        double r = 0.0;
        for (int j = 0; j < na; ++j) r += kernel.dP[a](dec.transient[i], dec.absorbing[j]);
        dec.dR[a](i) = r;
      }
    }
  }

  const double rho = spectral_radius(dec.M);
  if (!(rho < 1.0 - 1e-10))
    throw SpectralRadiusNotSubunit("transient block has spectral radius " +
                                   std::to_string(rho));
  dec.spectral_radius_bound = rho + 1e-12;
  return dec;
}

// Smallest K with rho^K / (1 - rho) < tol; the geometric tail bound used by
// every truncated-series check.
inline int truncation_horizon(double rho_hat, double tol = 1e-12) {
  if (rho_hat <= 0.0) return 1;
  const double bound = tol * (1.0 - rho_hat);
  int K = static_cast<int>(std::ceil(std::log(bound) / std::log(rho_hat)));
  return std::max(K, 1);
}

}  // namespace drwgeom
