#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "drwgeom/errors.hpp"
#include "drwgeom/sensitivity.hpp"

namespace drwgeom {

inline constexpr double kDefaultRankTol = 1e-8;

// Sigma = sum_q z(q) z(q)^T over seeds with positive absorption mass.
inline Eigen::MatrixXd aggregate_sigma(const SensitivityField& field) {
  const int p = field.feature_dim();
  if (field.seeds.empty()) throw EmptyField("sensitivity field has no seeds");
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(p, p);
  bool any = false;
  for (int i = 0; i < field.zmat.cols(); ++i) {
    if (field.mass(i) == 0.0) continue;
    sigma.noalias() += field.zmat.col(i) * field.zmat.col(i).transpose();
    any = true;
  }
  if (!any) throw EmptyField("no seed has positive absorption mass");
  return sigma;
}

struct BasisSelection {
  int rank = 0;
  std::vector<int> seeds;  // chosen node ids, in pivot order
  Eigen::MatrixXd V;       // p x r, columns are z(seed_k)
};

// Rank by relative singular-value threshold; seeds by greedy max-residual
// column pivoting over the candidate z vectors.
inline BasisSelection select_basis(const SensitivityField& field,
                                   double rank_tol = kDefaultRankTol) {
  if (!(rank_tol > 0.0)) throw DimensionMismatch("rank_tol must be positive");
  const int p = field.feature_dim();

  std::vector<int> candidates;
  for (int i = 0; i < field.zmat.cols(); ++i)
    if (field.mass(i) != 0.0) candidates.push_back(i);
  if (candidates.empty()) throw EmptyField("no seed has positive absorption mass");

  Eigen::MatrixXd cols(p, static_cast<int>(candidates.size()));
  for (int c = 0; c < cols.cols(); ++c) cols.col(c) = field.zmat.col(candidates[c]);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cols);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) throw ZeroRank("all seed sensitivities vanish");
  int rank = 0;
  for (int k = 0; k < sv.size(); ++k)
    if (sv(k) > rank_tol * sv(0)) ++rank;
  if (rank == 0) throw ZeroRank("all seed sensitivities vanish");

  BasisSelection out;
  out.rank = rank;
  out.V.resize(p, rank);
  Eigen::MatrixXd residual = cols;
  std::vector<char> used(candidates.size(), 0);
  for (int round = 0; round < rank; ++round) {
    int best = -1;
    double best_norm = -1.0;
    for (int c = 0; c < residual.cols(); ++c) {
      if (used[c]) continue;
      const double nrm = residual.col(c).norm();
      if (nrm > best_norm) {
        best_norm = nrm;
        best = c;
      }
    }
    used[best] = 1;
    out.seeds.push_back(field.seeds[candidates[best]]);
    out.V.col(round) = cols.col(best);
    const Eigen::VectorXd dir = residual.col(best) / best_norm;
    for (int c = 0; c < residual.cols(); ++c)
      if (!used[c]) residual.col(c) -= dir.dot(residual.col(c)) * dir;
  }
  return out;
}

namespace detail {
// thin QR of V with a full-column-rank check
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> thin_qr_checked(const Eigen::MatrixXd& V) {
  const int p = static_cast<int>(V.rows());
  const int r = static_cast<int>(V.cols());
  if (r == 0 || r > p) throw RankDeficientBasis("basis must have 1..p columns");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(V);
  Eigen::MatrixXd Q1 = qr.householderQ() * Eigen::MatrixXd::Identity(p, r);
  Eigen::MatrixXd Rm = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  const double dmax = Rm.diagonal().cwiseAbs().maxCoeff();
  const double dmin = Rm.diagonal().cwiseAbs().minCoeff();
  if (!(dmin > 1e-13 * dmax)) throw RankDeficientBasis("basis columns nearly dependent");
  return {std::move(Q1), std::move(Rm)};
}
}  // namespace detail

// chart coordinates u = (V^T V)^{-1} V^T theta, via QR of V
inline Eigen::VectorXd chart_coordinates(const Eigen::MatrixXd& V,
                                         const Eigen::VectorXd& theta) {
  auto [Q1, Rm] = detail::thin_qr_checked(V);
  return Rm.triangularView<Eigen::Upper>().solve(Q1.transpose() * theta);
}

// orthogonal projector onto span(V)
inline Eigen::MatrixXd projector(const Eigen::MatrixXd& V) {
  auto [Q1, Rm] = detail::thin_qr_checked(V);
  return Q1 * Q1.transpose();
}

// (g_tilde, g_tilde_summed): the chart metric (V^T V)^{-1} from a stable
// factorization, and the mass-weighted sum form with lifts V e_i.  The two
// agree only when the basis seeds carry all the field's weight; the gap is
// reported, not asserted.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> quotient_metric(
    const SensitivityField& field, const Eigen::MatrixXd& V) {
  auto [Q1, Rm] = detail::thin_qr_checked(V);
  const int r = static_cast<int>(V.cols());
  const Eigen::MatrixXd rinv =
      Rm.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(r, r));
  Eigen::MatrixXd g_tilde = rinv * rinv.transpose();

  Eigen::MatrixXd g_sum = Eigen::MatrixXd::Zero(r, r);
  for (int i = 0; i < field.zmat.cols(); ++i) {
    if (field.mass(i) == 0.0) continue;
    const Eigen::VectorXd w = V.transpose() * field.zmat.col(i);
    g_sum.noalias() += w * w.transpose() / field.mass(i);
  }
  return {std::move(g_tilde), std::move(g_sum)};
}

// Identifiable-subspace chart for one class.
struct QuotientChart {
  Eigen::MatrixXd Sigma;
  int rank = 0;
  std::vector<int> basis_seeds;
  Eigen::MatrixXd V;
  Eigen::MatrixXd Q;             // p x p projector onto span(V)
  Eigen::MatrixXd g_tilde;       // r x r chart metric
  Eigen::MatrixXd g_tilde_summed;
  double rank_tol = kDefaultRankTol;
  double metric_gap = 0.0;       // relative Frobenius distance of the two forms
};

inline QuotientChart build_chart(const SensitivityField& field,
                                 double rank_tol = kDefaultRankTol) {
  QuotientChart chart;
  chart.rank_tol = rank_tol;
  chart.Sigma = aggregate_sigma(field);
  BasisSelection sel = select_basis(field, rank_tol);
  chart.rank = sel.rank;
  chart.basis_seeds = std::move(sel.seeds);
  chart.V = std::move(sel.V);
  chart.Q = projector(chart.V);
  auto [g, gs] = quotient_metric(field, chart.V);
  chart.g_tilde = std::move(g);
  chart.g_tilde_summed = std::move(gs);
  chart.metric_gap = (chart.g_tilde - chart.g_tilde_summed).norm() /
                     std::max(chart.g_tilde.norm(), 1e-300);
  return chart;
}

// Orthonormal basis of the null space {v : z(q)^T v = 0 for all seeds},
// empty (p x 0) when the field has full rank.
inline Eigen::MatrixXd null_space_basis(const SensitivityField& field,
                                        double rank_tol = kDefaultRankTol) {
  const int p = field.feature_dim();
  Eigen::MatrixXd cols(p, field.zmat.cols());
  int used = 0;
  for (int i = 0; i < field.zmat.cols(); ++i)
    if (field.mass(i) != 0.0) cols.col(used++) = field.zmat.col(i);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cols.leftCols(used), Eigen::ComputeFullU);
  const Eigen::VectorXd sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  int rank = 0;
  for (int k = 0; k < sv.size(); ++k)
    if (smax > 0.0 && sv(k) > rank_tol * smax) ++rank;
  return svd.matrixU().rightCols(p - rank);
}

}  // namespace drwgeom
