#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "drwgeom/decomposition.hpp"
#include "drwgeom/errors.hpp"
#include "drwgeom/hitting_law.hpp"

namespace drwgeom {

// dZ_a = Z dM_a Z, one slice per parameter direction.
inline std::vector<Eigen::MatrixXd> derivative_of_Z(const ClassDecomposition& dec,
                                                    const Eigen::MatrixXd& Z) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(dec.dM.size());
  for (const Eigen::MatrixXd& dMa : dec.dM) out.push_back(Z * dMa * Z);
  return out;
}

// Accumulated sensitivity slices: the double series sum_{k,l} M^k dM M^l.
// Same value as dZ but obtained by two triangular solves per slice; the
// product identity (I - M) Xi (I - M) = dM pins it down.
inline std::vector<Eigen::MatrixXd> xi(const ClassDecomposition& dec) {
  const int m = dec.size();
  const Eigen::MatrixXd ImM = Eigen::MatrixXd::Identity(m, m) - dec.M;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(ImM);
  Eigen::PartialPivLU<Eigen::MatrixXd> luT(ImM.transpose());
  std::vector<Eigen::MatrixXd> out;
  out.reserve(dec.dM.size());
  for (const Eigen::MatrixXd& dMa : dec.dM) {
    const Eigen::MatrixXd left = lu.solve(dMa);                       // (I-M)^{-1} dM
    out.push_back(luT.solve(left.transpose()).transpose());           // ... (I-M)^{-1}
  }
  return out;
}

// Gradient of ln p(t | q): the power-sum expansion of d(M^{t-1}) plus the
// dR term, normalized by the pmf value.
inline Eigen::VectorXd score_function(const ClassDecomposition& dec, int q, int t) {
  if (t < 1) throw DimensionMismatch("score defined for t >= 1");
  const int i = dec.local(q);
  const int m = dec.size();
  const int p = dec.feature_dim();

  std::vector<Eigen::RowVectorXd> u(t);  // u[s] = e_q^T M^s, s = 0..t-1
  u[0] = Eigen::RowVectorXd::Zero(m);
  u[0](i) = 1.0;
  for (int s = 1; s < t; ++s) u[s] = u[s - 1] * dec.M;

  std::vector<Eigen::VectorXd> v(std::max(t - 1, 1));  // v[j] = M^j R, j = 0..t-2
  v[0] = dec.R;
  for (int j = 1; j <= t - 2; ++j) v[j] = dec.M * v[j - 1];

  const double denom = u[t - 1].dot(dec.R);
  if (!(denom > 1e-300)) throw ZeroProbability("pmf underflow at t = " + std::to_string(t));

  Eigen::VectorXd score(p);
  for (int a = 0; a < p; ++a) {
    double acc = u[t - 1].dot(dec.dR[a]);
    for (int s = 0; s <= t - 2; ++s) acc += (u[s] * dec.dM[a]).dot(v[t - 2 - s]);
    score(a) = acc / denom;
  }
  return score;
}

// Observed Fisher information as the outcome-weighted score outer product,
// truncated once the neglected mass drops below tol.
// The per-t score sums are convolutions of cached prefix rows u_s dM and
// suffix columns M^j R, so a sweep to horizon T costs O(T^2 m p).
struct FisherSeriesResult {
  Eigen::MatrixXd fisher;      // p x p
  Eigen::VectorXd mean_score;  // sum_t p(t) * score(t); zero in exact arithmetic
  int horizon = 0;
  double neglected_mass = 0.0;
};

inline FisherSeriesResult fisher_series_full(const ClassDecomposition& dec, int q,
                                             double tol, int max_horizon = 200000) {
  if (!(tol > 0.0)) throw DimensionMismatch("fisher_series needs tol > 0");
  const int i = dec.local(q);
  const int m = dec.size();
  const int p = dec.feature_dim();

  FisherSeriesResult out;
  out.fisher = Eigen::MatrixXd::Zero(p, p);
  out.mean_score = Eigen::VectorXd::Zero(p);

  std::vector<Eigen::RowVectorXd> u;     // e_q^T M^s
  std::vector<std::vector<Eigen::RowVectorXd>> udm(p);  // (e_q^T M^s) dM_a
  std::vector<Eigen::VectorXd> v;        // M^j R
  Eigen::RowVectorXd u0 = Eigen::RowVectorXd::Zero(m);
  u0(i) = 1.0;

  Eigen::VectorXd score(p);
  for (int t = 1; t <= max_horizon; ++t) {
    u.push_back(t == 1 ? u0 : Eigen::RowVectorXd(u.back() * dec.M));
    v.push_back(t == 1 ? dec.R : Eigen::VectorXd(dec.M * v.back()));
    for (int a = 0; a < p; ++a) udm[a].push_back(u.back() * dec.dM[a]);

    const double pt = u[t - 1].dot(dec.R);
    if (pt > 0.0) {
      for (int a = 0; a < p; ++a) {
        double acc = u[t - 1].dot(dec.dR[a]);
        for (int s = 0; s <= t - 2; ++s) acc += udm[a][s].dot(v[t - 2 - s]);
        score(a) = acc / pt;
      }
      out.fisher.noalias() += pt * score * score.transpose();
      out.mean_score += pt * score;
    }
    const double tail = (u[t - 1] * dec.M).sum();
    if (tail < tol) {
      out.horizon = t;
      out.neglected_mass = tail;
      return out;
    }
  }
  throw TooLarge("fisher_series did not reach the mass tolerance within " +
                 std::to_string(max_horizon) + " steps");
}

inline Eigen::MatrixXd fisher_series(const ClassDecomposition& dec, int q, double tol) {
  return fisher_series_full(dec, q, tol).fisher;
}

// Closed-form per-seed quantities: z(q) = e_q^T Xi R + e_q^T dR and
// F(q) = z z^T / (e_q^T R), a rank-one matrix.
struct FisherClosed {
  Eigen::VectorXd z;      // length p
  Eigen::MatrixXd fisher; // p x p, rank <= 1
  double mass = 0.0;      // e_q^T R
};

inline Eigen::VectorXd seed_sensitivity(const ClassDecomposition& dec,
                                        const std::vector<Eigen::MatrixXd>& Xi, int q) {
  const int i = dec.local(q);
  const int p = dec.feature_dim();
  Eigen::VectorXd z(p);
  for (int a = 0; a < p; ++a) z(a) = Xi[a].row(i).dot(dec.R) + dec.dR[a](i);
  return z;
}

inline FisherClosed fisher_closed(const ClassDecomposition& dec,
                                  const std::vector<Eigen::MatrixXd>& Xi, int q) {
  FisherClosed out;
  out.z = seed_sensitivity(dec, Xi, q);
  out.mass = dec.R(dec.local(q));
  if (out.mass == 0.0)
    throw ZeroAbsorptionMass("node " + std::to_string(q + 1) +
                             " has no one-step absorption mass");
  out.fisher = out.z * out.z.transpose() / out.mass;
  return out;
}

inline FisherClosed fisher_closed(const ClassDecomposition& dec, int q) {
  return fisher_closed(dec, xi(dec), q);
}

// d mu / d theta = e_q^T Z dM Z 1 per direction
inline Eigen::VectorXd mean_gradient(const ClassDecomposition& dec,
                                     const Eigen::MatrixXd& Z, int q) {
  const int i = dec.local(q);
  const int p = dec.feature_dim();
  const Eigen::VectorXd z1 = Z * Eigen::VectorXd::Ones(dec.size());
  Eigen::VectorXd out(p);
  for (int a = 0; a < p; ++a) out(a) = Z.row(i).dot(dec.dM[a] * z1);
  return out;
}

// Per-seed sensitivity data for one class: z(q) for every transient seed,
// absorption masses, and the shared Xi/dZ slices.  Seeds with zero mass are
// listed in `excluded`; aggregates skip them.
struct SensitivityField {
  int class_id = 0;
  std::vector<int> seeds;       // transient node ids, ascending
  Eigen::MatrixXd Z;
  std::vector<Eigen::MatrixXd> Xi;
  std::vector<Eigen::MatrixXd> dZ;
  Eigen::MatrixXd zmat;         // p x m, column per seed
  Eigen::VectorXd mass;         // m
  std::vector<int> excluded;    // node ids with zero absorption mass

  int feature_dim() const { return static_cast<int>(zmat.rows()); }

  Eigen::VectorXd z(int node) const {
    for (std::size_t i = 0; i < seeds.size(); ++i)
      if (seeds[i] == node) return zmat.col(static_cast<int>(i));
    throw SeedNotTransient("node " + std::to_string(node + 1) + " not in field");
  }
};

inline SensitivityField build_sensitivity_field(const ClassDecomposition& dec) {
  SensitivityField f;
  f.class_id = dec.class_id;
  f.seeds = dec.transient;
  f.Z = fundamental_matrix(dec);
  f.Xi = xi(dec);
  f.dZ = derivative_of_Z(dec, f.Z);
  const int m = dec.size();
  const int p = dec.feature_dim();
  f.zmat.resize(p, m);
  f.mass = dec.R;
  for (int i = 0; i < m; ++i) {
    for (int a = 0; a < p; ++a)
      f.zmat(a, i) = f.Xi[a].row(i).dot(dec.R) + dec.dR[a](i);
    if (f.mass(i) == 0.0) f.excluded.push_back(dec.transient[i]);
  }
  return f;
}

}  // namespace drwgeom
