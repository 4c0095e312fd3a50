#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <utility>

#include "drwgeom/decomposition.hpp"
#include "drwgeom/errors.hpp"

namespace drwgeom {

// Z = (I - M)^{-1} via dense LU, residual-checked.
inline Eigen::MatrixXd fundamental_matrix(const ClassDecomposition& dec) {
  const int m = dec.size();
  const Eigen::MatrixXd ImM = Eigen::MatrixXd::Identity(m, m) - dec.M;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(ImM);
  Eigen::MatrixXd Z = lu.solve(Eigen::MatrixXd::Identity(m, m));
  const double resid = (ImM * Z - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
  if (!(resid < 1e-10))
    throw SingularSystem("fundamental matrix residual " + std::to_string(resid));
  return Z;
}

// First-passage law of one class from any transient seed.
struct HittingLaw {
  ClassDecomposition dec;
  Eigen::MatrixXd Z;

  explicit HittingLaw(ClassDecomposition d) : dec(std::move(d)), Z(fundamental_matrix(dec)) {}
};

// p(t | q) = e_q^T M^{t-1} R, iterated as row-vector products.
inline double hitting_pmf(const HittingLaw& law, int q, int t) {
  if (t < 1) throw DimensionMismatch("pmf defined for t >= 1");
  const int i = law.dec.local(q);
  Eigen::RowVectorXd u = Eigen::RowVectorXd::Zero(law.dec.size());
  u(i) = 1.0;
  for (int s = 1; s < t; ++s) u = u * law.dec.M;
  return u.dot(law.dec.R);
}

// p(1..T) in one sweep, reusing the prefix vector.
inline Eigen::VectorXd hitting_pmf_prefix(const HittingLaw& law, int q, int T) {
  const int i = law.dec.local(q);
  Eigen::RowVectorXd u = Eigen::RowVectorXd::Zero(law.dec.size());
  u(i) = 1.0;
  Eigen::VectorXd out(T);
  for (int t = 1; t <= T; ++t) {
    out(t - 1) = u.dot(law.dec.R);
    u = u * law.dec.M;
  }
  return out;
}

// residual transient mass after T steps, ||e_q^T M^T||_1
inline double pmf_tail_mass(const HittingLaw& law, int q, int T) {
  const int i = law.dec.local(q);
  Eigen::RowVectorXd u = Eigen::RowVectorXd::Zero(law.dec.size());
  u(i) = 1.0;
  for (int s = 0; s < T; ++s) u = u * law.dec.M;
  return u.sum();
}

inline double hitting_pgf(const HittingLaw& law, int q, double z) {
  if (!(std::abs(z) < 1.0 / law.dec.spectral_radius_bound))
    throw RadiusExceeded("pgf argument outside the radius of convergence");
  const int i = law.dec.local(q);
  const int m = law.dec.size();
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(m, m) - z * law.dec.M;
  const Eigen::VectorXd x = lhs.partialPivLu().solve(law.dec.R);
  return x(i);
}

struct HittingMoments {
  double mean = 0.0;
  double second_moment = 0.0;
  double variance = 0.0;
};

inline HittingMoments hitting_moments(const HittingLaw& law, int q) {
  const int i = law.dec.local(q);
  const Eigen::VectorXd z1 = law.Z * Eigen::VectorXd::Ones(law.dec.size());
  const Eigen::VectorXd zz1 = law.Z * z1;
  HittingMoments out;
  out.mean = z1(i);
  out.second_moment = 2.0 * zz1(i) - z1(i);
  out.variance = out.second_moment - out.mean * out.mean;
  return out;
}

// same second moment through (I + M) Z^2 1; kept as an independent route
inline double second_moment_factored(const HittingLaw& law, int q) {
  const int i = law.dec.local(q);
  const Eigen::VectorXd zz1 =
      law.Z * (law.Z * Eigen::VectorXd::Ones(law.dec.size()));
  return zz1(i) + law.dec.M.row(i).dot(zz1);
}

// mean through the resolvent route e_q^T Z^2 R
inline double mean_via_resolvent(const HittingLaw& law, int q) {
  const int i = law.dec.local(q);
  const Eigen::VectorXd zr = law.Z * (law.Z * law.dec.R);
  return zr(i);
}

// Spectral expansion p(t) = sum_k c_k(q) lambda_k^{t-1} with
// c_k = (e_q^T u_k)(w_k^T R), the coefficients of e_q^T U L^{t-1} U^{-1} R;
// requires a well-conditioned eigenbasis.
struct SpectralLaw {
  Eigen::VectorXcd eigenvalues;
  Eigen::VectorXcd coefficients;
};

inline SpectralLaw spectral_law(const HittingLaw& law, int q,
                                double cond_threshold = 1e8) {
  const int i = law.dec.local(q);
  const int m = law.dec.size();
  Eigen::EigenSolver<Eigen::MatrixXd> es(law.dec.M);
  if (es.info() != Eigen::Success)
    throw NonDiagonalizable("eigendecomposition failed");
  const Eigen::MatrixXcd U = es.eigenvectors();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(U);
  const double cond =
      svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
  if (!(cond < cond_threshold))
    throw NonDiagonalizable("eigenvector condition number " + std::to_string(cond));
  // rows of U^{-1} are the left eigenvectors, bi-orthonormal to columns of U
  const Eigen::MatrixXcd W = U.partialPivLu().solve(Eigen::MatrixXcd::Identity(m, m));
  SpectralLaw out;
  out.eigenvalues = es.eigenvalues();
  out.coefficients.resize(m);
  const Eigen::VectorXcd Rc = law.dec.R.cast<std::complex<double>>();
  for (int k = 0; k < m; ++k) {
    const std::complex<double> wr = (W.row(k) * Rc)(0, 0);  // no conjugation
    out.coefficients(k) = U(i, k) * wr;
  }
  return out;
}

inline double spectral_pmf(const SpectralLaw& sl, int t) {
  std::complex<double> acc(0.0, 0.0);
  for (int k = 0; k < sl.eigenvalues.size(); ++k)
    acc += sl.coefficients(k) * std::pow(sl.eigenvalues(k), t - 1);
  if (!(std::abs(acc.imag()) < 1e-9))
    throw NonDiagonalizable("spectral pmf imaginary residue " +
                            std::to_string(std::abs(acc.imag())));
  return acc.real();
}

inline double spectral_pmf(const HittingLaw& law, int q, int t) {
  return spectral_pmf(spectral_law(law, q), t);
}

}  // namespace drwgeom
