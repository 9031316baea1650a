#include "usat/covar_adjust.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "usat/core_model.hpp"

namespace usat {

namespace {

Eigen::LLT<Eigen::MatrixXd> ztz_factor(const CovariateMatrix& Z) {
  Eigen::MatrixXd ztz = Z.values.transpose() * Z.values;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z.values);
  qr.setThreshold(1e-10);
  if (qr.rank() < Z.q())
    throw SingularCovariates("covariate matrix is rank deficient");
  Eigen::LLT<Eigen::MatrixXd> llt(ztz);
  if (llt.info() != Eigen::Success)
    throw SingularCovariates("Z'Z not positive definite");
  return llt;
}

// Residual-maker application: v - Z (Z'Z)^-1 Z' v.
Eigen::MatrixXd project_out(const CovariateMatrix& Z,
                            const Eigen::LLT<Eigen::MatrixXd>& llt,
                            const Eigen::MatrixXd& v) {
  if (Z.q() == 0) return v;
  return v - Z.values * llt.solve(Z.values.transpose() * v);
}

}  // namespace

NullFit fit_null(const TraitMatrix& Y, const CovariateMatrix& Z, CovariateMode mode) {
  const Eigen::Index n = Y.n(), K = Y.k();
  NullFit fit;
  fit.mode = mode;
  if (Z.q() == 0) {
    fit.phi_hat.resize(0, mode == CovariateMode::Shared ? 1 : K);
    fit.adjusted_traits = Y.values;
    fit.sigma0_sq = Y.values.squaredNorm() / (double(n) * K);
    return fit;
  }
  if (Z.n() != n) throw SchemaError("covariate row count mismatch");
  if (Z.q() >= n - K) throw SingularCovariates("too many covariates (q >= n - K)");
  auto llt = ztz_factor(Z);
  if (mode == CovariateMode::Shared) {
    // phi_hat = (1/K) sum_k (Z'Z)^-1 Z' Y_k, one shared q-vector.
    Eigen::VectorXd ymean = Y.values.rowwise().mean();
    Eigen::VectorXd phi = llt.solve(Z.values.transpose() * ymean);
    fit.phi_hat = phi;
    Eigen::VectorXd zphi = Z.values * phi;
    fit.adjusted_traits = Y.values;
    for (Eigen::Index k = 0; k < K; ++k) fit.adjusted_traits.col(k) -= zphi;
  } else {
    fit.phi_hat = llt.solve(Z.values.transpose() * Y.values);  // q x K
    fit.adjusted_traits = Y.values - Z.values * fit.phi_hat;
  }
  fit.sigma0_sq = fit.adjusted_traits.squaredNorm() / (double(n) * K);
  return fit;
}

TestOutcome adjusted_ssu(const NullFit& fit, const GenotypeRecord& X) {
  const Eigen::Index n = fit.adjusted_traits.rows();
  const double xtx = X.dosage.squaredNorm();
  if (xtx <= 0) throw MonomorphicVariant("adjusted_ssu: X'X = 0");
  const double s2 = fit.sigma0_sq;
  const Eigen::VectorXd score = fit.adjusted_traits.transpose() * X.dosage;
  Eigen::MatrixXd cov = (xtx / (double(n) * s2 * s2)) *
                        (fit.adjusted_traits.transpose() * fit.adjusted_traits);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  Eigen::VectorXd eigs = es.eigenvalues().reverse();
  const double cut = kEigClampRel * std::max(eigs[0], 0.0);
  for (Eigen::Index i = 0; i < eigs.size(); ++i)
    if (eigs[i] < cut) eigs[i] = 0.0;
  TestOutcome out;
  out.method = Method::SSU;
  out.statistic = (score / s2).squaredNorm();
  out.p_value = ssu_survival(ssu_params(eigs), out.statistic);
  return out;
}

TestOutcome adjusted_manova(const TraitMatrix& Y, const GenotypeRecord& X,
                            const CovariateMatrix& Z) {
  const Eigen::Index n = Y.n(), K = Y.k();
  TestOutcome out;
  out.method = Method::MANOVA;
  if (Z.q() == 0) return manova_test(build_sufficient_stats(Y, X), n, K);
  auto llt = ztz_factor(Z);
  Eigen::MatrixXd yz = project_out(Z, llt, Y.values);
  Eigen::VectorXd xz = project_out(Z, llt, X.dosage).col(0);
  const double g = xz.squaredNorm();
  if (g < 1e-10 * n)
    throw SingularCovariates("design matrix (X, Z) is rank deficient");
  Eigen::MatrixXd he = yz.transpose() * yz;  // H + E
  Eigen::VectorXd s = yz.transpose() * xz;
  Eigen::LLT<Eigen::MatrixXd> he_llt(he);
  if (he_llt.info() != Eigen::Success)
    throw DegenerateTraits("adjusted_manova: H+E not positive definite");
  const double w = s.dot(he_llt.solve(s)) / g;
  if (w >= 1.0 - 1e-12)
    throw DegenerateTraits("adjusted_manova: error SSCP singular");
  // Bartlett factor as in manova_test, with q more fitted columns.
  out.statistic = -(double(n) - double(Z.q()) - 1.0 - (double(K) + 2.0) / 2.0) *
                  std::log1p(-w);
  out.p_value = chi2_survival((double)K, out.statistic);
  return out;
}

TestOutcome adjusted_usat(const TraitMatrix& Y, const GenotypeRecord& X,
                          const CovariateMatrix& Z, const WeightGrid& grid,
                          CovariateMode mode) {
  const Eigen::Index n = Y.n(), K = Y.k();
  if (Z.q() == 0) return usat_test(build_sufficient_stats(Y, X), n, K, grid);
  const TestOutcome tm = adjusted_manova(Y, X, Z);
  if (K == 1) {
    TestOutcome out = tm;
    out.method = Method::USAT;
    out.t_usat = out.p_value;
    out.omega_star = 1.0;
    out.p_omega.assign(grid.weights.size(), out.p_value);
    return out;
  }
  NullFit fit = fit_null(Y, Z, mode);
  const double xtx = X.dosage.squaredNorm();
  const double s2 = fit.sigma0_sq;
  const Eigen::VectorXd score = fit.adjusted_traits.transpose() * X.dosage;
  const double t_s = (score / s2).squaredNorm();
  Eigen::MatrixXd cov = (xtx / (double(n) * s2 * s2)) *
                        (fit.adjusted_traits.transpose() * fit.adjusted_traits);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  Eigen::VectorXd eigs = es.eigenvalues().reverse();
  const double cut = kEigClampRel * std::max(eigs[0], 0.0);
  for (Eigen::Index i = 0; i < eigs.size(); ++i)
    if (eigs[i] < cut) eigs[i] = 0.0;
  return usat_combine(tm.statistic, t_s, eigs, K, grid, double(n) - double(Z.q()));
}

std::vector<TestOutcome> adjusted_marginal_tests(const TraitMatrix& Y,
                                                 const GenotypeRecord& X,
                                                 const CovariateMatrix& Z) {
  const Eigen::Index n = Y.n();
  if (Z.q() == 0) return marginal_tests(Y, X);
  auto llt = ztz_factor(Z);
  Eigen::MatrixXd yz = project_out(Z, llt, Y.values);
  Eigen::VectorXd xz = project_out(Z, llt, X.dosage).col(0);
  const double sxx = xz.squaredNorm();
  if (sxx <= 0) throw MonomorphicVariant("adjusted_marginal_tests: confounded variant");
  const double df = double(n - 2 - Z.q());
  if (df <= 0) throw SingularCovariates("no residual degrees of freedom");
  const boost::math::students_t tdist(df);
  std::vector<TestOutcome> out;
  for (Eigen::Index k = 0; k < Y.k(); ++k) {
    const double sxy = yz.col(k).dot(xz);
    const double syy = yz.col(k).squaredNorm();
    const double beta = sxy / sxx;
    const double rss = syy - beta * sxy;
    TestOutcome o;
    o.method = Method::MARGINAL;
    o.trait_index = (int)k;
    o.slope = beta;
    if (rss <= 0) {
      o.statistic = std::numeric_limits<double>::infinity();
      o.p_value = 0.0;
    } else {
      const double se = std::sqrt(rss / (df * sxx));
      o.statistic = beta / se;
      o.p_value = std::min(1.0, 2.0 * cdf(complement(tdist, std::abs(o.statistic))));
    }
    out.push_back(o);
  }
  return out;
}

}  // namespace usat
