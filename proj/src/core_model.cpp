#include "usat/core_model.hpp"

#include <algorithm>
#include <cmath>

#include "usat/kernels.hpp"

namespace usat {

void center_in_place(Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double mu = kernels::sum(m.col(j).data(), (std::size_t)m.rows()) / m.rows();
    kernels::shift(m.col(j).data(), (std::size_t)m.rows(), mu);
  }
}

void center_in_place(Eigen::VectorXd& v) {
  const double mu = kernels::sum(v.data(), (std::size_t)v.size()) / v.size();
  kernels::shift(v.data(), (std::size_t)v.size(), mu);
}

Eigen::VectorXd centered(const Eigen::VectorXd& v) {
  Eigen::VectorXd out = v;
  center_in_place(out);
  return out;
}

double compute_maf(const Eigen::VectorXd& raw_dosage) {
  if (raw_dosage.size() == 0) throw Error("compute_maf: empty dosage vector");
  const double m = kernels::sum(raw_dosage.data(), (std::size_t)raw_dosage.size()) /
                   (2.0 * raw_dosage.size());
  return std::min(m, 1.0 - m);
}

static Eigen::VectorXd clamped_descending_eigs(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  Eigen::VectorXd ev = es.eigenvalues().reverse();  // descending
  const double cut = kEigClampRel * std::max(ev[0], 0.0);
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] < cut) ev[i] = 0.0;
  return ev;
}

DatasetPrecompute::DatasetPrecompute(const TraitMatrix& Y) : n(Y.n()) {
  const Eigen::Index K = Y.k();
  if (n <= K) throw DegenerateTraits("need n > K");
  yty.noalias() = Y.values.transpose() * Y.values;
  yty_llt.compute(yty);
  if (yty_llt.info() != Eigen::Success)
    throw DegenerateTraits("Y'Y is singular");
  // Guard against near-singular Y'Y that LLT still accepts.
  Eigen::VectorXd yev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(yty, Eigen::EigenvaluesOnly).eigenvalues();
  if (yev[0] <= kEigClampRel * yev[K - 1])
    throw DegenerateTraits("Y'Y is numerically singular");
  sigma0_sq = yty.trace() / (double(K) * (n - 1));
  base_eigs = clamped_descending_eigs(yty / ((double)n * sigma0_sq * sigma0_sq));
}

SufficientStats variant_stats(const DatasetPrecompute& pre, const TraitMatrix& Y,
                              const GenotypeRecord& X) {
  const Eigen::Index n = Y.n(), K = Y.k();
  SufficientStats s;
  s.n = n;
  s.xtx = kernels::sumsq(X.dosage.data(), (std::size_t)n);
  if (s.xtx <= 0 || s.xtx < 1e-12 * n)
    throw MonomorphicVariant("X'X = 0 after centering: " + X.snp_id);
  s.score.resize(K);
  for (Eigen::Index k = 0; k < K; ++k)
    s.score[k] = kernels::dot(Y.values.col(k).data(), X.dosage.data(), (std::size_t)n);
  s.beta_hat = s.score / s.xtx;
  s.h_mat.noalias() = s.beta_hat * s.xtx * s.beta_hat.transpose();
  s.e_mat = pre.yty - s.h_mat;
  s.sigma0_sq = pre.sigma0_sq;
  s.cov_um_eigs = pre.base_eigs * s.xtx;
  // E must stay positive definite: s'(Y'Y)^{-1} s / X'X < 1.
  const double w = s.score.dot(pre.yty_llt.solve(s.score)) / s.xtx;
  if (w >= 1.0 - 1e-12)
    throw DegenerateTraits("error SSCP is singular (perfect fit): " + X.snp_id);
  return s;
}

SufficientStats build_sufficient_stats(const TraitMatrix& Y, const GenotypeRecord& X) {
  DatasetPrecompute pre(Y);
  return variant_stats(pre, Y, X);
}

}  // namespace usat
