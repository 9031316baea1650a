#pragma once

#include "usat/types.hpp"

namespace usat {

// Subtract the column mean from each column (in place).
void center_in_place(Eigen::MatrixXd& m);
void center_in_place(Eigen::VectorXd& v);
Eigen::VectorXd centered(const Eigen::VectorXd& v);

// Folded minor allele frequency min(m, 1-m), m = mean(dosage)/2.
double compute_maf(const Eigen::VectorXd& raw_dosage);

// Eigenvalues below this fraction of the largest are clamped to exactly 0.
inline constexpr double kEigClampRel = 1e-12;

SufficientStats build_sufficient_stats(const TraitMatrix& Y, const GenotypeRecord& X);

// Per-dataset precomputation shared across all variants of a scan:
// Y'Y and its Cholesky factor, sigma0^2, and the eigenvalues of
// (Y'Y/n)/sigma0^4. cov_um_eigs for a variant are these scaled by X'X.
struct DatasetPrecompute {
  Eigen::MatrixXd yty;
  Eigen::LLT<Eigen::MatrixXd> yty_llt;
  double sigma0_sq = 0;
  Eigen::VectorXd base_eigs;  // descending, clamped at 0
  Eigen::Index n = 0;

  explicit DatasetPrecompute(const TraitMatrix& Y);
};

// Same as build_sufficient_stats but reusing the per-dataset factorization.
SufficientStats variant_stats(const DatasetPrecompute& pre, const TraitMatrix& Y,
                              const GenotypeRecord& X);

}  // namespace usat
