#pragma once

#include "usat/assoc_tests.hpp"
#include "usat/types.hpp"

namespace usat {

struct CovariateMatrix {
  Eigen::MatrixXd values;  // n x q, centered
  std::vector<std::string> names;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index q() const { return values.cols(); }
};

enum class CovariateMode { Shared, PerTrait };

// Null-model fit without the SNP. Under the shared mode a single nuisance
// coefficient vector (averaged across traits) is subtracted from every trait
// column; under per-trait mode each column gets its own projection.
struct NullFit {
  Eigen::MatrixXd phi_hat;          // q x 1 (shared) or q x K (per-trait)
  Eigen::MatrixXd adjusted_traits;  // n x K residuals
  double sigma0_sq = 0;             // (1/(nK)) sum_k ||Y_k - Z phi||^2
  CovariateMode mode = CovariateMode::Shared;
};

NullFit fit_null(const TraitMatrix& Y, const CovariateMatrix& Z,
                 CovariateMode mode = CovariateMode::Shared);

TestOutcome adjusted_ssu(const NullFit& nullfit, const GenotypeRecord& X);
TestOutcome adjusted_manova(const TraitMatrix& Y, const GenotypeRecord& X,
                            const CovariateMatrix& Z);
TestOutcome adjusted_usat(const TraitMatrix& Y, const GenotypeRecord& X,
                          const CovariateMatrix& Z,
                          const WeightGrid& grid = WeightGrid::even(),
                          CovariateMode mode = CovariateMode::Shared);

// Marginal OLS of Y_k on (X, Z); t tests with n-2-q df.
std::vector<TestOutcome> adjusted_marginal_tests(const TraitMatrix& Y,
                                                 const GenotypeRecord& X,
                                                 const CovariateMatrix& Z);

}  // namespace usat
