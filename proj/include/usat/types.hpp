#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace usat {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MonomorphicVariant : Error {
  using Error::Error;
};
struct DegenerateTraits : Error {
  using Error::Error;
};
struct DegenerateDistribution : Error {
  using Error::Error;
};
struct NumericalFailure : Error {
  using Error::Error;
};
struct SingularCovariates : Error {
  using Error::Error;
};
struct InvalidDesign : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct SchemaError : Error {
  using Error::Error;
};

// n x K centered phenotype matrix.
struct TraitMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> trait_names;
  // Per-column means subtracted at load time (kept for reporting).
  std::vector<double> original_means;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index k() const { return values.cols(); }
};

// One variant: centered dosage plus identifiers. maf is computed from the
// raw dosages (over observed entries) before imputation/centering.
struct GenotypeRecord {
  std::string snp_id;
  std::string chrom;
  long long pos = 0;
  Eigen::VectorXd dosage;
  double maf = 0.0;
  int n_missing = 0;
};

// Per-variant sufficient statistics shared by MANOVA / SSU / USAT.
struct SufficientStats {
  double xtx = 0;                // X'X, centered
  Eigen::VectorXd beta_hat;      // Y'X / X'X
  Eigen::MatrixXd h_mat;         // beta_hat (X'X) beta_hat'
  Eigen::MatrixXd e_mat;         // Y'Y - H
  double sigma0_sq = 0;          // trace(Y'Y) / (K (n-1))
  Eigen::VectorXd cov_um_eigs;   // eigenvalues of (X'X) (Y'Y/n) / sigma0^4, descending
  Eigen::VectorXd score;         // Y'X
  Eigen::Index n = 0;
};

enum class Method { MANOVA, SSU, MARGINAL, FISHER, MINP, USAT };

struct TestOutcome {
  Method method = Method::MANOVA;
  double statistic = 0;
  double p_value = 1;
  // USAT payload
  double omega_star = 0;
  double t_usat = 0;
  std::vector<double> p_omega;
  // Marginal payload
  int trait_index = -1;
  double slope = 0;
};

struct WeightGrid {
  std::vector<double> weights;  // strictly increasing, contains 0 and 1

  static WeightGrid even(int m = 11) {
    WeightGrid g;
    g.weights.resize(m);
    for (int i = 0; i < m; ++i) g.weights[i] = double(i) / (m - 1);
    return g;
  }
};

}  // namespace usat
