#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include "usat/types.hpp"

namespace usat {

enum class CorrKind { CS, AR1, INDEPENDENT, BLOCK_CS };

struct CorrelationSpec {
  CorrKind kind = CorrKind::CS;
  double rho = 0.0;
  double block_fraction = 0.8;  // BLOCK_CS only

  // K x K correlation matrix; throws InvalidDesign if not positive definite.
  Eigen::MatrixXd matrix(int K) const;
};

struct SimDesign {
  int n = 400;
  int K = 2;
  double maf = 0.2;
  double beta0 = 1.0;
  double effect_size = 0.0;
  // Signed association pattern, length K: 0 = unassociated, +1/-1 = sign of
  // the effect. Empty means all zero (null design).
  std::vector<int> assoc_pattern;
  double total_var = 10.0;
  CorrelationSpec corr;
  std::int64_t replicates = 500;
  std::uint64_t seed = 1;

  int sign(int k) const {
    return (k < (int)assoc_pattern.size()) ? assoc_pattern[k] : 0;
  }
  // Residual variance of trait k: total_var minus the SNP-explained part.
  double resid_var(int k) const;
  void validate() const;
};

// Independent per-replicate stream: results do not depend on worker count.
std::mt19937_64 replicate_rng(std::uint64_t seed, std::int64_t replicate);

// beta = sqrt(h2 * total_var / (2 maf (1-maf))).
double effect_from_variance_explained(double h2_fraction, double total_var, double maf);

// i.i.d. dosages from {0,1,2} with HWE probabilities ((1-f)^2, 2f(1-f), f^2).
Eigen::VectorXd simulate_genotype(int n, double maf, std::mt19937_64& rng);

// Uncentered Y = beta0 + beta_k X + eps, rows i.i.d. N(0, D R(rho) D).
TraitMatrix simulate_phenotypes(const Eigen::VectorXd& dosage, const SimDesign& design,
                                std::mt19937_64& rng);

// Names used in experiment tables and configs.
enum class TestKind { Manova, Ssu, Usat, Fisher, Minp };
std::string test_name(TestKind t);

struct Type1Cell {
  TestKind test;
  double alpha;
  double rate;
  double se;  // binomial standard error
};

std::vector<Type1Cell> run_type1_study(const SimDesign& design,
                                       const std::vector<TestKind>& tests,
                                       const std::vector<double>& alphas,
                                       int threads = 1);

struct PowerPoint {
  TestKind test;
  double assoc_fraction;
  double power;
};

// Paper protocol: 95th null statistic quantile for high-rejecting tests
// (Fisher/MANOVA/SSU), 5th null p-value quantile for min-p style tests
// (minP/USAT); power = exceedance fraction under the alternative.
std::vector<PowerPoint> run_power_study(const SimDesign& base,
                                        const std::vector<double>& assoc_fractions,
                                        const std::vector<TestKind>& tests,
                                        int threads = 1);

struct TheoremScenario {
  int K = 2;
  int u = 1;  // associated traits under partial association
  int m = 0;  // correlated traits for the block theorem (0 = plain CS)
  double rho = 0.6;
  double maf = 0.2;
  double beta = 0.25;
  double sigma_sq = 9.98;
  int n = 100000;
  int repetitions = 20;
  std::uint64_t seed = 1;
};

struct TheoremReport {
  TheoremScenario scenario;
  double det_complete_mc = 0, det_complete_closed = 0;
  double det_partial_mc = 0, det_partial_closed = 0;
  double det_complete_sd = 0, det_partial_sd = 0;
  bool partial_beats_complete_mc = false;
  bool partial_beats_complete_condition = false;  // u/K > (1-rho)/(1+(K-u-1)rho)
  // Block theorem (m > 0): complete-minus-partial difference vs b(K-u).
  double block_diff_mc = 0, block_diff_closed = 0;
};

TheoremReport verify_theorem_limits(const TheoremScenario& sc);

// Theorem for K=2 with unequal effects: det(H1/n+E/n) - det(H2/n+E/n)
// vs 2f(1-f) beta2 sigma^2 (2 rho beta1 - beta2).
struct Theorem2Report {
  double diff_mc = 0, diff_closed = 0, diff_sd = 0;
};
Theorem2Report verify_theorem2(double beta1, double beta2, double rho, double sigma_sq,
                               double maf, int n, int repetitions, std::uint64_t seed);

}  // namespace usat
