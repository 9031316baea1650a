#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace usat {

// Zhang (2005) scaled-shifted chi-square null for the SSU statistic:
// T_S approx a*chi2_d + b.
struct SsuNullParams {
  double a = 1;
  double b = 0;
  double d = 1;
};

SsuNullParams ssu_params(const Eigen::VectorXd& eigs);
// Pr(a chi2_d + b > t), argument clamped at 0.
double ssu_survival(const SsuNullParams& p, double t);
// Pr(a chi2_d + b <= t), 0 when (t-b)/a <= 0.
double ssu_cdf(const SsuNullParams& p, double t);

// Liu et al. (2009) moment-matched chi-square approximation to the law of
// sum_j eigs_j chi2_1.
struct QuadFormDist {
  Eigen::VectorXd eigs;
  double mean = 0;      // sum eigs
  double variance = 0;  // 2 sum eigs^2
  double liu_l = 1;
  double liu_delta = 0;
};

QuadFormDist liu_fit(const Eigen::VectorXd& eigs);
// Pr(sum_j eigs_j chi2_1 > t) under the Liu approximation; in [0,1],
// monotone nonincreasing in t.
double qf_survival(const QuadFormDist& dist, double t);
// t such that qf_survival(dist, t) = p_upper.
double qf_quantile(const QuadFormDist& dist, double p_upper);
// Monte-Carlo reference sampler (test oracle): i.i.d. draws of
// sum_j eigs_j Z_j^2, deterministic per seed.
std::vector<double> qf_mc_sample(const Eigen::VectorXd& eigs, std::int64_t draws,
                                 std::uint64_t seed);

// Central chi-square helpers shared across modules.
double chi2_survival(double df, double x);
double chi2_cdf(double df, double x);
double chi2_quantile_upper(double df, double p_upper);
double chi2_pdf(double df, double x);

}  // namespace usat
