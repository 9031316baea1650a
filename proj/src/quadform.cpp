#include "usat/quadform.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <cmath>
#include <random>

#include "usat/types.hpp"

namespace usat {

using boost::math::chi_squared;
using boost::math::non_central_chi_squared;

double chi2_survival(double df, double x) {
  if (x <= 0) return 1.0;
  return cdf(complement(chi_squared(df), x));
}

double chi2_cdf(double df, double x) {
  if (x <= 0) return 0.0;
  return cdf(chi_squared(df), x);
}

double chi2_quantile_upper(double df, double p_upper) {
  return quantile(complement(chi_squared(df), p_upper));
}

double chi2_pdf(double df, double x) {
  if (x <= 0) return 0.0;
  return pdf(chi_squared(df), x);
}

static void power_sums(const Eigen::VectorXd& eigs, double& c1, double& c2, double& c3,
                       double& c4) {
  c1 = c2 = c3 = c4 = 0;
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    const double e = eigs[i];
    if (e < 0) throw DegenerateDistribution("negative eigenvalue in quadratic form");
    const double e2 = e * e;
    c1 += e;
    c2 += e2;
    c3 += e2 * e;
    c4 += e2 * e2;
  }
}

SsuNullParams ssu_params(const Eigen::VectorXd& eigs) {
  double c1, c2, c3, c4;
  power_sums(eigs, c1, c2, c3, c4);
  if (c3 <= 0) throw DegenerateDistribution("ssu_params: all eigenvalues zero");
  SsuNullParams p;
  p.a = c3 / c2;
  p.b = c1 - c2 * c2 / c3;
  p.d = c2 * c2 * c2 / (c3 * c3);
  return p;
}

double ssu_survival(const SsuNullParams& p, double t) {
  const double arg = std::max((t - p.b) / p.a, 0.0);
  return chi2_survival(p.d, arg);
}

double ssu_cdf(const SsuNullParams& p, double t) {
  const double arg = (t - p.b) / p.a;
  if (arg <= 0) return 0.0;
  return chi2_cdf(p.d, arg);
}

QuadFormDist liu_fit(const Eigen::VectorXd& eigs) {
  double c1, c2, c3, c4;
  power_sums(eigs, c1, c2, c3, c4);
  if (c2 <= 0) throw DegenerateDistribution("liu_fit: all eigenvalues zero");
  QuadFormDist d;
  d.eigs = eigs;
  d.mean = c1;
  d.variance = 2.0 * c2;
  const double s1 = c3 / (c2 * std::sqrt(c2));
  const double s2 = c4 / (c2 * c2);
  if (s1 * s1 > s2) {
    const double a = 1.0 / (s1 - std::sqrt(s1 * s1 - s2));
    d.liu_delta = std::max(s1 * a * a * a - a * a, 0.0);
    d.liu_l = a * a - 2.0 * d.liu_delta;
  } else {
    d.liu_delta = 0.0;
    d.liu_l = 1.0 / (s1 * s1);
  }
  if (!(d.liu_l > 0)) throw DegenerateDistribution("liu_fit: nonpositive df");
  return d;
}

// Match point on the chi2_l(delta) scale for an observation t.
static double liu_match_point(const QuadFormDist& d, double t) {
  const double mu_chi = d.liu_l + d.liu_delta;
  const double sd_chi = std::sqrt(2.0 * (d.liu_l + 2.0 * d.liu_delta));
  const double tstar = (t - d.mean) / std::sqrt(d.variance);
  return tstar * sd_chi + mu_chi;
}

double qf_survival(const QuadFormDist& d, double t) {
  const double q = liu_match_point(d, t);
  if (q <= 0) return 1.0;
  double p;
  if (d.liu_delta > 1e-12)
    p = cdf(complement(non_central_chi_squared(d.liu_l, d.liu_delta), q));
  else
    p = cdf(complement(chi_squared(d.liu_l), q));
  if (p < 0) p = 0;
  if (p > 1) p = 1;
  return p;
}

double qf_quantile(const QuadFormDist& d, double p_upper) {
  if (!(p_upper > 0 && p_upper < 1))
    throw NumericalFailure("qf_quantile: p_upper outside (0,1)");
  double q;
  if (d.liu_delta > 1e-12)
    q = quantile(complement(non_central_chi_squared(d.liu_l, d.liu_delta), p_upper));
  else
    q = quantile(complement(chi_squared(d.liu_l), p_upper));
  const double mu_chi = d.liu_l + d.liu_delta;
  const double sd_chi = std::sqrt(2.0 * (d.liu_l + 2.0 * d.liu_delta));
  return d.mean + std::sqrt(d.variance) * (q - mu_chi) / sd_chi;
}

std::vector<double> qf_mc_sample(const Eigen::VectorXd& eigs, std::int64_t draws,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out((std::size_t)draws);
  for (auto& v : out) {
    double s = 0;
    for (Eigen::Index j = 0; j < eigs.size(); ++j) {
      const double z = normal(rng);
      s += eigs[j] * z * z;
    }
    v = s;
  }
  return out;
}

}  // namespace usat
