#include "usat/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "usat/assoc_tests.hpp"
#include "usat/core_model.hpp"

namespace usat {

Eigen::MatrixXd CorrelationSpec::matrix(int K) const {
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(K, K);
  switch (kind) {
    case CorrKind::INDEPENDENT:
      break;
    case CorrKind::CS:
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j)
          if (i != j) R(i, j) = rho;
      break;
    case CorrKind::AR1:
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) R(i, j) = std::pow(rho, std::abs(i - j));
      break;
    case CorrKind::BLOCK_CS: {
      const int m = (int)std::lround(block_fraction * K);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          if (i != j) R(i, j) = rho;
      break;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R, Eigen::EigenvaluesOnly);
  if (es.eigenvalues()[0] <= 0)
    throw InvalidDesign("correlation matrix not positive definite");
  return R;
}

double SimDesign::resid_var(int k) const {
  if (sign(k) == 0) return total_var;
  return total_var - effect_size * effect_size * 2.0 * maf * (1.0 - maf);
}

void SimDesign::validate() const {
  if (n < 3 || K < 1) throw InvalidDesign("need n >= 3 and K >= 1");
  if (!(maf > 0 && maf <= 0.5)) throw InvalidDesign("maf must be in (0, 0.5]");
  for (int k = 0; k < K; ++k)
    if (resid_var(k) <= 0) throw InvalidDesign("nonpositive residual variance");
  corr.matrix(K);  // PD check
}

static std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 replicate_rng(std::uint64_t seed, std::int64_t replicate) {
  return std::mt19937_64(splitmix64(seed) ^ splitmix64(0x1234567900000000ULL + replicate));
}

double effect_from_variance_explained(double h2_fraction, double total_var, double maf) {
  if (!(h2_fraction > 0 && h2_fraction < 1) || total_var <= 0 || !(maf > 0))
    throw InvalidDesign("effect_from_variance_explained: invalid inputs");
  return std::sqrt(h2_fraction * total_var / (2.0 * maf * (1.0 - maf)));
}

Eigen::VectorXd simulate_genotype(int n, double maf, std::mt19937_64& rng) {
  const double p0 = (1.0 - maf) * (1.0 - maf);
  const double p01 = p0 + 2.0 * maf * (1.0 - maf);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) {
    const double u = unif(rng);
    x[i] = u < p0 ? 0.0 : (u < p01 ? 1.0 : 2.0);
  }
  return x;
}

// Symmetric eigen-root of the correlation matrix (exactly equivariant under
// trait permutation).
static Eigen::MatrixXd corr_root(const Eigen::MatrixXd& R) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

namespace {

struct PhenotypeSimulator {
  const SimDesign& design;
  Eigen::MatrixXd root;     // correlation root
  Eigen::VectorXd sd;       // per-trait residual sd
  Eigen::VectorXd beta;     // signed effect per trait

  explicit PhenotypeSimulator(const SimDesign& d) : design(d) {
    root = corr_root(d.corr.matrix(d.K));
    sd.resize(d.K);
    beta.resize(d.K);
    for (int k = 0; k < d.K; ++k) {
      sd[k] = std::sqrt(d.resid_var(k));
      beta[k] = d.sign(k) * d.effect_size;
    }
  }

  TraitMatrix simulate(const Eigen::VectorXd& dosage, std::mt19937_64& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n = design.n, K = design.K;
    TraitMatrix Y;
    Y.values.resize(n, K);
    Eigen::VectorXd z(K), eps(K);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < K; ++k) z[k] = normal(rng);
      eps.noalias() = root * z;
      for (int k = 0; k < K; ++k)
        Y.values(i, k) = design.beta0 + beta[k] * dosage[i] + sd[k] * eps[k];
    }
    Y.trait_names.resize(K);
    for (int k = 0; k < K; ++k) Y.trait_names[k] = "trait_" + std::to_string(k + 1);
    return Y;
  }
};

}  // namespace

TraitMatrix simulate_phenotypes(const Eigen::VectorXd& dosage, const SimDesign& design,
                                std::mt19937_64& rng) {
  design.validate();
  return PhenotypeSimulator(design).simulate(dosage, rng);
}

namespace {

struct RepOutcome {
  // One entry per requested test: the raw statistic and the p-value.
  std::vector<double> stat, p;
  bool valid = false;
};

RepOutcome run_tests_on(const SimDesign& design, const PhenotypeSimulator& sim,
                        const std::vector<TestKind>& tests, std::mt19937_64& rng) {
  RepOutcome out;
  out.stat.assign(tests.size(), std::numeric_limits<double>::quiet_NaN());
  out.p.assign(tests.size(), std::numeric_limits<double>::quiet_NaN());
  Eigen::VectorXd raw = simulate_genotype(design.n, design.maf, rng);
  TraitMatrix Y = sim.simulate(raw, rng);
  center_in_place(Y.values);
  GenotypeRecord X;
  X.dosage = centered(raw);
  X.maf = compute_maf(raw);
  try {
    DatasetPrecompute pre(Y);
    SufficientStats stats = variant_stats(pre, Y, X);
    std::vector<double> marg_p;
    auto marginals = [&]() -> const std::vector<double>& {
      if (marg_p.empty())
        for (const auto& t : marginal_tests(Y, X)) marg_p.push_back(t.p_value);
      return marg_p;
    };
    for (std::size_t i = 0; i < tests.size(); ++i) {
      TestOutcome o;
      switch (tests[i]) {
        case TestKind::Manova:
          o = manova_test(stats, Y.n(), Y.k());
          break;
        case TestKind::Ssu:
          o = ssu_test(stats);
          break;
        case TestKind::Usat:
          o = usat_test(stats, Y.n(), Y.k());
          break;
        case TestKind::Fisher:
          o = fisher_combine(marginals());
          break;
        case TestKind::Minp:
          o = minp_combine(marginals());
          break;
      }
      out.stat[i] = o.statistic;
      out.p[i] = o.p_value;
    }
    out.valid = true;
  } catch (const Error&) {
    out.valid = false;
  }
  return out;
}

// Runs `fn(replicate)` over [0, N) across threads; replicate-indexed RNG keeps
// results independent of the schedule.
void parallel_replicates(std::int64_t N, int threads,
                         const std::function<void(std::int64_t, int)>& fn) {
  threads = std::max(1, threads);
  if (threads == 1) {
    for (std::int64_t r = 0; r < N; ++r) fn(r, 0);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t]() {
      for (std::int64_t r = t; r < N; r += threads) fn(r, t);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

std::string test_name(TestKind t) {
  switch (t) {
    case TestKind::Manova: return "manova";
    case TestKind::Ssu: return "ssu";
    case TestKind::Usat: return "usat";
    case TestKind::Fisher: return "fisher";
    case TestKind::Minp: return "minp";
  }
  return "?";
}

std::vector<Type1Cell> run_type1_study(const SimDesign& design,
                                       const std::vector<TestKind>& tests,
                                       const std::vector<double>& alphas, int threads) {
  design.validate();
  if (design.replicates < 1000) throw InvalidDesign("type-I study needs >= 1000 replicates");
  PhenotypeSimulator sim(design);
  const std::int64_t N = design.replicates;
  threads = std::max(1, threads);
  // counts[thread][test][alpha]
  std::vector<std::vector<std::vector<std::int64_t>>> counts(
      threads, std::vector<std::vector<std::int64_t>>(tests.size(),
                                                      std::vector<std::int64_t>(alphas.size(), 0)));
  std::vector<std::int64_t> valid(threads, 0);
  parallel_replicates(N, threads, [&](std::int64_t r, int t) {
    auto rng = replicate_rng(design.seed, r);
    RepOutcome o = run_tests_on(design, sim, tests, rng);
    if (!o.valid) return;
    ++valid[t];
    for (std::size_t i = 0; i < tests.size(); ++i)
      for (std::size_t a = 0; a < alphas.size(); ++a)
        if (o.p[i] <= alphas[a]) ++counts[t][i][a];
  });
  const double nv = (double)std::accumulate(valid.begin(), valid.end(), std::int64_t(0));
  std::vector<Type1Cell> cells;
  for (std::size_t i = 0; i < tests.size(); ++i)
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      std::int64_t c = 0;
      for (int t = 0; t < threads; ++t) c += counts[t][i][a];
      const double rate = c / nv;
      cells.push_back({tests[i], alphas[a], rate,
                       std::sqrt(alphas[a] * (1.0 - alphas[a]) / nv)});
    }
  return cells;
}

static bool rejects_low(TestKind t) {
  return t == TestKind::Minp || t == TestKind::Usat;
}

std::vector<PowerPoint> run_power_study(const SimDesign& base,
                                        const std::vector<double>& assoc_fractions,
                                        const std::vector<TestKind>& tests, int threads) {
  const std::int64_t N = base.replicates;
  // Null replicate set (beta = 0), shared across fractions.
  SimDesign null_design = base;
  null_design.assoc_pattern.clear();
  null_design.effect_size = 0.0;
  null_design.validate();
  PhenotypeSimulator null_sim(null_design);
  std::vector<std::vector<double>> null_val(tests.size());  // statistic or p
  {
    std::vector<RepOutcome> outs((std::size_t)N);
    parallel_replicates(N, threads, [&](std::int64_t r, int) {
      auto rng = replicate_rng(base.seed, r);
      outs[(std::size_t)r] = run_tests_on(null_design, null_sim, tests, rng);
    });
    for (const auto& o : outs) {
      if (!o.valid) continue;
      for (std::size_t i = 0; i < tests.size(); ++i)
        null_val[i].push_back(rejects_low(tests[i]) ? o.p[i] : o.stat[i]);
    }
  }
  std::vector<double> threshold(tests.size());
  for (std::size_t i = 0; i < tests.size(); ++i) {
    auto v = null_val[i];
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    // 95th statistic quantile for high-rejecting tests, 5th p quantile otherwise.
    threshold[i] = rejects_low(tests[i]) ? v[(std::size_t)std::floor(0.05 * (m - 1))]
                                         : v[(std::size_t)std::ceil(0.95 * (m - 1))];
  }

  std::vector<PowerPoint> points;
  for (double frac : assoc_fractions) {
    SimDesign alt = base;
    const int n_assoc = (int)std::lround(frac * base.K);
    alt.assoc_pattern.assign(base.K, 0);
    for (int k = 0; k < n_assoc; ++k)
      alt.assoc_pattern[k] = (k < (int)base.assoc_pattern.size() && base.assoc_pattern[k] != 0)
                                 ? base.assoc_pattern[k]
                                 : 1;
    if (n_assoc == 0) alt.effect_size = 0.0;
    alt.validate();
    PhenotypeSimulator sim(alt);
    std::vector<std::vector<std::int64_t>> hits(std::max(1, threads),
                                                std::vector<std::int64_t>(tests.size(), 0));
    std::vector<std::int64_t> valid(std::max(1, threads), 0);
    parallel_replicates(N, threads, [&](std::int64_t r, int t) {
      auto rng = replicate_rng(base.seed, r);
      RepOutcome o = run_tests_on(alt, sim, tests, rng);
      if (!o.valid) return;
      ++valid[t];
      for (std::size_t i = 0; i < tests.size(); ++i) {
        const double v = rejects_low(tests[i]) ? o.p[i] : o.stat[i];
        if (rejects_low(tests[i]) ? (v < threshold[i]) : (v > threshold[i])) ++hits[t][i];
      }
    });
    const double nv = (double)std::accumulate(valid.begin(), valid.end(), std::int64_t(0));
    for (std::size_t i = 0; i < tests.size(); ++i) {
      std::int64_t h = 0;
      for (auto& row : hits) h += row[i];
      points.push_back({tests[i], frac, h / nv});
    }
  }
  return points;
}

// ---------------------------------------------------------------------------
// Theorem limit verification
// ---------------------------------------------------------------------------

namespace {

// det(I + (H/n)(E/n)^-1) = |H+E|/|E| = 1/(1 - s'(Y'Y)^-1 s / X'X)
// for one simulated dataset with common residual variance sigma_sq.
double det_ratio_once(int n, int K, double maf, double sigma_sq,
                      const Eigen::VectorXd& beta, const Eigen::MatrixXd& root,
                      std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd raw = simulate_genotype(n, maf, rng);
  Eigen::MatrixXd Y(n, K);
  const double sd = std::sqrt(sigma_sq);
  Eigen::VectorXd z(K), eps(K);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < K; ++k) z[k] = normal(rng);
    eps.noalias() = root * z;
    for (int k = 0; k < K; ++k) Y(i, k) = beta[k] * raw[i] + sd * eps[k];
  }
  center_in_place(Y);
  Eigen::VectorXd x = centered(raw);
  const double g = x.squaredNorm();
  Eigen::MatrixXd A = Y.transpose() * Y;
  Eigen::VectorXd s = Y.transpose() * x;
  const double w = s.dot(A.llt().solve(s)) / g;
  return 1.0 / (1.0 - w);
}

Eigen::MatrixXd theorem_corr(int K, int m, double rho) {
  CorrelationSpec spec;
  if (m <= 0 || m >= K) {
    spec.kind = CorrKind::CS;
    spec.rho = rho;
    return spec.matrix(K);
  }
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(K, K);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i != j) R(i, j) = rho;
  return R;
}

struct MeanSd {
  double mean = 0, sd = 0;
};

MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.sd = v.size() > 1 ? std::sqrt(ss / (v.size() - 1)) : 0.0;
  return r;
}

}  // namespace

TheoremReport verify_theorem_limits(const TheoremScenario& sc) {
  TheoremReport rep;
  rep.scenario = sc;
  const double pq2 = 2.0 * sc.maf * (1.0 - sc.maf);
  const double b2 = sc.beta * sc.beta;
  const int K = sc.K, u = sc.u, m = sc.m;
  const double rho = sc.rho, s2 = sc.sigma_sq;

  if (m <= 0) {
    rep.det_complete_closed = 1.0 + pq2 * b2 * K / (s2 * (1.0 + (K - 1) * rho));
    rep.det_partial_closed =
        1.0 + (pq2 * b2 / (s2 * (1.0 - rho))) *
                  ((1.0 + (K - u - 1) * rho) / (1.0 + (K - 1) * rho)) * u;
    rep.partial_beats_complete_condition =
        double(u) / K > (1.0 - rho) / (1.0 + (K - u - 1) * rho);
  } else {
    const double a = pq2 * b2 / (s2 * (1.0 + (m - 1) * rho));
    const double b = pq2 * b2 / s2;
    rep.det_complete_closed = 1.0 + b * (K - m) + a * m;
    rep.det_partial_closed = 1.0 + b * (u - m) + a * m;
    rep.block_diff_closed = b * (K - u);
  }

  const Eigen::MatrixXd root = corr_root(theorem_corr(K, m, rho));
  Eigen::VectorXd beta_complete = Eigen::VectorXd::Constant(K, sc.beta);
  Eigen::VectorXd beta_partial = Eigen::VectorXd::Zero(K);
  beta_partial.head(u).setConstant(sc.beta);

  std::vector<double> dc, dp, diff;
  for (int r = 0; r < sc.repetitions; ++r) {
    auto rng1 = replicate_rng(sc.seed, 2 * r);
    auto rng2 = replicate_rng(sc.seed, 2 * r + 1);
    dc.push_back(det_ratio_once(sc.n, K, sc.maf, s2, beta_complete, root, rng1));
    dp.push_back(det_ratio_once(sc.n, K, sc.maf, s2, beta_partial, root, rng2));
    diff.push_back(dc.back() - dp.back());
  }
  auto msc = mean_sd(dc), msp = mean_sd(dp);
  rep.det_complete_mc = msc.mean;
  rep.det_complete_sd = msc.sd;
  rep.det_partial_mc = msp.mean;
  rep.det_partial_sd = msp.sd;
  rep.partial_beats_complete_mc = msp.mean > msc.mean;
  rep.block_diff_mc = mean_sd(diff).mean;
  return rep;
}

Theorem2Report verify_theorem2(double beta1, double beta2, double rho, double sigma_sq,
                               double maf, int n, int repetitions, std::uint64_t seed) {
  Theorem2Report rep;
  const double pq2 = 2.0 * maf * (1.0 - maf);
  rep.diff_closed = pq2 * beta2 * sigma_sq * (2.0 * rho * beta1 - beta2);
  CorrelationSpec cs{CorrKind::CS, rho, 0.8};
  const Eigen::MatrixXd root = corr_root(cs.matrix(2));
  const double sd = std::sqrt(sigma_sq);
  std::vector<double> diffs;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 0; r < repetitions; ++r) {
    auto rng = replicate_rng(seed, r);
    Eigen::VectorXd raw = simulate_genotype(n, maf, rng);
    // Shared noise for the two alternatives: H+E = Y'Y, so the difference of
    // determinants of Y'Y/n is what the theorem bounds.
    Eigen::MatrixXd E(n, 2);
    Eigen::VectorXd z(2), eps(2);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < 2; ++k) z[k] = normal(rng);
      eps.noalias() = root * z;
      E(i, 0) = sd * eps[0];
      E(i, 1) = sd * eps[1];
    }
    auto det_yty = [&](double b1, double b2v) {
      Eigen::MatrixXd Y = E;
      Y.col(0) += b1 * raw;
      Y.col(1) += b2v * raw;
      center_in_place(Y);
      Eigen::Matrix2d A = (Y.transpose() * Y) / double(n);
      return A.determinant();
    };
    diffs.push_back(det_yty(beta1, 0.0) - det_yty(beta1, beta2));
  }
  auto ms = mean_sd(diffs);
  rep.diff_mc = ms.mean;
  rep.diff_sd = ms.sd;
  return rep;
}

}  // namespace usat
