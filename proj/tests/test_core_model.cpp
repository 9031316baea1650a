#include <doctest.h>

#include <random>

#include "usat/core_model.hpp"

using namespace usat;

namespace {

TraitMatrix random_traits(int n, int k, std::uint64_t seed, double rho = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd shared(n, 1);
  for (int i = 0; i < n; ++i) shared(i, 0) = g(rng);
  TraitMatrix Y;
  Y.values.resize(n, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < n; ++i)
      Y.values(i, j) = std::sqrt(rho) * shared(i, 0) + std::sqrt(1 - rho) * g(rng);
  center_in_place(Y.values);
  return Y;
}

GenotypeRecord random_genotype(int n, double maf, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u;
  GenotypeRecord x;
  x.dosage.resize(n);
  for (int i = 0; i < n; ++i) {
    const double p = u(rng);
    x.dosage[i] = p < (1 - maf) * (1 - maf) ? 0.0 : (p < 1 - maf * maf ? 1.0 : 2.0);
  }
  x.maf = compute_maf(x.dosage);
  x.dosage = centered(x.dosage);
  return x;
}

}  // namespace

TEST_CASE("centering") {
  Eigen::VectorXd v(3);
  v << 1, 2, 3;
  center_in_place(v);
  CHECK(v(0) == doctest::Approx(-1));
  CHECK(v(1) == doctest::Approx(0));
  CHECK(v(2) == doctest::Approx(1));
  // idempotent
  Eigen::VectorXd w = v;
  center_in_place(w);
  CHECK((w - v).norm() == doctest::Approx(0));

  Eigen::VectorXd d(4);
  d << 0, 0, 1, 2;
  center_in_place(d);
  CHECK(d(0) == doctest::Approx(-0.75));
  CHECK(d(2) == doctest::Approx(0.25));
  CHECK(d(3) == doctest::Approx(1.25));
}

TEST_CASE("maf folding") {
  Eigen::VectorXd v(4);
  v << 0, 0, 0, 0;
  CHECK(compute_maf(v) == doctest::Approx(0.0));
  v << 2, 2, 2, 2;
  CHECK(compute_maf(v) == doctest::Approx(0.0));
  v << 0, 1, 1, 2;
  CHECK(compute_maf(v) == doctest::Approx(0.5));
  v << 0, 0, 0, 2;
  CHECK(compute_maf(v) == doctest::Approx(0.25));
}

TEST_CASE("sufficient stats identities") {
  const int n = 500, K = 3;
  TraitMatrix Y = random_traits(n, K, 11, 0.3);
  GenotypeRecord X = random_genotype(n, 0.2, 12);
  SufficientStats s = build_sufficient_stats(Y, X);

  // H + E = Y'Y; both symmetric; H rank <= 1 and PSD
  Eigen::MatrixXd yty = Y.values.transpose() * Y.values;
  CHECK((s.h_mat + s.e_mat - yty).norm() / yty.norm() < 1e-12);
  CHECK((s.h_mat - s.h_mat.transpose()).norm() < 1e-10);
  CHECK((s.e_mat - s.e_mat.transpose()).norm() < 1e-10);
  Eigen::VectorXd hev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s.h_mat).eigenvalues();
  CHECK(hev.minCoeff() > -1e-8 * hev.maxCoeff());
  CHECK(hev.head(K - 1).maxCoeff() < 1e-8 * hev.maxCoeff());  // rank one

  // trace identity
  CHECK(s.h_mat.trace() + s.e_mat.trace() ==
        doctest::Approx(yty.trace()).epsilon(1e-10));

  // beta_hat from normal equations
  for (int k = 0; k < K; ++k)
    CHECK(s.beta_hat(k) ==
          doctest::Approx(Y.values.col(k).dot(X.dosage) / s.xtx).epsilon(1e-12));

  // sigma0^2 definition
  CHECK(s.sigma0_sq == doctest::Approx(yty.trace() / (K * (n - 1.0))).epsilon(1e-12));

  // cov_um_eigs from the direct matrix computation
  Eigen::MatrixXd cov = s.xtx * (yty / double(n)) / (s.sigma0_sq * s.sigma0_sq);
  Eigen::VectorXd ref =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov).eigenvalues().reverse();
  for (int k = 0; k < K; ++k)
    CHECK(s.cov_um_eigs(k) == doctest::Approx(ref(k)).epsilon(1e-10));
}

TEST_CASE("allele flip leaves the statistics unchanged") {
  const int n = 300, K = 2;
  TraitMatrix Y = random_traits(n, K, 21);
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> d(0, 2);
  Eigen::VectorXd raw(n);
  for (int i = 0; i < n; ++i) raw(i) = d(rng);

  GenotypeRecord a, b;
  a.dosage = centered(raw);
  b.dosage = centered((2.0 - raw.array()).matrix());
  CHECK(compute_maf(raw) == doctest::Approx(compute_maf((2.0 - raw.array()).matrix())));
  SufficientStats sa = build_sufficient_stats(Y, a);
  SufficientStats sb = build_sufficient_stats(Y, b);
  CHECK(sa.xtx == doctest::Approx(sb.xtx).epsilon(1e-12));
  CHECK((sa.h_mat - sb.h_mat).norm() < 1e-8);
  CHECK((sa.e_mat - sb.e_mat).norm() < 1e-8);
  CHECK((sa.cov_um_eigs - sb.cov_um_eigs).norm() < 1e-8);
}

TEST_CASE("eigenvalues invariant to trait column order") {
  const int n = 250, K = 4;
  TraitMatrix Y = random_traits(n, K, 31, 0.5);
  GenotypeRecord X = random_genotype(n, 0.3, 32);
  TraitMatrix Yp = Y;
  Yp.values.col(0).swap(Yp.values.col(3));
  Yp.values.col(1).swap(Yp.values.col(2));
  SufficientStats s1 = build_sufficient_stats(Y, X);
  SufficientStats s2 = build_sufficient_stats(Yp, X);
  CHECK((s1.cov_um_eigs - s2.cov_um_eigs).norm() < 1e-8 * s1.cov_um_eigs.norm());
}

TEST_CASE("degenerate inputs are rejected") {
  const int n = 100;
  GenotypeRecord X = random_genotype(n, 0.2, 41);

  TraitMatrix Yx;  // Y == X exactly: zero residual
  Yx.values = X.dosage;
  CHECK_THROWS_AS(build_sufficient_stats(Yx, X), DegenerateTraits);

  TraitMatrix Y = random_traits(n, 2, 42);
  GenotypeRecord mono;
  mono.dosage = Eigen::VectorXd::Zero(n);
  CHECK_THROWS_AS(build_sufficient_stats(Y, mono), MonomorphicVariant);

  TraitMatrix Ydup = random_traits(n, 2, 43);
  Ydup.values.col(1) = 2.0 * Ydup.values.col(0);  // singular Y'Y
  CHECK_THROWS_AS(build_sufficient_stats(Ydup, X), DegenerateTraits);
}

TEST_CASE("null large-sample behavior: H/n -> 0, E/n -> trait covariance") {
  const int n = 100000, K = 2;
  const double rho = 0.4;
  TraitMatrix Y = random_traits(n, K, 51, rho);
  GenotypeRecord X = random_genotype(n, 0.2, 52);
  SufficientStats s = build_sufficient_stats(Y, X);
  CHECK((s.h_mat / n).norm() < 5e-3);
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1, rho, rho, 1;
  CHECK(((s.e_mat / n) - sigma).norm() < 0.02);
}

TEST_CASE("variant_stats matches build_sufficient_stats") {
  const int n = 400, K = 3;
  TraitMatrix Y = random_traits(n, K, 61, 0.2);
  DatasetPrecompute pre(Y);
  for (std::uint64_t seed : {62, 63, 64}) {
    GenotypeRecord X = random_genotype(n, 0.25, seed);
    SufficientStats a = build_sufficient_stats(Y, X);
    SufficientStats b = variant_stats(pre, Y, X);
    CHECK(a.xtx == doctest::Approx(b.xtx).epsilon(1e-12));
    CHECK((a.score - b.score).norm() < 1e-9);
    CHECK((a.cov_um_eigs - b.cov_um_eigs).norm() < 1e-8 * a.cov_um_eigs.norm());
    CHECK(a.sigma0_sq == doctest::Approx(b.sigma0_sq).epsilon(1e-14));
  }
}
