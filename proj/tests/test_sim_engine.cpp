#include <doctest.h>

#include <cmath>

#include "usat/sim_engine.hpp"

using namespace usat;

TEST_CASE("correlation structures") {
  CorrelationSpec cs{CorrKind::CS, 0.4};
  Eigen::MatrixXd m = cs.matrix(3);
  CHECK(m(0, 0) == doctest::Approx(1));
  CHECK(m(0, 2) == doctest::Approx(0.4));

  CorrelationSpec ar{CorrKind::AR1, 0.5};
  m = ar.matrix(4);
  CHECK(m(0, 1) == doctest::Approx(0.5));
  CHECK(m(0, 3) == doctest::Approx(0.125));

  CorrelationSpec ind{CorrKind::INDEPENDENT, 0.9};
  CHECK(ind.matrix(3).isIdentity(1e-12));

  CorrelationSpec block{CorrKind::BLOCK_CS, 0.6, 0.8};
  m = block.matrix(10);  // first 8 traits equicorrelated, last 2 independent
  CHECK(m(0, 7) == doctest::Approx(0.6));
  CHECK(m(0, 8) == doctest::Approx(0.0));
  CHECK(m(8, 9) == doctest::Approx(0.0));

  // CS needs rho > -1/(K-1)
  CorrelationSpec bad{CorrKind::CS, -0.9};
  CHECK_THROWS_AS(bad.matrix(5), InvalidDesign);
}

TEST_CASE("effect size calibration") {
  CHECK(effect_from_variance_explained(0.002, 10, 0.2) == doctest::Approx(0.25));
  CHECK(effect_from_variance_explained(0.005, 10, 0.2) ==
        doctest::Approx(0.395).epsilon(2e-3));
  CHECK(effect_from_variance_explained(0.005, 10, 0.05) ==
        doctest::Approx(0.725).epsilon(2e-3));
}

TEST_CASE("genotype generator moments and determinism") {
  auto rng = replicate_rng(5, 0);
  Eigen::VectorXd d = simulate_genotype(1000000, 0.2, rng);
  CHECK(d.mean() == doctest::Approx(0.4).epsilon(5e-3));
  const double var = (d.array() - d.mean()).square().mean();
  CHECK(var == doctest::Approx(0.32).epsilon(1e-2));

  auto rng2 = replicate_rng(6, 0);
  Eigen::VectorXd s = simulate_genotype(100000, 0.5, rng2);
  const double p0 = (s.array() == 0.0).count() / 100000.0;
  const double p2 = (s.array() == 2.0).count() / 100000.0;
  CHECK(p0 == doctest::Approx(0.25).epsilon(0.03));
  CHECK(p2 == doctest::Approx(0.25).epsilon(0.03));

  auto ra = replicate_rng(7, 3);
  auto rb = replicate_rng(7, 3);
  Eigen::VectorXd a = simulate_genotype(50, 0.3, ra);
  Eigen::VectorXd b = simulate_genotype(50, 0.3, rb);
  CHECK((a - b).norm() == 0.0);
  // different replicate index gives a different stream
  auto rc = replicate_rng(7, 4);
  Eigen::VectorXd c = simulate_genotype(50, 0.3, rc);
  CHECK((a - c).norm() > 0.0);
}

TEST_CASE("phenotype generator covariance and variance budget") {
  SimDesign d;
  d.n = 100000;
  d.K = 2;
  d.maf = 0.2;
  d.effect_size = 0.25;
  d.assoc_pattern = {1, 1};
  d.corr = {CorrKind::CS, 0.8};
  d.validate();
  CHECK(d.resid_var(0) == doctest::Approx(9.98));

  auto rng = replicate_rng(11, 0);
  Eigen::VectorXd x = simulate_genotype(d.n, d.maf, rng);
  TraitMatrix Y = simulate_phenotypes(x, d, rng);
  REQUIRE(Y.n() == d.n);
  REQUIRE(Y.k() == 2);

  Eigen::MatrixXd Yc = Y.values.rowwise() - Y.values.colwise().mean();
  Eigen::MatrixXd S = (Yc.transpose() * Yc) / double(d.n - 1);
  // total variance = genetic 0.02 + residual 9.98
  CHECK(S(0, 0) == doctest::Approx(10.0).epsilon(0.03));
  CHECK(S(1, 1) == doctest::Approx(10.0).epsilon(0.03));
  const double corr = S(0, 1) / std::sqrt(S(0, 0) * S(1, 1));
  // residual correlation 0.8 plus a small shared genetic part
  CHECK(corr == doctest::Approx(0.8).epsilon(0.02));

  // null design, independent traits
  SimDesign d0;
  d0.n = 100000;
  d0.K = 2;
  d0.corr = {CorrKind::INDEPENDENT, 0.0};
  auto rng2 = replicate_rng(12, 0);
  Eigen::VectorXd x2 = simulate_genotype(d0.n, d0.maf, rng2);
  TraitMatrix Y0 = simulate_phenotypes(x2, d0, rng2);
  Eigen::MatrixXd Y0c = Y0.values.rowwise() - Y0.values.colwise().mean();
  Eigen::MatrixXd S0 = (Y0c.transpose() * Y0c) / double(d0.n - 1);
  CHECK(S0(0, 0) == doctest::Approx(10.0).epsilon(0.03));
  CHECK(std::abs(S0(0, 1)) < 0.1);
}

TEST_CASE("type-I study basics") {
  SimDesign d;
  d.n = 200;
  d.K = 2;
  d.corr = {CorrKind::CS, 0.2};
  d.replicates = 1000;
  d.seed = 21;

  auto cells = run_type1_study(d, {TestKind::Manova, TestKind::Ssu}, {1.0, 0.05});
  REQUIRE(cells.size() == 4);
  for (const auto& c : cells) {
    if (c.alpha == 1.0) CHECK(c.rate == doctest::Approx(1.0));
    if (c.alpha == 0.05) {
      CHECK(c.rate > 0.02);
      CHECK(c.rate < 0.09);
      CHECK(c.se == doctest::Approx(std::sqrt(0.05 * 0.95 / 1000)).epsilon(1e-6));
    }
  }

  // identical results independent of worker count
  auto two = run_type1_study(d, {TestKind::Manova, TestKind::Ssu}, {1.0, 0.05}, 2);
  REQUIRE(two.size() == cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i)
    CHECK(two[i].rate == doctest::Approx(cells[i].rate).epsilon(1e-12));
}

TEST_CASE("power protocol anchors at the threshold definition") {
  SimDesign d;
  d.n = 300;
  d.K = 3;
  d.maf = 0.2;
  d.effect_size = effect_from_variance_explained(0.005, 10, 0.2);
  d.corr = {CorrKind::CS, 0.4};
  d.replicates = 500;
  d.seed = 31;

  auto pts = run_power_study(d, {0.0, 1.0},
                             {TestKind::Manova, TestKind::Usat});
  REQUIRE(pts.size() == 4);
  for (const auto& p : pts) {
    if (p.assoc_fraction == 0.0) {
      // null-vs-null: rejection rate should sit near the 5% threshold
      CHECK(p.power > 0.01);
      CHECK(p.power < 0.10);
    } else {
      CHECK(p.power > 0.2);  // strong full-association signal at n=300
    }
  }
}

TEST_CASE("two-trait determinant difference has the predicted sign") {
  // beta2 < 2 rho beta1: complete-association determinant exceeds partial
  auto r = verify_theorem2(0.25, 0.2, 0.6, 9.98, 0.2, 20000, 5, 41);
  CHECK(r.diff_closed == doctest::Approx(2 * 0.2 * 0.8 * 0.2 * 9.98 * (2 * 0.6 * 0.25 - 0.2))
                             .epsilon(1e-12));
  CHECK(r.diff_mc > 0);
  // beta2 > 2 rho beta1 flips the sign
  auto r2 = verify_theorem2(0.25, 0.45, 0.3, 9.98, 0.2, 20000, 5, 42);
  CHECK(r2.diff_closed < 0);
  CHECK(r2.diff_mc < 0);
}
