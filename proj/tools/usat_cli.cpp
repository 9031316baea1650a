// Command-line front end: genome scan plus the simulation studies
// (type-I calibration, power curves, large-sample theorem checks).
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "usat/io_formats.hpp"
#include "usat/scan.hpp"
#include "usat/sim_engine.hpp"

namespace {

using namespace usat;

const std::map<std::string, TestKind> kTestKinds = {
    {"manova", TestKind::Manova}, {"ssu", TestKind::Ssu},
    {"usat", TestKind::Usat},     {"fisher", TestKind::Fisher},
    {"minp", TestKind::Minp},
};

const std::map<std::string, CorrKind> kCorrKinds = {
    {"cs", CorrKind::CS},
    {"ar1", CorrKind::AR1},
    {"independent", CorrKind::INDEPENDENT},
    {"block-cs", CorrKind::BLOCK_CS},
};

std::vector<TestKind> resolve_tests(const std::vector<std::string>& names) {
  std::vector<TestKind> out;
  if (names.empty()) {
    for (const auto& [_, kind] : kTestKinds) out.push_back(kind);
    return out;
  }
  for (const auto& name : names) out.push_back(kTestKinds.at(name));
  return out;
}

void add_design_options(CLI::App* app, SimDesign& d, std::string& corr_name) {
  app->add_option("--n", d.n, "samples per replicate")->check(CLI::PositiveNumber);
  app->add_option("--traits,-K", d.K, "number of traits")->check(CLI::PositiveNumber);
  app->add_option("--maf", d.maf, "minor allele frequency")
      ->check(CLI::Range(0.0, 0.5));
  app->add_option("--rho", d.corr.rho, "trait correlation");
  app->add_option("--corr", corr_name, "correlation structure")
      ->check(CLI::IsMember({"cs", "ar1", "independent", "block-cs"}));
  app->add_option("--block-fraction", d.corr.block_fraction,
                  "correlated fraction for block-cs");
  app->add_option("--total-var", d.total_var, "per-trait total variance");
  app->add_option("--replicates,-N", d.replicates, "replicates")
      ->check(CLI::PositiveNumber);
  app->add_option("--seed", d.seed, "RNG seed");
}

int cmd_scan(const ScanConfig& cfg) {
  ScanSummary s = run_scan(cfg);
  std::printf("scanned %lld variants: %lld tested, %lld skipped (%.1f s, %.0f variants/s)\n",
              s.n_variants_read, s.n_variants_tested, s.n_variants_skipped, s.seconds,
              s.n_variants_read / std::max(s.seconds, 1e-9));
  return 0;
}

int cmd_calibrate(const SimDesign& d, const std::vector<std::string>& test_names,
                  const std::vector<double>& alphas, int threads) {
  auto cells = run_type1_study(d, resolve_tests(test_names),
                               alphas.empty() ? std::vector<double>{0.05, 0.01} : alphas,
                               threads);
  std::printf("test\talpha\trate\tse\n");
  for (const auto& c : cells)
    std::printf("%s\t%g\t%.6f\t%.6f\n", test_name(c.test).c_str(), c.alpha, c.rate, c.se);
  return 0;
}

int cmd_power(SimDesign d, const std::vector<std::string>& test_names,
              std::vector<double> fractions, double h2, int threads) {
  d.effect_size = effect_from_variance_explained(h2, d.total_var, d.maf);
  if (fractions.empty())
    for (int u = 1; u <= d.K; ++u) fractions.push_back(double(u) / d.K);
  auto points = run_power_study(d, fractions, resolve_tests(test_names), threads);
  std::printf("test\tassoc_fraction\tpower\n");
  for (const auto& p : points)
    std::printf("%s\t%g\t%.4f\n", test_name(p.test).c_str(), p.assoc_fraction, p.power);
  return 0;
}

int cmd_theorems(const TheoremScenario& sc, double beta1, double beta2) {
  TheoremReport r = verify_theorem_limits(sc);
  std::printf("complete association: det ratio mc=%.6f (sd %.2g) closed=%.6f\n",
              r.det_complete_mc, r.det_complete_sd, r.det_complete_closed);
  std::printf("partial association:  det ratio mc=%.6f (sd %.2g) closed=%.6f\n",
              r.det_partial_mc, r.det_partial_sd, r.det_partial_closed);
  std::printf("partial > complete: mc=%s condition=%s\n",
              r.partial_beats_complete_mc ? "yes" : "no",
              r.partial_beats_complete_condition ? "yes" : "no");
  if (sc.m > 0)
    std::printf("block difference: mc=%.6f closed=%.6f\n", r.block_diff_mc,
                r.block_diff_closed);
  Theorem2Report t2 = verify_theorem2(beta1, beta2, sc.rho, sc.sigma_sq, sc.maf, sc.n,
                                      sc.repetitions, sc.seed);
  std::printf("two-trait determinant difference: mc=%.6f (sd %.2g) closed=%.6f\n",
              t2.diff_mc, t2.diff_sd, t2.diff_closed);
  return 0;
}

// Write a simulated dataset (phenotype + genotype TSVs) for downstream scans:
// `variants` null variants, preceded by one associated variant when the
// design carries an effect.
int cmd_simulate(SimDesign d, double h2, double assoc_fraction, long long variants,
                 const std::string& prefix) {
  d.effect_size = effect_from_variance_explained(h2, d.total_var, d.maf);
  const int n_assoc = (int)std::lround(assoc_fraction * d.K);
  d.assoc_pattern.assign(d.K, 0);
  for (int k = 0; k < n_assoc; ++k) d.assoc_pattern[k] = 1;
  d.validate();

  auto rng = replicate_rng(d.seed, 0);
  const bool with_signal = d.effect_size > 0 && n_assoc > 0;
  const Eigen::VectorXd causal = simulate_genotype(d.n, d.maf, rng);
  const TraitMatrix Y = simulate_phenotypes(causal, d, rng);

  const std::string pheno_path = prefix + ".pheno.tsv";
  const std::string geno_path = prefix + ".geno.tsv";
  {
    std::ofstream out(pheno_path);
    out << "sample_id";
    for (int k = 1; k <= d.K; ++k) out << "\ttrait_" << k;
    out << '\n';
    char buf[32];
    for (int i = 0; i < d.n; ++i) {
      out << 's' << (i + 1);
      for (int k = 0; k < d.K; ++k) {
        std::snprintf(buf, sizeof buf, "\t%.6f", Y.values(i, k));
        out << buf;
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(geno_path);
    out << "snp_id\tchrom\tpos";
    for (int i = 0; i < d.n; ++i) out << "\ts" << (i + 1);
    out << '\n';
    std::string row;
    for (long long v = 0; v < variants; ++v) {
      row.clear();
      const bool is_causal = with_signal && v == 0;
      row += is_causal ? "rs_assoc" : "rs" + std::to_string(v + 1);
      row += "\t1\t";
      row += std::to_string(v + 1);
      const Eigen::VectorXd x = is_causal ? causal : simulate_genotype(d.n, d.maf, rng);
      for (int i = 0; i < d.n; ++i) {
        row += '\t';
        row += char('0' + (int)std::lround(x[i]));
      }
      row += '\n';
      out << row;
    }
  }
  std::printf("wrote %s and %s (%d samples, %d traits, %lld variants%s)\n",
              pheno_path.c_str(), geno_path.c_str(), d.n, d.K, variants,
              with_signal ? ", first variant associated" : "");
  return 0;
}

// Apply `key = value` pairs from a config file onto a parsed CLI app; keys
// already given explicitly on the command line are skipped so flags win.
std::vector<std::string> config_as_args(const std::string& path, const std::string& section,
                                        const CLI::App* sub) {
  std::vector<std::string> args;
  for (const auto& [name, entries] : parse_config(path)) {
    if (!section.empty() && name != section && !name.empty()) continue;
    for (const auto& [k, v] : entries) {
      const auto* opt = sub->get_option_no_throw("--" + k);
      if (opt == nullptr) throw ParseError("config key not recognized: " + k);
      if (opt->count() > 0) continue;
      args.push_back("--" + k);
      if (!v.empty()) args.push_back(v);
    }
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multivariate phenotype association tests"};
  app.require_subcommand(1);

  // scan
  ScanConfig scan_cfg;
  std::string covar_mode = "shared";
  auto* scan = app.add_subcommand("scan", "test every variant in a dosage file");
  scan->add_option("--pheno", scan_cfg.pheno_path, "phenotype TSV")->required();
  scan->add_option("--geno", scan_cfg.geno_path, "genotype dosage TSV")->required();
  scan->add_option("--covar", scan_cfg.covar_path, "covariate TSV");
  scan->add_option("--out", scan_cfg.out_path, "output TSV")->required();
  scan->add_option("--tests", scan_cfg.tests,
                   "subset of manova ssu usat fisher minp marginal (default: all)");
  scan->add_option("--maf-min", scan_cfg.maf_min, "minimum minor allele frequency")
      ->check(CLI::Range(0.0, 0.5));
  scan->add_option("--grid-size", scan_cfg.grid_size, "weight grid points");
  scan->add_option("--threads", scan_cfg.threads, "worker threads (0 = auto)");
  scan->add_option("--covar-mode", covar_mode, "shared or per-trait")
      ->check(CLI::IsMember({"shared", "per-trait"}));

  // calibrate / power share a design
  SimDesign design;
  std::string corr_name = "cs";
  std::vector<std::string> test_names;
  std::vector<double> alphas;
  std::vector<double> fractions;
  double h2 = 0.005;
  int threads = 1;

  auto* cal = app.add_subcommand("calibrate", "type-I error rates under the null");
  add_design_options(cal, design, corr_name);
  cal->add_option("--tests", test_names, "tests to run")->delimiter(',');
  cal->add_option("--alpha", alphas, "significance levels")->delimiter(',');
  cal->add_option("--threads", threads, "worker threads");

  auto* pow = app.add_subcommand("power", "empirical power across association fractions");
  add_design_options(pow, design, corr_name);
  pow->add_option("--tests", test_names, "tests to run")->delimiter(',');
  pow->add_option("--h2", h2, "variance explained by the variant per trait");
  pow->add_option("--fractions", fractions, "associated-trait fractions")->delimiter(',');
  pow->add_option("--threads", threads, "worker threads");

  auto* sim = app.add_subcommand("simulate", "write a simulated phenotype/genotype dataset");
  add_design_options(sim, design, corr_name);
  double sim_h2 = 0.0, sim_fraction = 0.0;
  long long sim_variants = 100;
  std::string sim_prefix = "simulated";
  sim->add_option("--h2", sim_h2, "variance explained per associated trait");
  sim->add_option("--assoc-fraction", sim_fraction, "fraction of traits associated")
      ->check(CLI::Range(0.0, 1.0));
  sim->add_option("--variants", sim_variants, "number of variants")
      ->check(CLI::PositiveNumber);
  sim->add_option("--out-prefix", sim_prefix, "output path prefix");

  auto* thm = app.add_subcommand("verify-theorems",
                                 "large-sample determinant-ratio limits");
  TheoremScenario sc;
  double beta1 = 0.25, beta2 = 0.1;
  thm->add_option("--traits,-K", sc.K);
  thm->add_option("--assoc", sc.u, "associated traits");
  thm->add_option("--correlated", sc.m, "correlated traits for the block case");
  thm->add_option("--rho", sc.rho);
  thm->add_option("--maf", sc.maf)->check(CLI::Range(0.0, 0.5));
  thm->add_option("--beta", sc.beta);
  thm->add_option("--sigma-sq", sc.sigma_sq);
  thm->add_option("--n", sc.n);
  thm->add_option("--repetitions", sc.repetitions);
  thm->add_option("--seed", sc.seed);
  thm->add_option("--beta1", beta1, "first effect for the two-trait check");
  thm->add_option("--beta2", beta2, "second effect for the two-trait check");

  // Optional config file feeding any simulation subcommand.
  std::string config_path, config_section;
  for (auto* sub : {cal, pow, sim, thm}) {
    sub->add_option("--config", config_path, "key=value config file");
    sub->add_option("--section", config_section, "config section to use");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    auto* sub = app.get_subcommands().front();
    if (!config_path.empty()) {
      auto args = config_as_args(config_path, config_section, sub);
      std::reverse(args.begin(), args.end());  // CLI11 consumes args back-to-front
      sub->parse(args);
    }
    design.corr.kind = kCorrKinds.at(corr_name);
    scan_cfg.covariate_mode =
        covar_mode == "per-trait" ? CovariateMode::PerTrait : CovariateMode::Shared;

    if (sub == scan) return cmd_scan(scan_cfg);
    if (sub == cal) return cmd_calibrate(design, test_names, alphas, threads);
    if (sub == pow) return cmd_power(design, test_names, fractions, h2, threads);
    if (sub == sim)
      return cmd_simulate(design, sim_h2, sim_fraction, sim_variants, sim_prefix);
    if (sub == thm) return cmd_theorems(sc, beta1, beta2);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
