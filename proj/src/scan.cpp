#include "usat/scan.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "usat/assoc_tests.hpp"
#include "usat/core_model.hpp"
#include "usat/covar_adjust.hpp"

namespace usat {

namespace {

const std::vector<std::string> kAllTests = {"manova", "ssu",  "usat",
                                            "fisher", "minp", "marginal"};

ResultRow skip_row(const std::string& snp_id, const std::string& reason) {
  ResultRow row;
  row.snp_id = snp_id;
  row.reason = reason;
  return row;
}

}  // namespace

bool ScanConfig::enabled(const std::string& t) const {
  if (tests.empty()) return true;
  return std::find(tests.begin(), tests.end(), t) != tests.end();
}

void ScanConfig::validate() const {
  if (pheno_path.empty()) throw InvalidDesign("phenotype file is required");
  if (geno_path.empty()) throw InvalidDesign("genotype file is required");
  if (out_path.empty()) throw InvalidDesign("output path is required");
  if (!(maf_min >= 0 && maf_min < 0.5))
    throw InvalidDesign("maf threshold must lie in [0, 0.5)");
  if (grid_size < 2) throw InvalidDesign("weight grid needs at least 2 points");
  for (const auto& t : tests)
    if (std::find(kAllTests.begin(), kAllTests.end(), t) == kAllTests.end())
      throw InvalidDesign("unknown test: " + t);
}

namespace {

// All per-variant work for one dataset, shared read-only across workers.
struct ScanContext {
  const ScanConfig& config;
  const TraitMatrix& traits;
  const CovariateMatrix* covars = nullptr;  // null when unadjusted
  const NullFit* nullfit = nullptr;
  const DatasetPrecompute* pre = nullptr;   // unadjusted fast path
  WeightGrid grid;

  ResultRow test_variant(const GenotypeRecord& x) const {
    ResultRow row;
    row.snp_id = x.snp_id;
    row.chrom = x.chrom;
    row.pos = x.pos;
    row.maf = x.maf;
    row.n_used = traits.n();
    if (x.maf < config.maf_min) {
      row.reason = "maf_below_threshold";
      return row;
    }
    const bool want_marginal = config.enabled("marginal") || config.enabled("fisher") ||
                               config.enabled("minp");
    try {
      if (covars) {
        if (config.enabled("manova"))
          row.manova = adjusted_manova(traits, x, *covars);
        if (config.enabled("ssu")) row.ssu = adjusted_ssu(*nullfit, x);
        if (config.enabled("usat"))
          row.usat = adjusted_usat(traits, x, *covars, grid, config.covariate_mode);
        if (want_marginal) row.marginal = adjusted_marginal_tests(traits, x, *covars);
      } else {
        const SufficientStats stats = variant_stats(*pre, traits, x);
        const Eigen::Index K = traits.k();
        if (config.enabled("manova")) row.manova = manova_test(stats, stats.n, K);
        if (config.enabled("ssu")) row.ssu = ssu_test(stats);
        if (config.enabled("usat")) row.usat = usat_test(stats, stats.n, K, grid);
        if (want_marginal) row.marginal = marginal_tests(traits, x);
      }
      if (!row.marginal.empty()) {
        std::vector<double> p;
        p.reserve(row.marginal.size());
        for (const auto& m : row.marginal) p.push_back(m.p_value);
        if (config.enabled("fisher")) row.fisher = fisher_combine(p);
        if (config.enabled("minp")) row.minp = minp_combine(p);
      }
      if (!config.enabled("marginal")) row.marginal.clear();
    } catch (const MonomorphicVariant&) {
      row = skip_row(x.snp_id, "monomorphic");
      row.chrom = x.chrom;
      row.pos = x.pos;
      row.maf = x.maf;
    } catch (const Error& e) {
      row = skip_row(x.snp_id, std::string("numerical_failure: ") + e.what());
      row.chrom = x.chrom;
      row.pos = x.pos;
      row.maf = x.maf;
    }
    return row;
  }
};

}  // namespace

ScanSummary run_scan(const ScanConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();

  PhenotypeData pheno = parse_phenotypes(config.pheno_path);

  CovariateMatrix covars;
  NullFit nullfit;
  DatasetPrecompute* pre = nullptr;
  std::unique_ptr<DatasetPrecompute> pre_storage;

  ScanContext ctx{config, pheno.traits};
  ctx.grid = WeightGrid::even(config.grid_size);
  if (!config.covar_path.empty()) {
    covars = parse_covariates(config.covar_path, pheno.sample_ids);
    nullfit = fit_null(pheno.traits, covars, config.covariate_mode);
    ctx.covars = &covars;
    ctx.nullfit = &nullfit;
  } else {
    pre_storage = std::make_unique<DatasetPrecompute>(pheno.traits);
    pre = pre_storage.get();
    ctx.pre = pre;
  }

  GenotypeStream stream(config.geno_path, pheno.sample_ids);

  const unsigned n_threads = config.threads > 0
                                 ? unsigned(config.threads)
                                 : std::max(1u, std::thread::hardware_concurrency());

  ScanSummary summary;
  std::vector<ResultRow> rows;
  std::size_t skip_cursor = 0;

  // Chunked pipeline: read a batch sequentially, test it in parallel, keep
  // input order. Missingness skips recorded by the stream are interleaved back
  // at the position where they were encountered.
  const std::size_t batch_size = std::max<std::size_t>(64, 16 * n_threads);
  std::vector<GenotypeRecord> batch;
  std::vector<std::size_t> row_slots;  // output index of each batch element
  batch.reserve(batch_size);

  for (;;) {
    batch.clear();
    row_slots.clear();
    while (batch.size() < batch_size) {
      auto rec = stream.next();
      // Flush skips that the stream hit before (or instead of) this record.
      const auto& skips = stream.skipped();
      for (; skip_cursor < skips.size(); ++skip_cursor) {
        rows.push_back(skip_row(skips[skip_cursor].snp_id, skips[skip_cursor].reason));
        ++summary.n_variants_read;
      }
      if (!rec) break;
      ++summary.n_variants_read;
      row_slots.push_back(rows.size());
      rows.emplace_back();
      batch.push_back(std::move(*rec));
    }
    if (batch.empty()) break;

    auto worker = [&](unsigned tid) {
      for (std::size_t i = tid; i < batch.size(); i += n_threads)
        rows[row_slots[i]] = ctx.test_variant(batch[i]);
    };
    if (n_threads == 1 || batch.size() == 1) {
      worker(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker, t);
      worker(0);
      for (auto& t : pool) t.join();
    }
  }

  for (const auto& row : rows) {
    if (row.reason.empty())
      ++summary.n_variants_tested;
    else
      ++summary.n_variants_skipped;
  }

  write_results(rows, std::size_t(pheno.traits.k()), config.out_path);
  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return summary;
}

}  // namespace usat
