#pragma once

#include <string>

#include "usat/io_formats.hpp"

namespace usat {

struct ScanConfig {
  std::string pheno_path;
  std::string geno_path;
  std::string covar_path;  // optional
  std::string out_path;
  // Subset of {manova, ssu, usat, fisher, minp, marginal}; empty = all.
  std::vector<std::string> tests;
  double maf_min = 0.01;
  int grid_size = 11;
  int threads = 0;  // 0 = hardware concurrency
  CovariateMode covariate_mode = CovariateMode::Shared;

  bool enabled(const std::string& t) const;
  void validate() const;
};

struct ScanSummary {
  long long n_variants_read = 0;
  long long n_variants_tested = 0;
  long long n_variants_skipped = 0;  // maf filter + missingness + failures
  double seconds = 0;
};

// Full scan: computes the null fit once, filters on maf, runs the selected
// tests per variant, restores input order, writes atomically.
ScanSummary run_scan(const ScanConfig& config);

}  // namespace usat
