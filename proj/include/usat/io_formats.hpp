#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "usat/covar_adjust.hpp"
#include "usat/types.hpp"

namespace usat {

// Phenotype TSV: header `sample_id <trait...>`, one numeric row per sample.
// Values are centered per column on load; original means are retained.
struct PhenotypeData {
  TraitMatrix traits;
  std::vector<std::string> sample_ids;
};
PhenotypeData parse_phenotypes(const std::string& path);

// Covariate TSV: same layout as the phenotype file. Columns centered on load.
CovariateMatrix parse_covariates(const std::string& path,
                                 const std::vector<std::string>& expected_samples);

// Genotype dosage TSV: header `snp_id chrom pos <sample...>`, one variant per
// row, dosages in [0,2] or NA. Streams with constant memory in the number of
// variants. The sample-id column order must match the phenotype file exactly.
class GenotypeStream {
 public:
  GenotypeStream(const std::string& path, const std::vector<std::string>& expected_samples);
  ~GenotypeStream();
  GenotypeStream(GenotypeStream&&) noexcept;

  // Next variant: NA entries mean-imputed, maf computed over observed raw
  // entries, dosage centered. Variants with > max_missing_fraction NA are
  // skipped (reason recorded in skipped()).
  std::optional<GenotypeRecord> next();

  struct Skip {
    std::string snp_id;
    std::string reason;
  };
  const std::vector<Skip>& skipped() const;

  static constexpr double kMaxMissingFraction = 0.10;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// One output row of a scan.
struct ResultRow {
  std::string snp_id;
  std::string chrom;
  long long pos = 0;
  double maf = 0;
  long long n_used = 0;
  std::optional<TestOutcome> manova, ssu, usat, fisher, minp;
  std::vector<TestOutcome> marginal;
  std::string reason;  // non-empty when the variant failed
};

// Atomic (temp file + rename), bit-stable TSV writer.
void write_results(const std::vector<ResultRow>& rows, std::size_t n_traits,
                   const std::string& path);
std::string format_results_header(std::size_t n_traits);
std::string format_result_row(const ResultRow& row, std::size_t n_traits);

// Plain-text key-value config: `[section]` headers, `key = value` lines,
// `#` comments.
using ConfigSection = std::vector<std::pair<std::string, std::string>>;
std::vector<std::pair<std::string, ConfigSection>> parse_config(const std::string& path);

}  // namespace usat
