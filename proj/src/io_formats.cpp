#include "usat/io_formats.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "usat/core_model.hpp"

namespace usat {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
    out.back().pop_back();
  return out;
}

double parse_number(const std::string& s, const std::string& path, std::size_t lineno) {
  double v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e)
    throw ParseError(path + ":" + std::to_string(lineno) + ": non-numeric field '" + s + "'");
  return v;
}

}  // namespace

PhenotypeData parse_phenotypes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open phenotype file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  auto header = split_tabs(line);
  if (header.size() < 2 || header[0] != "sample_id")
    throw ParseError(path + ":1: header must start with 'sample_id' and one trait");
  const std::size_t K = header.size() - 1;

  PhenotypeData out;
  out.traits.trait_names.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> cols(K);
  std::set<std::string> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != K + 1)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(K + 1) + " fields, got " + std::to_string(f.size()));
    if (!seen.insert(f[0]).second)
      throw ParseError(path + ":" + std::to_string(lineno) + ": duplicate sample id '" +
                       f[0] + "'");
    out.sample_ids.push_back(f[0]);
    for (std::size_t k = 0; k < K; ++k) cols[k].push_back(parse_number(f[k + 1], path, lineno));
  }
  const std::size_t n = out.sample_ids.size();
  if (n == 0) throw ParseError(path + ": no sample rows");
  out.traits.values.resize((Eigen::Index)n, (Eigen::Index)K);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < n; ++i) out.traits.values((Eigen::Index)i, (Eigen::Index)k) = cols[k][i];
  out.traits.original_means.resize(K);
  for (std::size_t k = 0; k < K; ++k)
    out.traits.original_means[k] = out.traits.values.col((Eigen::Index)k).mean();
  center_in_place(out.traits.values);
  return out;
}

CovariateMatrix parse_covariates(const std::string& path,
                                 const std::vector<std::string>& expected_samples) {
  PhenotypeData d = parse_phenotypes(path);
  if (d.sample_ids != expected_samples)
    throw SchemaError(path + ": covariate sample ids do not match the phenotype file");
  CovariateMatrix Z;
  Z.values = d.traits.values;  // already centered
  Z.names = d.traits.trait_names;
  return Z;
}

struct GenotypeStream::Impl {
  std::ifstream in;
  std::string path;
  std::size_t n = 0;
  std::size_t lineno = 1;
  std::vector<Skip> skips;
};

GenotypeStream::GenotypeStream(const std::string& path,
                               const std::vector<std::string>& expected_samples)
    : impl_(std::make_unique<Impl>()) {
  impl_->path = path;
  impl_->in.open(path);
  if (!impl_->in) throw ParseError("cannot open genotype file: " + path);
  std::string line;
  if (!std::getline(impl_->in, line)) throw ParseError(path + ": empty file");
  auto header = split_tabs(line);
  if (header.size() < 4 || header[0] != "snp_id" || header[1] != "chrom" || header[2] != "pos")
    throw SchemaError(path + ":1: header must be 'snp_id chrom pos <sample ids>'");
  std::vector<std::string> samples(header.begin() + 3, header.end());
  if (samples != expected_samples)
    throw SchemaError(path + ": sample-id columns do not match the phenotype file");
  impl_->n = samples.size();
}

GenotypeStream::~GenotypeStream() = default;
GenotypeStream::GenotypeStream(GenotypeStream&&) noexcept = default;

const std::vector<GenotypeStream::Skip>& GenotypeStream::skipped() const {
  return impl_->skips;
}

std::optional<GenotypeRecord> GenotypeStream::next() {
  std::string line;
  while (std::getline(impl_->in, line)) {
    ++impl_->lineno;
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != impl_->n + 3)
      throw ParseError(impl_->path + ":" + std::to_string(impl_->lineno) + ": expected " +
                       std::to_string(impl_->n + 3) + " fields, got " +
                       std::to_string(f.size()));
    GenotypeRecord rec;
    rec.snp_id = f[0];
    rec.chrom = f[1];
    rec.pos = (long long)parse_number(f[2], impl_->path, impl_->lineno);
    rec.dosage.resize((Eigen::Index)impl_->n);
    double obs_sum = 0;
    int n_obs = 0;
    std::vector<Eigen::Index> missing;
    for (std::size_t i = 0; i < impl_->n; ++i) {
      const std::string& s = f[i + 3];
      if (s == "NA") {
        missing.push_back((Eigen::Index)i);
        continue;
      }
      const double v = parse_number(s, impl_->path, impl_->lineno);
      if (v < 0.0 || v > 2.0)
        throw ParseError(impl_->path + ":" + std::to_string(impl_->lineno) +
                         ": dosage outside [0,2]: " + s);
      rec.dosage[(Eigen::Index)i] = v;
      obs_sum += v;
      ++n_obs;
    }
    rec.n_missing = (int)missing.size();
    if ((double)missing.size() > kMaxMissingFraction * (double)impl_->n) {
      impl_->skips.push_back({rec.snp_id, "missing fraction > 10%"});
      continue;
    }
    const double mean_obs = n_obs > 0 ? obs_sum / n_obs : 0.0;
    for (Eigen::Index i : missing) rec.dosage[i] = mean_obs;
    const double m = n_obs > 0 ? mean_obs / 2.0 : 0.0;
    rec.maf = std::min(m, 1.0 - m);
    center_in_place(rec.dosage);
    return rec;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

namespace {

std::string fmt_p(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.5e", v);
  return buf;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void append_outcome(std::ostringstream& os, const std::optional<TestOutcome>& o,
                    bool with_stat = true) {
  if (o) {
    os << '\t' << fmt_p(o->p_value);
    if (with_stat) os << '\t' << fmt_g(o->statistic);
  } else {
    os << "\tNA";
    if (with_stat) os << "\tNA";
  }
}

}  // namespace

std::string format_results_header(std::size_t n_traits) {
  std::ostringstream os;
  os << "snp_id\tchrom\tpos\tmaf\tn_used\tp_manova\tstat_manova\tp_ssu\tstat_ssu"
     << "\tp_usat\tt_usat\tusat_omega_star\tp_fisher\tstat_fisher\tp_minp";
  for (std::size_t k = 1; k <= n_traits; ++k) os << "\tp_trait_" << k;
  for (std::size_t k = 1; k <= n_traits; ++k) os << "\tbeta_trait_" << k;
  os << "\treason";
  return os.str();
}

std::string format_result_row(const ResultRow& r, std::size_t n_traits) {
  std::ostringstream os;
  os << r.snp_id << '\t' << r.chrom << '\t' << r.pos << '\t' << fmt_g(r.maf) << '\t'
     << r.n_used;
  append_outcome(os, r.manova);
  append_outcome(os, r.ssu);
  if (r.usat)
    os << '\t' << fmt_p(r.usat->p_value) << '\t' << fmt_p(r.usat->t_usat) << '\t'
       << fmt_g(r.usat->omega_star);
  else
    os << "\tNA\tNA\tNA";
  append_outcome(os, r.fisher);
  if (r.minp)
    os << '\t' << fmt_p(r.minp->p_value);
  else
    os << "\tNA";
  for (std::size_t k = 0; k < n_traits; ++k)
    os << '\t' << (k < r.marginal.size() ? fmt_p(r.marginal[k].p_value) : "NA");
  for (std::size_t k = 0; k < n_traits; ++k)
    os << '\t' << (k < r.marginal.size() ? fmt_g(r.marginal[k].slope) : "NA");
  os << '\t' << (r.reason.empty() ? "." : r.reason);
  return os.str();
}

void write_results(const std::vector<ResultRow>& rows, std::size_t n_traits,
                   const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + tmp);
    out << format_results_header(n_traits) << '\n';
    for (const auto& r : rows) out << format_result_row(r, n_traits) << '\n';
    out.flush();
    if (!out) throw Error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw Error("rename failed: " + tmp + " -> " + path + " (" + std::strerror(errno) + ")");
}

std::vector<std::pair<std::string, ConfigSection>> parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::vector<std::pair<std::string, ConfigSection>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError(path + ":" + std::to_string(lineno) + ": malformed section header");
      out.emplace_back(line.substr(1, line.size() - 2), ConfigSection{});
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t");
      auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    if (out.empty()) out.emplace_back("default", ConfigSection{});
    out.back().second.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

}  // namespace usat
