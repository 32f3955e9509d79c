#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "negeval/eci.hpp"

namespace negeval {

// Downstream retrieval quality for one (method, dataset) pair, supplied
// externally (downstream.tsv: method <TAB> dataset <TAB> ndcg10).
struct DownstreamRecord {
  std::string method_tag;
  std::string dataset_name;
  double ndcg_at_10 = 0.0;
  bool operator==(const DownstreamRecord&) const = default;
};

struct CorrelationRow {
  std::string metric_name;
  double pearson_r = 0.0;
  std::size_t n_points = 0;
  bool operator==(const CorrelationRow&) const = default;
};

struct CorrelationReport {
  std::vector<CorrelationRow> rows;
  std::vector<std::string> notices;  // skipped metrics, coverage remarks
};

// Sample Pearson coefficient, clipped to [-1, 1]. Throws DomainError for
// length mismatch, fewer than two points, or zero variance.
double pearson_r(std::span<const double> xs, std::span<const double> ys);

// nDCG@k with exponential gain (2^grade - 1) and log2(rank + 1) discounts.
// Returns 0 when no relevant documents exist.
double ndcg_at_k(std::span<const std::string> ranked_ids,
                 const std::unordered_map<std::string, double>& relevances,
                 std::size_t k);

// Correlates each intrinsic metric (eci, signal, grad_norm_est,
// score_var_est, arithmetic) against mean downstream nDCG per method.
// Downstream scores are averaged across datasets first; methods are matched
// by tag and processed in sorted order. Metrics that cannot be correlated
// (score_var_est missing somewhere, or zero variance) are skipped with a
// notice. Throws DomainError when fewer than two methods overlap.
CorrelationReport correlate_reports(std::span<const EciReport> reports,
                                    std::span<const DownstreamRecord> downstream);

enum class ReportFormat { Tsv, Markdown };
ReportFormat parse_report_format(std::string_view name);  // throws ConfigError

// Renders the human-readable document: a method-metrics table (method,
// top-k, signal, margin, eci) followed by the correlation table. Output is
// byte-deterministic for identical inputs.
std::string render_report(std::span<const EciReport> reports,
                          const CorrelationReport& correlations,
                          ReportFormat format);

std::vector<DownstreamRecord> load_downstream_tsv(
    const std::filesystem::path& path);

// TREC-style evaluation inputs.
//   qrels.tsv: query_id <TAB> doc_id <TAB> grade      (grade >= 0)
//   run.tsv:   query_id <TAB> doc_id <TAB> rank <TAB> score
using Qrels = std::map<std::string, std::unordered_map<std::string, double>>;

struct RunEntry {
  std::string doc_id;
  std::size_t rank = 0;
  double score = 0.0;
};
using RunFile = std::map<std::string, std::vector<RunEntry>>;  // rank order

Qrels load_qrels_tsv(const std::filesystem::path& path);
RunFile load_run_tsv(const std::filesystem::path& path);

struct NdcgResult {
  std::vector<std::pair<std::string, double>> per_query;  // sorted by query
  double mean = 0.0;
};

// Evaluates nDCG@k over the union of run and qrels queries.
NdcgResult evaluate_ndcg(const Qrels& qrels, const RunFile& run,
                         std::size_t k);

void write_ndcg_tsv(const std::filesystem::path& path,
                    const NdcgResult& result, std::size_t k);

void write_correlations_json(const std::filesystem::path& path,
                             const CorrelationReport& report);
CorrelationReport load_correlations_json(const std::filesystem::path& path);

}  // namespace negeval
