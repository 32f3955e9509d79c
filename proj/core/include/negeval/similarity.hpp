#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "negeval/types.hpp"

namespace negeval {

// Per-query similarity statistics of a hard-negative set.
//
//   signal      mean query-negative similarity (hardness)
//   max_sim_p   best positive similarity
//   max_sim_n   hardest negative similarity
//   raw_margin  max_sim_p - max_sim_n
//   safe_margin max(0, raw_margin); zero means the decision boundary is
//               violated and the set's efficiency collapses
//
// With zero negatives, signal/max_sim_n/margins are absent.
struct PerQueryStats {
  std::string query_id;
  std::size_t n_count = 0;
  double max_sim_p = 0.0;
  std::optional<double> signal;
  std::optional<double> max_sim_n;
  std::optional<double> raw_margin;
  std::optional<double> safe_margin;
  bool operator==(const PerQueryStats&) const = default;
};

// Dataset-level aggregates for one mining method: the means feeding the
// capacity/efficiency scoring. Queries with zero negatives are excluded
// from every mean and counted in empty_query_count instead. s_max is the
// mean per-query hardest-negative similarity; it is absent only for
// summaries injected from outside (no per-query data).
struct MethodSummary {
  std::string method_tag;
  double mean_signal = 0.0;
  double mean_margin = 0.0;      // mean of clamped per-query margins
  double mean_raw_margin = 0.0;  // unclamped mean, emitted for transparency
  double mean_n = 0.0;
  std::optional<double> s_max;
  std::size_t query_count = 0;        // queries contributing to the means
  std::size_t empty_query_count = 0;  // queries with zero negatives
  bool operator==(const MethodSummary&) const = default;
};

// Cosine similarity in double precision, clipped to [-1, 1] (drift beyond
// 1e-12 outside that range is a bug, tiny drift is clipped). Throws
// ShapeError on dimension mismatch and DomainError on a zero-norm input.
double cosine(std::span<const double> u, std::span<const double> v);

PerQueryStats per_query_stats(std::string query_id,
                              std::span<const double> query_vec,
                              std::span<const std::vector<double>> positives,
                              std::span<const std::vector<double>> negatives);

// Same statistics with externally supplied scores substituted for cosine.
// Every positive and negative of the triplet must be scored; missing pairs
// are reported exhaustively.
PerQueryStats per_query_stats_from_scores(const ScoreFile& scores,
                                          const TripletSet& triplet);

// Batch evaluation over a triplet collection: query vectors come from
// query_emb, positive/negative vectors from doc_emb. Parallel over queries;
// output order matches triplet order regardless of thread count.
std::vector<PerQueryStats> stats_for_triplets(
    const EmbeddingMatrix& query_emb, const EmbeddingMatrix& doc_emb,
    std::span<const TripletSet> triplets, unsigned threads = 0);

// Exports the cosine of every (query, positive) and (query, negative) pair,
// producing a ScoreFile equivalent to the embedding path.
ScoreFile export_cosine_scores(const EmbeddingMatrix& query_emb,
                               const EmbeddingMatrix& doc_emb,
                               std::span<const TripletSet> triplets);

// Aggregates per-query statistics into one summary. Accumulation follows
// ascending query_id so parallel producers and serial runs agree exactly.
// Throws DomainError when every query has zero negatives.
MethodSummary summarize_method(std::span<const PerQueryStats> stats,
                               std::string method_tag);

void write_stats_jsonl(const std::filesystem::path& path,
                       std::span<const PerQueryStats> stats);
void write_summary_json(const std::filesystem::path& path,
                        const MethodSummary& summary);

}  // namespace negeval
