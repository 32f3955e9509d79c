#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "negeval/types.hpp"

namespace negeval {

enum class DedupPolicy {
  KeepFirst,  // a doc_id seen in an earlier source is dropped from later ones
  Reject,     // a repeated doc_id is a validation error
  KeepAll,    // raw concatenation; files written this way need
              // allow_duplicate_negatives at load time
};

DedupPolicy parse_dedup_policy(std::string_view name);  // throws ConfigError

struct CompositionPlan {
  std::string name;
  std::vector<std::string> sources;  // method tags, concatenation order
  DedupPolicy dedup = DedupPolicy::KeepFirst;
};

struct CompositionStats {
  std::size_t queries_emitted = 0;
  std::size_t queries_with_missing_sources = 0;
  std::size_t raw_negative_count = 0;      // before dedup
  std::size_t emitted_negative_count = 0;  // after dedup
  std::size_t duplicates_removed = 0;
};

struct CompositionResult {
  std::vector<TripletSet> triplets;  // sorted by query_id
  CompositionStats stats;
};

// Concatenates per-method negative lists in plan-source order for every
// query found in any source; queries missing from some sources are emitted
// from the available ones and counted. Negative provenance tags are kept.
// Positives must agree across sources for the same query. Composed sets are
// re-validated against the positive sets.
CompositionResult compose(
    const CompositionPlan& plan,
    const std::map<std::string, std::vector<TripletSet>>& per_method);

// Keeps each query's first n negatives (source rank order). n must be >= 1.
std::vector<TripletSet> truncate_negatives(std::vector<TripletSet> triplets,
                                           std::size_t n);

// plans.json: {"plans": [{"name": str, "sources": [str],
//                         "dedup_policy": "keep_first"|"reject"|"keep_all"}]}
// dedup_policy defaults to keep_first.
std::vector<CompositionPlan> load_plans_json(
    const std::filesystem::path& path);

}  // namespace negeval
