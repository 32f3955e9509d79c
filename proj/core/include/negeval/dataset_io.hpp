#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "negeval/types.hpp"

// File formats consumed and produced by the toolkit.
//
//   corpus.jsonl    {"doc_id": str, "text": str}            one object per line
//   queries.jsonl   {"query_id": str, "text": str}
//   triplets.jsonl  {"query_id": str, "positive_ids": [str],
//                    "negatives": [{"doc_id": str, "method": str}]}
//   scores.tsv      query_id <TAB> doc_id <TAB> score ('.' decimal separator)
//   embeddings.bin  magic "NEGEMB1", u32 count, u32 dim, u32 dtype (1 =
//                   float32), little-endian, then count*dim float32 values
//                   row-major; row-aligned ids in a sidecar file with the
//                   same stem and extension ".ids" (one id per line)
//   embeddings as JSONL is accepted as a slow path:
//                   {"id": str, "vector": [number]}
//
// Loaders validate exhaustively: every problem in a file is collected and
// reported in one error, with 1-based line numbers. Loaded structures are
// immutable values, safe to share across threads.

namespace negeval {

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path);
std::vector<QueryRecord> load_queries(const std::filesystem::path& path);

struct TripletLoadOptions {
  // Permits duplicate (query_id, doc_id) negative pairs, for files written
  // by `combine --keep-duplicates`. Off by default.
  bool allow_duplicate_negatives = false;
};

std::vector<TripletSet> load_triplets(const std::filesystem::path& path,
                                      const TripletLoadOptions& options = {});
void save_triplets(const std::filesystem::path& path,
                   std::span<const TripletSet> triplets);

ScoreFile load_scores(const std::filesystem::path& path);
void save_scores(const std::filesystem::path& path, const ScoreFile& scores);

struct EmbeddingLoadOptions {
  // Rescale every row to unit L2 norm after loading, so cosine reduces to a
  // dot product. Rows that are already unit-norm are unchanged up to
  // floating-point rescaling.
  bool normalize = true;
};

// Loads rows for `ids` in request order (duplicates collapsed); an empty
// `ids` loads the whole file in file order. Missing ids are reported
// exhaustively in one LookupError.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                std::span<const std::string> ids,
                                const EmbeddingLoadOptions& options = {});
void save_embeddings(const std::filesystem::path& path,
                     const EmbeddingMatrix& matrix);

// Sidecar id-list path for an embeddings file: extension replaced by ".ids".
std::filesystem::path embedding_ids_path(const std::filesystem::path& path);

}  // namespace negeval
