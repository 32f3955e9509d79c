#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "negeval/errors.hpp"

namespace negeval {

struct CorpusRecord {
  std::string doc_id;
  std::string text;
  bool operator==(const CorpusRecord&) const = default;
};

struct QueryRecord {
  std::string query_id;
  std::string text;
  bool operator==(const QueryRecord&) const = default;
};

// One hard negative with its mining-method provenance ("bm25",
// "cross_encoder", "llm", or a declared hybrid name).
struct NegativeRef {
  std::string doc_id;
  std::string method;
  bool operator==(const NegativeRef&) const = default;
};

// A query, its positive documents, and an ordered hard-negative list.
// Negative order is the mining rank and is preserved by every transform.
struct TripletSet {
  std::string query_id;
  std::vector<std::string> positive_ids;
  std::vector<NegativeRef> negatives;
  bool operator==(const TripletSet&) const = default;
};

// Dense row-major matrix of embedding vectors addressed by string id.
// Values are held as doubles; the on-disk payload is float32.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool unit_norm() const { return unit_norm_; }
  void set_unit_norm(bool v) { unit_norm_ = v; }

  void append(std::string id, std::span<const double> row);

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  const std::string& id_at(std::size_t i) const { return ids_[i]; }
  std::optional<std::size_t> find(std::string_view id) const;
  // Throws LookupError when the id is absent.
  std::span<const double> row_for(std::string_view id) const;

  // Rescales every row to unit L2 norm. Throws ValidationError naming the
  // id of any zero-norm row.
  void normalize_rows();

 private:
  std::size_t dim_ = 0;
  bool unit_norm_ = false;
  std::vector<double> data_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ScoreEntry {
  std::string query_id;
  std::string doc_id;
  double score;
  bool operator==(const ScoreEntry&) const = default;
};

// Externally computed (query, doc) relevance scores, e.g. cross-encoder
// output. At most one entry per pair; insertion order is kept for
// deterministic serialization.
class ScoreFile {
 public:
  // Returns false when the (query_id, doc_id) pair is already present.
  bool insert(std::string query_id, std::string doc_id, double score);

  std::optional<double> find(std::string_view query_id,
                             std::string_view doc_id) const;
  std::size_t size() const { return entries_.size(); }
  const std::vector<ScoreEntry>& entries() const { return entries_; }

 private:
  std::vector<ScoreEntry> entries_;
  std::unordered_map<std::string, std::unordered_map<std::string, double>>
      by_query_;
};

}  // namespace negeval
