#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "negeval/types.hpp"

namespace negeval {

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
};

// Lowercases (ASCII) and splits on non-alphanumeric boundaries, dropping
// empty tokens. Bytes outside ASCII letters/digits act as separators, so the
// result is deterministic for any byte sequence.
std::vector<std::string> tokenize(std::string_view text);

struct ScoredDoc {
  std::string doc_id;
  double score;
  bool operator==(const ScoredDoc&) const = default;
};

// Top-k lexical hard negatives for one query; ranked is ordered by
// descending score with ties broken by ascending doc_id. Fewer than
// k_requested entries means fewer candidates matched any query term.
struct MinedNegatives {
  std::string query_id;
  std::vector<ScoredDoc> ranked;
  std::size_t k_requested = 0;
};

// Immutable Okapi BM25 inverted index. Scoring uses the positive-IDF
// variant idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)) and term saturation
// tf*(k1+1) / (tf + k1*(1 - b + b*len/avglen)). Duplicate query terms
// contribute once per occurrence. Safe for unrestricted concurrent reads
// after construction.
class Bm25Index {
 public:
  struct Posting {
    std::uint32_t doc_row;
    std::uint32_t term_frequency;
    bool operator==(const Posting&) const = default;
  };

  // Throws DomainError on an empty corpus or out-of-range parameters
  // (k1 > 0, 0 <= b <= 1 required). Stopwords, when given, are removed from
  // both indexed documents and queries.
  static Bm25Index build(std::span<const CorpusRecord> corpus,
                         Bm25Params params = {},
                         std::unordered_set<std::string> stopwords = {});

  double score(std::span<const std::string> query_terms,
               std::size_t doc_row) const;

  // Scores every document matching at least one query term, removes
  // exclude_ids, and keeps the top k via a bounded heap (O(D log k)).
  // k must be >= 1. A query matching nothing yields an empty ranked list.
  MinedNegatives mine(std::string query_id, std::string_view query_text,
                      std::size_t k,
                      const std::unordered_set<std::string>& exclude_ids) const;

  std::size_t doc_count() const { return doc_lengths_.size(); }
  double avg_doc_length() const { return avg_doc_length_; }
  std::uint32_t doc_length(std::size_t row) const { return doc_lengths_[row]; }
  const std::string& id_at(std::size_t row) const { return row_to_id_[row]; }
  const Bm25Params& params() const { return params_; }
  const std::unordered_set<std::string>& stopwords() const {
    return stopwords_;
  }
  const std::unordered_map<std::string, std::vector<Posting>>& postings()
      const {
    return postings_;
  }

 private:
  Bm25Index() = default;

  double idf(std::size_t document_frequency) const;
  std::vector<std::string> query_terms_for(std::string_view query_text) const;

  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::uint32_t> doc_lengths_;
  double avg_doc_length_ = 0.0;
  std::vector<std::string> row_to_id_;
  std::unordered_map<std::string, std::uint32_t> id_to_row_;
  Bm25Params params_;
  std::unordered_set<std::string> stopwords_;
};

// Mines negatives for every query in parallel; exclusions come from the
// per-query positive sets. Output order matches query order for any thread
// count.
std::vector<MinedNegatives> mine_all(
    const Bm25Index& index, std::span<const QueryRecord> queries,
    std::size_t k,
    const std::unordered_map<std::string, std::unordered_set<std::string>>&
        exclude_by_query,
    unsigned threads = 0);

}  // namespace negeval
