#include "negeval/bm25.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "negeval/parallel.hpp"

namespace negeval {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Bm25Index Bm25Index::build(std::span<const CorpusRecord> corpus,
                           Bm25Params params,
                           std::unordered_set<std::string> stopwords) {
  if (corpus.empty()) {
    throw DomainError("bm25: cannot index an empty corpus");
  }
  if (params.k1 <= 0.0 || params.b < 0.0 || params.b > 1.0) {
    throw DomainError("bm25: require k1 > 0 and 0 <= b <= 1");
  }

  Bm25Index index;
  index.params_ = params;
  index.stopwords_ = std::move(stopwords);
  index.row_to_id_.reserve(corpus.size());
  index.doc_lengths_.reserve(corpus.size());

  std::uint64_t total_length = 0;
  std::unordered_map<std::string, std::uint32_t> term_counts;
  for (const auto& doc : corpus) {
    const auto row = static_cast<std::uint32_t>(index.row_to_id_.size());
    auto [it, inserted] = index.id_to_row_.emplace(doc.doc_id, row);
    if (!inserted) {
      throw ValidationError("bm25: duplicate doc_id \"" + doc.doc_id + "\"");
    }
    index.row_to_id_.push_back(doc.doc_id);

    term_counts.clear();
    std::uint32_t kept = 0;
    for (auto& term : tokenize(doc.text)) {
      if (index.stopwords_.contains(term)) continue;
      ++term_counts[term];
      ++kept;
    }
    index.doc_lengths_.push_back(kept);
    total_length += kept;
    for (auto& [term, tf] : term_counts) {
      index.postings_[term].push_back({row, tf});
    }
  }
  index.avg_doc_length_ =
      static_cast<double>(total_length) / static_cast<double>(corpus.size());
  // Postings in ascending doc_row, independent of map iteration order.
  for (auto& [term, list] : index.postings_) {
    std::sort(list.begin(), list.end(),
              [](const Posting& a, const Posting& b) {
                return a.doc_row < b.doc_row;
              });
  }
  return index;
}

double Bm25Index::idf(std::size_t document_frequency) const {
  const double n = static_cast<double>(doc_count());
  const double df = static_cast<double>(document_frequency);
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Bm25Index::score(std::span<const std::string> query_terms,
                        std::size_t doc_row) const {
  if (doc_row >= doc_count()) {
    throw DomainError("bm25: doc_row " + std::to_string(doc_row) +
                      " out of range (doc_count " +
                      std::to_string(doc_count()) + ")");
  }
  const double len_norm =
      1.0 - params_.b +
      params_.b * static_cast<double>(doc_lengths_[doc_row]) /
          avg_doc_length_;
  double total = 0.0;
  for (const auto& term : query_terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const auto& list = it->second;
    auto posting = std::lower_bound(
        list.begin(), list.end(), doc_row,
        [](const Posting& p, std::size_t row) { return p.doc_row < row; });
    if (posting == list.end() || posting->doc_row != doc_row) continue;
    const double tf = static_cast<double>(posting->term_frequency);
    total += idf(list.size()) * tf * (params_.k1 + 1.0) /
             (tf + params_.k1 * len_norm);
  }
  return total;
}

std::vector<std::string> Bm25Index::query_terms_for(
    std::string_view query_text) const {
  std::vector<std::string> terms;
  for (auto& term : tokenize(query_text)) {
    if (!stopwords_.contains(term)) terms.push_back(std::move(term));
  }
  return terms;
}

MinedNegatives Bm25Index::mine(
    std::string query_id, std::string_view query_text, std::size_t k,
    const std::unordered_set<std::string>& exclude_ids) const {
  if (k == 0) throw DomainError("bm25: k must be >= 1");
  MinedNegatives result;
  result.query_id = std::move(query_id);
  result.k_requested = k;

  const auto terms = query_terms_for(query_text);
  if (terms.empty()) return result;

  // Term-at-a-time accumulation. Per-document totals are sums over the
  // fixed query-term order, so they do not depend on container iteration.
  std::unordered_map<std::uint32_t, double> accumulator;
  for (const auto& term : terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double term_idf = idf(it->second.size());
    for (const Posting& p : it->second) {
      const double len_norm =
          1.0 - params_.b +
          params_.b * static_cast<double>(doc_lengths_[p.doc_row]) /
              avg_doc_length_;
      const double tf = static_cast<double>(p.term_frequency);
      accumulator[p.doc_row] += term_idf * tf * (params_.k1 + 1.0) /
                                (tf + params_.k1 * len_norm);
    }
  }

  // Bounded min-heap of the current top k. The heap top is the weakest
  // entry under (score desc, doc_id asc), so the selected set is the same
  // for any insertion order.
  struct Entry {
    double score;
    const std::string* doc_id;
  };
  auto weaker = [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score < b.score;
    return *a.doc_id > *b.doc_id;
  };
  // Heap front is the weakest entry: max-heap under "is stronger than".
  auto heap_cmp = [&](const Entry& a, const Entry& b) { return weaker(b, a); };

  std::vector<Entry> heap;
  heap.reserve(k + 1);
  for (const auto& [row, score] : accumulator) {
    const std::string& doc_id = row_to_id_[row];
    if (exclude_ids.contains(doc_id)) continue;
    const Entry candidate{score, &doc_id};
    if (heap.size() < k) {
      heap.push_back(candidate);
      std::push_heap(heap.begin(), heap.end(), heap_cmp);
    } else if (weaker(heap.front(), candidate)) {
      std::pop_heap(heap.begin(), heap.end(), heap_cmp);
      heap.back() = candidate;
      std::push_heap(heap.begin(), heap.end(), heap_cmp);
    }
  }

  std::sort(heap.begin(), heap.end(), [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    return *a.doc_id < *b.doc_id;
  });
  result.ranked.reserve(heap.size());
  for (const Entry& e : heap) {
    result.ranked.push_back({*e.doc_id, e.score});
  }
  return result;
}

std::vector<MinedNegatives> mine_all(
    const Bm25Index& index, std::span<const QueryRecord> queries,
    std::size_t k,
    const std::unordered_map<std::string, std::unordered_set<std::string>>&
        exclude_by_query,
    unsigned threads) {
  static const std::unordered_set<std::string> kNoExclusions;
  std::vector<MinedNegatives> out(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t i) {
    const auto& q = queries[i];
    auto it = exclude_by_query.find(q.query_id);
    const auto& exclude =
        it == exclude_by_query.end() ? kNoExclusions : it->second;
    out[i] = index.mine(q.query_id, q.text, k, exclude);
  });
  return out;
}

}  // namespace negeval
