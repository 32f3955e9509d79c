#pragma once

// Independent naive reference implementations used to cross-check the
// library. These deliberately share no code with core/: plain loops,
// full scans, textbook formulas.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "negeval/types.hpp"

namespace oracle {

inline double cosine(std::span<const double> u, std::span<const double> v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

struct QueryStats {
  std::size_t n_count = 0;
  double max_sim_p = 0.0;
  std::optional<double> signal, max_sim_n, raw_margin, safe_margin;
};

inline QueryStats per_query_stats(
    std::span<const double> query,
    const std::vector<std::vector<double>>& positives,
    const std::vector<std::vector<double>>& negatives) {
  QueryStats s;
  s.n_count = negatives.size();
  double best_p = -1e300;
  for (const auto& p : positives) best_p = std::max(best_p, cosine(query, p));
  s.max_sim_p = best_p;
  if (!negatives.empty()) {
    double sum = 0.0, best_n = -1e300;
    for (const auto& n : negatives) {
      const double sim = cosine(query, n);
      sum += sim;
      best_n = std::max(best_n, sim);
    }
    s.signal = sum / static_cast<double>(negatives.size());
    s.max_sim_n = best_n;
    s.raw_margin = best_p - best_n;
    s.safe_margin = *s.raw_margin < 0.0 ? 0.0 : *s.raw_margin;
  }
  return s;
}

struct Aggregates {
  double mean_signal = 0, mean_margin = 0, mean_raw = 0, mean_n = 0,
         s_max = 0;
  std::size_t included = 0, empty = 0;
};

inline Aggregates summarize(const std::vector<QueryStats>& stats) {
  Aggregates a;
  for (const auto& s : stats) {
    if (s.n_count == 0) {
      ++a.empty;
      continue;
    }
    ++a.included;
    a.mean_signal += *s.signal;
    a.mean_margin += *s.safe_margin;
    a.mean_raw += *s.raw_margin;
    a.mean_n += static_cast<double>(s.n_count);
    a.s_max += *s.max_sim_n;
  }
  const double d = static_cast<double>(a.included);
  a.mean_signal /= d;
  a.mean_margin /= d;
  a.mean_raw /= d;
  a.mean_n /= d;
  a.s_max /= d;
  return a;
}

// --- BM25 (naive): recomputes idf/tf by scanning the tokenized corpus ---

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

struct NaiveBm25 {
  std::vector<std::string> doc_ids;
  std::vector<std::vector<std::string>> docs;  // token lists
  double k1 = 1.5, b = 0.75;

  static NaiveBm25 from_corpus(std::span<const negeval::CorpusRecord> corpus,
                               double k1, double b) {
    NaiveBm25 naive;
    naive.k1 = k1;
    naive.b = b;
    for (const auto& doc : corpus) {
      naive.doc_ids.push_back(doc.doc_id);
      naive.docs.push_back(tokenize(doc.text));
    }
    return naive;
  }

  double avg_len() const {
    double total = 0;
    for (const auto& d : docs) total += static_cast<double>(d.size());
    return total / static_cast<double>(docs.size());
  }

  std::size_t df(const std::string& term) const {
    std::size_t count = 0;
    for (const auto& d : docs) {
      if (std::find(d.begin(), d.end(), term) != d.end()) ++count;
    }
    return count;
  }

  double score(const std::vector<std::string>& query_terms,
               std::size_t doc) const {
    const double n = static_cast<double>(docs.size());
    const double len = static_cast<double>(docs[doc].size());
    double total = 0.0;
    for (const auto& term : query_terms) {
      const double tf = static_cast<double>(
          std::count(docs[doc].begin(), docs[doc].end(), term));
      if (tf == 0.0) continue;
      const double dfreq = static_cast<double>(df(term));
      const double idf = std::log(1.0 + (n - dfreq + 0.5) / (dfreq + 0.5));
      total += idf * tf * (k1 + 1.0) /
               (tf + k1 * (1.0 - b + b * len / avg_len()));
    }
    return total;
  }

  // Full scan + sort: the reference for mine().
  std::vector<std::pair<std::string, double>> top_k(
      const std::string& query_text, std::size_t k,
      const std::unordered_set<std::string>& exclude) const {
    const auto terms = tokenize(query_text);
    std::vector<std::pair<std::string, double>> scored;
    for (std::size_t d = 0; d < docs.size(); ++d) {
      if (exclude.contains(doc_ids[d])) continue;
      const double s = score(terms, d);
      if (s > 0.0) scored.emplace_back(doc_ids[d], s);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
  }
};

// --- statistics ---

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double cov = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    cov += (xs[i] - mx) * (ys[i] - my);
    vx += (xs[i] - mx) * (xs[i] - mx);
    vy += (ys[i] - my) * (ys[i] - my);
  }
  return cov / std::sqrt(vx * vy);
}

// nDCG via explicit pow/log, no shared code with the library.
inline double ndcg(const std::vector<std::string>& ranked,
                   const std::map<std::string, double>& grades,
                   std::size_t k) {
  double dcg = 0.0;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
    auto it = grades.find(ranked[i]);
    if (it == grades.end()) continue;
    dcg += (std::pow(2.0, it->second) - 1.0) /
           (std::log(static_cast<double>(i) + 2.0) / std::log(2.0));
  }
  std::vector<double> ideal;
  for (const auto& [id, g] : grades) {
    if (g > 0) ideal.push_back(g);
  }
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < ideal.size() && i < k; ++i) {
    idcg += (std::pow(2.0, ideal[i]) - 1.0) /
            (std::log(static_cast<double>(i) + 2.0) / std::log(2.0));
  }
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

}  // namespace oracle
