#include "negeval/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "negeval/parallel.hpp"

namespace negeval {

namespace {

using ordered_json = nlohmann::ordered_json;

double norm(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

ordered_json opt_to_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

}  // namespace

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ShapeError("cosine: dimension mismatch (" + std::to_string(u.size()) +
                     " vs " + std::to_string(v.size()) + ")");
  }
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) {
    throw DomainError("cosine: zero-norm vector");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  const double value = dot / (nu * nv);
  return std::clamp(value, -1.0, 1.0);
}

PerQueryStats per_query_stats(std::string query_id,
                              std::span<const double> query_vec,
                              std::span<const std::vector<double>> positives,
                              std::span<const std::vector<double>> negatives) {
  if (positives.empty()) {
    throw DomainError("per_query_stats: query " + query_id +
                      " has no positive vectors");
  }
  PerQueryStats stats;
  stats.query_id = std::move(query_id);
  stats.n_count = negatives.size();

  double max_p = -2.0;
  for (const auto& p : positives) {
    max_p = std::max(max_p, cosine(query_vec, p));
  }
  stats.max_sim_p = max_p;

  if (!negatives.empty()) {
    double sum = 0.0;
    double max_n = -2.0;
    for (const auto& n : negatives) {
      const double sim = cosine(query_vec, n);
      sum += sim;
      max_n = std::max(max_n, sim);
    }
    stats.signal = sum / static_cast<double>(negatives.size());
    stats.max_sim_n = max_n;
    stats.raw_margin = stats.max_sim_p - max_n;
    stats.safe_margin = std::max(0.0, *stats.raw_margin);
  }
  return stats;
}

PerQueryStats per_query_stats_from_scores(const ScoreFile& scores,
                                          const TripletSet& triplet) {
  if (triplet.positive_ids.empty()) {
    throw DomainError("per_query_stats_from_scores: query " +
                      triplet.query_id + " has no positives");
  }
  std::vector<std::string> missing;
  auto lookup = [&](const std::string& doc_id) -> std::optional<double> {
    auto s = scores.find(triplet.query_id, doc_id);
    if (!s) missing.push_back(doc_id);
    return s;
  };

  double max_p = -std::numeric_limits<double>::infinity();
  for (const auto& p : triplet.positive_ids) {
    if (auto s = lookup(p)) max_p = std::max(max_p, *s);
  }
  double sum_n = 0.0;
  double max_n = -std::numeric_limits<double>::infinity();
  for (const auto& n : triplet.negatives) {
    if (auto s = lookup(n.doc_id)) {
      sum_n += *s;
      max_n = std::max(max_n, *s);
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing score(s) for query " + triplet.query_id + ":";
    for (const auto& d : missing) msg += " \"" + d + "\"";
    throw LookupError(msg);
  }

  PerQueryStats stats;
  stats.query_id = triplet.query_id;
  stats.n_count = triplet.negatives.size();
  stats.max_sim_p = max_p;
  if (!triplet.negatives.empty()) {
    stats.signal = sum_n / static_cast<double>(triplet.negatives.size());
    stats.max_sim_n = max_n;
    stats.raw_margin = max_p - max_n;
    stats.safe_margin = std::max(0.0, *stats.raw_margin);
  }
  return stats;
}

std::vector<PerQueryStats> stats_for_triplets(
    const EmbeddingMatrix& query_emb, const EmbeddingMatrix& doc_emb,
    std::span<const TripletSet> triplets, unsigned threads) {
  std::vector<PerQueryStats> out(triplets.size());
  parallel_for(triplets.size(), threads, [&](std::size_t i) {
    const TripletSet& t = triplets[i];
    const auto q = query_emb.row_for(t.query_id);
    std::vector<std::vector<double>> positives;
    positives.reserve(t.positive_ids.size());
    for (const auto& p : t.positive_ids) {
      auto r = doc_emb.row_for(p);
      positives.emplace_back(r.begin(), r.end());
    }
    std::vector<std::vector<double>> negatives;
    negatives.reserve(t.negatives.size());
    for (const auto& n : t.negatives) {
      auto r = doc_emb.row_for(n.doc_id);
      negatives.emplace_back(r.begin(), r.end());
    }
    out[i] = per_query_stats(t.query_id, q, positives, negatives);
  });
  return out;
}

ScoreFile export_cosine_scores(const EmbeddingMatrix& query_emb,
                               const EmbeddingMatrix& doc_emb,
                               std::span<const TripletSet> triplets) {
  ScoreFile scores;
  for (const auto& t : triplets) {
    const auto q = query_emb.row_for(t.query_id);
    for (const auto& p : t.positive_ids) {
      scores.insert(t.query_id, p, cosine(q, doc_emb.row_for(p)));
    }
    for (const auto& n : t.negatives) {
      scores.insert(t.query_id, n.doc_id, cosine(q, doc_emb.row_for(n.doc_id)));
    }
  }
  return scores;
}

MethodSummary summarize_method(std::span<const PerQueryStats> stats,
                               std::string method_tag) {
  if (stats.empty()) {
    throw DomainError("summarize_method: empty statistics collection");
  }
  std::vector<std::size_t> order(stats.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return stats[a].query_id < stats[b].query_id;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (stats[order[i - 1]].query_id == stats[order[i]].query_id) {
      throw ValidationError("summarize_method: duplicate query_id \"" +
                            stats[order[i]].query_id + "\"");
    }
  }

  MethodSummary summary;
  summary.method_tag = std::move(method_tag);
  double sum_signal = 0.0, sum_margin = 0.0, sum_raw = 0.0, sum_n = 0.0,
         sum_smax = 0.0;
  for (std::size_t idx : order) {
    const PerQueryStats& s = stats[idx];
    if (s.n_count == 0) {
      ++summary.empty_query_count;
      continue;
    }
    ++summary.query_count;
    sum_signal += *s.signal;
    sum_margin += *s.safe_margin;
    sum_raw += *s.raw_margin;
    sum_n += static_cast<double>(s.n_count);
    sum_smax += *s.max_sim_n;
  }
  if (summary.query_count == 0) {
    throw DomainError(
        "summarize_method: every query has an empty negative set");
  }
  const double denom = static_cast<double>(summary.query_count);
  summary.mean_signal = sum_signal / denom;
  summary.mean_margin = sum_margin / denom;
  summary.mean_raw_margin = sum_raw / denom;
  summary.mean_n = sum_n / denom;
  summary.s_max = sum_smax / denom;
  return summary;
}

void write_stats_jsonl(const std::filesystem::path& path,
                       std::span<const PerQueryStats> stats) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& s : stats) {
    ordered_json obj;
    obj["query_id"] = s.query_id;
    obj["n_count"] = s.n_count;
    obj["max_sim_p"] = s.max_sim_p;
    obj["signal"] = opt_to_json(s.signal);
    obj["max_sim_n"] = opt_to_json(s.max_sim_n);
    obj["raw_margin"] = opt_to_json(s.raw_margin);
    obj["safe_margin"] = opt_to_json(s.safe_margin);
    out << obj.dump() << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

void write_summary_json(const std::filesystem::path& path,
                        const MethodSummary& summary) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  ordered_json obj;
  obj["method"] = summary.method_tag;
  obj["mean_signal"] = summary.mean_signal;
  obj["mean_margin"] = summary.mean_margin;
  obj["mean_raw_margin"] = summary.mean_raw_margin;
  obj["mean_n"] = summary.mean_n;
  obj["s_max"] = opt_to_json(summary.s_max);
  obj["query_count"] = summary.query_count;
  obj["empty_query_count"] = summary.empty_query_count;
  out << obj.dump(2) << '\n';
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace negeval
