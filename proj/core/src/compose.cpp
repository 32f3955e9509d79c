#include "negeval/compose.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace negeval {

namespace {
using nlohmann::json;
}

DedupPolicy parse_dedup_policy(std::string_view name) {
  if (name == "keep_first") return DedupPolicy::KeepFirst;
  if (name == "reject") return DedupPolicy::Reject;
  if (name == "keep_all") return DedupPolicy::KeepAll;
  throw ConfigError("unknown dedup_policy \"" + std::string(name) +
                    "\" (expected keep_first, reject, or keep_all)");
}

CompositionResult compose(
    const CompositionPlan& plan,
    const std::map<std::string, std::vector<TripletSet>>& per_method) {
  if (plan.sources.empty()) {
    throw ConfigError("plan \"" + plan.name + "\" has no sources");
  }
  for (const auto& source : plan.sources) {
    if (!per_method.contains(source)) {
      throw ConfigError("plan \"" + plan.name + "\" names unknown source \"" +
                        source + "\"");
    }
  }

  // Per-source query lookup plus the sorted union of query ids.
  std::vector<const std::vector<TripletSet>*> source_sets;
  std::vector<std::unordered_map<std::string, const TripletSet*>> by_query;
  std::set<std::string> all_queries;
  for (const auto& source : plan.sources) {
    const auto& triplets = per_method.at(source);
    source_sets.push_back(&triplets);
    auto& map = by_query.emplace_back();
    for (const auto& t : triplets) {
      map.emplace(t.query_id, &t);
      all_queries.insert(t.query_id);
    }
  }

  CompositionResult result;
  for (const auto& query_id : all_queries) {
    TripletSet composed;
    composed.query_id = query_id;
    std::unordered_set<std::string> seen;
    std::size_t sources_present = 0;

    for (std::size_t s = 0; s < by_query.size(); ++s) {
      auto it = by_query[s].find(query_id);
      if (it == by_query[s].end()) continue;
      ++sources_present;
      const TripletSet& part = *it->second;

      if (composed.positive_ids.empty()) {
        composed.positive_ids = part.positive_ids;
      } else {
        const std::set<std::string> a(composed.positive_ids.begin(),
                                      composed.positive_ids.end());
        const std::set<std::string> b(part.positive_ids.begin(),
                                      part.positive_ids.end());
        if (a != b) {
          throw ValidationError("compose: sources disagree on positives for "
                                "query \"" +
                                query_id + "\"");
        }
      }

      for (const auto& n : part.negatives) {
        ++result.stats.raw_negative_count;
        if (!seen.insert(n.doc_id).second) {
          switch (plan.dedup) {
            case DedupPolicy::KeepFirst:
              ++result.stats.duplicates_removed;
              continue;
            case DedupPolicy::Reject:
              throw ValidationError(
                  "compose: duplicate negative \"" + n.doc_id +
                  "\" for query \"" + query_id + "\" under reject policy");
            case DedupPolicy::KeepAll:
              break;
          }
        }
        composed.negatives.push_back(n);
      }
    }

    if (sources_present < plan.sources.size()) {
      ++result.stats.queries_with_missing_sources;
    }

    // Positivity guard: composition must never smuggle a positive back in.
    const std::unordered_set<std::string> positives(
        composed.positive_ids.begin(), composed.positive_ids.end());
    for (const auto& n : composed.negatives) {
      if (positives.contains(n.doc_id)) {
        throw ValidationError("compose: negative \"" + n.doc_id +
                              "\" is a positive of query \"" + query_id +
                              "\"");
      }
    }

    result.stats.emitted_negative_count += composed.negatives.size();
    ++result.stats.queries_emitted;
    result.triplets.push_back(std::move(composed));
  }
  return result;
}

std::vector<TripletSet> truncate_negatives(std::vector<TripletSet> triplets,
                                           std::size_t n) {
  if (n == 0) throw DomainError("truncate: n must be >= 1");
  for (auto& t : triplets) {
    if (t.negatives.size() > n) t.negatives.resize(n);
  }
  return triplets;
}

std::vector<CompositionPlan> load_plans_json(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  const json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("plans") ||
      !doc["plans"].is_array()) {
    throw ParseError(path.string() +
                     ": expected {\"plans\": [...]} JSON object");
  }
  std::vector<CompositionPlan> plans;
  std::unordered_set<std::string> names;
  for (const auto& p : doc["plans"]) {
    if (!p.is_object() || !p.contains("name") || !p["name"].is_string() ||
        !p.contains("sources") || !p["sources"].is_array()) {
      throw ParseError(path.string() +
                       ": each plan needs a \"name\" and a \"sources\" array");
    }
    CompositionPlan plan;
    plan.name = p["name"].get<std::string>();
    if (plan.name.empty()) {
      throw ParseError(path.string() + ": plan name must be non-empty");
    }
    if (!names.insert(plan.name).second) {
      throw ValidationError(path.string() + ": duplicate plan name \"" +
                            plan.name + "\"");
    }
    for (const auto& s : p["sources"]) {
      if (!s.is_string() || s.get<std::string>().empty()) {
        throw ParseError(path.string() + ": plan \"" + plan.name +
                         "\" sources must be non-empty strings");
      }
      plan.sources.push_back(s.get<std::string>());
    }
    if (plan.sources.empty()) {
      throw ValidationError(path.string() + ": plan \"" + plan.name +
                            "\" must have at least one source");
    }
    if (p.contains("dedup_policy")) {
      if (!p["dedup_policy"].is_string()) {
        throw ParseError(path.string() + ": dedup_policy must be a string");
      }
      plan.dedup = parse_dedup_policy(p["dedup_policy"].get<std::string>());
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

}  // namespace negeval
