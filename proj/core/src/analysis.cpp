#include "negeval/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "io_util.hpp"

namespace negeval {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using detail::finish_output;
using detail::format_double;
using detail::next_line;
using detail::open_input;
using detail::open_output;
using detail::parse_strict_double;

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

double pearson_r(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw DomainError("pearson_r: length mismatch (" +
                      std::to_string(xs.size()) + " vs " +
                      std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 2) {
    throw DomainError("pearson_r: need at least two points");
  }
  const double n = static_cast<double>(xs.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= n;
  mean_y /= n;
  double cov = 0.0, var_x = 0.0, var_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mean_x;
    const double dy = ys[i] - mean_y;
    cov += dx * dy;
    var_x += dx * dx;
    var_y += dy * dy;
  }
  if (var_x == 0.0 || var_y == 0.0) {
    throw DomainError("pearson_r: zero variance, correlation undefined");
  }
  return std::clamp(cov / std::sqrt(var_x * var_y), -1.0, 1.0);
}

double ndcg_at_k(std::span<const std::string> ranked_ids,
                 const std::unordered_map<std::string, double>& relevances,
                 std::size_t k) {
  if (k == 0) throw DomainError("ndcg_at_k: k must be >= 1");
  auto gain = [](double grade) { return std::exp2(grade) - 1.0; };

  double dcg = 0.0;
  const std::size_t depth = std::min(k, ranked_ids.size());
  for (std::size_t i = 0; i < depth; ++i) {
    auto it = relevances.find(ranked_ids[i]);
    if (it == relevances.end() || it->second <= 0.0) continue;
    dcg += gain(it->second) / std::log2(static_cast<double>(i) + 2.0);
  }

  std::vector<double> grades;
  grades.reserve(relevances.size());
  for (const auto& [id, grade] : relevances) {
    if (grade > 0.0) grades.push_back(grade);
  }
  if (grades.empty()) return 0.0;
  std::sort(grades.begin(), grades.end(), std::greater<>());
  double ideal = 0.0;
  for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) {
    ideal += gain(grades[i]) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / ideal;
}

CorrelationReport correlate_reports(
    std::span<const EciReport> reports,
    std::span<const DownstreamRecord> downstream) {
  // Mean nDCG per method across datasets.
  std::map<std::string, std::pair<double, std::size_t>> ndcg_sums;
  for (const auto& d : downstream) {
    auto& [sum, count] = ndcg_sums[d.method_tag];
    sum += d.ndcg_at_10;
    ++count;
  }

  std::map<std::string, const EciReport*> by_method;
  for (const auto& r : reports) by_method.emplace(r.method_tag, &r);

  std::vector<const EciReport*> shared;
  std::vector<double> ndcg;
  for (const auto& [method, report] : by_method) {
    auto it = ndcg_sums.find(method);
    if (it == ndcg_sums.end()) continue;
    shared.push_back(report);
    ndcg.push_back(it->second.first /
                   static_cast<double>(it->second.second));
  }
  if (shared.size() < 2) {
    throw DomainError(
        "correlate_reports: need at least two methods present in both "
        "reports and downstream scores, got " +
        std::to_string(shared.size()));
  }

  CorrelationReport out;
  if (shared.size() < by_method.size() || shared.size() < ndcg_sums.size()) {
    out.notices.push_back(
        "coverage: " + std::to_string(shared.size()) +
        " method(s) shared between reports and downstream scores");
  }

  const bool have_var = std::all_of(
      shared.begin(), shared.end(),
      [](const EciReport* r) { return r->score_var_est.has_value(); });

  struct Metric {
    const char* name;
    bool available;
    std::function<double(const EciReport&)> get;
  };
  const std::vector<Metric> metrics = {
      {"eci", true, [](const EciReport& r) { return r.eci; }},
      {"signal", true, [](const EciReport& r) { return r.mean_signal; }},
      {"grad_norm_est", true,
       [](const EciReport& r) { return r.grad_norm_est; }},
      {"score_var_est", have_var,
       [](const EciReport& r) { return *r.score_var_est; }},
      {"arithmetic", true,
       [](const EciReport& r) { return r.arithmetic_score; }},
  };

  for (const auto& metric : metrics) {
    if (!metric.available) {
      out.notices.push_back("skipped " + std::string(metric.name) +
                            ": value missing for some methods");
      continue;
    }
    std::vector<double> xs;
    xs.reserve(shared.size());
    for (const EciReport* r : shared) xs.push_back(metric.get(*r));
    try {
      out.rows.push_back(
          {metric.name, pearson_r(xs, ndcg), shared.size()});
    } catch (const DomainError&) {
      out.notices.push_back("skipped " + std::string(metric.name) +
                            ": zero variance across methods");
    }
  }
  if (out.rows.empty()) {
    throw DomainError(
        "correlate_reports: no metric had usable variance across methods");
  }
  return out;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "tsv") return ReportFormat::Tsv;
  if (name == "md" || name == "markdown") return ReportFormat::Markdown;
  throw ConfigError("unknown report format \"" + std::string(name) +
                    "\" (expected tsv or md)");
}

std::string render_report(std::span<const EciReport> reports,
                          const CorrelationReport& correlations,
                          ReportFormat format) {
  if (reports.empty()) {
    throw DomainError("render_report: no reports to render");
  }
  std::ostringstream out;
  const bool md = format == ReportFormat::Markdown;

  if (md) {
    out << "# Hard-negative set evaluation\n\n";
    out << "| method | top-k | signal | max-margin | eci |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& r : reports) {
      out << "| " << r.method_tag << " | " << format_double(r.n_effective)
          << " | " << fixed(r.mean_signal, 3) << " | "
          << fixed(r.mean_margin, 3) << " | " << fixed(r.eci, 2) << " |\n";
    }
  } else {
    out << "method\ttop-k\tsignal\tmax-margin\teci\n";
    for (const auto& r : reports) {
      out << r.method_tag << '\t' << format_double(r.n_effective) << '\t'
          << fixed(r.mean_signal, 3) << '\t' << fixed(r.mean_margin, 3)
          << '\t' << fixed(r.eci, 2) << '\n';
    }
  }

  if (correlations.rows.empty()) {
    out << (md ? "\nNo correlation data available.\n"
               : "\n# no correlation data available\n");
  } else if (md) {
    out << "\n## Correlation with downstream nDCG@10\n\n";
    out << "| metric | pearson r | points |\n";
    out << "|---|---|---|\n";
    for (const auto& row : correlations.rows) {
      out << "| " << row.metric_name << " | " << fixed(row.pearson_r, 4)
          << " | " << row.n_points << " |\n";
    }
  } else {
    out << "\nmetric\tpearson_r\tpoints\n";
    for (const auto& row : correlations.rows) {
      out << row.metric_name << '\t' << fixed(row.pearson_r, 4) << '\t'
          << row.n_points << '\n';
    }
  }

  for (const auto& notice : correlations.notices) {
    out << (md ? "\n> " : "\n# ") << notice << '\n';
  }
  return out.str();
}

std::vector<DownstreamRecord> load_downstream_tsv(
    const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<DownstreamRecord> records;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    const auto at = [&](const std::string& msg) {
      return path.string() + ": line " + std::to_string(line_no) + ": " + msg;
    };
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(at("expected method<TAB>dataset<TAB>ndcg10"));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw ValidationError(at("method and dataset must be non-empty"));
    }
    bool ok = false;
    const double ndcg = parse_strict_double(fields[2], ok);
    if (!ok || !std::isfinite(ndcg)) {
      throw ParseError(at("ndcg10 must be a finite decimal"));
    }
    if (ndcg < 0.0 || ndcg > 1.0) {
      throw ValidationError(at("ndcg10 must be within [0, 1]"));
    }
    if (!seen.emplace(fields[0], fields[1]).second) {
      throw ValidationError(
          at("duplicate (" + fields[0] + ", " + fields[1] + ")"));
    }
    records.push_back({fields[0], fields[1], ndcg});
  }
  return records;
}

Qrels load_qrels_tsv(const std::filesystem::path& path) {
  auto in = open_input(path);
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    const auto at = [&](const std::string& msg) {
      return path.string() + ": line " + std::to_string(line_no) + ": " + msg;
    };
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(at("expected query_id<TAB>doc_id<TAB>grade"));
    }
    bool ok = false;
    const double grade = parse_strict_double(fields[2], ok);
    if (!ok || !std::isfinite(grade) || grade < 0.0) {
      throw ParseError(at("grade must be a finite decimal >= 0"));
    }
    auto [it, inserted] = qrels[fields[0]].emplace(fields[1], grade);
    if (!inserted) {
      throw ValidationError(
          at("duplicate (" + fields[0] + ", " + fields[1] + ")"));
    }
  }
  return qrels;
}

RunFile load_run_tsv(const std::filesystem::path& path) {
  auto in = open_input(path);
  RunFile run;
  std::map<std::string, std::set<std::string>> seen_docs;
  std::map<std::string, std::set<std::size_t>> seen_ranks;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    const auto at = [&](const std::string& msg) {
      return path.string() + ": line " + std::to_string(line_no) + ": " + msg;
    };
    const auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw ParseError(at("expected query_id<TAB>doc_id<TAB>rank<TAB>score"));
    }
    bool ok = false;
    const double rank_value = parse_strict_double(fields[2], ok);
    if (!ok || rank_value < 1.0 ||
        rank_value != std::floor(rank_value)) {
      throw ParseError(at("rank must be a positive integer"));
    }
    const auto rank = static_cast<std::size_t>(rank_value);
    const double score = parse_strict_double(fields[3], ok);
    if (!ok || !std::isfinite(score)) {
      throw ParseError(at("score must be a finite decimal"));
    }
    if (!seen_docs[fields[0]].insert(fields[1]).second) {
      throw ValidationError(
          at("duplicate (" + fields[0] + ", " + fields[1] + ")"));
    }
    if (!seen_ranks[fields[0]].insert(rank).second) {
      throw ValidationError(at("duplicate rank " + std::to_string(rank) +
                               " for query " + fields[0]));
    }
    run[fields[0]].push_back({fields[1], rank, score});
  }
  for (auto& [query, entries] : run) {
    std::sort(entries.begin(), entries.end(),
              [](const RunEntry& a, const RunEntry& b) {
                return a.rank < b.rank;
              });
  }
  return run;
}

NdcgResult evaluate_ndcg(const Qrels& qrels, const RunFile& run,
                         std::size_t k) {
  std::set<std::string> queries;
  for (const auto& [q, _] : qrels) queries.insert(q);
  for (const auto& [q, _] : run) queries.insert(q);
  if (queries.empty()) {
    throw DomainError("evaluate_ndcg: no queries in qrels or run");
  }

  static const std::unordered_map<std::string, double> kNoRelevances;
  NdcgResult result;
  double sum = 0.0;
  for (const auto& query : queries) {
    std::vector<std::string> ranked;
    if (auto it = run.find(query); it != run.end()) {
      ranked.reserve(it->second.size());
      for (const auto& e : it->second) ranked.push_back(e.doc_id);
    }
    auto q = qrels.find(query);
    const auto& relevances = q == qrels.end() ? kNoRelevances : q->second;
    const double value = ndcg_at_k(ranked, relevances, k);
    result.per_query.emplace_back(query, value);
    sum += value;
  }
  result.mean = sum / static_cast<double>(queries.size());
  return result;
}

void write_ndcg_tsv(const std::filesystem::path& path,
                    const NdcgResult& result, std::size_t k) {
  auto out = open_output(path);
  out << "query_id\tndcg@" << k << '\n';
  for (const auto& [query, value] : result.per_query) {
    out << query << '\t' << format_double(value) << '\n';
  }
  out << "mean\t" << format_double(result.mean) << '\n';
  finish_output(out, path);
}

void write_correlations_json(const std::filesystem::path& path,
                             const CorrelationReport& report) {
  auto out = open_output(path);
  ordered_json doc;
  ordered_json rows = ordered_json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"metric", row.metric_name},
                    {"pearson_r", row.pearson_r},
                    {"n_points", row.n_points}});
  }
  doc["rows"] = std::move(rows);
  doc["notices"] = report.notices;
  out << doc.dump(2) << '\n';
  finish_output(out, path);
}

CorrelationReport load_correlations_json(const std::filesystem::path& path) {
  auto in = open_input(path);
  const json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("rows") ||
      !doc["rows"].is_array()) {
    throw ParseError(path.string() + ": expected {\"rows\": [...]}");
  }
  CorrelationReport report;
  for (const auto& row : doc["rows"]) {
    if (!row.is_object() || !row.contains("metric") ||
        !row["metric"].is_string() || !row.contains("pearson_r") ||
        !row["pearson_r"].is_number() || !row.contains("n_points") ||
        !row["n_points"].is_number_unsigned()) {
      throw ParseError(path.string() + ": malformed correlation row");
    }
    report.rows.push_back({row["metric"].get<std::string>(),
                           row["pearson_r"].get<double>(),
                           row["n_points"].get<std::size_t>()});
  }
  if (doc.contains("notices") && doc["notices"].is_array()) {
    for (const auto& n : doc["notices"]) {
      if (n.is_string()) report.notices.push_back(n.get<std::string>());
    }
  }
  return report;
}

}  // namespace negeval
