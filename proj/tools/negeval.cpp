// negeval: scores the quality of hard-negative training sets for dense
// retrieval before any fine-tuning.
//
// Subcommands: mine, score, combine, correlate, eval-ndcg, report.
// Exit codes: 0 success, 2 data/validation/config error, 3 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>

#include "negeval/analysis.hpp"
#include "negeval/bm25.hpp"
#include "negeval/compose.hpp"
#include "negeval/dataset_io.hpp"
#include "negeval/eci.hpp"
#include "negeval/errors.hpp"
#include "negeval/manifest.hpp"
#include "negeval/similarity.hpp"

namespace fs = std::filesystem;
using namespace negeval;

namespace {

struct GlobalOptions {
  unsigned threads = 0;  // 0 = hardware concurrency
  std::uint64_t seed = 0;
  std::string output_dir = ".";
};

fs::path ensure_output_dir(const GlobalOptions& global) {
  fs::path dir(global.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + dir.string() + ": " +
                  ec.message());
  }
  return dir;
}

fs::path output_path(const GlobalOptions& global, const std::string& override_path,
                     const char* default_name) {
  if (!override_path.empty()) return fs::path(override_path);
  return fs::path(global.output_dir) / default_name;
}

std::string format_param(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// The manifest is written before the command body runs, so it exists even
// when the run fails with exit 2.
void write_manifest(const GlobalOptions& global, const std::string& subcommand,
                    std::vector<std::pair<std::string, std::string>> params,
                    const std::vector<fs::path>& inputs) {
  RunManifest manifest;
  manifest.tool_version = NEGEVAL_VERSION;
  manifest.subcommand = subcommand;
  manifest.timestamp_utc = current_utc_timestamp();
  params.emplace_back("threads", std::to_string(global.threads));
  params.emplace_back("seed", std::to_string(global.seed));
  params.emplace_back("output_dir", global.output_dir);
  manifest.parameters = std::move(params);
  for (const auto& input : inputs) {
    manifest.inputs.push_back(
        {input.string(), file_digest_or_unavailable(input)});
  }
  const fs::path dir = ensure_output_dir(global);
  write_manifest_json(dir / (subcommand + ".manifest.json"), manifest);
}

std::unordered_set<std::string> load_stopwords(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    for (auto& token : tokenize(line)) words.insert(std::move(token));
  }
  return words;
}

// ---------------------------------------------------------------- mine ----

struct MineOptions {
  std::string corpus, queries, pairs, stopwords, out;
  std::size_t k = 50;
  double k1 = 1.5;
  double b = 0.75;
};

void run_mine(const GlobalOptions& global, const MineOptions& opt) {
  std::vector<fs::path> inputs = {opt.corpus, opt.queries, opt.pairs};
  if (!opt.stopwords.empty()) inputs.emplace_back(opt.stopwords);
  write_manifest(global, "mine",
                 {{"k", std::to_string(opt.k)},
                  {"k1", format_param(opt.k1)},
                  {"b", format_param(opt.b)},
                  {"stopwords", opt.stopwords.empty() ? "none" : opt.stopwords},
                  {"out", output_path(global, opt.out, "triplets.jsonl").string()}},
                 inputs);

  if (opt.k == 0) throw DomainError("mine: --k must be >= 1");

  const auto corpus = load_corpus(opt.corpus);
  const auto queries = load_queries(opt.queries);
  const auto pairs = load_triplets(opt.pairs);

  std::unordered_map<std::string, const TripletSet*> pairs_by_query;
  for (const auto& t : pairs) pairs_by_query.emplace(t.query_id, &t);

  std::unordered_set<std::string> stopwords;
  if (!opt.stopwords.empty()) stopwords = load_stopwords(opt.stopwords);
  const auto index =
      Bm25Index::build(corpus, {opt.k1, opt.b}, std::move(stopwords));

  // Queries without a positives entry cannot be mined safely (no exclusion
  // set); they are skipped and counted.
  std::vector<QueryRecord> minable;
  std::size_t skipped_no_positives = 0;
  std::unordered_map<std::string, std::unordered_set<std::string>> exclude;
  for (const auto& q : queries) {
    auto it = pairs_by_query.find(q.query_id);
    if (it == pairs_by_query.end()) {
      ++skipped_no_positives;
      continue;
    }
    minable.push_back(q);
    exclude.emplace(q.query_id,
                    std::unordered_set<std::string>(
                        it->second->positive_ids.begin(),
                        it->second->positive_ids.end()));
  }

  const auto mined = mine_all(index, minable, opt.k, exclude, global.threads);

  std::size_t zero_match_queries = 0;
  std::vector<TripletSet> triplets;
  triplets.reserve(mined.size());
  for (std::size_t i = 0; i < mined.size(); ++i) {
    if (mined[i].ranked.empty()) ++zero_match_queries;
    TripletSet t;
    t.query_id = mined[i].query_id;
    t.positive_ids = pairs_by_query.at(t.query_id)->positive_ids;
    for (const auto& doc : mined[i].ranked) {
      t.negatives.push_back({doc.doc_id, "bm25"});
    }
    triplets.push_back(std::move(t));
  }

  const fs::path out = output_path(global, opt.out, "triplets.jsonl");
  save_triplets(out, triplets);
  std::cout << "mined " << triplets.size() << " queries (k=" << opt.k
            << ") -> " << out.string() << '\n';
  if (skipped_no_positives > 0) {
    std::cerr << "warning: skipped " << skipped_no_positives
              << " query(ies) with no positives entry\n";
  }
  if (zero_match_queries > 0) {
    std::cerr << "warning: " << zero_match_queries
              << " query(ies) matched no documents\n";
  }
}

// --------------------------------------------------------------- score ----

struct ScoreOptions {
  std::string triplets, embeddings, query_embeddings, doc_embeddings, scores;
  std::string from_summary, prefer, method_tag, export_scores;
  std::string model_tag = "unspecified";
  double tau = 1.0;
  bool no_normalize = false;
  bool allow_duplicate_negatives = false;
  std::string out_stats, out_summary, out_report, out_report_tsv;
};

std::string resolve_method_tag(const ScoreOptions& opt,
                               std::span<const TripletSet> triplets) {
  if (!opt.method_tag.empty()) return opt.method_tag;
  std::set<std::string> tags;
  for (const auto& t : triplets) {
    for (const auto& n : t.negatives) tags.insert(n.method);
  }
  if (tags.size() == 1) return *tags.begin();
  return "mixed";
}

void run_score(const GlobalOptions& global, const ScoreOptions& opt) {
  std::vector<fs::path> inputs;
  for (const auto& p : {opt.triplets, opt.embeddings, opt.query_embeddings,
                        opt.doc_embeddings, opt.scores, opt.from_summary}) {
    if (!p.empty()) inputs.emplace_back(p);
  }
  write_manifest(
      global, "score",
      {{"tau", format_param(opt.tau)},
       {"model_tag", opt.model_tag},
       {"normalize", opt.no_normalize ? "false" : "true"},
       {"prefer", opt.prefer.empty() ? "none" : opt.prefer},
       {"method_tag", opt.method_tag.empty() ? "auto" : opt.method_tag},
       {"allow_duplicate_negatives",
        opt.allow_duplicate_negatives ? "true" : "false"},
       {"from_summary", opt.from_summary.empty() ? "none" : opt.from_summary}},
      inputs);

  if (opt.tau <= 0.0) throw DomainError("score: --tau must be > 0");

  const fs::path report_json =
      output_path(global, opt.out_report, "report.json");
  const fs::path report_tsv =
      output_path(global, opt.out_report_tsv, "report.tsv");

  if (!opt.from_summary.empty()) {
    const auto summaries = load_summaries_json(opt.from_summary);
    std::vector<EciReport> reports;
    reports.reserve(summaries.size());
    for (const auto& s : summaries) {
      reports.push_back(build_report(s, opt.tau, opt.model_tag));
    }
    write_reports_json(report_json, reports);
    write_reports_tsv(report_tsv, reports);
    std::cout << "scored " << reports.size() << " summary(ies) -> "
              << report_json.string() << '\n';
    return;
  }

  if (opt.triplets.empty()) {
    throw ConfigError("score: --triplets is required unless --from-summary");
  }
  const bool have_embeddings = !opt.embeddings.empty() ||
                               !opt.query_embeddings.empty() ||
                               !opt.doc_embeddings.empty();
  const bool have_scores = !opt.scores.empty();
  if (!have_embeddings && !have_scores) {
    throw ConfigError("score: need --embeddings/--query-embeddings/"
                      "--doc-embeddings or --scores");
  }
  bool use_embeddings = have_embeddings;
  if (have_embeddings && have_scores) {
    if (opt.prefer == "embeddings") {
      use_embeddings = true;
    } else if (opt.prefer == "scores") {
      use_embeddings = false;
    } else {
      throw ConfigError(
          "score: both embeddings and scores supplied; pass "
          "--prefer embeddings|scores");
    }
  }

  const auto triplets =
      load_triplets(opt.triplets, {opt.allow_duplicate_negatives});
  const std::string method_tag = resolve_method_tag(opt, triplets);

  std::vector<PerQueryStats> stats;
  if (use_embeddings) {
    const std::string query_path = !opt.query_embeddings.empty()
                                       ? opt.query_embeddings
                                       : opt.embeddings;
    const std::string doc_path =
        !opt.doc_embeddings.empty() ? opt.doc_embeddings : opt.embeddings;
    if (query_path.empty() || doc_path.empty()) {
      throw ConfigError(
          "score: both query and doc embeddings must be available");
    }
    std::vector<std::string> query_ids;
    std::set<std::string> doc_id_set;
    for (const auto& t : triplets) {
      query_ids.push_back(t.query_id);
      doc_id_set.insert(t.positive_ids.begin(), t.positive_ids.end());
      for (const auto& n : t.negatives) doc_id_set.insert(n.doc_id);
    }
    const std::vector<std::string> doc_ids(doc_id_set.begin(),
                                           doc_id_set.end());
    const EmbeddingLoadOptions load_options{!opt.no_normalize};
    const auto query_emb = load_embeddings(query_path, query_ids, load_options);
    const auto doc_emb = load_embeddings(doc_path, doc_ids, load_options);
    stats = stats_for_triplets(query_emb, doc_emb, triplets, global.threads);
    if (!opt.export_scores.empty()) {
      save_scores(opt.export_scores,
                  export_cosine_scores(query_emb, doc_emb, triplets));
    }
  } else {
    if (!opt.export_scores.empty()) {
      throw ConfigError("score: --export-scores requires the embedding path");
    }
    const auto scores = load_scores(opt.scores);
    stats.reserve(triplets.size());
    for (const auto& t : triplets) {
      stats.push_back(per_query_stats_from_scores(scores, t));
    }
  }

  const auto summary = summarize_method(stats, method_tag);
  const auto report = build_report(summary, opt.tau, opt.model_tag);

  write_stats_jsonl(output_path(global, opt.out_stats, "stats.jsonl"), stats);
  write_summary_json(output_path(global, opt.out_summary, "summary.json"),
                     summary);
  const std::vector<EciReport> reports = {report};
  write_reports_json(report_json, reports);
  write_reports_tsv(report_tsv, reports);

  std::cout << "method " << report.method_tag << ": eci " << report.eci
            << " (capacity " << report.capacity << ", efficiency "
            << report.harmonic_eff << ") -> " << report_json.string() << '\n';
  if (summary.empty_query_count > 0) {
    std::cerr << "warning: " << summary.empty_query_count
              << " query(ies) had zero negatives and were excluded from "
                 "the means\n";
  }
}

// ------------------------------------------------------------- combine ----

struct CombineOptions {
  std::string plans, plan, out;
  std::vector<std::string> inputs;  // tag=path
  std::size_t truncate = 0;         // 0 = no truncation
  bool keep_duplicates = false;
};

void run_combine(const GlobalOptions& global, const CombineOptions& opt) {
  std::vector<fs::path> input_paths = {opt.plans};
  std::map<std::string, std::string> tag_to_path;
  for (const auto& spec : opt.inputs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw ConfigError("combine: --input expects tag=path, got \"" + spec +
                        "\"");
    }
    const std::string tag = spec.substr(0, eq);
    const std::string path = spec.substr(eq + 1);
    if (!tag_to_path.emplace(tag, path).second) {
      throw ConfigError("combine: duplicate --input tag \"" + tag + "\"");
    }
    input_paths.emplace_back(path);
  }
  write_manifest(
      global, "combine",
      {{"plan", opt.plan},
       {"truncate", opt.truncate == 0 ? "none" : std::to_string(opt.truncate)},
       {"dedup_override", opt.keep_duplicates ? "keep_all" : "none"},
       {"out", output_path(global, opt.out, "composed.jsonl").string()}},
      input_paths);

  const auto plans = load_plans_json(opt.plans);
  const CompositionPlan* plan = nullptr;
  for (const auto& p : plans) {
    if (p.name == opt.plan) {
      plan = &p;
      break;
    }
  }
  if (plan == nullptr) {
    std::string known;
    for (const auto& p : plans) known += " \"" + p.name + "\"";
    throw ConfigError("combine: unknown plan \"" + opt.plan +
                      "\"; known plans:" + known);
  }

  std::map<std::string, std::vector<TripletSet>> per_method;
  for (const auto& [tag, path] : tag_to_path) {
    per_method.emplace(tag, load_triplets(path));
  }

  CompositionPlan effective = *plan;
  if (opt.keep_duplicates) effective.dedup = DedupPolicy::KeepAll;
  auto result = compose(effective, per_method);
  if (opt.truncate > 0) {
    result.triplets = truncate_negatives(std::move(result.triplets),
                                         opt.truncate);
  }

  const fs::path out = output_path(global, opt.out, "composed.jsonl");
  save_triplets(out, result.triplets);
  std::cout << "plan " << effective.name << ": " << result.stats.queries_emitted
            << " queries, " << result.stats.emitted_negative_count
            << " negatives (" << result.stats.raw_negative_count
            << " before dedup, " << result.stats.duplicates_removed
            << " removed) -> " << out.string() << '\n';
  if (result.stats.queries_with_missing_sources > 0) {
    std::cerr << "warning: " << result.stats.queries_with_missing_sources
              << " query(ies) missing from some sources\n";
  }
}

// ----------------------------------------------------------- correlate ----

struct CorrelateOptions {
  std::string reports, downstream, out;
};

void run_correlate(const GlobalOptions& global, const CorrelateOptions& opt) {
  write_manifest(global, "correlate", {},
                 {fs::path(opt.reports), fs::path(opt.downstream)});

  const auto reports = load_reports_json(opt.reports);
  const auto downstream = load_downstream_tsv(opt.downstream);
  const auto correlations = correlate_reports(reports, downstream);

  const fs::path out = output_path(global, opt.out, "correlations.json");
  write_correlations_json(out, correlations);
  std::cout << "metric\tpearson_r\tn_points\n";
  for (const auto& row : correlations.rows) {
    std::cout << row.metric_name << '\t' << row.pearson_r << '\t'
              << row.n_points << '\n';
  }
  for (const auto& notice : correlations.notices) {
    std::cerr << "notice: " << notice << '\n';
  }
}

// ----------------------------------------------------------- eval-ndcg ----

struct EvalNdcgOptions {
  std::string qrels, run, out;
  std::size_t k = 10;
};

void run_eval_ndcg(const GlobalOptions& global, const EvalNdcgOptions& opt) {
  write_manifest(global, "eval-ndcg", {{"k", std::to_string(opt.k)}},
                 {fs::path(opt.qrels), fs::path(opt.run)});

  if (opt.k == 0) throw DomainError("eval-ndcg: --k must be >= 1");
  const auto qrels = load_qrels_tsv(opt.qrels);
  const auto run = load_run_tsv(opt.run);
  const auto result = evaluate_ndcg(qrels, run, opt.k);

  const fs::path out = output_path(global, opt.out, "ndcg.tsv");
  write_ndcg_tsv(out, result, opt.k);
  std::cout << "mean ndcg@" << opt.k << " = " << result.mean << " over "
            << result.per_query.size() << " query(ies) -> " << out.string()
            << '\n';
}

// -------------------------------------------------------------- report ----

struct ReportOptions {
  std::string reports, correlations, format = "md", out;
};

void run_report(const GlobalOptions& global, const ReportOptions& opt) {
  std::vector<fs::path> inputs = {fs::path(opt.reports)};
  if (!opt.correlations.empty()) inputs.emplace_back(opt.correlations);
  write_manifest(global, "report", {{"format", opt.format}}, inputs);

  const ReportFormat format = parse_report_format(opt.format);
  const auto reports = load_reports_json(opt.reports);
  CorrelationReport correlations;
  if (!opt.correlations.empty()) {
    correlations = load_correlations_json(opt.correlations);
  }
  const std::string document = render_report(reports, correlations, format);

  const fs::path out = output_path(
      global, opt.out,
      format == ReportFormat::Markdown ? "report.md" : "report_table.tsv");
  std::ofstream file(out);
  if (!file) throw IoError("cannot open " + out.string() + " for writing");
  file << document;
  file.flush();
  if (!file) throw IoError("write failed for " + out.string());
  std::cout << "rendered " << reports.size() << " report row(s) -> "
            << out.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hard-negative set evaluation toolkit"};
  app.set_version_flag("--version", NEGEVAL_VERSION);
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--threads", global.threads,
                 "worker thread cap (0 = hardware concurrency)");
  app.add_option("--seed", global.seed, "seed recorded for randomized fixtures");
  app.add_option("--output-dir", global.output_dir,
                 "directory for default outputs and manifests");

  MineOptions mine;
  auto* mine_cmd =
      app.add_subcommand("mine", "mine BM25 hard negatives per query");
  mine_cmd->add_option("--corpus", mine.corpus, "corpus.jsonl")->required();
  mine_cmd->add_option("--queries", mine.queries, "queries.jsonl")->required();
  mine_cmd->add_option("--pairs", mine.pairs,
                       "triplets.jsonl supplying positive_ids per query")
      ->required();
  mine_cmd->add_option("--k", mine.k, "negatives per query (default 50)");
  mine_cmd->add_option("--k1", mine.k1, "BM25 k1 (default 1.5)");
  mine_cmd->add_option("--b", mine.b, "BM25 b (default 0.75)");
  mine_cmd->add_option("--stopwords", mine.stopwords,
                       "optional stopword list, one word per line");
  mine_cmd->add_option("--out", mine.out, "output triplets path");

  ScoreOptions score;
  auto* score_cmd = app.add_subcommand(
      "score", "compute similarity statistics and capacity/efficiency scores");
  score_cmd->add_option("--triplets", score.triplets, "triplets.jsonl");
  score_cmd->add_option("--embeddings", score.embeddings,
                        "embeddings file for both queries and docs");
  score_cmd->add_option("--query-embeddings", score.query_embeddings,
                        "query embeddings file");
  score_cmd->add_option("--doc-embeddings", score.doc_embeddings,
                        "document embeddings file");
  score_cmd->add_option("--scores", score.scores,
                        "external scores.tsv instead of embeddings");
  score_cmd->add_option("--prefer", score.prefer,
                        "embeddings|scores when both are given");
  score_cmd->add_option("--from-summary", score.from_summary,
                        "inject (n, signal, margin) aggregates from JSON");
  score_cmd->add_option("--tau", score.tau,
                        "temperature for the gradient-norm estimate");
  score_cmd->add_option("--method-tag", score.method_tag,
                        "method label (default: derived from negatives)");
  score_cmd->add_option("--model-tag", score.model_tag,
                        "embedding-model provenance label");
  score_cmd->add_flag("--no-normalize", score.no_normalize,
                      "skip unit-norm rescaling of embedding rows");
  score_cmd->add_flag("--allow-duplicate-negatives",
                      score.allow_duplicate_negatives,
                      "accept files written by combine --keep-duplicates");
  score_cmd->add_option("--export-scores", score.export_scores,
                        "also write the cosine scores as scores.tsv");
  score_cmd->add_option("--out-stats", score.out_stats, "stats.jsonl path");
  score_cmd->add_option("--out-summary", score.out_summary,
                        "summary.json path");
  score_cmd->add_option("--out-report", score.out_report, "report.json path");
  score_cmd->add_option("--out-report-tsv", score.out_report_tsv,
                        "report.tsv path");

  CombineOptions combine;
  auto* combine_cmd = app.add_subcommand(
      "combine", "concatenate per-method negative sets into hybrids");
  combine_cmd->add_option("--plans", combine.plans, "plans.json")->required();
  combine_cmd->add_option("--plan", combine.plan, "plan name to execute")
      ->required();
  combine_cmd
      ->add_option("--input", combine.inputs,
                   "tag=path triplet source (repeatable)")
      ->required();
  combine_cmd->add_option("--truncate", combine.truncate,
                          "keep only the first N negatives per query");
  combine_cmd->add_flag("--keep-duplicates", combine.keep_duplicates,
                        "raw concatenation without id dedup");
  combine_cmd->add_option("--out", combine.out, "output triplets path");

  CorrelateOptions correlate;
  auto* correlate_cmd = app.add_subcommand(
      "correlate", "correlate intrinsic metrics with downstream nDCG");
  correlate_cmd->add_option("--reports", correlate.reports, "report.json")
      ->required();
  correlate_cmd
      ->add_option("--downstream", correlate.downstream, "downstream.tsv")
      ->required();
  correlate_cmd->add_option("--out", correlate.out, "correlations.json path");

  EvalNdcgOptions eval_ndcg;
  auto* eval_cmd =
      app.add_subcommand("eval-ndcg", "TREC-style nDCG@k evaluation");
  eval_cmd->add_option("--qrels", eval_ndcg.qrels, "qrels.tsv")->required();
  eval_cmd->add_option("--run", eval_ndcg.run, "run.tsv")->required();
  eval_cmd->add_option("--k", eval_ndcg.k, "cutoff (default 10)");
  eval_cmd->add_option("--out", eval_ndcg.out, "ndcg.tsv path");

  ReportOptions report;
  auto* report_cmd =
      app.add_subcommand("report", "render the human-readable report");
  report_cmd->add_option("--reports", report.reports, "report.json")
      ->required();
  report_cmd->add_option("--correlations", report.correlations,
                         "correlations.json");
  report_cmd->add_option("--format", report.format, "md or tsv");
  report_cmd->add_option("--out", report.out, "output document path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (mine_cmd->parsed()) run_mine(global, mine);
    if (score_cmd->parsed()) run_score(global, score);
    if (combine_cmd->parsed()) run_combine(global, combine);
    if (correlate_cmd->parsed()) run_correlate(global, correlate);
    if (eval_cmd->parsed()) run_eval_ndcg(global, eval_ndcg);
    if (report_cmd->parsed()) run_report(global, report);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
