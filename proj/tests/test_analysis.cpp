#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "negeval/analysis.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace negeval;

namespace {

EciReport report_for(const std::string& method, double n, double signal,
                     double margin, double tau = 1.0) {
  MethodSummary summary;
  summary.method_tag = method;
  summary.mean_n = n;
  summary.mean_signal = signal;
  summary.mean_margin = margin;
  summary.query_count = 1;
  return build_report(summary, tau, "test-model");
}

// Full-count reference aggregates for the seven mining configurations and
// the matching downstream means (six methods have downstream scores).
const std::vector<std::tuple<std::string, double, double, double>> kReference =
    {{"bm25", 50, 0.577, 0.199},
     {"cross_encoder", 25, 0.606, 0.175},
     {"llm", 3, 0.656, 0.110},
     {"bm25+cross_encoder", 75, 0.587, 0.192},
     {"llm+bm25", 53, 0.620, 0.152},
     {"llm+bm25+cross_encoder", 78, 0.621, 0.152},
     {"cross_encoder+llm", 28, 0.631, 0.143}};

const std::vector<std::pair<std::string, double>> kDownstreamMeans = {
    {"bm25", 0.321},
    {"cross_encoder", 0.321},
    {"llm", 0.164},
    {"bm25+cross_encoder", 0.337},
    {"llm+bm25", 0.319},
    {"llm+bm25+cross_encoder", 0.302}};

}  // namespace

TEST_CASE("pearson on closed-form fixtures") {
  const std::vector<double> xs = {1, 2, 3, 4, 5};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(2 * x + 1);
  CHECK(pearson_r(xs, ys) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> neg;
  for (double x : xs) neg.push_back(-x);
  CHECK(pearson_r(xs, neg) == doctest::Approx(-1.0).epsilon(1e-12));

  const std::vector<double> a = {1, 2, 3};
  const std::vector<double> b = {1, 3, 2};
  CHECK(std::abs(pearson_r(a, b) - 0.5) < 1e-9);
}

TEST_CASE("pearson domain errors") {
  const std::vector<double> xs = {1, 2, 3};
  const std::vector<double> flat = {4, 4, 4};
  const std::vector<double> shorter = {1, 2};
  const std::vector<double> one = {1};
  CHECK_THROWS_AS(pearson_r(xs, flat), DomainError);
  CHECK_THROWS_AS(pearson_r(flat, xs), DomainError);
  CHECK_THROWS_AS(pearson_r(xs, shorter), DomainError);
  CHECK_THROWS_AS(pearson_r(one, one), DomainError);
}

TEST_CASE("property: pearson affine invariance and antisymmetry") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> value(-10, 10);
  std::uniform_real_distribution<double> scale(0.1, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> xs(6), ys(6);
    for (int i = 0; i < 6; ++i) {
      xs[i] = value(rng);
      ys[i] = value(rng);
    }
    double r;
    try {
      r = pearson_r(xs, ys);
    } catch (const DomainError&) {
      continue;
    }
    const double a = scale(rng);
    const double b = value(rng);
    std::vector<double> scaled;
    for (double x : xs) scaled.push_back(a * x + b);
    CHECK(pearson_r(scaled, ys) == doctest::Approx(r).epsilon(1e-12));
    std::vector<double> negated;
    for (double x : xs) negated.push_back(-x);
    CHECK(pearson_r(negated, ys) == doctest::Approx(-r).epsilon(1e-12));
    CHECK(std::abs(r) <= 1.0 + 1e-12);
  }
}

TEST_CASE("ndcg closed-form examples") {
  const std::unordered_map<std::string, double> rel = {{"d1", 1.0}};
  const std::vector<std::string> rank1 = {"d1", "x", "y"};
  CHECK(ndcg_at_k(rank1, rel, 10) == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<std::string> rank2 = {"x", "d1", "y"};
  CHECK(ndcg_at_k(rank2, rel, 10) ==
        doctest::Approx(0.6309).epsilon(1.6e-4));
  CHECK(std::abs(ndcg_at_k(rank2, rel, 10) - 1.0 / std::log2(3.0)) < 1e-12);

  const std::vector<std::string> none = {"x", "y"};
  CHECK(ndcg_at_k(none, rel, 10) == 0.0);
  CHECK(ndcg_at_k(rank1, {}, 10) == 0.0);  // no relevant docs at all
  CHECK_THROWS_AS(ndcg_at_k(rank1, rel, 0), DomainError);
}

TEST_CASE("property: ndcg bounds and tail permutation invariance") {
  std::mt19937 rng(13);
  std::uniform_int_distribution<int> grade(0, 3);
  std::uniform_int_distribution<int> length(1, 20);
  for (int trial = 0; trial < 200; ++trial) {
    std::unordered_map<std::string, double> rel;
    std::vector<std::string> ranked;
    const int n = length(rng);
    for (int i = 0; i < n; ++i) {
      const std::string id = "d" + std::to_string(i);
      ranked.push_back(id);
      const int g = grade(rng);
      if (g > 0) rel[id] = g;
    }
    const std::size_t k = 5;
    const double value = ndcg_at_k(ranked, rel, k);
    CHECK(value >= 0.0);
    CHECK(value <= 1.0 + 1e-12);
    CHECK(value == doctest::Approx(oracle::ndcg(
                       ranked,
                       std::map<std::string, double>(rel.begin(), rel.end()),
                       k))
                       .epsilon(1e-12));
    if (ranked.size() > k) {
      auto shuffled = ranked;
      std::shuffle(shuffled.begin() + k, shuffled.end(), rng);
      CHECK(ndcg_at_k(shuffled, rel, k) == value);
    }
  }
}

TEST_CASE("correlate_reports on a perfectly aligned fixture") {
  std::vector<EciReport> reports;
  std::vector<DownstreamRecord> downstream;
  for (int i = 1; i <= 4; ++i) {
    const std::string method = "m" + std::to_string(i);
    reports.push_back(report_for(method, 10.0 * i, 0.5, 0.2));
    // Downstream linear in eci: two datasets averaging to a linear value.
    const double target = 0.1 + 0.01 * reports.back().eci;
    downstream.push_back({method, "ds1", target + 0.005});
    downstream.push_back({method, "ds2", target - 0.005});
  }
  const auto result = correlate_reports(reports, downstream);
  const auto eci_row = std::find_if(
      result.rows.begin(), result.rows.end(),
      [](const CorrelationRow& r) { return r.metric_name == "eci"; });
  REQUIRE(eci_row != result.rows.end());
  CHECK(eci_row->pearson_r == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(eci_row->n_points == 4);
  // signal is constant across methods -> skipped with a notice.
  CHECK(std::none_of(result.rows.begin(), result.rows.end(),
                     [](const CorrelationRow& r) {
                       return r.metric_name == "signal";
                     }));
  CHECK(!result.notices.empty());
}

TEST_CASE("correlate_reports on the six-method reference fixture") {
  std::vector<EciReport> reports;
  for (const auto& [method, n, s, d] : kReference) {
    reports.push_back(report_for(method, n, s, d));
  }
  std::vector<DownstreamRecord> downstream;
  for (const auto& [method, mean] : kDownstreamMeans) {
    downstream.push_back({method, "benchmark-average", mean});
  }
  const auto result = correlate_reports(reports, downstream);

  auto row = [&](const std::string& name) {
    auto it = std::find_if(
        result.rows.begin(), result.rows.end(),
        [&](const CorrelationRow& r) { return r.metric_name == name; });
    REQUIRE(it != result.rows.end());
    return *it;
  };

  // Regression values pinned from an independent statistics oracle over the
  // six shared (intrinsic, downstream) pairs.
  CHECK(row("eci").pearson_r ==
        doctest::Approx(0.9431249669946749).epsilon(1e-9));
  CHECK(row("signal").pearson_r ==
        doctest::Approx(-0.838474876943488).epsilon(1e-9));
  CHECK(row("grad_norm_est").pearson_r ==
        doctest::Approx(0.7173750716998801).epsilon(1e-9));
  CHECK(row("eci").n_points == 6);

  // Cross-check against the in-test oracle.
  std::vector<double> eci_values, ndcg_values;
  for (const auto& [method, mean] : kDownstreamMeans) {
    for (const auto& r : reports) {
      if (r.method_tag == method) eci_values.push_back(r.eci);
    }
    ndcg_values.push_back(mean);
  }
  CHECK(row("eci").pearson_r ==
        doctest::Approx(oracle::pearson(eci_values, ndcg_values))
            .epsilon(1e-12));

  // score_var_est is absent (no s_max in the reference aggregates).
  CHECK(std::none_of(result.rows.begin(), result.rows.end(),
                     [](const CorrelationRow& r) {
                       return r.metric_name == "score_var_est";
                     }));
  CHECK(std::any_of(result.notices.begin(), result.notices.end(),
                    [](const std::string& n) {
                      return n.find("score_var_est") != std::string::npos;
                    }));
}

TEST_CASE("correlate_reports degeneracies") {
  std::vector<EciReport> reports = {report_for("a", 10, 0.5, 0.2),
                                    report_for("b", 20, 0.6, 0.1)};
  std::vector<DownstreamRecord> downstream = {{"a", "ds", 0.3},
                                              {"b", "ds", 0.4}};
  const auto result = correlate_reports(reports, downstream);
  for (const auto& row : result.rows) {
    CHECK(std::abs(std::abs(row.pearson_r) - 1.0) < 1e-12);
    CHECK(row.n_points == 2);
  }

  const std::vector<DownstreamRecord> only_one = {{"a", "ds", 0.3}};
  CHECK_THROWS_AS(correlate_reports(reports, only_one), DomainError);
  const std::vector<DownstreamRecord> unrelated = {{"x", "ds", 0.3},
                                                   {"y", "ds", 0.4}};
  CHECK_THROWS_AS(correlate_reports(reports, unrelated), DomainError);
}

TEST_CASE("render_report is byte-deterministic and format-checked") {
  std::vector<EciReport> reports;
  for (const auto& [method, n, s, d] : kReference) {
    reports.push_back(report_for(method, n, s, d));
  }
  CorrelationReport correlations;
  correlations.rows = {{"eci", 0.9431, 6}, {"signal", -0.8385, 6}};

  const auto md = render_report(reports, correlations,
                                ReportFormat::Markdown);
  const auto md2 = render_report(reports, correlations,
                                 ReportFormat::Markdown);
  CHECK(md == md2);
  CHECK(md.find("| bm25 | 50 | 0.577 | 0.199 | 1.16 |") != std::string::npos);
  CHECK(md.find("| eci | 0.9431 | 6 |") != std::string::npos);

  const auto tsv = render_report(reports, correlations, ReportFormat::Tsv);
  CHECK(tsv.find("bm25\t50\t0.577\t0.199\t1.16\n") != std::string::npos);
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') >= 11);

  const CorrelationReport empty;
  const auto no_corr = render_report(reports, empty, ReportFormat::Markdown);
  CHECK(no_corr.find("No correlation data") != std::string::npos);

  CHECK_THROWS_AS(parse_report_format("csv"), ConfigError);
  CHECK(parse_report_format("md") == ReportFormat::Markdown);
  CHECK(parse_report_format("markdown") == ReportFormat::Markdown);
  CHECK(parse_report_format("tsv") == ReportFormat::Tsv);
  CHECK_THROWS_AS(
      render_report({}, correlations, ReportFormat::Tsv), DomainError);
}

TEST_CASE("golden rendering of the seven-row reference table") {
  std::vector<EciReport> reports;
  for (const auto& [method, n, s, d] : kReference) {
    reports.push_back(report_for(method, n, s, d));
  }
  const auto tsv = render_report(reports, {}, ReportFormat::Tsv);
  const std::string expected =
      "method\ttop-k\tsignal\tmax-margin\teci\n"
      "bm25\t50\t0.577\t0.199\t1.16\n"
      "cross_encoder\t25\t0.606\t0.175\t0.88\n"
      "llm\t3\t0.656\t0.110\t0.26\n"
      "bm25+cross_encoder\t75\t0.587\t0.192\t1.25\n"
      "llm+bm25\t53\t0.620\t0.152\t0.97\n"
      "llm+bm25+cross_encoder\t78\t0.621\t0.152\t1.07\n"
      "cross_encoder+llm\t28\t0.631\t0.143\t0.79\n"
      "\n# no correlation data available\n";
  CHECK(tsv == expected);
}

TEST_CASE("downstream.tsv loader") {
  fixtures::TempDir dir("downstream");
  fixtures::write_file(dir.file("d.tsv"),
                       "bm25\tfever\t0.580\nbm25\tnfcorpus\t0.200\n"
                       "llm\tfever\t0.049\n");
  const auto records = load_downstream_tsv(dir.file("d.tsv"));
  REQUIRE(records.size() == 3);
  CHECK(records[0].method_tag == "bm25");
  CHECK(records[2].ndcg_at_10 == 0.049);

  fixtures::write_file(dir.file("range.tsv"), "bm25\tfever\t1.5\n");
  CHECK_THROWS_AS(load_downstream_tsv(dir.file("range.tsv")),
                  ValidationError);
  fixtures::write_file(dir.file("dup.tsv"),
                       "bm25\tfever\t0.5\nbm25\tfever\t0.6\n");
  CHECK_THROWS_AS(load_downstream_tsv(dir.file("dup.tsv")), ValidationError);
  fixtures::write_file(dir.file("cols.tsv"), "bm25\t0.5\n");
  CHECK_THROWS_AS(load_downstream_tsv(dir.file("cols.tsv")), ParseError);
}

TEST_CASE("TREC round-trip matches the hand-computed oracle") {
  fixtures::TempDir dir("trec");
  // Five queries: perfect ranking, interleaved grades, relevant-never-
  // retrieved, no qrels at all, and a deep run with a relevant doc at
  // rank 11 (outside the k=10 window) plus one never retrieved.
  fixtures::write_file(dir.file("qrels.tsv"),
                       "q1\ta\t3\nq1\tb\t2\nq1\tc\t1\n"
                       "q2\ta\t2\nq2\te\t1\n"
                       "q3\tg\t1\n"
                       "q5\ta\t2\nq5\tb\t1\nq5\tz\t1\n");
  std::string run =
      "q1\ta\t1\t9.9\nq1\tb\t2\t8.5\nq1\tc\t3\t7.1\nq1\td\t4\t6.0\n"
      "q2\tc\t1\t5.0\nq2\ta\t2\t4.5\nq2\td\t3\t4.0\nq2\te\t4\t3.5\n"
      "q3\ta\t1\t2.0\nq3\tb\t2\t1.5\nq3\tc\t3\t1.0\n"
      "q4\ta\t1\t1.0\nq4\tb\t2\t0.5\n";
  run += "q5\ta\t1\t9.0\n";
  for (int i = 2; i <= 10; ++i) {
    run += "q5\tfiller" + std::to_string(i) + "\t" + std::to_string(i) +
           "\t" + std::to_string(10 - i) + ".0\n";
  }
  run += "q5\tb\t11\t-1.0\nq5\tmore\t12\t-2.0\n";
  fixtures::write_file(dir.file("run.tsv"), run);

  const auto qrels = load_qrels_tsv(dir.file("qrels.tsv"));
  const auto run_file = load_run_tsv(dir.file("run.tsv"));
  const auto result = evaluate_ndcg(qrels, run_file, 10);

  // Frozen spreadsheet oracle values.
  REQUIRE(result.per_query.size() == 5);
  CHECK(result.per_query[0].first == "q1");
  CHECK(result.per_query[0].second == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(result.per_query[1].second ==
        doctest::Approx(0.639909328045346).epsilon(1e-12));
  CHECK(result.per_query[2].second == 0.0);
  CHECK(result.per_query[3].second == 0.0);
  CHECK(result.per_query[4].second ==
        doctest::Approx(0.7262287617954056).epsilon(1e-12));
  CHECK(result.mean ==
        doctest::Approx(0.4732276179681503).epsilon(1e-12));

  write_ndcg_tsv(dir.file("ndcg.tsv"), result, 10);
  const auto text = fixtures::read_file(dir.file("ndcg.tsv"));
  CHECK(text.rfind("query_id\tndcg@10\n", 0) == 0);
  CHECK(text.find("mean\t") != std::string::npos);
}

TEST_CASE("run.tsv loader validations") {
  fixtures::TempDir dir("run");
  fixtures::write_file(dir.file("bad_rank.tsv"), "q1\td1\t0\t1.0\n");
  CHECK_THROWS_AS(load_run_tsv(dir.file("bad_rank.tsv")), ParseError);
  fixtures::write_file(dir.file("dup_doc.tsv"),
                       "q1\td1\t1\t1.0\nq1\td1\t2\t0.5\n");
  CHECK_THROWS_AS(load_run_tsv(dir.file("dup_doc.tsv")), ValidationError);
  fixtures::write_file(dir.file("dup_rank.tsv"),
                       "q1\td1\t1\t1.0\nq1\td2\t1\t0.5\n");
  CHECK_THROWS_AS(load_run_tsv(dir.file("dup_rank.tsv")), ValidationError);
  fixtures::write_file(dir.file("bad_grade.tsv"), "q1\td1\t-1\n");
  CHECK_THROWS_AS(load_qrels_tsv(dir.file("bad_grade.tsv")), ParseError);
}

TEST_CASE("correlations JSON round-trip") {
  fixtures::TempDir dir("corr");
  CorrelationReport report;
  report.rows = {{"eci", 0.91, 6}, {"grad_norm_est", -0.82, 6}};
  report.notices = {"skipped score_var_est: value missing for some methods"};
  write_correlations_json(dir.file("c.json"), report);
  const auto loaded = load_correlations_json(dir.file("c.json"));
  CHECK(loaded.rows == report.rows);
  CHECK(loaded.notices == report.notices);
}
