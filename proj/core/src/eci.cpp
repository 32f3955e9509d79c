#include "negeval/eci.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "io_util.hpp"

namespace negeval {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using detail::format_double;

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw DomainError(std::string(name) + " must be finite");
  }
}

}  // namespace

double information_capacity(double n) {
  require_finite(n, "negative count");
  if (n < 0.0) {
    throw DomainError("information_capacity: negative count must be >= 0");
  }
  return std::log1p(n);
}

double harmonic_efficiency(double signal, double safe_margin) {
  require_finite(signal, "signal");
  require_finite(safe_margin, "safe_margin");
  if (signal < 0.0 || safe_margin < 0.0) {
    throw DomainError("harmonic_efficiency: inputs must be >= 0");
  }
  // Continuous extension: the harmonic mean of {x, 0} is 0.
  if (signal == 0.0 || safe_margin == 0.0) return 0.0;
  return 2.0 * signal * safe_margin / (signal + safe_margin);
}

double eci_score(double n, double signal, double safe_margin) {
  return information_capacity(n) * harmonic_efficiency(signal, safe_margin);
}

double arithmetic_baseline(double n, double signal, double safe_margin) {
  require_finite(signal, "signal");
  require_finite(safe_margin, "safe_margin");
  if (signal < 0.0 || safe_margin < 0.0) {
    throw DomainError("arithmetic_baseline: inputs must be >= 0");
  }
  return information_capacity(n) * (signal + safe_margin) / 2.0;
}

double gradient_norm_estimate(double n, double signal, double temperature) {
  require_finite(n, "negative count");
  require_finite(signal, "signal");
  require_finite(temperature, "temperature");
  if (n < 0.0) {
    throw DomainError("gradient_norm_estimate: negative count must be >= 0");
  }
  if (temperature <= 0.0) {
    throw DomainError("gradient_norm_estimate: temperature must be > 0");
  }
  const double exponent = signal / temperature;
  // exp overflows IEEE double just above 709.78.
  if (exponent > 709.0) {
    throw OverflowError(
        "gradient_norm_estimate: exp(" + format_double(exponent) +
        ") overflows; lower signal/temperature ratio required");
  }
  const double result = n * std::exp(exponent);
  if (!std::isfinite(result)) {
    throw OverflowError("gradient_norm_estimate: result is not finite");
  }
  return result;
}

double score_variance_estimate(double s_max, double signal) {
  require_finite(s_max, "s_max");
  require_finite(signal, "signal");
  const double spread = s_max - signal;
  return 0.5 * spread * spread;
}

double info_nce_mi_bound(double loss, std::int64_t n) {
  require_finite(loss, "loss");
  if (loss < 0.0) {
    throw DomainError("info_nce_mi_bound: loss must be >= 0");
  }
  if (n < 0) {
    throw DomainError("info_nce_mi_bound: negative count must be >= 0");
  }
  return std::log1p(static_cast<double>(n)) - loss;
}

EciReport build_report(const MethodSummary& summary, double temperature,
                       std::string model_tag) {
  EciReport report;
  report.method_tag = summary.method_tag;
  report.n_effective = summary.mean_n;
  report.mean_signal = summary.mean_signal;
  report.mean_margin = summary.mean_margin;
  report.capacity = information_capacity(summary.mean_n);
  report.harmonic_eff =
      harmonic_efficiency(summary.mean_signal, summary.mean_margin);
  report.eci = report.capacity * report.harmonic_eff;
  report.arithmetic_score =
      arithmetic_baseline(summary.mean_n, summary.mean_signal,
                          summary.mean_margin);
  report.grad_norm_est =
      gradient_norm_estimate(summary.mean_n, summary.mean_signal, temperature);
  if (summary.s_max) {
    report.score_var_est =
        score_variance_estimate(*summary.s_max, summary.mean_signal);
  }
  report.temperature = temperature;
  report.model_tag = std::move(model_tag);
  return report;
}

void write_reports_json(const std::filesystem::path& path,
                        std::span<const EciReport> reports) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  ordered_json arr = ordered_json::array();
  for (const auto& r : reports) {
    ordered_json obj;
    obj["method"] = r.method_tag;
    obj["n"] = r.n_effective;
    obj["signal"] = r.mean_signal;
    obj["margin"] = r.mean_margin;
    obj["capacity"] = r.capacity;
    obj["harmonic_eff"] = r.harmonic_eff;
    obj["eci"] = r.eci;
    obj["arithmetic"] = r.arithmetic_score;
    obj["grad_norm_est"] = r.grad_norm_est;
    obj["score_var_est"] =
        r.score_var_est ? ordered_json(*r.score_var_est) : ordered_json();
    obj["temperature"] = r.temperature;
    obj["model_tag"] = r.model_tag;
    arr.push_back(std::move(obj));
  }
  out << arr.dump(2) << '\n';
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<EciReport> load_reports_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  const json arr = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (arr.is_discarded() || !arr.is_array()) {
    throw ParseError(path.string() + ": expected a JSON array of reports");
  }
  std::vector<EciReport> reports;
  reports.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& obj = arr[i];
    auto fail = [&](const std::string& what) -> ParseError {
      return ParseError(path.string() + ": report " + std::to_string(i) +
                        ": " + what);
    };
    if (!obj.is_object()) throw fail("expected an object");
    EciReport r;
    auto get_number = [&](const char* key) {
      auto it = obj.find(key);
      if (it == obj.end() || !it->is_number()) {
        throw fail(std::string("missing numeric key \"") + key + "\"");
      }
      return it->get<double>();
    };
    auto it = obj.find("method");
    if (it == obj.end() || !it->is_string()) {
      throw fail("missing string key \"method\"");
    }
    r.method_tag = it->get<std::string>();
    r.n_effective = get_number("n");
    r.mean_signal = get_number("signal");
    r.mean_margin = get_number("margin");
    r.capacity = get_number("capacity");
    r.harmonic_eff = get_number("harmonic_eff");
    r.eci = get_number("eci");
    r.arithmetic_score = get_number("arithmetic");
    r.grad_norm_est = get_number("grad_norm_est");
    if (auto sv = obj.find("score_var_est");
        sv != obj.end() && sv->is_number()) {
      r.score_var_est = sv->get<double>();
    }
    r.temperature = get_number("temperature");
    if (auto mt = obj.find("model_tag"); mt != obj.end() && mt->is_string()) {
      r.model_tag = mt->get<std::string>();
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

void write_reports_tsv(const std::filesystem::path& path,
                       std::span<const EciReport> reports) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "method\tn\tsignal\tmargin\tcapacity\tharmonic_eff\teci\t"
         "arithmetic\tgrad_norm_est\tscore_var_est\n";
  for (const auto& r : reports) {
    out << r.method_tag << '\t' << format_double(r.n_effective) << '\t'
        << format_double(r.mean_signal) << '\t'
        << format_double(r.mean_margin) << '\t' << format_double(r.capacity)
        << '\t' << format_double(r.harmonic_eff) << '\t'
        << format_double(r.eci) << '\t' << format_double(r.arithmetic_score)
        << '\t' << format_double(r.grad_norm_est) << '\t'
        << (r.score_var_est ? format_double(*r.score_var_est) : "nan")
        << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<MethodSummary> load_summaries_json(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  const json arr = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (arr.is_discarded() || !arr.is_array()) {
    throw ParseError(path.string() + ": expected a JSON array of summaries");
  }
  std::vector<MethodSummary> summaries;
  summaries.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& obj = arr[i];
    auto fail = [&](const std::string& what) -> ParseError {
      return ParseError(path.string() + ": summary " + std::to_string(i) +
                        ": " + what);
    };
    if (!obj.is_object()) throw fail("expected an object");
    MethodSummary s;
    auto method = obj.find("method");
    if (method == obj.end() || !method->is_string() ||
        method->get<std::string>().empty()) {
      throw fail("missing non-empty string key \"method\"");
    }
    s.method_tag = method->get<std::string>();
    auto get_number = [&](const char* key) {
      auto it = obj.find(key);
      if (it == obj.end() || !it->is_number()) {
        throw fail(std::string("missing numeric key \"") + key + "\"");
      }
      const double v = it->get<double>();
      if (!std::isfinite(v)) {
        throw fail(std::string("key \"") + key + "\" must be finite");
      }
      return v;
    };
    s.mean_n = get_number("n");
    s.mean_signal = get_number("signal");
    s.mean_margin = get_number("margin");
    s.mean_raw_margin = s.mean_margin;
    if (s.mean_n < 0 || s.mean_signal < 0 || s.mean_margin < 0) {
      throw fail("n, signal, and margin must be >= 0");
    }
    if (auto smax = obj.find("s_max"); smax != obj.end() && !smax->is_null()) {
      if (!smax->is_number()) throw fail("key \"s_max\" must be a number");
      s.s_max = smax->get<double>();
    }
    s.query_count = 1;
    if (auto qc = obj.find("query_count"); qc != obj.end()) {
      if (!qc->is_number_unsigned() || qc->get<std::uint64_t>() == 0) {
        throw fail("key \"query_count\" must be a positive integer");
      }
      s.query_count = qc->get<std::size_t>();
    }
    summaries.push_back(std::move(s));
  }
  return summaries;
}

}  // namespace negeval
