#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "negeval/similarity.hpp"

// Effective Contrastive Information and its comparison quantities, computed
// from dataset-level aggregates:
//
//   capacity        ln(1 + n)          logarithmic ceiling on the mutual
//                                      information reachable with n negatives
//   harmonic_eff    2*s*d / (s + d)    discriminative efficiency; collapses
//                                      to zero when either rate vanishes
//   eci             capacity * harmonic_eff
//   arithmetic      capacity * (s + d) / 2     baseline aggregation
//   grad_norm_est   n * exp(s / tau)   aggregate InfoNCE gradient magnitude
//   score_var_est   (s_max - s)^2 / 2  spread of negative difficulty
//
// All operations are pure and stateless.

namespace negeval {

double information_capacity(double n);
double harmonic_efficiency(double signal, double safe_margin);
double eci_score(double n, double signal, double safe_margin);
double arithmetic_baseline(double n, double signal, double safe_margin);

// Throws DomainError for temperature <= 0 and OverflowError when the result
// would not be finite; a silent infinity would corrupt downstream
// correlation analysis.
double gradient_norm_estimate(double n, double signal, double temperature);

double score_variance_estimate(double s_max, double signal);

// InfoNCE mutual-information lower bound, ln(n + 1) - loss. May be negative
// (a vacuous bound) and is returned as-is.
double info_nce_mi_bound(double loss, std::int64_t n);

struct EciReport {
  std::string method_tag;
  double n_effective = 0.0;  // mean negatives per query (real-valued)
  double mean_signal = 0.0;
  double mean_margin = 0.0;
  double capacity = 0.0;
  double harmonic_eff = 0.0;
  double eci = 0.0;
  double arithmetic_score = 0.0;
  double grad_norm_est = 0.0;
  std::optional<double> score_var_est;  // absent when s_max is unknown
  double temperature = 1.0;
  std::string model_tag;
  bool operator==(const EciReport&) const = default;
};

EciReport build_report(const MethodSummary& summary, double temperature,
                       std::string model_tag);

void write_reports_json(const std::filesystem::path& path,
                        std::span<const EciReport> reports);
std::vector<EciReport> load_reports_json(const std::filesystem::path& path);

// TSV mirror with fixed column order: method, n, signal, margin, capacity,
// harmonic_eff, eci, arithmetic, grad_norm_est, score_var_est.
void write_reports_tsv(const std::filesystem::path& path,
                       std::span<const EciReport> reports);

// Summary-injection format: a JSON array of
//   {"method": str, "n": num, "signal": num, "margin": num,
//    "s_max": num (optional), "query_count": int (optional, default 1)}
std::vector<MethodSummary> load_summaries_json(
    const std::filesystem::path& path);

}  // namespace negeval
