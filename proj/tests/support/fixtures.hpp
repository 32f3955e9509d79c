#pragma once

// Deterministic fixture generators and a scratch-directory guard for tests.

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "negeval/types.hpp"

namespace fixtures {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("negeval_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Small closed vocabulary keeps term overlap high, which exercises scoring.
inline std::string random_text(std::mt19937& rng, std::size_t max_terms) {
  static const std::vector<std::string> kVocab = {
      "alpha", "beta",  "gamma", "delta", "epsilon", "zeta",  "eta",
      "theta", "iota",  "kappa", "lambda", "mu",     "nu",    "xi",
      "omicron", "pi",  "rho",   "sigma", "tau",     "upsilon"};
  std::uniform_int_distribution<std::size_t> len(1, max_terms);
  std::uniform_int_distribution<std::size_t> pick(0, kVocab.size() - 1);
  std::string text;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (!text.empty()) text += ' ';
    text += kVocab[pick(rng)];
  }
  return text;
}

inline std::vector<negeval::CorpusRecord> random_corpus(std::mt19937& rng,
                                                        std::size_t docs,
                                                        std::size_t max_len) {
  std::vector<negeval::CorpusRecord> corpus;
  corpus.reserve(docs);
  for (std::size_t i = 0; i < docs; ++i) {
    corpus.push_back({"d" + std::to_string(i), random_text(rng, max_len)});
  }
  return corpus;
}

inline std::vector<double> random_unit_vector(std::mt19937& rng,
                                              std::size_t dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(dim);
  double norm_sq = 0.0;
  do {
    norm_sq = 0.0;
    for (auto& x : v) {
      x = gauss(rng);
      norm_sq += x * x;
    }
  } while (norm_sq == 0.0);
  const double norm = std::sqrt(norm_sq);
  for (auto& x : v) x /= norm;
  return v;
}

// A 2-d unit vector whose cosine against (1, 0) is exactly c.
inline std::vector<double> vec_with_cosine(double c) {
  return {c, std::sqrt(1.0 - c * c)};
}

// Unit vector leaning toward a shared anchor direction, so pairwise cosines
// concentrate well above zero the way text-encoder embeddings do.
inline std::vector<double> anchored_unit_vector(std::mt19937& rng,
                                                std::size_t dim,
                                                double anchor_weight = 0.8) {
  auto v = random_unit_vector(rng, dim);
  const double noise_weight = std::sqrt(1.0 - anchor_weight * anchor_weight);
  for (auto& x : v) x *= noise_weight;
  v[0] += anchor_weight;
  double norm_sq = 0.0;
  for (double x : v) norm_sq += x * x;
  const double norm = std::sqrt(norm_sq);
  for (auto& x : v) x /= norm;
  return v;
}

}  // namespace fixtures
