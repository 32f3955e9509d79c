#include "negeval/dataset_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <utility>

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
using detail::quote;

static_assert(std::endian::native == std::endian::little,
              "embeddings.bin is a little-endian format");

constexpr char kEmbeddingMagic[7] = {'N', 'E', 'G', 'E', 'M', 'B', '1'};
constexpr std::uint32_t kDtypeFloat32 = 1;

// Collects every problem found in one file and throws a single error after
// the full pass, so users see the complete damage report at once.
class ErrorCollector {
 public:
  explicit ErrorCollector(const std::filesystem::path& path) : path_(path) {}

  void parse(std::size_t line, std::string msg) {
    ++parse_count_;
    add(line, std::move(msg));
  }
  void validation(std::size_t line, std::string msg) {
    ++validation_count_;
    add(line, std::move(msg));
  }
  void validation(std::string msg) {
    ++validation_count_;
    messages_.push_back(std::move(msg));
  }

  bool empty() const { return messages_.empty(); }

  [[noreturn]] void raise() const {
    std::ostringstream out;
    out << path_.string() << ": " << messages_.size() << " error(s)";
    for (const auto& m : messages_) out << "\n  " << m;
    if (validation_count_ == 0) throw ParseError(out.str());
    throw ValidationError(out.str());
  }

  void throw_if_any() const {
    if (!empty()) raise();
  }

 private:
  void add(std::size_t line, std::string msg) {
    messages_.push_back("line " + std::to_string(line) + ": " +
                        std::move(msg));
  }

  std::filesystem::path path_;
  std::vector<std::string> messages_;
  std::size_t parse_count_ = 0;
  std::size_t validation_count_ = 0;
};

// Parses one JSONL record; returns a discarded value on malformed JSON.
json parse_line(const std::string& line) {
  return json::parse(line, nullptr, /*allow_exceptions=*/false);
}

bool require_string_field(const json& obj, const char* key, std::size_t line,
                          ErrorCollector& errors, std::string& out) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    errors.parse(line, std::string("missing key \"") + key + "\"");
    return false;
  }
  if (!it->is_string()) {
    errors.parse(line, std::string("key \"") + key + "\" must be a string");
    return false;
  }
  out = it->get<std::string>();
  return true;
}

}  // namespace

void EmbeddingMatrix::append(std::string id, std::span<const double> row) {
  if (dim_ == 0) dim_ = row.size();
  if (row.size() != dim_) {
    throw ShapeError("embedding row for " + quote(id) + " has dimension " +
                     std::to_string(row.size()) + ", expected " +
                     std::to_string(dim_));
  }
  if (index_.contains(id)) {
    throw ValidationError("duplicate embedding id " + quote(id));
  }
  index_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), row.begin(), row.end());
}

std::optional<std::size_t> EmbeddingMatrix::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> EmbeddingMatrix::row_for(std::string_view id) const {
  auto i = find(id);
  if (!i) throw LookupError("embedding id not found: " + quote(id));
  return row(*i);
}

void EmbeddingMatrix::normalize_rows() {
  std::vector<std::string> zero_rows;
  for (std::size_t i = 0; i < size(); ++i) {
    double* begin = data_.data() + i * dim_;
    double sq = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) sq += begin[j] * begin[j];
    const double norm = std::sqrt(sq);
    if (norm == 0.0 || !std::isfinite(norm)) {
      zero_rows.push_back(ids_[i]);
      continue;
    }
    for (std::size_t j = 0; j < dim_; ++j) begin[j] /= norm;
  }
  if (!zero_rows.empty()) {
    std::string msg = "cannot normalize zero-norm embedding row(s):";
    for (const auto& id : zero_rows) msg += " " + quote(id);
    throw ValidationError(msg);
  }
  unit_norm_ = true;
}

bool ScoreFile::insert(std::string query_id, std::string doc_id,
                       double score) {
  auto& per_query = by_query_[query_id];
  auto [it, inserted] = per_query.emplace(doc_id, score);
  if (!inserted) return false;
  entries_.push_back({std::move(query_id), std::move(doc_id), score});
  return true;
}

std::optional<double> ScoreFile::find(std::string_view query_id,
                                      std::string_view doc_id) const {
  auto q = by_query_.find(std::string(query_id));
  if (q == by_query_.end()) return std::nullopt;
  auto d = q->second.find(std::string(doc_id));
  if (d == q->second.end()) return std::nullopt;
  return d->second;
}

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path) {
  auto in = open_input(path);
  ErrorCollector errors(path);
  std::vector<CorpusRecord> records;
  std::unordered_map<std::string, std::size_t> seen;  // doc_id -> first line

  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    const json obj = parse_line(line);
    if (obj.is_discarded() || !obj.is_object()) {
      errors.parse(line_no, "malformed JSON object");
      continue;
    }
    CorpusRecord rec;
    if (!require_string_field(obj, "doc_id", line_no, errors, rec.doc_id) ||
        !require_string_field(obj, "text", line_no, errors, rec.text)) {
      continue;
    }
    if (rec.doc_id.empty()) {
      errors.validation(line_no, "doc_id must be non-empty");
      continue;
    }
    if (rec.text.empty()) {
      errors.validation(line_no, "text must be non-empty");
      continue;
    }
    auto [it, inserted] = seen.emplace(rec.doc_id, line_no);
    if (!inserted) {
      errors.validation(line_no, "duplicate doc_id " + quote(rec.doc_id) +
                                     " (first seen at line " +
                                     std::to_string(it->second) + ")");
      continue;
    }
    records.push_back(std::move(rec));
  }
  errors.throw_if_any();
  return records;
}

std::vector<QueryRecord> load_queries(const std::filesystem::path& path) {
  auto in = open_input(path);
  ErrorCollector errors(path);
  std::vector<QueryRecord> records;
  std::unordered_map<std::string, std::size_t> seen;

  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    const json obj = parse_line(line);
    if (obj.is_discarded() || !obj.is_object()) {
      errors.parse(line_no, "malformed JSON object");
      continue;
    }
    QueryRecord rec;
    if (!require_string_field(obj, "query_id", line_no, errors,
                              rec.query_id) ||
        !require_string_field(obj, "text", line_no, errors, rec.text)) {
      continue;
    }
    if (rec.query_id.empty()) {
      errors.validation(line_no, "query_id must be non-empty");
      continue;
    }
    auto [it, inserted] = seen.emplace(rec.query_id, line_no);
    if (!inserted) {
      errors.validation(line_no, "duplicate query_id " +
                                     quote(rec.query_id) +
                                     " (first seen at line " +
                                     std::to_string(it->second) + ")");
      continue;
    }
    records.push_back(std::move(rec));
  }
  errors.throw_if_any();
  return records;
}

std::vector<TripletSet> load_triplets(const std::filesystem::path& path,
                                      const TripletLoadOptions& options) {
  auto in = open_input(path);
  ErrorCollector errors(path);
  std::vector<TripletSet> triplets;
  std::unordered_map<std::string, std::size_t> seen_queries;

  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    const json obj = parse_line(line);
    if (obj.is_discarded() || !obj.is_object()) {
      errors.parse(line_no, "malformed JSON object");
      continue;
    }
    TripletSet t;
    if (!require_string_field(obj, "query_id", line_no, errors, t.query_id)) {
      continue;
    }
    if (t.query_id.empty()) {
      errors.validation(line_no, "query_id must be non-empty");
      continue;
    }

    auto positives = obj.find("positive_ids");
    if (positives == obj.end() || !positives->is_array()) {
      errors.parse(line_no, "\"positive_ids\" must be an array");
      continue;
    }
    bool bad = false;
    for (const auto& p : *positives) {
      if (!p.is_string() || p.get<std::string>().empty()) {
        errors.parse(line_no, "positive_ids entries must be non-empty strings");
        bad = true;
        break;
      }
      t.positive_ids.push_back(p.get<std::string>());
    }
    if (bad) continue;
    if (t.positive_ids.empty()) {
      errors.validation(line_no, "query " + quote(t.query_id) +
                                     " must have at least one positive");
      continue;
    }

    auto negatives = obj.find("negatives");
    if (negatives == obj.end() || !negatives->is_array()) {
      errors.parse(line_no, "\"negatives\" must be an array");
      continue;
    }
    const std::unordered_set<std::string> positive_set(
        t.positive_ids.begin(), t.positive_ids.end());
    std::unordered_set<std::string> negative_seen;
    for (const auto& n : *negatives) {
      if (!n.is_object()) {
        errors.parse(line_no, "negatives entries must be objects");
        bad = true;
        break;
      }
      NegativeRef ref;
      if (!require_string_field(n, "doc_id", line_no, errors, ref.doc_id) ||
          !require_string_field(n, "method", line_no, errors, ref.method)) {
        bad = true;
        break;
      }
      if (ref.doc_id.empty() || ref.method.empty()) {
        errors.validation(line_no, "negative doc_id and method must be non-empty");
        bad = true;
        break;
      }
      if (positive_set.contains(ref.doc_id)) {
        errors.validation(line_no, "negative " + quote(ref.doc_id) +
                                       " also appears in positive_ids of query " +
                                       quote(t.query_id));
        bad = true;
        break;
      }
      if (!negative_seen.insert(ref.doc_id).second &&
          !options.allow_duplicate_negatives) {
        errors.validation(line_no, "duplicate negative pair (" + t.query_id +
                                       ", " + ref.doc_id + ")");
        bad = true;
        break;
      }
      t.negatives.push_back(std::move(ref));
    }
    if (bad) continue;

    auto [it, inserted] = seen_queries.emplace(t.query_id, line_no);
    if (!inserted) {
      errors.validation(line_no, "duplicate query_id " + quote(t.query_id) +
                                     " (first seen at line " +
                                     std::to_string(it->second) + ")");
      continue;
    }
    triplets.push_back(std::move(t));
  }
  errors.throw_if_any();
  return triplets;
}

void save_triplets(const std::filesystem::path& path,
                   std::span<const TripletSet> triplets) {
  auto out = open_output(path);
  for (const auto& t : triplets) {
    ordered_json obj;
    obj["query_id"] = t.query_id;
    obj["positive_ids"] = t.positive_ids;
    ordered_json negs = ordered_json::array();
    for (const auto& n : t.negatives) {
      negs.push_back({{"doc_id", n.doc_id}, {"method", n.method}});
    }
    obj["negatives"] = std::move(negs);
    out << obj.dump() << '\n';
  }
  finish_output(out, path);
}

ScoreFile load_scores(const std::filesystem::path& path) {
  auto in = open_input(path);
  ErrorCollector errors(path);
  ScoreFile scores;

  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) {
      errors.parse(line_no, "empty line");
      continue;
    }
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos
                                                : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos ||
        line.find('\t', tab2 + 1) != std::string::npos) {
      errors.parse(line_no, "expected query_id<TAB>doc_id<TAB>score");
      continue;
    }
    std::string query_id = line.substr(0, tab1);
    std::string doc_id = line.substr(tab1 + 1, tab2 - tab1 - 1);
    const std::string_view score_text =
        std::string_view(line).substr(tab2 + 1);
    if (query_id.empty() || doc_id.empty()) {
      errors.validation(line_no, "query_id and doc_id must be non-empty");
      continue;
    }
    bool ok = false;
    const double score = parse_strict_double(score_text, ok);
    if (!ok || !std::isfinite(score)) {
      errors.parse(line_no, "score " + quote(std::string(score_text)) +
                                " is not a finite decimal");
      continue;
    }
    if (!scores.insert(query_id, doc_id, score)) {
      errors.validation(line_no,
                        "duplicate (" + query_id + ", " + doc_id + ")");
    }
  }
  errors.throw_if_any();
  return scores;
}

void save_scores(const std::filesystem::path& path, const ScoreFile& scores) {
  auto out = open_output(path);
  for (const auto& e : scores.entries()) {
    out << e.query_id << '\t' << e.doc_id << '\t' << format_double(e.score)
        << '\n';
  }
  finish_output(out, path);
}

std::filesystem::path embedding_ids_path(const std::filesystem::path& path) {
  auto ids = path;
  ids.replace_extension(".ids");
  return ids;
}

namespace {

EmbeddingMatrix read_embeddings_binary(const std::filesystem::path& path,
                                       std::ifstream& in) {
  std::uint32_t header[3] = {0, 0, 0};  // count, dim, dtype
  if (!in.read(reinterpret_cast<char*>(header), sizeof(header))) {
    throw ParseError(path.string() + ": truncated header");
  }
  const auto [count, dim, dtype] = std::tuple(header[0], header[1], header[2]);
  if (dtype != kDtypeFloat32) {
    throw ParseError(path.string() + ": unsupported dtype code " +
                     std::to_string(dtype) + " (expected 1 = float32)");
  }
  if (dim == 0) throw ParseError(path.string() + ": dim must be positive");

  const std::size_t value_count =
      static_cast<std::size_t>(count) * static_cast<std::size_t>(dim);
  std::vector<float> payload(value_count);
  if (value_count > 0 &&
      !in.read(reinterpret_cast<char*>(payload.data()),
               static_cast<std::streamsize>(value_count * sizeof(float)))) {
    throw ParseError(path.string() + ": truncated payload (expected " +
                     std::to_string(value_count * sizeof(float)) +
                     " payload bytes)");
  }
  char extra;
  if (in.read(&extra, 1)) {
    throw ParseError(path.string() + ": trailing bytes after payload");
  }

  const auto ids_path = embedding_ids_path(path);
  auto ids_in = open_input(ids_path);
  std::vector<std::string> ids;
  std::string line;
  while (next_line(ids_in, line)) ids.push_back(line);
  if (ids.size() != count) {
    throw ParseError(ids_path.string() + ": " + std::to_string(ids.size()) +
                     " ids for " + std::to_string(count) + " embedding rows");
  }

  EmbeddingMatrix matrix(dim);
  std::vector<double> row(dim);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      row[j] = static_cast<double>(payload[i * dim + j]);
    }
    matrix.append(ids[i], row);
  }
  return matrix;
}

EmbeddingMatrix read_embeddings_jsonl(const std::filesystem::path& path,
                                      std::ifstream& in) {
  ErrorCollector errors(path);
  EmbeddingMatrix matrix;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected_dim = 0;
  while (next_line(in, line)) {
    ++line_no;
    const json obj = parse_line(line);
    if (obj.is_discarded() || !obj.is_object()) {
      errors.parse(line_no, "malformed JSON object");
      continue;
    }
    std::string id;
    if (!require_string_field(obj, "id", line_no, errors, id)) continue;
    auto vec = obj.find("vector");
    if (vec == obj.end() || !vec->is_array() || vec->empty()) {
      errors.parse(line_no, "\"vector\" must be a non-empty array");
      continue;
    }
    std::vector<double> row;
    row.reserve(vec->size());
    bool bad = false;
    for (const auto& v : *vec) {
      if (!v.is_number()) {
        errors.parse(line_no, "vector entries must be numbers");
        bad = true;
        break;
      }
      row.push_back(v.get<double>());
    }
    if (bad) continue;
    if (expected_dim == 0) expected_dim = row.size();
    if (row.size() != expected_dim) {
      errors.parse(line_no, "row has dimension " + std::to_string(row.size()) +
                                ", expected " + std::to_string(expected_dim));
      continue;
    }
    try {
      matrix.append(std::move(id), row);
    } catch (const ValidationError& e) {
      errors.validation(line_no, e.what());
    }
  }
  errors.throw_if_any();
  return matrix;
}

}  // namespace

EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                std::span<const std::string> ids,
                                const EmbeddingLoadOptions& options) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  char magic[sizeof(kEmbeddingMagic)];
  const bool is_binary =
      in.read(magic, sizeof(magic)) &&
      std::memcmp(magic, kEmbeddingMagic, sizeof(kEmbeddingMagic)) == 0;
  EmbeddingMatrix all;
  if (is_binary) {
    all = read_embeddings_binary(path, in);
  } else {
    in.close();
    auto text_in = open_input(path);
    all = read_embeddings_jsonl(path, text_in);
  }

  EmbeddingMatrix selected = all;
  if (!ids.empty()) {
    selected = EmbeddingMatrix(all.dim());
    std::vector<std::string> missing;
    std::unordered_set<std::string> taken;
    for (const auto& id : ids) {
      if (!taken.insert(id).second) continue;
      auto row_index = all.find(id);
      if (!row_index) {
        missing.push_back(id);
        continue;
      }
      selected.append(id, all.row(*row_index));
    }
    if (!missing.empty()) {
      std::string msg = path.string() + ": missing embedding id(s):";
      for (const auto& id : missing) msg += " " + quote(id);
      throw LookupError(msg);
    }
  }

  if (options.normalize) selected.normalize_rows();
  return selected;
}

void save_embeddings(const std::filesystem::path& path,
                     const EmbeddingMatrix& matrix) {
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    const auto& id = matrix.id_at(i);
    if (id.find('\n') != std::string::npos ||
        id.find('\r') != std::string::npos) {
      throw ValidationError("embedding id " + quote(id) +
                            " contains a line break; cannot be stored in a "
                            "line-oriented id file");
    }
  }

  auto out = open_output(path, std::ios::out | std::ios::binary);
  out.write(kEmbeddingMagic, sizeof(kEmbeddingMagic));
  const std::uint32_t header[3] = {static_cast<std::uint32_t>(matrix.size()),
                                   static_cast<std::uint32_t>(matrix.dim()),
                                   kDtypeFloat32};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  std::vector<float> row(matrix.dim());
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    auto src = matrix.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = static_cast<float>(src[j]);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  finish_output(out, path);

  auto ids_out = open_output(embedding_ids_path(path));
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    ids_out << matrix.id_at(i) << '\n';
  }
  finish_output(ids_out, embedding_ids_path(path));
}

}  // namespace negeval
