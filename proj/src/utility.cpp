#include "smbr/utility.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "smbr/error.hpp"

namespace smbr {

using nlohmann::json;

namespace {

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  std::sort(tokens.begin(), tokens.end());
  return tokens;
}

// Multiset intersection size of two sorted ranges.
template <typename T>
std::size_t overlap(const std::vector<T>& a, const std::vector<T>& b) {
  std::size_t i = 0, j = 0, count = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++count, ++i, ++j;
    }
  }
  return count;
}

double f1_from_tokens(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  const auto ov = static_cast<double>(overlap(a, b));
  return 2.0 * ov / static_cast<double>(a.size() + b.size());
}

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    char32_t cp = c;
    if ((c >> 5) == 0x6) {
      extra = 1, cp = c & 0x1F;
    } else if ((c >> 4) == 0xE) {
      extra = 2, cp = c & 0x0F;
    } else if ((c >> 3) == 0x1E) {
      extra = 3, cp = c & 0x07;
    }
    if (i + extra >= s.size()) extra = 0, cp = c;  // truncated sequence: keep the lead byte
    for (std::size_t k = 1; k <= extra; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += 1 + extra;
  }
  return out;
}

using NgramTable = std::vector<std::vector<std::u32string>>;  // [order-1] -> sorted n-grams

NgramTable ngram_table(std::string_view s, int max_order) {
  const auto cps = decode_utf8(s);
  NgramTable table(static_cast<std::size_t>(max_order));
  for (int n = 1; n <= max_order; ++n) {
    auto& grams = table[static_cast<std::size_t>(n - 1)];
    const auto order = static_cast<std::size_t>(n);
    if (cps.size() >= order) {
      for (std::size_t i = 0; i + order <= cps.size(); ++i) grams.push_back(cps.substr(i, order));
    }
    std::sort(grams.begin(), grams.end());
  }
  return table;
}

double ngram_f_from_tables(const NgramTable& hyp, const NgramTable& ref, double beta) {
  double sum = 0.0;
  int orders = 0;
  const double b2 = beta * beta;
  for (std::size_t k = 0; k < hyp.size(); ++k) {
    const auto& h = hyp[k];
    const auto& r = ref[k];
    if (h.empty() && r.empty()) continue;
    ++orders;
    if (h.empty() || r.empty()) continue;
    const auto ov = static_cast<double>(overlap(h, r));
    if (ov == 0.0) continue;
    const double p = ov / static_cast<double>(h.size());
    const double rc = ov / static_cast<double>(r.size());
    sum += (1.0 + b2) * p * rc / (b2 * p + rc);
  }
  return orders == 0 ? 1.0 : sum / orders;
}

void check_ngram_params(int n, double beta) {
  if (n < 1 || n > 10) throw ConfigError("char n-gram order must lie in [1, 10]");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
}

// --- little-endian float32 payloads ---

void write_f32le(std::ostream& out, std::span<const float> values) {
  std::string bytes(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<float> decode_f32le(const std::string& bytes, std::size_t count) {
  if (bytes.size() != count * 4) {
    throw DataError("payload length mismatch: expected " + std::to_string(count * 4) + " bytes, found " +
                    std::to_string(bytes.size()));
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b)
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + static_cast<std::size_t>(b)])) << (8 * b);
    values[i] = std::bit_cast<float>(bits);
  }
  return values;
}

json read_meta(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError("malformed metadata " + path.string() + ": " + e.what());
  }
}

std::size_t meta_dim(const json& meta, const char* key, const std::filesystem::path& path) {
  if (!meta.contains(key) || !meta[key].is_number_integer() || meta[key].get<std::int64_t>() <= 0)
    throw DataError(path.string() + ": field '" + key + "' must be a positive integer");
  return meta[key].get<std::size_t>();
}

void check_layout(const json& meta, const std::filesystem::path& path) {
  if (meta.value("dtype", "") != "f32le") throw DataError(path.string() + ": dtype must be f32le");
  if (meta.value("order", "") != "row-major") throw DataError(path.string() + ": order must be row-major");
}

// Maps "<base>", "<base>.umat.json" or "<base>.umat.bin" to "<base>".
std::filesystem::path strip_suffix(const std::filesystem::path& path, std::string_view stem) {
  const std::string s = path.string();
  for (const std::string& ext : {std::string(stem) + ".json", std::string(stem) + ".bin"}) {
    if (s.size() > ext.size() && s.compare(s.size() - ext.size(), ext.size(), ext) == 0)
      return s.substr(0, s.size() - ext.size());
  }
  return path;
}

void write_pair(const std::filesystem::path& base, std::string_view stem, const json& meta,
                std::span<const float> values) {
  const std::string b = base.string();
  {
    std::ofstream out(b + std::string(stem) + ".bin", std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + b + std::string(stem) + ".bin");
    write_f32le(out, values);
  }
  std::ofstream out(b + std::string(stem) + ".json", std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + b + std::string(stem) + ".json");
  out << meta.dump(2) << '\n';
}

}  // namespace

// --- UtilityMatrix ---

UtilityMatrix::UtilityMatrix(std::size_t n, std::string kind)
    : n_(n), values_(n * n, 0.0f), kind_(std::move(kind)) {}

UtilityMatrix::UtilityMatrix(std::size_t n, std::vector<float> values, std::string kind)
    : n_(n), values_(std::move(values)), kind_(std::move(kind)) {
  if (n_ == 0) throw DataError("utility matrix must have n >= 1");
  if (values_.size() != n_ * n_) throw DataError("utility matrix payload does not match n");
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k]))
      throw DataError("non-finite utility at (" + std::to_string(k / n_) + ", " + std::to_string(k % n_) + ")");
  }
}

UtilityMatrix UtilityMatrix::submatrix(std::span<const std::size_t> indices) const {
  UtilityMatrix out(indices.size(), kind_);
  for (std::size_t a = 0; a < indices.size(); ++a) {
    for (std::size_t b = 0; b < indices.size(); ++b) out(a, b) = (*this)(indices[a], indices[b]);
  }
  return out;
}

bool UtilityMatrix::builtin() const {
  return kind_ == "token_f1" || kind_.rfind("char_ngram_f", 0) == 0;
}

double UtilityMatrix::max_asymmetry() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j)
      worst = std::max(worst, std::abs(static_cast<double>((*this)(i, j)) - (*this)(j, i)));
  }
  return worst;
}

// --- EmbeddingSet ---

EmbeddingSet::EmbeddingSet(std::size_t n, std::size_t d, std::vector<float> vectors, bool normalized)
    : n_(n), d_(d), vectors_(std::move(vectors)), normalized_(normalized) {
  if (n_ == 0 || d_ == 0) throw DataError("embedding set must have n >= 1 and d >= 1");
  if (vectors_.size() != n_ * d_) throw DataError("embedding payload does not match n x d");
  for (std::size_t k = 0; k < vectors_.size(); ++k) {
    if (!std::isfinite(vectors_[k])) throw DataError("non-finite embedding value in row " + std::to_string(k / d_));
  }
  if (normalized_) {
    for (std::size_t i = 0; i < n_; ++i) {
      double sq = 0.0;
      for (float v : row(i)) sq += static_cast<double>(v) * v;
      if (std::abs(std::sqrt(sq) - 1.0) > 1e-5)
        throw DataError("embedding row " + std::to_string(i) + " is flagged normalized but has norm " +
                        std::to_string(std::sqrt(sq)));
    }
  }
}

EmbeddingSet EmbeddingSet::normalize() const {
  std::vector<float> out(vectors_.size());
  for (std::size_t i = 0; i < n_; ++i) {
    double sq = 0.0;
    for (float v : row(i)) sq += static_cast<double>(v) * v;
    if (sq == 0.0) throw DataError("zero-norm row " + std::to_string(i));
    const double norm = std::sqrt(sq);
    for (std::size_t k = 0; k < d_; ++k) out[i * d_ + k] = static_cast<float>(vectors_[i * d_ + k] / norm);
  }
  return EmbeddingSet(n_, d_, std::move(out), true);
}

// --- backends ---

double token_f1(std::string_view a, std::string_view b) { return f1_from_tokens(tokenize(a), tokenize(b)); }

double char_ngram_f(std::string_view a, std::string_view b, int n, double beta) {
  check_ngram_params(n, beta);
  return ngram_f_from_tables(ngram_table(a, n), ngram_table(b, n), beta);
}

UtilityBackend UtilityBackend::parse(std::string_view name) {
  UtilityBackend b;
  if (name == "token-f1" || name == "token_f1") {
    b.kind = Kind::token_f1;
  } else if (name == "char-ngram-f" || name == "char_ngram_f") {
    b.kind = Kind::char_ngram_f;
  } else {
    throw ConfigError("unknown utility backend '" + std::string(name) + "'");
  }
  return b;
}

std::string UtilityBackend::kind_tag() const {
  if (kind == Kind::token_f1) return "token_f1";
  std::ostringstream s;
  s << "char_ngram_f(n=" << ngram_order << ",beta=" << beta << ")";
  return s.str();
}

double UtilityBackend::operator()(std::string_view hypothesis, std::string_view reference) const {
  return kind == Kind::token_f1 ? token_f1(hypothesis, reference)
                                : char_ngram_f(hypothesis, reference, ngram_order, beta);
}

UtilityMatrix build_utility_matrix(const OutcomeSpace& space, const UtilityBackend& backend, Exec exec) {
  if (backend.kind == UtilityBackend::Kind::char_ngram_f) check_ngram_params(backend.ngram_order, backend.beta);
  const std::size_t n = space.candidates.size();
  if (n == 0) throw DataError("space " + space.id + ": no candidates");
  UtilityMatrix m(n, backend.kind_tag());

  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j)
        m(i, j) = static_cast<float>(backend(space.candidates[i].text, space.candidates[j].text));
    }
    return m;
  }

  const auto sn = static_cast<std::ptrdiff_t>(n);
  if (backend.kind == UtilityBackend::Kind::token_f1) {
    std::vector<std::vector<std::string>> tokens(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < sn; ++i) tokens[static_cast<std::size_t>(i)] = tokenize(space.candidates[static_cast<std::size_t>(i)].text);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < sn; ++i) {
      const auto r = static_cast<std::size_t>(i);
      for (std::size_t j = 0; j < n; ++j) m(r, j) = static_cast<float>(f1_from_tokens(tokens[r], tokens[j]));
    }
  } else {
    std::vector<NgramTable> tables(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < sn; ++i)
      tables[static_cast<std::size_t>(i)] = ngram_table(space.candidates[static_cast<std::size_t>(i)].text, backend.ngram_order);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < sn; ++i) {
      const auto r = static_cast<std::size_t>(i);
      for (std::size_t j = 0; j < n; ++j)
        m(r, j) = static_cast<float>(ngram_f_from_tables(tables[r], tables[j], backend.beta));
    }
  }
  return m;
}

// --- file IO ---

void save_matrix(const UtilityMatrix& m, const std::filesystem::path& base) {
  const json meta = {{"n", m.n()}, {"dtype", "f32le"}, {"order", "row-major"}, {"kind", m.kind()}};
  write_pair(strip_suffix(base, ".umat"), ".umat", meta, m.values());
}

UtilityMatrix load_matrix(const std::filesystem::path& path) {
  const std::string base = strip_suffix(path, ".umat").string();
  const std::filesystem::path meta_path = base + ".umat.json";
  const json meta = read_meta(meta_path);
  check_layout(meta, meta_path);
  const std::size_t n = meta_dim(meta, "n", meta_path);
  if (!meta.contains("kind") || !meta["kind"].is_string()) throw DataError(meta_path.string() + ": missing string field 'kind'");
  auto values = decode_f32le(read_file(base + ".umat.bin"), n * n);
  return UtilityMatrix(n, std::move(values), meta["kind"].get<std::string>());
}

void save_embeddings(const EmbeddingSet& e, const std::filesystem::path& base) {
  const json meta = {{"n", e.n()},          {"d", e.d()},
                     {"dtype", "f32le"},    {"order", "row-major"},
                     {"normalized", e.normalized()}};
  write_pair(strip_suffix(base, ".emb"), ".emb", meta, e.values());
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, bool normalize) {
  const std::string base = strip_suffix(path, ".emb").string();
  const std::filesystem::path meta_path = base + ".emb.json";
  const json meta = read_meta(meta_path);
  check_layout(meta, meta_path);
  const std::size_t n = meta_dim(meta, "n", meta_path);
  const std::size_t d = meta_dim(meta, "d", meta_path);
  const bool normalized = meta.value("normalized", false);
  auto values = decode_f32le(read_file(base + ".emb.bin"), n * d);
  EmbeddingSet e(n, d, std::move(values), normalized);
  return normalize && !normalized ? e.normalize() : e;
}

}  // namespace smbr
