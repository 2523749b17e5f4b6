#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smbr/corpus.hpp"
#include "smbr/exec.hpp"

namespace smbr {

/// Dense n x n table of u(h_i, h_j), row = hypothesis, column = reference.
///
/// Values are held as float, matching the on-disk f32le payload, so an
/// in-memory matrix and its saved form are always bitwise equal.
class UtilityMatrix {
 public:
  UtilityMatrix() = default;
  UtilityMatrix(std::size_t n, std::string kind);
  UtilityMatrix(std::size_t n, std::vector<float> values, std::string kind);

  std::size_t n() const { return n_; }
  const std::string& kind() const { return kind_; }
  void set_kind(std::string kind) { kind_ = std::move(kind); }

  float operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  float& operator()(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }

  std::span<const float> row(std::size_t i) const { return {values_.data() + i * n_, n_}; }
  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }

  /// Principal submatrix on the given indices (in the given order).
  UtilityMatrix submatrix(std::span<const std::size_t> indices) const;
  bool builtin() const;
  double max_asymmetry() const;

  friend bool operator==(const UtilityMatrix&, const UtilityMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<float> values_;
  std::string kind_;
};

/// n x d structure-sensitive vectors, one row per candidate.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  EmbeddingSet(std::size_t n, std::size_t d, std::vector<float> vectors, bool normalized = false);

  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }
  bool normalized() const { return normalized_; }

  std::span<const float> row(std::size_t i) const { return {vectors_.data() + i * d_, d_}; }
  std::span<const float> values() const { return vectors_; }

  /// Copy with each row rescaled to unit Euclidean norm; throws DataError
  /// naming the first zero-norm row.
  EmbeddingSet normalize() const;

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<float> vectors_;
  bool normalized_ = false;
};

/// F1 over multisets of lowercased, whitespace-delimited tokens.
double token_f1(std::string_view a, std::string_view b);

/// Mean over orders 1..n of the F_beta score on character n-gram multisets
/// (UTF-8 code points). `a` is the hypothesis, `b` the reference; beta > 1
/// weights recall. Orders where neither side has an n-gram are skipped.
double char_ngram_f(std::string_view a, std::string_view b, int n = 6, double beta = 1.0);

struct UtilityBackend {
  enum class Kind { token_f1, char_ngram_f };
  Kind kind = Kind::token_f1;
  int ngram_order = 6;
  double beta = 1.0;

  /// Accepts "token-f1" / "token_f1" and "char-ngram-f" / "char_ngram_f";
  /// throws ConfigError otherwise.
  static UtilityBackend parse(std::string_view name);
  std::string kind_tag() const;
  double operator()(std::string_view hypothesis, std::string_view reference) const;
};

/// values[i][j] = backend(text_i, text_j). The parallel path tokenizes once
/// per candidate and fills rows concurrently; the serial path is a plain
/// double loop over the backend. Results are bitwise identical.
UtilityMatrix build_utility_matrix(const OutcomeSpace& space, const UtilityBackend& backend,
                                   Exec exec = Exec::parallel);

/// Writes `<base>.umat.json` and `<base>.umat.bin`.
void save_matrix(const UtilityMatrix& m, const std::filesystem::path& base);
/// Accepts the base path or either of the two file names.
UtilityMatrix load_matrix(const std::filesystem::path& path);

/// Writes `<base>.emb.json` and `<base>.emb.bin`.
void save_embeddings(const EmbeddingSet& e, const std::filesystem::path& base);
EmbeddingSet load_embeddings(const std::filesystem::path& path, bool normalize = false);

}  // namespace smbr
