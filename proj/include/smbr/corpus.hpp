#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace smbr {

struct Candidate {
  std::string text;
  std::optional<std::string> label;  // gold structure category
  double weight = 1.0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// One context plus its candidate generations. Candidate order is the
/// canonical index order for every matrix and embedding set of this space.
struct OutcomeSpace {
  std::string id;
  std::string context;
  std::vector<Candidate> candidates;

  std::size_t size() const { return candidates.size(); }
  bool labelled() const;
  std::vector<double> weights() const;
  /// Gold labels in candidate order; throws DataError on an unlabelled space.
  std::vector<std::string> labels() const;

  friend bool operator==(const OutcomeSpace&, const OutcomeSpace&) = default;
};

struct Corpus {
  std::vector<OutcomeSpace> spaces;
  std::string provenance;

  std::size_t size() const { return spaces.size(); }
  bool labelled() const;
};

/// Throws DataError when a space breaks a data-model invariant.
void validate_space(const OutcomeSpace& space);
/// Validates every space and checks id uniqueness.
void validate_corpus(const Corpus& corpus);

Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
/// Serializes a corpus to the line-delimited format. Used by save_corpus.
std::string dump_corpus(const Corpus& corpus);
Corpus parse_corpus(const std::string& content, const std::string& provenance);

struct Split {
  Corpus train;
  Corpus validation;
  Corpus test;
};

/// Seeded partition of a corpus. Validation and test sizes are floor(f * N);
/// the remainder goes to the training split. Spaces keep corpus order within
/// each split.
Split split_corpus(const Corpus& corpus, double train_fraction, double validation_fraction,
                   double test_fraction, std::uint64_t seed);

struct SynthConfig {
  std::size_t n_spaces = 100;
  std::size_t min_clusters = 2;
  std::size_t max_clusters = 4;
  std::size_t candidates_per_cluster = 5;
  std::size_t vocab_per_cluster = 8;
  std::size_t shared_vocab = 20;
  std::size_t tokens_per_candidate = 12;
  double noise_rate = 0.05;
  double separation = 3.0;  // cross-cluster token-F1 is bounded by 1/(1+separation)
  bool include_compromise = false;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Label given to the mixed candidate added by include_compromise.
inline constexpr const char* kCompromiseLabel = "compromise";

/// Token-template generator with known cluster structure.
///
/// Each cluster owns a disjoint vocabulary and a prototype sentence. Members
/// copy the prototype and resample about half of its positions from the
/// cluster vocabulary. A token is then swapped for a shared-pool token with
/// probability 1/(1+separation) and for a unique junk token with probability
/// noise_rate, so cross-cluster overlap only ever comes from the shared pool.
/// The optional compromise candidate interleaves the prototypes of the first
/// two clusters (all clusters are the same size) and gets its own label.
Corpus generate_synthetic(const SynthConfig& config);

}  // namespace smbr
