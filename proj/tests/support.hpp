#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "smbr/corpus.hpp"
#include "smbr/random.hpp"
#include "smbr/utility.hpp"

namespace testing_support {

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("smbr-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline oracle::Matrix to_oracle(const smbr::UtilityMatrix& m) {
  oracle::Matrix out(m.n(), std::vector<double>(m.n()));
  for (std::size_t i = 0; i < m.n(); ++i) {
    for (std::size_t j = 0; j < m.n(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

/// Uniform [0, 1) entries; values are float-rounded like every stored matrix.
inline smbr::UtilityMatrix random_matrix(std::size_t n, smbr::Rng& rng, bool symmetric = false) {
  smbr::UtilityMatrix m(n, "external:random");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (symmetric && j < i) {
        m(i, j) = m(j, i);
      } else {
        m(i, j) = static_cast<float>(rng.uniform());
      }
    }
  }
  return m;
}

inline smbr::OutcomeSpace labelled_space(const std::string& id, const std::vector<std::string>& labels) {
  smbr::OutcomeSpace s;
  s.id = id;
  s.context = "context " + id;
  for (std::size_t i = 0; i < labels.size(); ++i)
    s.candidates.push_back({"candidate " + std::to_string(i), labels[i], 1.0});
  return s;
}

/// Labelled spaces with clusters "a" (5), "b" (5) and one "mix" candidate.
///
/// Within-cluster utilities lie in (0.62, 0.70), a/b cross utilities in
/// [0, 0.1) and every comparison with "mix" equals one value in
/// [0.395, 0.3999). Without a cut-off "mix" wins every space; any absolute
/// threshold in (0.4, 0.62] leaves only within-cluster comparisons.
struct SeparableSet {
  smbr::Corpus corpus;
  std::vector<smbr::UtilityMatrix> matrices;
  std::vector<smbr::EmbeddingSet> embeddings;
};

inline SeparableSet separable_set(std::size_t spaces, std::uint64_t seed) {
  smbr::Rng rng(seed);
  SeparableSet out;
  std::vector<std::string> labels;
  for (int i = 0; i < 5; ++i) labels.push_back("a");
  for (int i = 0; i < 5; ++i) labels.push_back("b");
  labels.push_back("mix");
  const std::size_t n = labels.size();
  for (std::size_t s = 0; s < spaces; ++s) {
    out.corpus.spaces.push_back(labelled_space("sep-" + std::to_string(seed) + "-" + std::to_string(s), labels));
    smbr::UtilityMatrix m(n, "external:constructed");
    const float mix = static_cast<float>(rng.uniform(0.395, 0.3999));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        float v = 1.0f;
        if (i != j) {
          if (labels[i] == "mix" || labels[j] == "mix") {
            v = mix;
          } else if (labels[i] == labels[j]) {
            v = static_cast<float>(rng.uniform(0.62, 0.70));
          } else {
            v = static_cast<float>(rng.uniform(0.0, 0.1));
          }
        }
        m(i, j) = m(j, i) = v;
      }
    }
    out.matrices.push_back(std::move(m));
  }
  return out;
}

/// Cosine-separable variant: utilities are 0.9 against "mix", 0.05 across a/b
/// and in (0.28, 0.32) within a cluster. Embeddings put each cluster on one
/// direction (rescaled similarity 1 within), a/b at 0.5 and "mix" at 0.595 to
/// both.
inline SeparableSet cosine_separable_set(std::size_t spaces, std::uint64_t seed) {
  smbr::Rng rng(seed);
  SeparableSet out = separable_set(spaces, seed);
  const std::vector<float> dir_a{1.0f, 0.0f, 0.0f};
  const std::vector<float> dir_b{0.0f, 1.0f, 0.0f};
  const std::vector<float> dir_mix{0.19f, 0.19f, static_cast<float>(std::sqrt(1.0 - 2 * 0.19 * 0.19))};
  for (std::size_t s = 0; s < spaces; ++s) {
    const auto& space = out.corpus.spaces[s];
    auto& m = out.matrices[s];
    std::vector<float> vecs;
    for (std::size_t i = 0; i < space.size(); ++i) {
      const auto& li = *space.candidates[i].label;
      const auto& dir = li == "a" ? dir_a : li == "b" ? dir_b : dir_mix;
      vecs.insert(vecs.end(), dir.begin(), dir.end());
      for (std::size_t j = i + 1; j < space.size(); ++j) {
        const auto& lj = *space.candidates[j].label;
        float v;
        if (li == "mix" || lj == "mix") {
          v = 0.9f;
        } else if (li == lj) {
          v = static_cast<float>(rng.uniform(0.28, 0.32));
        } else {
          v = 0.05f;
        }
        m(i, j) = m(j, i) = v;
      }
    }
    out.embeddings.emplace_back(space.size(), 3, std::move(vecs));
  }
  return out;
}

}  // namespace testing_support
