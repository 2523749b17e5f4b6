#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smbr/corpus.hpp"
#include "smbr/decode.hpp"
#include "smbr/engine.hpp"
#include "smbr/metrics.hpp"
#include "smbr/utility.hpp"

namespace smbr {

/// A labelled corpus with its aligned base matrices (and embeddings, when the
/// swept method needs them).
struct LabelledSet {
  const Corpus& corpus;
  std::span<const UtilityMatrix> matrices;
  std::span<const EmbeddingSet> embeddings = {};
};

struct SweepConfig {
  std::vector<double> grid;
  std::vector<CutoffMode> modes{CutoffMode::absolute};
  std::vector<CutoffDelta> deltas{CutoffDelta::constant(0.0)};
  std::size_t top_k = 10;

  void validate() const;
};

/// `count` evenly spaced values from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, std::size_t count = 50);
/// Grid over [min, max] of the off-diagonal utilities in `matrices`.
std::vector<double> utility_grid(std::span<const UtilityMatrix> matrices, std::size_t count = 50);
/// Grid over [min, max] of the off-diagonal rescaled cosine similarities.
std::vector<double> cosine_grid(std::span<const EmbeddingSet> embeddings, std::size_t count = 50);

struct SweepSetting {
  double threshold = 0.0;
  CutoffMode mode = CutoffMode::absolute;
  CutoffDelta delta{};
};

struct SweepEntry {
  SweepSetting setting;
  double train_co = 0.0;
  std::optional<double> train_corc;
  std::optional<double> validation_co;  // set for the top_k entries only
  std::optional<double> validation_corc;
};

struct SweepResult {
  std::string method;
  std::vector<SweepEntry> trace;  // ranked by training CO (ties: grid, mode, delta order)
  std::size_t chosen = 0;         // index into trace

  const SweepEntry& chosen_entry() const { return trace.at(chosen); }
};

/// Ranks every (threshold, mode, delta) setting of the utility cut-off by
/// training CO, then picks the best validation CO among the top_k.
SweepResult sweep_cutoff(const LabelledSet& train, const LabelledSet& validation, const SweepConfig& cfg,
                         const EvalOptions& options = {});

/// The same selection over the cosine threshold of the embedding-weighted
/// method; modes and deltas are ignored.
SweepResult sweep_cosine_threshold(const LabelledSet& train, const LabelledSet& validation, const SweepConfig& cfg,
                                   const EvalOptions& options = {});

}  // namespace smbr
