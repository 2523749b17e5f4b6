#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smbr/corpus.hpp"
#include "smbr/decode.hpp"
#include "smbr/engine.hpp"
#include "smbr/utility.hpp"

namespace smbr {

/// 1-based ranks with tied values sharing the mean of their positions.
std::vector<double> fractional_ranks(std::span<const double> v);

/// Spearman's rho as the Pearson correlation of fractional ranks.
/// Returns nullopt when either side is constant.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

/// Order-insensitive mean via Neumaier-compensated summation.
double compensated_mean(std::span<const double> values);

enum class CorcMode {
  all_structures,     // average rho over every gold structure in the space
  selected_structure  // only the structure of the standard-MBR selection
};

struct EvalOptions {
  /// Self-comparisons in the structure-conditional reference selection.
  bool oracle_exclude_self = true;
  CorcMode corc_mode = CorcMode::all_structures;
};

struct SpaceEval {
  std::string id;
  std::size_t selected = 0;
  std::string selected_label;
  std::optional<std::size_t> oracle_selected;  // unset for singleton structures
  bool co_hit = false;
  bool singleton_miss = false;  // selection sits alone in its structure
  std::optional<double> mean_rho;
  std::size_t structures_scored = 0;
  std::size_t structures_defined = 0;
};

struct EvalReport {
  double co = 0.0;
  std::optional<double> corc;  // unset when no space has a defined rho
  std::vector<SpaceEval> per_space;
  std::string method;
  std::size_t n_spaces = 0;
  std::size_t corc_excluded = 0;
  std::size_t singleton_misses = 0;
};

/// CO hit and CORC contribution of one decoded space.
///
/// The reference selection is the structure-conditional MBR solution for the
/// gold label of the method's pick, computed on the base utility. A pick whose
/// structure has a single member always counts as a miss. For CORC the
/// method's scores of each structure's members are correlated with that
/// structure's conditional scores.
SpaceEval evaluate_space(const OutcomeSpace& space, const UtilityMatrix& base, const MbrResult& result,
                         const EvalOptions& options = {});

EvalReport aggregate(std::vector<SpaceEval> per_space, std::string method);

/// Decodes every space with `cfg` and scores the results.
EvalReport evaluate(const Corpus& corpus, std::span<const UtilityMatrix> matrices,
                    std::span<const EmbeddingSet> embeddings, const MethodConfig& cfg,
                    const EvalOptions& options = {});

inline double cluster_optimality(const Corpus& corpus, std::span<const UtilityMatrix> matrices,
                                 std::span<const EmbeddingSet> embeddings, const MethodConfig& cfg,
                                 const EvalOptions& options = {}) {
  return evaluate(corpus, matrices, embeddings, cfg, options).co;
}

inline std::optional<double> corc(const Corpus& corpus, std::span<const UtilityMatrix> matrices,
                                  std::span<const EmbeddingSet> embeddings, const MethodConfig& cfg,
                                  const EvalOptions& options = {}) {
  return evaluate(corpus, matrices, embeddings, cfg, options).corc;
}

}  // namespace smbr
