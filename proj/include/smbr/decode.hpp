#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smbr/clustering.hpp"
#include "smbr/corpus.hpp"
#include "smbr/engine.hpp"
#include "smbr/utility.hpp"

namespace smbr {

enum class Method { standard, cutoff, cluster, embed };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

/// Everything needed to run one selection method on an outcome space.
struct MethodConfig {
  Method method = Method::standard;
  std::optional<bool> exclude_self;  // unset: per-method default
  CutoffParams cutoff;
  std::optional<double> cos_threshold = kCosineThreshold;
  bool gold_clusters = false;  // cluster method: gold labels instead of k-means
  SelectKParams clustering;

  /// Standard MBR keeps self-comparisons; the structure-aware methods drop them.
  bool effective_exclude_self() const { return exclude_self.value_or(method != Method::standard); }
  bool needs_embeddings() const {
    return method == Method::embed || (method == Method::cluster && !gold_clusters);
  }
  std::string describe() const;
};

/// Clusters for the cluster method: gold labels, or select_k on unit-normalized
/// embeddings with k_max clamped to n - 1.
ClusterAssignment assign_clusters(const OutcomeSpace& space, const EmbeddingSet* embeddings, const MethodConfig& cfg);

/// Runs the configured method. Embeddings are required by needs_embeddings().
MbrResult decode_space(const OutcomeSpace& space, const UtilityMatrix& base, const EmbeddingSet* embeddings,
                       const MethodConfig& cfg);

/// One result per space, in corpus order; spaces are decoded in parallel.
std::vector<MbrResult> decode_corpus(const Corpus& corpus, std::span<const UtilityMatrix> matrices,
                                     std::span<const EmbeddingSet> embeddings, const MethodConfig& cfg);

}  // namespace smbr
