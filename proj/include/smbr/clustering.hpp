#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smbr/exec.hpp"
#include "smbr/utility.hpp"

namespace smbr {

/// Candidate -> cluster labels in 0..k-1; every cluster is non-empty.
struct ClusterAssignment {
  enum class Source { kmeans, gold };

  std::vector<std::size_t> labels;
  std::size_t k = 0;
  std::vector<std::size_t> sizes;
  Source source = Source::kmeans;

  /// Builds sizes and checks that labels use every index in 0..k-1.
  static ClusterAssignment from_labels(std::vector<std::size_t> labels, std::size_t k, Source source);
  static ClusterAssignment single(std::size_t n, Source source = Source::kmeans);

  std::size_t n() const { return labels.size(); }
  /// Member indices of cluster c, ascending.
  std::vector<std::size_t> members(std::size_t c) const;

  friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;
};

/// Gold clusters from string labels; cluster ids follow first appearance.
ClusterAssignment gold_assignment(std::span<const std::string> labels);

/// Within-cluster sum of squared Euclidean distances to cluster means.
double wcss(const EmbeddingSet& e, const ClusterAssignment& a);

struct KMeansFit {
  ClusterAssignment assignment;
  double wcss = 0.0;
  std::vector<double> wcss_trace;  // after each Lloyd iteration of the winning restart
  std::size_t restart = 0;
};

/// Lloyd's k-means with k-means++ seeding on the vectors as given.
///
/// Each restart draws from its own seed stream; the lowest WCSS wins with
/// ties going to the earlier restart. An empty cluster takes the point that
/// lies farthest from its own centroid.
KMeansFit kmeans_fit(const EmbeddingSet& e, std::size_t k, std::uint64_t seed, std::size_t max_iters = 100,
                     std::size_t restarts = 8);

inline ClusterAssignment kmeans(const EmbeddingSet& e, std::size_t k, std::uint64_t seed, std::size_t max_iters = 100,
                                std::size_t restarts = 8) {
  return kmeans_fit(e, k, seed, max_iters, restarts).assignment;
}

/// Mean silhouette over all points, Euclidean distance. Singletons score 0.
double silhouette(const EmbeddingSet& e, const ClusterAssignment& a, Exec exec = Exec::parallel);

struct SelectKParams {
  std::size_t k_min = 2;
  std::size_t k_max = 6;
  double silhouette_floor = 0.15;
  std::uint64_t seed = 0;
  std::size_t max_iters = 100;
  std::size_t restarts = 8;
};

struct KSelection {
  ClusterAssignment assignment;
  std::vector<std::pair<std::size_t, double>> silhouettes;  // (k, score) for each k tried
  std::size_t best_k = 1;
  double best_silhouette = 0.0;
};

/// Silhouette sweep over k in [k_min, k_max]; the best k wins with ties to
/// the smaller k, and a best score below the floor falls back to k = 1.
KSelection select_k_detailed(const EmbeddingSet& e, const SelectKParams& params);

inline ClusterAssignment select_k(const EmbeddingSet& e, const SelectKParams& params) {
  return select_k_detailed(e, params).assignment;
}

}  // namespace smbr
