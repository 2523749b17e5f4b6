#include "smbr/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "smbr/error.hpp"
#include "smbr/random.hpp"

namespace smbr {

namespace {

double sq_dist(std::span<const float> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - b[k];
    s += d * d;
  }
  return s;
}

double point_dist(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    s += d * d;
  }
  return std::sqrt(s);
}

using Centroids = std::vector<std::vector<double>>;

Centroids centroids_of(const EmbeddingSet& e, const std::vector<std::size_t>& labels, std::size_t k) {
  Centroids c(k, std::vector<double>(e.d(), 0.0));
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < e.n(); ++i) {
    const auto row = e.row(i);
    auto& ci = c[labels[i]];
    for (std::size_t t = 0; t < e.d(); ++t) ci[t] += row[t];
    ++count[labels[i]];
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (count[j] == 0) continue;
    for (auto& v : c[j]) v /= static_cast<double>(count[j]);
  }
  return c;
}

double wcss_of(const EmbeddingSet& e, const std::vector<std::size_t>& labels, const Centroids& c) {
  double total = 0.0;
  for (std::size_t i = 0; i < e.n(); ++i) total += sq_dist(e.row(i), c[labels[i]]);
  return total;
}

Centroids seed_plus_plus(const EmbeddingSet& e, std::size_t k, Rng& rng) {
  const std::size_t n = e.n();
  Centroids centers;
  auto add = [&](std::size_t i) {
    const auto row = e.row(i);
    centers.emplace_back(row.begin(), row.end());
  };
  add(static_cast<std::size_t>(rng.index(n)));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(e.row(i), centers.back()));
      total += d2[i];
    }
    if (total <= 0.0) {
      add(static_cast<std::size_t>(rng.index(n)));
      continue;
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      pick = i;
      acc += d2[i];
      if (acc > target) break;
    }
    add(pick);
  }
  return centers;
}

// Gives every empty cluster the point farthest from its current centroid,
// taken from a cluster with more than one member.
void repair_empty(const EmbeddingSet& e, std::vector<std::size_t>& labels, Centroids& c, std::size_t k) {
  for (;;) {
    std::vector<std::size_t> count(k, 0);
    for (auto l : labels) ++count[l];
    const auto empty = std::find(count.begin(), count.end(), 0);
    if (empty == count.end()) return;
    std::size_t far = e.n();
    double far_d = -1.0;
    for (std::size_t i = 0; i < e.n(); ++i) {
      if (count[labels[i]] < 2) continue;
      const double d = sq_dist(e.row(i), c[labels[i]]);
      if (d > far_d) far_d = d, far = i;
    }
    labels[far] = static_cast<std::size_t>(empty - count.begin());
    c = centroids_of(e, labels, k);
  }
}

struct Run {
  std::vector<std::size_t> labels;
  double wcss = 0.0;
  std::vector<double> trace;
};

Run lloyd(const EmbeddingSet& e, std::size_t k, Rng rng, std::size_t max_iters) {
  const std::size_t n = e.n();
  Centroids c = seed_plus_plus(e, k, rng);
  Run run;
  run.labels.assign(n, 0);
  for (std::size_t it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = e.row(i);
      std::size_t best = run.labels[i];
      double best_d = it == 0 ? std::numeric_limits<double>::infinity() : sq_dist(row, c[best]);
      for (std::size_t j = 0; j < k; ++j) {
        const double d = sq_dist(row, c[j]);
        if (d < best_d) best_d = d, best = j;
      }
      if (it == 0 || best != run.labels[i]) changed = true;
      run.labels[i] = best;
    }
    if (!changed) break;
    c = centroids_of(e, run.labels, k);
    repair_empty(e, run.labels, c, k);
    run.trace.push_back(wcss_of(e, run.labels, c));
  }
  run.wcss = wcss_of(e, run.labels, c);
  return run;
}

std::uint64_t k_stream_seed(std::uint64_t seed, std::size_t k) {
  return seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(k) + 1));
}

}  // namespace

ClusterAssignment ClusterAssignment::from_labels(std::vector<std::size_t> labels, std::size_t k, Source source) {
  ClusterAssignment a;
  if (labels.empty() || k == 0) throw ConfigError("empty cluster assignment");
  a.sizes.assign(k, 0);
  for (auto l : labels) {
    if (l >= k) throw ConfigError("cluster label " + std::to_string(l) + " out of range for k = " + std::to_string(k));
    ++a.sizes[l];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (a.sizes[c] == 0) throw ConfigError("cluster " + std::to_string(c) + " is empty");
  }
  a.labels = std::move(labels);
  a.k = k;
  a.source = source;
  return a;
}

ClusterAssignment ClusterAssignment::single(std::size_t n, Source source) {
  return from_labels(std::vector<std::size_t>(n, 0), 1, source);
}

std::vector<std::size_t> ClusterAssignment::members(std::size_t c) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == c) out.push_back(i);
  }
  return out;
}

ClusterAssignment gold_assignment(std::span<const std::string> labels) {
  std::map<std::string, std::size_t> ids;
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    const auto [it, inserted] = ids.try_emplace(l, ids.size());
    out.push_back(it->second);
  }
  return ClusterAssignment::from_labels(std::move(out), ids.size(), ClusterAssignment::Source::gold);
}

double wcss(const EmbeddingSet& e, const ClusterAssignment& a) {
  if (a.n() != e.n()) throw ConfigError("assignment does not match embeddings");
  return wcss_of(e, a.labels, centroids_of(e, a.labels, a.k));
}

KMeansFit kmeans_fit(const EmbeddingSet& e, std::size_t k, std::uint64_t seed, std::size_t max_iters,
                     std::size_t restarts) {
  if (k == 0) throw ConfigError("k must be positive");
  if (k > e.n()) throw ConfigError("k = " + std::to_string(k) + " exceeds n = " + std::to_string(e.n()));
  if (max_iters == 0 || restarts == 0) throw ConfigError("max_iters and restarts must be positive");

  std::vector<Run> runs(restarts);
  const auto sr = static_cast<std::ptrdiff_t>(restarts);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t r = 0; r < sr; ++r)
    runs[static_cast<std::size_t>(r)] = lloyd(e, k, Rng(seed, static_cast<std::uint64_t>(r)), max_iters);

  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r) {
    if (runs[r].wcss < runs[best].wcss) best = r;
  }
  KMeansFit fit;
  fit.assignment = ClusterAssignment::from_labels(runs[best].labels, k, ClusterAssignment::Source::kmeans);
  fit.wcss = runs[best].wcss;
  fit.wcss_trace = std::move(runs[best].trace);
  fit.restart = best;
  return fit;
}

double silhouette(const EmbeddingSet& e, const ClusterAssignment& a, Exec exec) {
  if (a.k < 2) throw ConfigError("silhouette needs k >= 2");
  if (a.n() != e.n()) throw ConfigError("assignment does not match embeddings");
  const std::size_t n = e.n();
  std::vector<double> s(n, 0.0);

  auto point = [&](std::size_t i) {
    if (a.sizes[a.labels[i]] < 2) return 0.0;
    std::vector<double> sum(a.k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sum[a.labels[j]] += point_dist(e.row(i), e.row(j));
    }
    const std::size_t own = a.labels[i];
    const double intra = sum[own] / static_cast<double>(a.sizes[own] - 1);
    double inter = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < a.k; ++c) {
      if (c != own) inter = std::min(inter, sum[c] / static_cast<double>(a.sizes[c]));
    }
    const double denom = std::max(intra, inter);
    return denom > 0.0 ? (inter - intra) / denom : 0.0;
  };

  const auto sn = static_cast<std::ptrdiff_t>(n);
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) s[i] = point(i);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < sn; ++i) s[static_cast<std::size_t>(i)] = point(static_cast<std::size_t>(i));
  }
  double total = 0.0;
  for (double v : s) total += v;
  return total / static_cast<double>(n);
}

KSelection select_k_detailed(const EmbeddingSet& e, const SelectKParams& params) {
  if (params.k_min < 2 || params.k_min > params.k_max) throw ConfigError("need 2 <= k_min <= k_max");
  if (params.k_max > e.n())
    throw ConfigError("k_max = " + std::to_string(params.k_max) + " exceeds n = " + std::to_string(e.n()));

  KSelection sel;
  std::size_t best_k = 0;
  double best = -std::numeric_limits<double>::infinity();
  ClusterAssignment best_assignment;
  for (std::size_t k = params.k_min; k <= params.k_max; ++k) {
    auto a = kmeans(e, k, k_stream_seed(params.seed, k), params.max_iters, params.restarts);
    const double s = silhouette(e, a);
    sel.silhouettes.emplace_back(k, s);
    if (s > best) {
      best = s;
      best_k = k;
      best_assignment = std::move(a);
    }
  }
  sel.best_silhouette = best;
  if (best < params.silhouette_floor) {
    sel.best_k = 1;
    sel.assignment = ClusterAssignment::single(e.n());
  } else {
    sel.best_k = best_k;
    sel.assignment = std::move(best_assignment);
  }
  return sel;
}

}  // namespace smbr
