#include "smbr/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "smbr/error.hpp"

namespace smbr {

namespace {

void check_weights(const UtilityMatrix& m, std::span<const double> weights, bool exclude_self) {
  if (weights.size() != m.n())
    throw ConfigError("weights length " + std::to_string(weights.size()) + " does not match n = " + std::to_string(m.n()));
  bool any = false;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("weights must be finite and non-negative");
    any = any || w > 0.0;
  }
  if (!any) throw ConfigError("all weights are zero");
  if (exclude_self && m.n() == 1) throw ConfigError("exclude_self needs at least 2 candidates");
}

// Weighted mean utility of hypothesis h over the reference indices `refs`.
double row_score(const UtilityMatrix& m, std::span<const double> weights, std::size_t h,
                 std::span<const std::size_t> refs, bool exclude_self, const PairMask* mask) {
  double num = 0.0;
  double den = 0.0;
  const std::size_t n = m.n();
  for (std::size_t j : refs) {
    if (exclude_self && j == h) continue;
    if (mask && !(*mask)[h * n + j]) continue;
    num += weights[j] * static_cast<double>(m(h, j));
    den += weights[j];
  }
  return den > 0.0 ? num / den : 0.0;
}

std::vector<double> restricted_scores(const UtilityMatrix& m, std::span<const double> weights,
                                      std::span<const std::size_t> members, bool exclude_self, const PairMask* mask,
                                      Exec exec) {
  std::vector<double> scores(members.size());
  const auto count = static_cast<std::ptrdiff_t>(members.size());
  if (exec == Exec::serial) {
    for (std::ptrdiff_t a = 0; a < count; ++a) {
      const auto k = static_cast<std::size_t>(a);
      scores[k] = row_score(m, weights, members[k], members, exclude_self, mask);
    }
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t a = 0; a < count; ++a) {
      const auto k = static_cast<std::size_t>(a);
      scores[k] = row_score(m, weights, members[k], members, exclude_self, mask);
    }
  }
  return scores;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

MbrResult finish(std::vector<std::size_t> support, std::vector<double> scores, std::string method, bool exclude_self) {
  MbrResult r;
  r.ranking = rank_by_score(support, scores);
  r.selected = r.ranking.front();
  r.support = std::move(support);
  r.scores = std::move(scores);
  r.method = std::move(method);
  r.exclude_self = exclude_self;
  return r;
}

std::string fmt_real(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

double MbrResult::score_of(std::size_t candidate) const {
  const auto it = std::lower_bound(support.begin(), support.end(), candidate);
  if (it == support.end() || *it != candidate)
    throw std::out_of_range("candidate " + std::to_string(candidate) + " was not scored by " + method);
  return scores[static_cast<std::size_t>(it - support.begin())];
}

std::vector<double> expected_utilities(const UtilityMatrix& m, std::span<const double> weights, bool exclude_self,
                                       const PairMask* mask, Exec exec) {
  check_weights(m, weights, exclude_self);
  if (mask && mask->size() != m.n() * m.n()) throw ConfigError("pair mask does not match the matrix");
  const auto idx = all_indices(m.n());
  return restricted_scores(m, weights, idx, exclude_self, mask, exec);
}

std::vector<std::size_t> rank_by_score(std::span<const std::size_t> candidates, std::span<const double> scores) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return candidates[a] < candidates[b];
  });
  std::vector<std::size_t> ranking;
  ranking.reserve(order.size());
  for (auto k : order) ranking.push_back(candidates[k]);
  return ranking;
}

MbrResult mbr_select(const UtilityMatrix& m, std::span<const double> weights, bool exclude_self, Exec exec) {
  auto scores = expected_utilities(m, weights, exclude_self, nullptr, exec);
  return finish(all_indices(m.n()), std::move(scores), "standard", exclude_self);
}

// --- utility cut-off ---

std::string_view to_string(CutoffMode mode) {
  return mode == CutoffMode::absolute ? "absolute" : "deviation_from_max";
}

CutoffMode parse_cutoff_mode(std::string_view s) {
  if (s == "absolute") return CutoffMode::absolute;
  if (s == "deviation_from_max" || s == "deviation-from-max" || s == "deviation") return CutoffMode::deviation_from_max;
  throw ConfigError("unknown cut-off mode '" + std::string(s) + "'");
}

CutoffDelta CutoffDelta::parse(std::string_view s) {
  if (s == "drop") return dropped();
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(s), &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument("trailing");
    return constant(v);
  } catch (const std::exception&) {
    throw ConfigError("delta must be a number or 'drop', got '" + std::string(s) + "'");
  }
}

std::string CutoffDelta::tag() const { return drop ? "drop" : fmt_real(value); }

double default_cutoff_tau(std::string_view kind) {
  std::string lower(kind);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower.find("bleurt") != std::string::npos ? kBleurtCutoff : kBertScoreCutoff;
}

CutoffMatrix cutoff_transform(const UtilityMatrix& m, const CutoffParams& params) {
  const std::size_t n = m.n();
  double threshold = params.tau;
  if (params.mode == CutoffMode::deviation_from_max) {
    double max_off = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) max_off = std::max(max_off, static_cast<double>(m(i, j)));
      }
    }
    if (n == 1) max_off = m(0, 0);
    threshold = max_off - params.tau;
  }

  const auto replacement = static_cast<float>(params.delta.drop ? 0.0 : params.delta.value);
  CutoffMatrix out{UtilityMatrix(n, m.kind()), {}, threshold};
  if (params.delta.drop) out.kept.assign(n * n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const float v = m(i, j);
      const bool keep = i != j && static_cast<double>(v) >= threshold;
      out.matrix(i, j) = keep ? v : replacement;
      if (params.delta.drop && !keep) out.kept[i * n + j] = 0;
    }
  }
  out.matrix.set_kind("transformed:cutoff(tau=" + fmt_real(params.tau) + ",delta=" + params.delta.tag() +
                      ",mode=" + std::string(to_string(params.mode)) + ",base=" + m.kind() + ")");
  return out;
}

MbrResult cutoff_mbr(const UtilityMatrix& m, const CutoffParams& params, std::span<const double> weights,
                     bool exclude_self, Exec exec) {
  const auto cut = cutoff_transform(m, params);
  const PairMask* mask = cut.kept.empty() ? nullptr : &cut.kept;
  auto scores = expected_utilities(cut.matrix, weights, exclude_self, mask, exec);
  auto r = finish(all_indices(m.n()), std::move(scores), "cutoff", exclude_self);
  r.diagnostics["threshold"] = fmt_real(cut.threshold);
  r.diagnostics["delta"] = params.delta.tag();
  r.diagnostics["mode"] = std::string(to_string(params.mode));
  return r;
}

// --- cluster MBR ---

MbrResult cluster_mbr(const UtilityMatrix& m, const ClusterAssignment& assignment, std::span<const double> weights,
                      bool exclude_self) {
  if (assignment.labels.empty() || assignment.k == 0) throw ConfigError("empty cluster assignment");
  if (assignment.n() != m.n())
    throw ConfigError("cluster assignment covers " + std::to_string(assignment.n()) + " candidates, matrix has " +
                      std::to_string(m.n()));
  check_weights(m, weights, false);

  std::vector<std::vector<std::size_t>> members(assignment.k);
  for (std::size_t i = 0; i < assignment.n(); ++i) {
    if (assignment.labels[i] >= assignment.k) throw ConfigError("cluster label out of range");
    members[assignment.labels[i]].push_back(i);
  }
  std::vector<double> mass(assignment.k, 0.0);
  for (std::size_t c = 0; c < assignment.k; ++c) {
    if (members[c].empty()) throw ConfigError("cluster " + std::to_string(c) + " is empty");
    for (auto i : members[c]) mass[c] += weights[i];
  }

  std::vector<std::size_t> cluster_order(assignment.k);
  std::iota(cluster_order.begin(), cluster_order.end(), 0);
  std::sort(cluster_order.begin(), cluster_order.end(), [&](std::size_t a, std::size_t b) {
    if (mass[a] != mass[b]) return mass[a] > mass[b];
    return members[a].front() < members[b].front();
  });

  std::vector<double> scores(m.n(), 0.0);
  std::vector<std::size_t> ranking;
  ranking.reserve(m.n());
  for (auto c : cluster_order) {
    const auto within = restricted_scores(m, weights, members[c], exclude_self, nullptr, Exec::serial);
    for (std::size_t k = 0; k < members[c].size(); ++k) scores[members[c][k]] = within[k];
    const auto order = rank_by_score(members[c], within);
    ranking.insert(ranking.end(), order.begin(), order.end());
  }

  MbrResult r;
  r.selected = ranking.front();
  r.ranking = std::move(ranking);
  r.support = all_indices(m.n());
  r.scores = std::move(scores);
  r.method = "cluster";
  r.exclude_self = exclude_self;
  r.diagnostics["k"] = std::to_string(assignment.k);
  r.diagnostics["dominant_cluster"] = std::to_string(cluster_order.front());
  r.diagnostics["dominant_size"] = std::to_string(members[cluster_order.front()].size());
  r.diagnostics["cluster_source"] = assignment.source == ClusterAssignment::Source::gold ? "gold" : "kmeans";
  std::string sizes;
  for (std::size_t c = 0; c < assignment.k; ++c) sizes += (c ? "," : "") + std::to_string(members[c].size());
  r.diagnostics["cluster_sizes"] = sizes;
  return r;
}

// --- structure embeddings ---

UtilityMatrix embedding_weighted_matrix(const UtilityMatrix& m, const EmbeddingSet& e,
                                        std::optional<double> cos_threshold) {
  if (e.n() != m.n())
    throw ConfigError("embeddings cover " + std::to_string(e.n()) + " candidates, matrix has " + std::to_string(m.n()));
  const std::size_t n = m.n();
  std::vector<double> sq(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (float v : e.row(i)) sq[i] += static_cast<double>(v) * v;
    if (sq[i] == 0.0) throw DataError("zero-norm row " + std::to_string(i));
  }
  UtilityMatrix out(n, "");
  for (std::size_t i = 0; i < n; ++i) {
    const auto ri = e.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto rj = e.row(j);
      double dot = 0.0;
      for (std::size_t k = 0; k < e.d(); ++k) dot += static_cast<double>(ri[k]) * rj[k];
      // sqrt(x * x) == x, so identical rows give a cosine of exactly 1.
      const double cos = std::clamp(dot / std::sqrt(sq[i] * sq[j]), -1.0, 1.0);
      double sim = (cos + 1.0) / 2.0;
      if (cos_threshold && sim < *cos_threshold) sim = 0.0;
      out(i, j) = static_cast<float>(static_cast<double>(m(i, j)) * sim);
    }
  }
  out.set_kind("transformed:embed(threshold=" + (cos_threshold ? fmt_real(*cos_threshold) : std::string("none")) +
               ",base=" + m.kind() + ")");
  return out;
}

MbrResult embedding_mbr(const UtilityMatrix& m, const EmbeddingSet& e, std::optional<double> cos_threshold,
                        std::span<const double> weights, bool exclude_self, Exec exec) {
  const auto weighted = embedding_weighted_matrix(m, e, cos_threshold);
  auto scores = expected_utilities(weighted, weights, exclude_self, nullptr, exec);
  auto r = finish(all_indices(m.n()), std::move(scores), "embed", exclude_self);
  r.diagnostics["cos_threshold"] = cos_threshold ? fmt_real(*cos_threshold) : "none";
  return r;
}

// --- structure-conditional MBR ---

MbrResult conditional_mbr(const UtilityMatrix& m, std::span<const std::string> labels, std::string_view s,
                          std::span<const double> weights, bool exclude_self) {
  if (labels.size() != m.n()) throw ConfigError("labels do not match the matrix");
  check_weights(m, weights, false);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == s) members.push_back(i);
  }
  if (members.empty()) throw ConfigError("unknown label '" + std::string(s) + "'");
  if (exclude_self && members.size() < 2)
    throw ConfigError("cluster '" + std::string(s) + "' has a single member; exclude_self needs at least 2");
  auto scores = restricted_scores(m, weights, members, exclude_self, nullptr, Exec::serial);
  auto r = finish(std::move(members), std::move(scores), "conditional", exclude_self);
  r.diagnostics["structure"] = std::string(s);
  return r;
}

// --- continuous demonstration ---

void MixtureSpec::validate() const {
  for (std::size_t c = 0; c < 2; ++c) {
    if (!(weights[c] > 0.0)) throw ConfigError("mixture weights must be positive");
    if (!(stds[c] > 0.0)) throw ConfigError("mixture standard deviations must be positive");
    if (!std::isfinite(means[c])) throw ConfigError("mixture means must be finite");
  }
  if (std::abs(weights[0] + weights[1] - 1.0) > 1e-12) throw ConfigError("mixture weights must sum to 1");
}

double MixtureSpec::density(double y) const {
  double p = 0.0;
  for (std::size_t c = 0; c < 2; ++c) {
    const double z = (y - means[c]) / stds[c];
    p += weights[c] * std::exp(-0.5 * z * z) / (stds[c] * std::sqrt(2.0 * std::numbers::pi));
  }
  return p;
}

ContinuousUtility parse_continuous_utility(std::string_view s) {
  if (s == "neg-squared-error" || s == "neg_squared_error") return ContinuousUtility::neg_squared_error;
  if (s == "rbf") return ContinuousUtility::rbf;
  throw ConfigError("unknown continuous utility '" + std::string(s) + "'");
}

Grid Grid::covering(const MixtureSpec& mix, std::size_t steps) {
  const double lo = std::min(mix.means[0] - 5.0 * mix.stds[0], mix.means[1] - 5.0 * mix.stds[1]);
  const double hi = std::max(mix.means[0] + 5.0 * mix.stds[0], mix.means[1] + 5.0 * mix.stds[1]);
  return {lo, hi, steps};
}

double continuous_expected_utility(const MixtureSpec& mix, ContinuousUtility kind, double bandwidth, double h) {
  double total = 0.0;
  for (std::size_t c = 0; c < 2; ++c) {
    const double d = h - mix.means[c];
    const double var = mix.stds[c] * mix.stds[c];
    if (kind == ContinuousUtility::neg_squared_error) {
      total -= mix.weights[c] * (d * d + var);
    } else {
      // Gaussian kernel against a Gaussian: the variances add.
      const double s2 = bandwidth * bandwidth + var;
      total += mix.weights[c] * bandwidth / std::sqrt(s2) * std::exp(-d * d / (2.0 * s2));
    }
  }
  return total;
}

ContinuousDemo demo_continuous(const MixtureSpec& mix, ContinuousUtility kind, double bandwidth, const Grid& grid) {
  mix.validate();
  if (!(bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
  if (grid.steps < 1000 || !(grid.hi > grid.lo) || !std::isfinite(grid.lo) || !std::isfinite(grid.hi))
    throw ConfigError("degenerate grid: need hi > lo and at least 1000 steps");
  for (std::size_t c = 0; c < 2; ++c) {
    if (grid.lo > mix.means[c] - 4.0 * mix.stds[c] || grid.hi < mix.means[c] + 4.0 * mix.stds[c])
      throw ConfigError("grid must cover both means +- 4 standard deviations");
  }

  ContinuousDemo demo;
  demo.curve.reserve(grid.steps);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.steps; ++i) {
    const double h = grid.point(i);
    const double v = continuous_expected_utility(mix, kind, bandwidth, h);
    demo.curve.emplace_back(h, v);
    best = std::max(best, v);
  }
  const double tol = 1e-12 * std::max(1.0, std::abs(best));
  for (std::size_t i = 0; i < grid.steps; ++i) {
    if (demo.curve[i].second >= best - tol) {
      demo.optimum_index = i;
      demo.optimum = demo.curve[i].first;
      break;
    }
  }
  return demo;
}

}  // namespace smbr
