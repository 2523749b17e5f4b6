#include "smbr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "smbr/error.hpp"

namespace smbr {

std::vector<double> fractional_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    // Positions i..j (0-based) share the mean 1-based rank.
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("spearman: length mismatch");
  if (a.size() < 2) throw ConfigError("spearman: need at least 2 observations");
  const auto ra = fractional_ranks(a);
  const auto rb = fractional_ranks(b);
  const double n = static_cast<double>(a.size());
  // Fractional ranks always sum to n(n+1)/2.
  const double mean = (n + 1.0) / 2.0;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - mean;
    const double db = rb[i] - mean;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double compensated_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  double c = 0.0;
  for (double v : values) {
    const double t = sum + v;
    c += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return (sum + c) / static_cast<double>(values.size());
}

SpaceEval evaluate_space(const OutcomeSpace& space, const UtilityMatrix& base, const MbrResult& result,
                         const EvalOptions& options) {
  if (!space.labelled()) throw DataError("space " + space.id + ": evaluation needs gold labels");
  if (base.n() != space.size()) throw DataError("space " + space.id + ": matrix does not match the space");
  const auto labels = space.labels();
  const auto weights = space.weights();

  SpaceEval ev;
  ev.id = space.id;
  ev.selected = result.selected;
  ev.selected_label = labels.at(result.selected);

  const auto size_of = [&](const std::string& s) {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), s));
  };
  if (size_of(ev.selected_label) < 2) {
    ev.singleton_miss = true;
  } else {
    const auto oracle = conditional_mbr(base, labels, ev.selected_label, weights, options.oracle_exclude_self);
    ev.oracle_selected = oracle.selected;
    ev.co_hit = oracle.selected == result.selected;
  }

  std::vector<std::string> structures;
  if (options.corc_mode == CorcMode::all_structures) {
    for (const auto& l : labels) {
      if (std::find(structures.begin(), structures.end(), l) == structures.end()) structures.push_back(l);
    }
  } else {
    structures.push_back(labels[mbr_select(base, weights, false).selected]);
  }

  std::vector<double> rhos;
  for (const auto& s : structures) {
    if (size_of(s) < 2) continue;
    ++ev.structures_scored;
    const auto cond = conditional_mbr(base, labels, s, weights, options.oracle_exclude_self);
    std::vector<double> method_scores;
    method_scores.reserve(cond.support.size());
    for (auto h : cond.support) method_scores.push_back(result.score_of(h));
    if (const auto rho = spearman(method_scores, cond.scores)) rhos.push_back(*rho);
  }
  ev.structures_defined = rhos.size();
  if (!rhos.empty()) ev.mean_rho = compensated_mean(rhos);
  return ev;
}

EvalReport aggregate(std::vector<SpaceEval> per_space, std::string method) {
  EvalReport report;
  report.method = std::move(method);
  report.n_spaces = per_space.size();
  std::vector<double> hits;
  std::vector<double> rhos;
  for (const auto& ev : per_space) {
    hits.push_back(ev.co_hit ? 1.0 : 0.0);
    if (ev.mean_rho) {
      rhos.push_back(*ev.mean_rho);
    } else {
      ++report.corc_excluded;
    }
    if (ev.singleton_miss) ++report.singleton_misses;
  }
  report.co = compensated_mean(hits);
  if (!rhos.empty()) report.corc = compensated_mean(rhos);
  report.per_space = std::move(per_space);
  return report;
}

EvalReport evaluate(const Corpus& corpus, std::span<const UtilityMatrix> matrices,
                    std::span<const EmbeddingSet> embeddings, const MethodConfig& cfg, const EvalOptions& options) {
  if (!corpus.labelled()) throw DataError("evaluation needs a fully labelled corpus");
  const auto results = decode_corpus(corpus, matrices, embeddings, cfg);
  std::vector<SpaceEval> per_space(corpus.size());
  std::vector<std::exception_ptr> errors(corpus.size());
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    const auto i = static_cast<std::size_t>(s);
    try {
      per_space[i] = evaluate_space(corpus.spaces[i], matrices[i], results[i], options);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return aggregate(std::move(per_space), cfg.describe());
}

}  // namespace smbr
