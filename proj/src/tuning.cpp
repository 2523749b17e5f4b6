#include "smbr/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "smbr/error.hpp"

namespace smbr {

namespace {

void check_set(const LabelledSet& set, const char* name) {
  if (!set.corpus.labelled()) throw DataError(std::string(name) + " corpus is not fully labelled");
  if (set.matrices.size() != set.corpus.size())
    throw DataError(std::string(name) + " corpus and matrices are not aligned");
}

SweepResult run_sweep(const LabelledSet& train, const LabelledSet& validation, const std::vector<SweepSetting>& settings,
                      const SweepConfig& cfg, const EvalOptions& options, const MethodConfig& proto, bool cosine) {
  auto config_for = [&](const SweepSetting& s) {
    MethodConfig m = proto;
    if (cosine) {
      m.cos_threshold = s.threshold;
    } else {
      m.cutoff = CutoffParams{s.threshold, s.delta, s.mode};
    }
    return m;
  };
  auto eval = [&](const LabelledSet& set, const SweepSetting& s) {
    return evaluate(set.corpus, set.matrices, set.embeddings, config_for(s), options);
  };

  std::vector<SweepEntry> entries(settings.size());
  std::vector<std::exception_ptr> errors(settings.size());
  const auto count = static_cast<std::ptrdiff_t>(settings.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    const auto i = static_cast<std::size_t>(k);
    try {
      const auto report = eval(train, settings[i]);
      entries[i] = SweepEntry{settings[i], report.co, report.corc, std::nullopt, std::nullopt};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Enumeration order already encodes the tie-break (threshold, mode, delta).
  std::stable_sort(entries.begin(), entries.end(),
                   [](const SweepEntry& a, const SweepEntry& b) { return a.train_co > b.train_co; });

  const std::size_t top = std::min(cfg.top_k, entries.size());
  SweepResult result;
  result.method = std::string(to_string(proto.method));
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < top; ++i) {
    const auto report = eval(validation, entries[i].setting);
    entries[i].validation_co = report.co;
    entries[i].validation_corc = report.corc;
    if (report.co > best) {
      best = report.co;
      result.chosen = i;
    }
  }
  result.trace = std::move(entries);
  return result;
}

}  // namespace

void SweepConfig::validate() const {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ConfigError("sweep grid must be strictly increasing");
  }
  for (double g : grid) {
    if (!std::isfinite(g)) throw ConfigError("sweep grid values must be finite");
  }
  if (modes.empty() || deltas.empty()) throw ConfigError("sweep needs at least one mode and one delta");
  if (top_k == 0) throw ConfigError("top_k must be positive");
}

std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  if (count == 0) throw ConfigError("grid needs at least one value");
  if (count == 1 || hi <= lo) return {lo};
  std::vector<double> grid(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) grid[i] = lo + step * static_cast<double>(i);
  grid.back() = hi;
  return grid;
}

std::vector<double> utility_grid(std::span<const UtilityMatrix> matrices, std::size_t count) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& m : matrices) {
    for (std::size_t i = 0; i < m.n(); ++i) {
      for (std::size_t j = 0; j < m.n(); ++j) {
        if (i == j) continue;
        lo = std::min(lo, static_cast<double>(m(i, j)));
        hi = std::max(hi, static_cast<double>(m(i, j)));
      }
    }
  }
  if (!std::isfinite(lo)) throw ConfigError("no off-diagonal utilities to derive a grid from");
  return linear_grid(lo, hi, count);
}

std::vector<double> cosine_grid(std::span<const EmbeddingSet> embeddings, std::size_t count) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& raw : embeddings) {
    const EmbeddingSet e = raw.normalized() ? raw : raw.normalize();
    for (std::size_t i = 0; i < e.n(); ++i) {
      for (std::size_t j = 0; j < e.n(); ++j) {
        if (i == j) continue;
        double dot = 0.0;
        for (std::size_t k = 0; k < e.d(); ++k) dot += static_cast<double>(e.row(i)[k]) * e.row(j)[k];
        const double sim = (std::clamp(dot, -1.0, 1.0) + 1.0) / 2.0;
        lo = std::min(lo, sim);
        hi = std::max(hi, sim);
      }
    }
  }
  if (!std::isfinite(lo)) throw ConfigError("no off-diagonal similarities to derive a grid from");
  return linear_grid(lo, hi, count);
}

SweepResult sweep_cutoff(const LabelledSet& train, const LabelledSet& validation, const SweepConfig& cfg,
                         const EvalOptions& options) {
  cfg.validate();
  check_set(train, "training");
  check_set(validation, "validation");
  std::vector<SweepSetting> settings;
  for (double t : cfg.grid) {
    for (auto mode : cfg.modes) {
      for (const auto& delta : cfg.deltas) settings.push_back({t, mode, delta});
    }
  }
  MethodConfig proto;
  proto.method = Method::cutoff;
  return run_sweep(train, validation, settings, cfg, options, proto, false);
}

SweepResult sweep_cosine_threshold(const LabelledSet& train, const LabelledSet& validation, const SweepConfig& cfg,
                                   const EvalOptions& options) {
  cfg.validate();
  check_set(train, "training");
  check_set(validation, "validation");
  if (train.embeddings.size() != train.corpus.size() || validation.embeddings.size() != validation.corpus.size())
    throw DataError("cosine sweep needs embeddings aligned with both corpora");
  std::vector<SweepSetting> settings;
  for (double t : cfg.grid) settings.push_back({t, CutoffMode::absolute, CutoffDelta{}});
  MethodConfig proto;
  proto.method = Method::embed;
  return run_sweep(train, validation, settings, cfg, options, proto, true);
}

}  // namespace smbr
