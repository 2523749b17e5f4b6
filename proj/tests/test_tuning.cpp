#include <gtest/gtest.h>

#include "smbr/error.hpp"
#include "smbr/tuning.hpp"
#include "support.hpp"

using namespace smbr;
namespace ts = testing_support;

namespace {

void expect_same(const SweepResult& a, const SweepResult& b) {
  ASSERT_EQ(a.trace.size(), b.trace.size());
  EXPECT_EQ(a.chosen, b.chosen);
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].setting.threshold, b.trace[i].setting.threshold);
    EXPECT_EQ(a.trace[i].setting.delta, b.trace[i].setting.delta);
    EXPECT_EQ(a.trace[i].train_co, b.trace[i].train_co);
    EXPECT_EQ(a.trace[i].validation_co, b.trace[i].validation_co);
  }
}

}  // namespace

TEST(Grids, LinearAndDataDriven) {
  const auto g = linear_grid(0.0, 1.0, 5);
  EXPECT_EQ(g, (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_EQ(linear_grid(0.01, 0.99).size(), 50u);
  EXPECT_EQ(linear_grid(0.3, 0.3, 50), std::vector<double>{0.3});
  const auto set = ts::separable_set(5, 1);
  const auto u = utility_grid(set.matrices);
  EXPECT_EQ(u.size(), 50u);
  EXPECT_GE(u.front(), 0.0);
  EXPECT_LT(u.front(), 0.1);
  EXPECT_GT(u.back(), 0.62);
  EXPECT_LT(u.back(), 0.70);
  const auto cset = ts::cosine_separable_set(3, 1);
  const auto cg = cosine_grid(cset.embeddings);
  EXPECT_NEAR(cg.front(), 0.5, 1e-6);
  EXPECT_NEAR(cg.back(), 1.0, 1e-6);
}

TEST(SweepCutoff, NoOpThresholdReproducesBaseline) {
  const auto train = ts::separable_set(10, 2);
  const auto val = ts::separable_set(10, 3);
  SweepConfig cfg;
  cfg.grid = {-1.0};
  const auto r = sweep_cutoff({train.corpus, train.matrices}, {val.corpus, val.matrices}, cfg);
  MethodConfig baseline;
  baseline.exclude_self = true;
  EXPECT_EQ(r.chosen_entry().validation_co, cluster_optimality(val.corpus, val.matrices, {}, baseline));
  EXPECT_EQ(r.chosen_entry().train_co, cluster_optimality(train.corpus, train.matrices, {}, baseline));
  EXPECT_EQ(r.method, "cutoff");
}

TEST(SweepCutoff, SeparableCorpusPicksGapThreshold) {
  const auto train = ts::separable_set(30, 4);
  const auto val = ts::separable_set(15, 5);
  SweepConfig cfg;
  cfg.grid = linear_grid(0.01, 0.99, 50);
  const auto r = sweep_cutoff({train.corpus, train.matrices}, {val.corpus, val.matrices}, cfg);
  const auto& chosen = r.chosen_entry();
  EXPECT_GT(chosen.setting.threshold, 0.4);
  EXPECT_LT(chosen.setting.threshold, 0.6);
  EXPECT_EQ(chosen.validation_co, 1.0);
  // below the mixed candidate's utilities it always wins and every space misses
  for (const auto& e : r.trace) {
    if (e.setting.threshold < 0.395) {
      EXPECT_EQ(e.train_co, 0.0);
    }
  }
}

TEST(SweepCutoff, TraceOrderAndTopK) {
  const auto train = ts::separable_set(12, 6);
  const auto val = ts::separable_set(12, 7);
  SweepConfig cfg;
  cfg.grid = linear_grid(0.0, 1.0, 20);
  cfg.modes = {CutoffMode::absolute, CutoffMode::deviation_from_max};
  cfg.deltas = {CutoffDelta::constant(0), CutoffDelta::constant(-1), CutoffDelta::dropped()};
  cfg.top_k = 7;
  const auto r = sweep_cutoff({train.corpus, train.matrices}, {val.corpus, val.matrices}, cfg);
  ASSERT_EQ(r.trace.size(), 20u * 2 * 3);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_GE(r.trace[i - 1].train_co, r.trace[i].train_co);
    if (r.trace[i - 1].train_co == r.trace[i].train_co) {
      EXPECT_LE(r.trace[i - 1].setting.threshold, r.trace[i].setting.threshold);
    }
  }
  EXPECT_LT(r.chosen, 7u);
  for (std::size_t i = 0; i < r.trace.size(); ++i) EXPECT_EQ(r.trace[i].validation_co.has_value(), i < 7);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_GE(*r.chosen_entry().validation_co, *r.trace[i].validation_co);
}

TEST(SweepCutoff, Deterministic) {
  const auto train = ts::separable_set(10, 8);
  const auto val = ts::separable_set(10, 9);
  SweepConfig cfg;
  cfg.grid = linear_grid(0.0, 0.8, 25);
  cfg.deltas = {CutoffDelta::constant(0), CutoffDelta::dropped()};
  expect_same(sweep_cutoff({train.corpus, train.matrices}, {val.corpus, val.matrices}, cfg),
              sweep_cutoff({train.corpus, train.matrices}, {val.corpus, val.matrices}, cfg));
}

TEST(SweepCutoff, DominatedSettingDoesNotChangeChoice) {
  const auto train = ts::separable_set(20, 10);
  const auto val = ts::separable_set(10, 11);
  SweepConfig cfg;
  cfg.grid = linear_grid(0.01, 0.99, 50);
  const auto base = sweep_cutoff({train.corpus, train.matrices}, {val.corpus, val.matrices}, cfg);
  cfg.grid.insert(cfg.grid.begin(), -5.0);
  const auto more = sweep_cutoff({train.corpus, train.matrices}, {val.corpus, val.matrices}, cfg);
  EXPECT_EQ(base.chosen_entry().setting.threshold, more.chosen_entry().setting.threshold);
}

TEST(SweepCutoff, ConfigAndDataErrors) {
  const auto set = ts::separable_set(3, 12);
  const LabelledSet ls{set.corpus, set.matrices};
  SweepConfig cfg;
  EXPECT_THROW(sweep_cutoff(ls, ls, cfg), ConfigError);
  cfg.grid = {0.5, 0.5};
  EXPECT_THROW(sweep_cutoff(ls, ls, cfg), ConfigError);
  cfg.grid = {0.5};
  cfg.deltas.clear();
  EXPECT_THROW(sweep_cutoff(ls, ls, cfg), ConfigError);
  cfg.deltas = {CutoffDelta{}};
  cfg.top_k = 0;
  EXPECT_THROW(sweep_cutoff(ls, ls, cfg), ConfigError);
  cfg.top_k = 10;

  Corpus unlabelled;
  unlabelled.spaces.push_back({"u", "c", {{"a", {}, 1}, {"b", {}, 1}}});
  const std::vector<UtilityMatrix> m{UtilityMatrix(2, std::vector<float>{1, 0, 0, 1}, "token_f1")};
  EXPECT_THROW(sweep_cutoff({unlabelled, m}, ls, cfg), DataError);
  EXPECT_THROW(sweep_cutoff({set.corpus, m}, ls, cfg), DataError);
}

TEST(SweepCosine, ZeroThresholdEqualsUnthresholded) {
  const auto train = ts::cosine_separable_set(10, 13);
  const auto val = ts::cosine_separable_set(10, 14);
  SweepConfig cfg;
  cfg.grid = {0.0};
  const auto r = sweep_cosine_threshold({train.corpus, train.matrices, train.embeddings},
                                        {val.corpus, val.matrices, val.embeddings}, cfg);
  MethodConfig plain;
  plain.method = Method::embed;
  plain.cos_threshold = std::nullopt;
  EXPECT_EQ(r.chosen_entry().validation_co, cluster_optimality(val.corpus, val.matrices, val.embeddings, plain));
  EXPECT_EQ(r.method, "embed");
}

TEST(SweepCosine, SeparableCorpusPicksGapThreshold) {
  const auto train = ts::cosine_separable_set(30, 15);
  const auto val = ts::cosine_separable_set(15, 16);
  SweepConfig cfg;
  cfg.grid = linear_grid(0.01, 0.99, 50);
  const auto r = sweep_cosine_threshold({train.corpus, train.matrices, train.embeddings},
                                        {val.corpus, val.matrices, val.embeddings}, cfg);
  EXPECT_GT(r.chosen_entry().setting.threshold, 0.6);
  EXPECT_LT(r.chosen_entry().setting.threshold, 0.95);
  EXPECT_EQ(r.chosen_entry().validation_co, 1.0);
}

TEST(SweepCosine, NeedsEmbeddings) {
  const auto set = ts::cosine_separable_set(3, 17);
  SweepConfig cfg;
  cfg.grid = {0.5};
  EXPECT_THROW(sweep_cosine_threshold({set.corpus, set.matrices}, {set.corpus, set.matrices}, cfg), DataError);
}
