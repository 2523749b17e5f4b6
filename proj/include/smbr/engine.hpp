#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "smbr/clustering.hpp"
#include "smbr/exec.hpp"
#include "smbr/utility.hpp"

namespace smbr {

/// Outcome of one selection. `support` lists the candidates that were scored
/// (ascending); `scores[k]` belongs to `support[k]`. Every method except
/// conditional_mbr scores all candidates.
struct MbrResult {
  std::size_t selected = 0;
  std::vector<std::size_t> ranking;
  std::vector<std::size_t> support;
  std::vector<double> scores;
  std::string method;
  bool exclude_self = false;
  std::map<std::string, std::string> diagnostics;

  /// Score of a candidate in `support`; throws std::out_of_range otherwise.
  double score_of(std::size_t candidate) const;
};

/// Optional per-pair reference mask (row-major, 1 = comparison counts).
using PairMask = std::vector<std::uint8_t>;

/// Weighted mean utility of each hypothesis against the reference set.
///
/// Weights are renormalized per row over the references that count: all of
/// them, minus the hypothesis itself under exclude_self, minus pairs dropped
/// by `mask`. A row with no reference mass scores 0.
std::vector<double> expected_utilities(const UtilityMatrix& m, std::span<const double> weights, bool exclude_self,
                                       const PairMask* mask = nullptr, Exec exec = Exec::parallel);

/// Indices ordered by score descending, then index ascending.
std::vector<std::size_t> rank_by_score(std::span<const std::size_t> candidates, std::span<const double> scores);

MbrResult mbr_select(const UtilityMatrix& m, std::span<const double> weights, bool exclude_self,
                     Exec exec = Exec::parallel);

enum class CutoffMode { absolute, deviation_from_max };

std::string_view to_string(CutoffMode mode);
CutoffMode parse_cutoff_mode(std::string_view s);

/// Replacement for sub-threshold comparisons: a constant, or "drop", which
/// removes the comparison from the renormalized reference set.
struct CutoffDelta {
  bool drop = false;
  double value = 0.0;

  static CutoffDelta constant(double v) { return {false, v}; }
  static CutoffDelta dropped() { return {true, 0.0}; }
  /// "drop" or a number.
  static CutoffDelta parse(std::string_view s);
  std::string tag() const;

  friend bool operator==(const CutoffDelta&, const CutoffDelta&) = default;
};

/// Utility thresholds chosen on the original data: 0.918 for BERTScore-like
/// utilities and 0.512 for BLEURT.
inline constexpr double kBertScoreCutoff = 0.918;
inline constexpr double kBleurtCutoff = 0.512;
inline constexpr double kCosineThreshold = 0.918;

/// Default cut-off for a matrix kind tag (BLEURT tags get 0.512).
double default_cutoff_tau(std::string_view kind);

struct CutoffParams {
  double tau = kBertScoreCutoff;
  CutoffDelta delta{};
  CutoffMode mode = CutoffMode::absolute;
};

struct CutoffMatrix {
  UtilityMatrix matrix;
  PairMask kept;  // empty unless delta is "drop"
  double threshold = 0.0;
};

/// Absolute mode keeps entries >= tau; deviation mode keeps entries >=
/// (max off-diagonal entry) - tau. Other entries, and the diagonal, become
/// delta.
CutoffMatrix cutoff_transform(const UtilityMatrix& m, const CutoffParams& params);

MbrResult cutoff_mbr(const UtilityMatrix& m, const CutoffParams& params, std::span<const double> weights,
                     bool exclude_self = true, Exec exec = Exec::parallel);

/// MBR restricted to the dominant cluster, plus a two-stage full ranking.
///
/// The dominant cluster has the largest total weight; ties go to the cluster
/// whose lowest member index is smallest. Scores are within-cluster expected
/// utilities (hypotheses and references both restricted to the candidate's
/// own cluster). The ranking lists clusters by the same dominance order and
/// candidates inside each cluster by score.
MbrResult cluster_mbr(const UtilityMatrix& m, const ClusterAssignment& assignment, std::span<const double> weights,
                      bool exclude_self = true);

/// out[i][j] = m[i][j] * (cos(e_i, e_j) + 1) / 2, with similarities below
/// `cos_threshold` (on the rescaled scale) set to zero.
UtilityMatrix embedding_weighted_matrix(const UtilityMatrix& m, const EmbeddingSet& e,
                                        std::optional<double> cos_threshold = std::nullopt);

MbrResult embedding_mbr(const UtilityMatrix& m, const EmbeddingSet& e, std::optional<double> cos_threshold,
                        std::span<const double> weights, bool exclude_self = true, Exec exec = Exec::parallel);

/// MBR with hypotheses and references restricted to candidates labelled `s`.
MbrResult conditional_mbr(const UtilityMatrix& m, std::span<const std::string> labels, std::string_view s,
                          std::span<const double> weights, bool exclude_self);

// --- continuous bimodal demonstration ---

struct MixtureSpec {
  std::array<double, 2> weights{0.5, 0.5};
  std::array<double, 2> means{-2.0, 2.0};
  std::array<double, 2> stds{1.0, 1.0};

  void validate() const;
  double mean() const { return weights[0] * means[0] + weights[1] * means[1]; }
  double density(double y) const;
};

enum class ContinuousUtility { neg_squared_error, rbf };

ContinuousUtility parse_continuous_utility(std::string_view s);

/// `steps` evenly spaced points from lo to hi inclusive.
struct Grid {
  double lo = -1.0;
  double hi = 1.0;
  std::size_t steps = 1001;

  double step() const { return (hi - lo) / static_cast<double>(steps - 1); }
  double point(std::size_t i) const { return lo + static_cast<double>(i) * step(); }
  /// Smallest symmetric-margin grid covering both means +- 5 stds.
  static Grid covering(const MixtureSpec& mix, std::size_t steps = 10001);
};

/// Closed-form E[u(h, Y)] for Y drawn from the mixture. The RBF utility is
/// exp(-(h - y)^2 / (2 bandwidth^2)).
double continuous_expected_utility(const MixtureSpec& mix, ContinuousUtility kind, double bandwidth, double h);

struct ContinuousDemo {
  double optimum = 0.0;
  std::size_t optimum_index = 0;
  std::vector<std::pair<double, double>> curve;
};

/// Grid argmax of the closed-form expected utility. Values within 1e-12
/// (relative) of the maximum count as ties and the lowest grid point wins.
ContinuousDemo demo_continuous(const MixtureSpec& mix, ContinuousUtility kind, double bandwidth, const Grid& grid);

}  // namespace smbr
