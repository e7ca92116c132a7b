#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sgldreg/dataset.hpp"
#include "sgldreg/posterior.hpp"

namespace sgldreg {

struct TTestResult {
  double t = 0.0;
  double p_value = 1.0;
  std::size_t degrees_of_freedom = 0;
};

/// Two-sided paired t-test on x - y. Throws std::invalid_argument for
/// unequal lengths or fewer than two pairs. Identical differences give
/// t = 0, p = 1 when they are zero and p = 0 otherwise.
TTestResult paired_ttest(std::span<const double> x, std::span<const double> y);

struct EvaluationRow {
  std::string pair_id;
  std::size_t label_id = 0;  // 1-based
  double dice_before = 0.0;
  double dice_after = 0.0;
  double fold_pct = 0.0;
};

/// Per-label Dice before (moving vs fixed masks) and after (warped moving vs
/// fixed masks) posterior-mean registration, plus the fold percentage of
/// the predicted deformation.
std::vector<EvaluationRow> evaluate_pair(const LoadedPair& pair, const SnapshotStore& store);

/// Per-pair averages over labels, in pair order.
struct PairScore {
  std::string pair_id;
  double dice_before = 0.0;
  double dice_after = 0.0;
  double fold_pct = 0.0;
};
std::vector<PairScore> pair_scores(std::span<const EvaluationRow> rows);

/// CSV with header pair_id,label_id,dice_before,dice_after,fold_pct followed
/// by "mean" and "std" summary rows. When `baseline` is given (per-pair
/// dice_after of another method, in the same pair order) a p_value column is
/// added and filled on the summary rows.
void write_evaluation_csv(std::ostream& out, std::span<const EvaluationRow> rows,
                          const std::vector<double>* baseline = nullptr);

/// Per-pair dice_after values from an evaluation CSV written above.
std::vector<double> read_baseline_dice(std::istream& in);

struct NoiseExperimentResult {
  std::vector<double> sigmas;
  std::vector<double> mean_uncertainty;
  /// [sigma][pair] mean uncertainty, for scatter plots.
  std::vector<std::vector<double>> per_pair;
  double r = 0.0;
  /// Uncertainty did not vary with sigma (e.g. zero posterior spread); r is NaN.
  bool degenerate = false;
};

/// For each sigma, corrupts moving and fixed of every pair with Gaussian noise,
/// computes the velocity uncertainty map and averages it over voxels,
/// components and pairs; then correlates the averages with sigma.
/// Throws std::invalid_argument for fewer than two sigmas or no pairs.
NoiseExperimentResult uncertainty_noise_experiment(const SnapshotStore& store, std::span<const ImagePair> pairs,
                                                   std::span<const double> sigmas, std::uint64_t seed,
                                                   const UncertaintyOptions& options = {});

}  // namespace sgldreg
