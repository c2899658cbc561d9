#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "sdg/deliberate.hpp"

namespace sdg {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0; // population standard deviation
};

// Token-level deliberation metrics, mean +- population std over tokens.
// Round statistics are pooled (averaged) within each token first.
// update_ratio is absent when every trace has zero rounds.
struct DiagnosticsReport {
  MeanStd disagreement_mean; // D_mean
  MeanStd lambda_mean;
  std::optional<MeanStd> update_ratio;
  MeanStd support_entropy;  // H_Aplus
  MeanStd critique_entropy; // H_Aminus
  MeanStd ambivalence_mean; // ambivalence
  MeanStd shared_share;     // r_shr
  int tokens = 0;
};

// Mean Shannon entropy over the nonzero rows (renormalized to sum one);
// zero rows are skipped, an all-zero matrix scores 0.
double row_entropy_mean(const Eigen::MatrixXd& a);

// Overlapping probability mass between the two channels: mean over rows of
// sum_j min(support_ij, critique_ij).
double ambivalence(const Eigen::MatrixXd& support, const Eigen::MatrixXd& critique);

// (relative update size, shared contribution) of one trace. The first is the
// mean over rounds and experts of |delta| / (|initial shared| + eps); the
// second is |y_shared| / (|y_shared| + |y_private| + eps) at the final round.
std::pair<std::optional<double>, double> update_and_share(
    const DeliberationTrace& trace, const LayerParams& params,
    const LayerConfig& cfg);

// Aggregates over a nonempty batch of traces; throws ConfigError when empty.
DiagnosticsReport collect(const std::vector<DeliberationTrace>& traces,
                          const LayerParams& params, const LayerConfig& cfg);

} // namespace sdg
