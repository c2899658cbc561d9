#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sdg/params.hpp"

namespace sdg {

// Normalized shared states concatenated with expert identity embeddings,
// one row per active expert.
struct GraphFeatures {
  Eigen::MatrixXd z; // top_k x feature_dim
};

// support is row-stochastic; critique is row-substochastic with at most
// critique_fanout nonzeros per row (a fully masked row is all-zero).
// Under Variant::DualUnsigned both members are dense unsigned channels.
struct SignedGraphs {
  Eigen::MatrixXd support;  // k x k
  Eigen::MatrixXd critique; // k x k
  int round = 0;
};

// LayerNorm (mean/variance over shared_dim, eps-guarded, no learned affine)
// of each shared state, then the expert-id embedding appended.
GraphFeatures build_features(const Eigen::MatrixXd& shared,
                             const std::vector<int>& experts,
                             const LayerParams& params, const LayerConfig& cfg);

// Scaled query/key attention over the active set with the support self-loop
// mask. Throws on a fully masked row, which cannot occur with support
// self-loops enabled.
Eigen::MatrixXd build_support(const GraphFeatures& features,
                              const LayerParams& params, const LayerConfig& cfg);

// Dense masked softmax followed by per-row top-m sparsification and
// renormalization.
Eigen::MatrixXd build_critique(const GraphFeatures& features,
                               const LayerParams& params, const LayerConfig& cfg);

// Keeps the m largest entries of a nonnegative row (ties to the lower index),
// zeroes the rest, and divides survivors by (their sum + eps). An all-zero
// row is returned unchanged.
Eigen::VectorXd top_m_normalize(const Eigen::VectorXd& row, int m, double eps);

// Variant dispatch: sdg/fixed_lambda_g build support+critique, unsigned zeroes
// the critique channel, dual_unsigned builds a second dense channel from the
// critique projections under the support mask.
SignedGraphs build_graphs(const GraphFeatures& features, const LayerParams& params,
                          const LayerConfig& cfg, int round);

} // namespace sdg
