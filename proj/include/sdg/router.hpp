#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "sdg/params.hpp"

namespace sdg {

// Active-set routing result. experts holds the top_k winners in ascending
// index order (ties during selection go to the lower index); weights are the
// renormalized probabilities aligned with experts.
struct RoutedSet {
  Eigen::VectorXd probs;    // num_experts, softmax of router logits
  std::vector<int> experts; // top_k, ascending
  Eigen::VectorXd weights;  // top_k, nonnegative, sums to 1
};

// Per-token expert states over the active set, one row per routed expert.
// private_state is fixed at round 0; shared evolves across rounds.
struct ExpertStates {
  Eigen::MatrixXd private_state;  // top_k x private_dim
  Eigen::MatrixXd shared_initial; // top_k x shared_dim
  Eigen::MatrixXd shared;         // top_k x shared_dim
};

double apply_activation(Activation act, double x);
Eigen::VectorXd activate(Activation act, const Eigen::VectorXd& v);

// Softmax over router logits, top-k selection, weight renormalization.
// Throws std::runtime_error("router overflow") on non-finite logits.
RoutedSet route(const Eigen::VectorXd& x, const LayerParams& params,
                const LayerConfig& cfg);

// One expert's (private, shared) output pair.
std::pair<Eigen::VectorXd, Eigen::VectorXd> expert_forward(
    const Eigen::VectorXd& x, int expert, const LayerParams& params,
    const LayerConfig& cfg);

ExpertStates forward_active(const Eigen::VectorXd& x, const RoutedSet& routed,
                            const LayerParams& params, const LayerConfig& cfg);

// Router-weighted sum of per-expert output projections, accumulated in
// ascending expert-index order. The residual connection is the caller's.
Eigen::VectorXd aggregate(const ExpertStates& states, const RoutedSet& routed,
                          const LayerParams& params, const LayerConfig& cfg);

} // namespace sdg
