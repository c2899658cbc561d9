#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "sdg/graph.hpp"
#include "sdg/router.hpp"

namespace sdg {

// Gate values of one round. disagreement lies in [0, sqrt(k/(2(k-1)))] for
// k >= 2 and is 0 for k == 1; lambda lies in [lambda_min, 1).
struct GateState {
  double disagreement = 0.0;
  double mean_cos = 1.0;
  double lambda = 0.0;
  Eigen::VectorXd confidence; // top_k, entries in [0, 1]
};

// Everything produced while advancing the shared states one round.
struct RoundRecord {
  SignedGraphs graphs;
  GateState gate;
  Eigen::MatrixXd support_msg;  // k x message_dim (post-intervention)
  Eigen::MatrixXd critique_msg; // k x message_dim (post-intervention)
  Eigen::MatrixXd delta;        // k x shared_dim
  Eigen::MatrixXd pre_anchor;   // k x shared_dim
};

// Full per-token record: shared holds rounds+1 snapshots, snapshot 0 being
// the expert_forward output; rounds[t] describes the t -> t+1 transition.
struct DeliberationTrace {
  RoutedSet routed;
  Eigen::MatrixXd private_state; // fixed across rounds
  std::vector<Eigen::MatrixXd> shared;
  std::vector<RoundRecord> rounds;

  const Eigen::MatrixXd& final_shared() const { return shared.back(); }
};

// Root-mean pairwise cosine distance of the eps-normalized projected states.
// Returns (score, mean pairwise cosine); (0, 1) for a single expert.
std::pair<double, double> disagreement(const Eigen::MatrixXd& shared,
                                       const LayerParams& params,
                                       const LayerConfig& cfg);

// Hinge-tanh gate: lambda_min + (1-lambda_min)*tanh(sharpness*max(D-thr, 0)).
// Under Variant::FixedLambdaG returns fixed_lambda_g_value unconditionally.
double social_gate(double disagreement_score, const LayerConfig& cfg);

// Per-expert sigmoid gate on the token, or all-ones when disabled (and under
// Variant::FixedLambdaG, whose constant already covers the product).
Eigen::VectorXd confidence_gate(const Eigen::VectorXd& x,
                                const std::vector<int>& experts,
                                const LayerParams& params,
                                const LayerConfig& cfg);

// Graph-weighted sums of the projected shared states.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> messages(
    const Eigen::MatrixXd& shared, const SignedGraphs& graphs,
    const LayerParams& params);

// Update MLP over [state; support message; contrast]. The contrast slot is
// support_msg - gamma * critique_msg, except under Variant::DualUnsigned
// where the second channel enters unweighted. When clip_delta_norm is set,
// the stacked k x shared_dim result is rescaled to that Frobenius norm cap
// with its direction preserved.
Eigen::MatrixXd update_delta(const Eigen::MatrixXd& shared,
                             const Eigen::MatrixXd& support_msg,
                             const Eigen::MatrixXd& critique_msg,
                             const LayerParams& params, const LayerConfig& cfg);

// Gated residual step followed by anchoring to the initial shared state.
// Computed incrementally as h + beta*(h0 - h) + (1-beta)*step so that a
// closed gate (zero step coefficient) leaves the states bit-identical.
Eigen::MatrixXd anchored_step(const Eigen::MatrixXd& current,
                              const Eigen::MatrixXd& initial,
                              const Eigen::MatrixXd& delta, double lambda,
                              const Eigen::VectorXd& confidence,
                              const LayerConfig& cfg);

// Exchanges the two channels; the sparsified matrix travels with its channel.
SignedGraphs swap_graphs(SignedGraphs graphs);

// route -> expert_forward -> `rounds` deliberation rounds. Graphs are rebuilt
// from the current shared states each round unless rebuild_graph_each_round
// is off, in which case the first round's graphs are reused.
DeliberationTrace deliberate(const Eigen::VectorXd& x, const LayerParams& params,
                             const LayerConfig& cfg,
                             InterventionKind intervention = InterventionKind::None);

// Deliberation followed by router-weighted aggregation (no residual).
Eigen::VectorXd layer_forward(const Eigen::VectorXd& x, const LayerParams& params,
                              const LayerConfig& cfg,
                              InterventionKind intervention = InterventionKind::None);

// layer_forward under the configured variant, no intervention.
Eigen::VectorXd variant_forward(const Eigen::VectorXd& x,
                                const LayerParams& params,
                                const LayerConfig& cfg);

Eigen::VectorXd aggregate_trace(const DeliberationTrace& trace,
                                const LayerParams& params,
                                const LayerConfig& cfg);

} // namespace sdg
