#include "sdg/deliberate.hpp"

#include <cmath>
#include <stdexcept>

namespace sdg {

std::pair<double, double> disagreement(const Eigen::MatrixXd& shared,
                                       const LayerParams& params,
                                       const LayerConfig& cfg) {
  const int k = static_cast<int>(shared.rows());
  if (k <= 1) return {0.0, 1.0};

  Eigen::MatrixXd projected = shared * params.disagree_proj.transpose(); // k x d_dis
  for (int i = 0; i < k; ++i) {
    const double norm = projected.row(i).norm();
    projected.row(i) /= (norm + cfg.eps);
  }
  double cos_sum = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (i != j) cos_sum += projected.row(i).dot(projected.row(j));
  const double pairs = static_cast<double>(k) * (k - 1);
  const double mean_cos = cos_sum / pairs;
  const double score = std::sqrt(std::max(0.0, (1.0 - mean_cos) / 2.0));
  return {score, mean_cos};
}

double social_gate(double disagreement_score, const LayerConfig& cfg) {
  if (cfg.variant == Variant::FixedLambdaG) return cfg.fixed_lambda_g_value;
  const double excess = std::max(disagreement_score - cfg.gate_threshold, 0.0);
  return cfg.lambda_min + (1.0 - cfg.lambda_min) * std::tanh(cfg.gate_sharpness * excess);
}

Eigen::VectorXd confidence_gate(const Eigen::VectorXd& x,
                                const std::vector<int>& experts,
                                const LayerParams& params,
                                const LayerConfig& cfg) {
  const int k = static_cast<int>(experts.size());
  if (!cfg.confidence_gate_enabled || cfg.variant == Variant::FixedLambdaG)
    return Eigen::VectorXd::Ones(k);
  Eigen::VectorXd g(k);
  for (int j = 0; j < k; ++j) {
    const int i = experts[j];
    const double z = params.gate_weight.row(i).dot(x) + params.gate_bias[i];
    g[j] = 1.0 / (1.0 + std::exp(-z));
  }
  return g;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> messages(
    const Eigen::MatrixXd& shared, const SignedGraphs& graphs,
    const LayerParams& params) {
  const Eigen::MatrixXd projected = shared * params.message_proj.transpose(); // k x d_m
  return {graphs.support * projected, graphs.critique * projected};
}

Eigen::MatrixXd update_delta(const Eigen::MatrixXd& shared,
                             const Eigen::MatrixXd& support_msg,
                             const Eigen::MatrixXd& critique_msg,
                             const LayerParams& params, const LayerConfig& cfg) {
  const int k = static_cast<int>(shared.rows());
  const int ds = cfg.shared_dim;
  const int dm = cfg.message_dim;
  Eigen::MatrixXd delta(k, ds);
  Eigen::VectorXd input(ds + 2 * dm);
  for (int i = 0; i < k; ++i) {
    input.head(ds) = shared.row(i);
    input.segment(ds, dm) = support_msg.row(i);
    if (cfg.variant == Variant::DualUnsigned)
      input.tail(dm) = critique_msg.row(i);
    else
      input.tail(dm) = support_msg.row(i) - cfg.gamma * critique_msg.row(i);
    const Eigen::VectorXd hidden =
        activate(cfg.activation, params.update_w1 * input + params.update_b1);
    delta.row(i) = (params.update_w2 * hidden + params.update_b2).transpose();
  }
  if (cfg.clip_delta_norm) {
    const double cap = *cfg.clip_delta_norm;
    const double norm = delta.norm();
    delta *= cap / std::max(cap, norm);
  }
  return delta;
}

Eigen::MatrixXd anchored_step(const Eigen::MatrixXd& current,
                              const Eigen::MatrixXd& initial,
                              const Eigen::MatrixXd& delta, double lambda,
                              const Eigen::VectorXd& confidence,
                              const LayerConfig& cfg) {
  Eigen::MatrixXd next = current;
  for (Eigen::Index i = 0; i < current.rows(); ++i) {
    const double coeff = cfg.alpha * lambda * confidence[i];
    next.row(i) += cfg.beta * (initial.row(i) - current.row(i)) +
                   (1.0 - cfg.beta) * coeff * delta.row(i);
  }
  return next;
}

SignedGraphs swap_graphs(SignedGraphs graphs) {
  std::swap(graphs.support, graphs.critique);
  return graphs;
}

namespace {

RoundRecord run_round(const Eigen::MatrixXd& current, const Eigen::MatrixXd& initial,
                      const std::vector<int>& experts,
                      const Eigen::VectorXd& confidence, const LayerParams& params,
                      const LayerConfig& cfg, InterventionKind intervention,
                      const SignedGraphs* reuse_graphs, int round) {
  RoundRecord rec;
  if (reuse_graphs != nullptr) {
    rec.graphs = *reuse_graphs;
  } else {
    const GraphFeatures features = build_features(current, experts, params, cfg);
    rec.graphs = build_graphs(features, params, cfg, round);
    if (intervention == InterventionKind::SwapSign)
      rec.graphs = swap_graphs(std::move(rec.graphs));
  }

  auto [d_score, mean_cos] = disagreement(current, params, cfg);
  rec.gate.disagreement = d_score;
  rec.gate.mean_cos = mean_cos;
  rec.gate.lambda = social_gate(d_score, cfg);
  rec.gate.confidence = confidence;

  std::tie(rec.support_msg, rec.critique_msg) = messages(current, rec.graphs, params);
  if (intervention == InterventionKind::ZeroNeg) rec.critique_msg.setZero();
  if (intervention == InterventionKind::ZeroPos) rec.support_msg.setZero();

  rec.delta = update_delta(current, rec.support_msg, rec.critique_msg, params, cfg);
  rec.pre_anchor = current;
  for (Eigen::Index i = 0; i < current.rows(); ++i) {
    rec.pre_anchor.row(i) +=
        cfg.alpha * rec.gate.lambda * confidence[i] * rec.delta.row(i);
  }
  return rec;
}

} // namespace

DeliberationTrace deliberate(const Eigen::VectorXd& x, const LayerParams& params,
                             const LayerConfig& cfg, InterventionKind intervention) {
  cfg.validate();
  DeliberationTrace trace;
  trace.routed = route(x, params, cfg);
  ExpertStates states = forward_active(x, trace.routed, params, cfg);
  trace.private_state = states.private_state;
  trace.shared.reserve(cfg.rounds + 1);
  trace.shared.push_back(states.shared_initial);

  const Eigen::VectorXd confidence =
      confidence_gate(x, trace.routed.experts, params, cfg);

  for (int t = 0; t < cfg.rounds; ++t) {
    const SignedGraphs* reuse = nullptr;
    if (!cfg.rebuild_graph_each_round && t > 0) reuse = &trace.rounds[0].graphs;
    RoundRecord rec = run_round(trace.shared.back(), states.shared_initial,
                                trace.routed.experts, confidence, params, cfg,
                                intervention, reuse, t);
    Eigen::MatrixXd next =
        anchored_step(trace.shared.back(), states.shared_initial, rec.delta,
                      rec.gate.lambda, confidence, cfg);
    trace.rounds.push_back(std::move(rec));
    trace.shared.push_back(std::move(next));
  }
  return trace;
}

Eigen::VectorXd aggregate_trace(const DeliberationTrace& trace,
                                const LayerParams& params, const LayerConfig& cfg) {
  ExpertStates states;
  states.private_state = trace.private_state;
  states.shared_initial = trace.shared.front();
  states.shared = trace.final_shared();
  return aggregate(states, trace.routed, params, cfg);
}

Eigen::VectorXd layer_forward(const Eigen::VectorXd& x, const LayerParams& params,
                              const LayerConfig& cfg, InterventionKind intervention) {
  const DeliberationTrace trace = deliberate(x, params, cfg, intervention);
  return aggregate_trace(trace, params, cfg);
}

Eigen::VectorXd variant_forward(const Eigen::VectorXd& x, const LayerParams& params,
                                const LayerConfig& cfg) {
  return layer_forward(x, params, cfg, InterventionKind::None);
}

} // namespace sdg
