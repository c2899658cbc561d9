#include "sdg/router.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sdg {

double apply_activation(Activation act, double x) {
  switch (act) {
    case Activation::Silu:
      return x / (1.0 + std::exp(-x));
    case Activation::Gelu:
      return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475244));
    case Activation::Relu:
      return x > 0.0 ? x : 0.0;
  }
  return x;
}

Eigen::VectorXd activate(Activation act, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = apply_activation(act, v[i]);
  return out;
}

RoutedSet route(const Eigen::VectorXd& x, const LayerParams& params,
                const LayerConfig& cfg) {
  if (cfg.top_k > cfg.num_experts)
    throw ConfigError("route: top_k exceeds num_experts");
  Eigen::VectorXd logits = params.router_weight * x;
  if (!logits.allFinite()) throw std::runtime_error("router overflow");

  const double max_logit = logits.maxCoeff();
  Eigen::VectorXd probs = (logits.array() - max_logit).exp();
  probs /= probs.sum();

  std::vector<int> order(cfg.num_experts);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + cfg.top_k, order.end(),
                    [&](int a, int b) {
                      if (probs[a] != probs[b]) return probs[a] > probs[b];
                      return a < b;
                    });
  std::vector<int> active(order.begin(), order.begin() + cfg.top_k);
  std::sort(active.begin(), active.end());

  double mass = 0.0;
  for (int i : active) mass += probs[i];
  Eigen::VectorXd weights(cfg.top_k);
  for (int j = 0; j < cfg.top_k; ++j) weights[j] = probs[active[j]] / mass;

  return RoutedSet{std::move(probs), std::move(active), std::move(weights)};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> expert_forward(
    const Eigen::VectorXd& x, int expert, const LayerParams& params,
    const LayerConfig& cfg) {
  if (expert < 0 || expert >= cfg.num_experts)
    throw ConfigError("expert_forward: expert index out of range");
  const ExpertParams& e = params.experts[expert];
  const Eigen::VectorXd hidden = activate(cfg.activation, e.up_weight * x + e.up_bias);
  Eigen::VectorXd priv = e.private_weight * hidden + e.private_bias;
  Eigen::VectorXd shared = e.shared_weight * hidden + e.shared_bias;
  return {std::move(priv), std::move(shared)};
}

ExpertStates forward_active(const Eigen::VectorXd& x, const RoutedSet& routed,
                            const LayerParams& params, const LayerConfig& cfg) {
  const int k = static_cast<int>(routed.experts.size());
  ExpertStates states;
  states.private_state.resize(k, cfg.private_dim());
  states.shared_initial.resize(k, cfg.shared_dim);
  for (int j = 0; j < k; ++j) {
    auto [priv, shared] = expert_forward(x, routed.experts[j], params, cfg);
    states.private_state.row(j) = priv.transpose();
    states.shared_initial.row(j) = shared.transpose();
  }
  states.shared = states.shared_initial;
  return states;
}

Eigen::VectorXd aggregate(const ExpertStates& states, const RoutedSet& routed,
                          const LayerParams& params, const LayerConfig& cfg) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(cfg.model_dim);
  // routed.experts is ascending, which fixes the summation order.
  for (size_t j = 0; j < routed.experts.size(); ++j) {
    const ExpertParams& e = params.experts[routed.experts[j]];
    Eigen::VectorXd out = e.out_private * states.private_state.row(j).transpose() +
                          e.out_shared * states.shared.row(j).transpose();
    y += routed.weights[static_cast<Eigen::Index>(j)] * out;
  }
  return y;
}

} // namespace sdg
