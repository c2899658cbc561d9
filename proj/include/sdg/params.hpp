#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sdg/config.hpp"

namespace sdg {

struct ExpertParams {
  Eigen::MatrixXd up_weight;      // expert_hidden_dim x model_dim
  Eigen::VectorXd up_bias;        // expert_hidden_dim
  Eigen::MatrixXd private_weight; // private_dim x expert_hidden_dim
  Eigen::VectorXd private_bias;   // private_dim
  Eigen::MatrixXd shared_weight;  // shared_dim x expert_hidden_dim
  Eigen::VectorXd shared_bias;    // shared_dim
  Eigen::MatrixXd out_private;    // model_dim x private_dim
  Eigen::MatrixXd out_shared;     // model_dim x shared_dim
};

// Every learned tensor of one layer. Immutable after construction; all
// operations are pure functions of (params, config, input).
struct LayerParams {
  Eigen::MatrixXd router_weight; // num_experts x model_dim
  std::vector<ExpertParams> experts;

  Eigen::MatrixXd expert_ids; // num_experts x expert_id_dim

  // Graph builders, each graph_dim x feature_dim.
  Eigen::MatrixXd support_query, support_key;
  Eigen::MatrixXd critique_query, critique_key;

  // Additive self-loop masks over the active set, entries in {0, -inf}.
  // support_mask is all-zero when support self-loops are allowed;
  // critique_mask carries -inf on the diagonal when critique self-loops
  // are disabled.
  Eigen::MatrixXd support_mask, critique_mask; // top_k x top_k

  Eigen::MatrixXd disagree_proj; // disagree_dim x shared_dim
  Eigen::MatrixXd message_proj;  // message_dim x shared_dim

  Eigen::MatrixXd update_w1; // update_hidden_dim x (shared_dim + 2*message_dim)
  Eigen::VectorXd update_b1;
  Eigen::MatrixXd update_w2; // shared_dim x update_hidden_dim
  Eigen::VectorXd update_b2;

  Eigen::MatrixXd gate_weight; // num_experts x model_dim
  Eigen::VectorXd gate_bias;   // num_experts
};

enum class InitScheme { UniformFanin, Zeros };

InitScheme parse_init_scheme(const std::string& name);
std::string init_scheme_name(InitScheme s);

// Deterministic seeded initialization. uniform_fanin draws each entry
// uniformly in +-scale/sqrt(fan_in) from a counter-based stream; every
// tensor owns a fixed stream id and entries are filled in row-major order,
// so the result is independent of fill order. The stream enumeration is
// fixed in params.cpp. update_b2 starts at zero under every scheme so the
// first-round update field is small.
LayerParams init_params(const LayerConfig& cfg, std::uint64_t seed,
                        InitScheme scheme = InitScheme::UniformFanin,
                        double scale = 1.0);

// Shape/finiteness check against the config; throws ConfigError on mismatch.
void validate_params(const LayerParams& params, const LayerConfig& cfg);

} // namespace sdg
