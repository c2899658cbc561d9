#include "sdg/config.hpp"

#include <cmath>

namespace sdg {

Variant parse_variant(const std::string& name) {
  if (name == "sdg") return Variant::Sdg;
  if (name == "unsigned") return Variant::UnsignedOne;
  if (name == "dual_unsigned") return Variant::DualUnsigned;
  if (name == "fixed_lambda_g") return Variant::FixedLambdaG;
  throw ConfigError("unknown variant: " + name);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Sdg: return "sdg";
    case Variant::UnsignedOne: return "unsigned";
    case Variant::DualUnsigned: return "dual_unsigned";
    case Variant::FixedLambdaG: return "fixed_lambda_g";
  }
  return "sdg";
}

InterventionKind parse_intervention(const std::string& name) {
  if (name == "none") return InterventionKind::None;
  if (name == "zero_neg") return InterventionKind::ZeroNeg;
  if (name == "zero_pos") return InterventionKind::ZeroPos;
  if (name == "swap_sign") return InterventionKind::SwapSign;
  throw ConfigError("unknown intervention: " + name);
}

std::string intervention_name(InterventionKind k) {
  switch (k) {
    case InterventionKind::None: return "none";
    case InterventionKind::ZeroNeg: return "zero_neg";
    case InterventionKind::ZeroPos: return "zero_pos";
    case InterventionKind::SwapSign: return "swap_sign";
  }
  return "none";
}

Activation parse_activation(const std::string& name) {
  if (name == "silu") return Activation::Silu;
  if (name == "gelu") return Activation::Gelu;
  if (name == "relu") return Activation::Relu;
  throw ConfigError("unknown activation: " + name);
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Silu: return "silu";
    case Activation::Gelu: return "gelu";
    case Activation::Relu: return "relu";
  }
  return "silu";
}

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("layer config: " + msg);
}

} // namespace

void LayerConfig::validate() const {
  require(model_dim >= 1, "model_dim must be >= 1");
  require(expert_hidden_dim >= 1, "expert_hidden_dim must be >= 1");
  require(shared_dim >= 1, "shared_dim must be >= 1");
  require(shared_dim <= model_dim, "shared_dim must not exceed model_dim");
  require(graph_dim >= 1, "graph_dim must be >= 1");
  require(message_dim >= 1, "message_dim must be >= 1");
  require(disagree_dim >= 1, "disagree_dim must be >= 1");
  require(update_hidden_dim >= 1, "update_hidden_dim must be >= 1");
  require(expert_id_dim >= 0, "expert_id_dim must be >= 0");
  require(num_experts >= 1, "num_experts must be >= 1");
  require(top_k >= 1 && top_k <= num_experts,
          "top_k must satisfy 1 <= top_k <= num_experts");
  require(critique_fanout >= 1, "critique_fanout must be >= 1");
  require(rounds >= 0, "rounds must be >= 0");
  if (rounds >= 1) {
    require(beta > 0.0 && beta <= 1.0,
            "beta must lie in (0, 1]; beta == 1 is the pure-anchoring mode");
  }
  require(lambda_min >= 0.0 && lambda_min < 1.0,
          "lambda_min must lie in [0, 1)");
  require(gate_threshold >= 0.0, "gate_threshold must be >= 0");
  require(gate_sharpness >= 0.0, "gate_sharpness must be >= 0");
  require(gamma >= 0.0, "gamma must be >= 0");
  require(eps > 0.0, "eps must be > 0");
  require(std::isfinite(alpha), "alpha must be finite");
  require(std::isfinite(fixed_lambda_g_value),
          "fixed_lambda_g_value must be finite");
  if (clip_delta_norm) {
    require(*clip_delta_norm > 0.0 && std::isfinite(*clip_delta_norm),
            "clip_delta_norm must be positive and finite");
  }
}

} // namespace sdg
