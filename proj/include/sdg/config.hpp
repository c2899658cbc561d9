#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace sdg {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Graph/message channel layout of the deliberation block.
//  sdg           : support + sparsified critique channel, signed contrast input
//  unsigned_one  : support channel only, critique forced to zero
//  dual_unsigned : two dense channels without signed contrast
//  fixed_lambda_g: sdg graphs, but the social coefficient lambda*g replaced
//                  by a constant
enum class Variant { Sdg, UnsignedOne, DualUnsigned, FixedLambdaG };

// Evaluation-time forward-pass edits. They act on messages/graphs of a fixed
// parameter set, never on the parameters themselves.
enum class InterventionKind { None, ZeroNeg, ZeroPos, SwapSign };

enum class Activation { Silu, Gelu, Relu };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);
InterventionKind parse_intervention(const std::string& name);
std::string intervention_name(InterventionKind k);
Activation parse_activation(const std::string& name);
std::string activation_name(Activation a);

// All dimensions, counts, and deliberation hyperparameters of one layer.
// Defaults are the reference operating point used throughout the tests.
struct LayerConfig {
  int model_dim = 1024;        // token width d
  int expert_hidden_dim = 288; // expert FFN hidden width
  int shared_dim = 128;        // communicated slice of the expert state
  int graph_dim = 64;          // query/key width of the graph builders
  int message_dim = 64;        // message vector width
  int disagree_dim = 32;       // disagreement projection width
  int update_hidden_dim = 128; // update-MLP hidden width
  int expert_id_dim = 16;      // learned expert identity width

  int num_experts = 32;
  int top_k = 4;
  int critique_fanout = 2; // strongest critique edges kept per row
  int rounds = 2;

  double alpha = 1.0;          // social step size
  double beta = 0.5;           // anchoring strength toward the initial state
  double gamma = 1.0;          // critique weight in the signed contrast
  double gate_threshold = 0.5; // disagreement level below which the gate closes
  double gate_sharpness = 1.0; // tanh slope of the gate above the threshold
  double lambda_min = 0.0;     // gate floor
  double eps = 1e-9;

  bool support_self_loops = true;
  bool critique_self_loops = false;
  bool rebuild_graph_each_round = true;
  bool confidence_gate_enabled = false;

  Variant variant = Variant::Sdg;
  double fixed_lambda_g_value = 0.0; // only read under Variant::FixedLambdaG
  std::optional<double> clip_delta_norm; // Frobenius cap on the stacked update

  Activation activation = Activation::Silu;

  int private_dim() const { return model_dim - shared_dim; }
  int feature_dim() const { return shared_dim + expert_id_dim; }

  // Throws ConfigError naming the offending field. beta is only constrained
  // when rounds >= 1; beta == 1 is allowed there as the pure-anchoring mode.
  void validate() const;
};

} // namespace sdg
