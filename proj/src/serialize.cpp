#include "sdg/serialize.hpp"

#include <charconv>
#include <iomanip>

namespace sdg {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return json{{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto& shape = j.at("shape");
  const Eigen::Index rows = shape.at(0).get<Eigen::Index>();
  const Eigen::Index cols = shape.at(1).get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ConfigError("matrix record: shape does not match data length");
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data.at(i++).get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json data = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v[i]);
  return data;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

json layer_config_to_json(const LayerConfig& cfg) {
  json j{{"model_dim", cfg.model_dim},
         {"expert_hidden_dim", cfg.expert_hidden_dim},
         {"shared_dim", cfg.shared_dim},
         {"graph_dim", cfg.graph_dim},
         {"message_dim", cfg.message_dim},
         {"disagree_dim", cfg.disagree_dim},
         {"update_hidden_dim", cfg.update_hidden_dim},
         {"expert_id_dim", cfg.expert_id_dim},
         {"num_experts", cfg.num_experts},
         {"top_k", cfg.top_k},
         {"critique_fanout", cfg.critique_fanout},
         {"rounds", cfg.rounds},
         {"alpha", cfg.alpha},
         {"beta", cfg.beta},
         {"gamma", cfg.gamma},
         {"gate_threshold", cfg.gate_threshold},
         {"gate_sharpness", cfg.gate_sharpness},
         {"lambda_min", cfg.lambda_min},
         {"eps", cfg.eps},
         {"support_self_loops", cfg.support_self_loops},
         {"critique_self_loops", cfg.critique_self_loops},
         {"rebuild_graph_each_round", cfg.rebuild_graph_each_round},
         {"confidence_gate_enabled", cfg.confidence_gate_enabled},
         {"variant", variant_name(cfg.variant)},
         {"fixed_lambda_g_value", cfg.fixed_lambda_g_value},
         {"activation", activation_name(cfg.activation)}};
  if (cfg.clip_delta_norm)
    j["clip_delta_norm"] = *cfg.clip_delta_norm;
  else
    j["clip_delta_norm"] = nullptr;
  return j;
}

LayerConfig layer_config_from_json(const json& j) {
  LayerConfig cfg;
  auto get_int = [&](const char* key, int def) {
    return j.contains(key) ? j.at(key).get<int>() : def;
  };
  auto get_double = [&](const char* key, double def) {
    return j.contains(key) ? j.at(key).get<double>() : def;
  };
  auto get_bool = [&](const char* key, bool def) {
    return j.contains(key) ? j.at(key).get<bool>() : def;
  };
  cfg.model_dim = get_int("model_dim", cfg.model_dim);
  cfg.expert_hidden_dim = get_int("expert_hidden_dim", cfg.expert_hidden_dim);
  cfg.shared_dim = get_int("shared_dim", cfg.shared_dim);
  cfg.graph_dim = get_int("graph_dim", cfg.graph_dim);
  cfg.message_dim = get_int("message_dim", cfg.message_dim);
  cfg.disagree_dim = get_int("disagree_dim", cfg.disagree_dim);
  cfg.update_hidden_dim = get_int("update_hidden_dim", cfg.update_hidden_dim);
  cfg.expert_id_dim = get_int("expert_id_dim", cfg.expert_id_dim);
  cfg.num_experts = get_int("num_experts", cfg.num_experts);
  cfg.top_k = get_int("top_k", cfg.top_k);
  cfg.critique_fanout = get_int("critique_fanout", cfg.critique_fanout);
  cfg.rounds = get_int("rounds", cfg.rounds);
  cfg.alpha = get_double("alpha", cfg.alpha);
  cfg.beta = get_double("beta", cfg.beta);
  cfg.gamma = get_double("gamma", cfg.gamma);
  cfg.gate_threshold = get_double("gate_threshold", cfg.gate_threshold);
  cfg.gate_sharpness = get_double("gate_sharpness", cfg.gate_sharpness);
  cfg.lambda_min = get_double("lambda_min", cfg.lambda_min);
  cfg.eps = get_double("eps", cfg.eps);
  cfg.support_self_loops = get_bool("support_self_loops", cfg.support_self_loops);
  cfg.critique_self_loops = get_bool("critique_self_loops", cfg.critique_self_loops);
  cfg.rebuild_graph_each_round =
      get_bool("rebuild_graph_each_round", cfg.rebuild_graph_each_round);
  cfg.confidence_gate_enabled =
      get_bool("confidence_gate_enabled", cfg.confidence_gate_enabled);
  if (j.contains("variant")) cfg.variant = parse_variant(j.at("variant").get<std::string>());
  cfg.fixed_lambda_g_value = get_double("fixed_lambda_g_value", cfg.fixed_lambda_g_value);
  if (j.contains("activation"))
    cfg.activation = parse_activation(j.at("activation").get<std::string>());
  if (j.contains("clip_delta_norm") && !j.at("clip_delta_norm").is_null())
    cfg.clip_delta_norm = j.at("clip_delta_norm").get<double>();
  return cfg;
}

json trace_to_json(const DeliberationTrace& trace, int token_index) {
  json rounds = json::array();
  for (const RoundRecord& rec : trace.rounds) {
    rounds.push_back(json{
        {"round", rec.graphs.round},
        {"support", matrix_to_json(rec.graphs.support)},
        {"critique", matrix_to_json(rec.graphs.critique)},
        {"disagreement", rec.gate.disagreement},
        {"mean_cos", rec.gate.mean_cos},
        {"lambda", rec.gate.lambda},
        {"confidence", vector_to_json(rec.gate.confidence)},
        {"support_msg", matrix_to_json(rec.support_msg)},
        {"critique_msg", matrix_to_json(rec.critique_msg)},
        {"delta", matrix_to_json(rec.delta)},
        {"pre_anchor", matrix_to_json(rec.pre_anchor)}});
  }
  json shared = json::array();
  for (const Eigen::MatrixXd& snapshot : trace.shared)
    shared.push_back(matrix_to_json(snapshot));
  return json{{"record", "trace"},
              {"token", token_index},
              {"probs", vector_to_json(trace.routed.probs)},
              {"experts", trace.routed.experts},
              {"weights", vector_to_json(trace.routed.weights)},
              {"private_state", matrix_to_json(trace.private_state)},
              {"shared", std::move(shared)},
              {"rounds", std::move(rounds)}};
}

DeliberationTrace trace_from_json(const json& j) {
  DeliberationTrace trace;
  trace.routed.probs = vector_from_json(j.at("probs"));
  trace.routed.experts = j.at("experts").get<std::vector<int>>();
  trace.routed.weights = vector_from_json(j.at("weights"));
  trace.private_state = matrix_from_json(j.at("private_state"));
  for (const json& snapshot : j.at("shared"))
    trace.shared.push_back(matrix_from_json(snapshot));
  for (const json& r : j.at("rounds")) {
    RoundRecord rec;
    rec.graphs.round = r.at("round").get<int>();
    rec.graphs.support = matrix_from_json(r.at("support"));
    rec.graphs.critique = matrix_from_json(r.at("critique"));
    rec.gate.disagreement = r.at("disagreement").get<double>();
    rec.gate.mean_cos = r.at("mean_cos").get<double>();
    rec.gate.lambda = r.at("lambda").get<double>();
    rec.gate.confidence = vector_from_json(r.at("confidence"));
    rec.support_msg = matrix_from_json(r.at("support_msg"));
    rec.critique_msg = matrix_from_json(r.at("critique_msg"));
    rec.delta = matrix_from_json(r.at("delta"));
    rec.pre_anchor = matrix_from_json(r.at("pre_anchor"));
    trace.rounds.push_back(std::move(rec));
  }
  return trace;
}

namespace {

json mean_std_to_json(const MeanStd& m) {
  return json{{"mean", m.mean}, {"std", m.std}};
}

void print_metric(std::ostream& out, const char* name, const MeanStd& m) {
  out << name << " " << format_double(m.mean) << " +- " << format_double(m.std)
      << "\n";
}

} // namespace

json diagnostics_to_json(const DiagnosticsReport& report) {
  json j{{"record", "diagnostics"},
         {"tokens", report.tokens},
         {"D_mean", mean_std_to_json(report.disagreement_mean)},
         {"lambda_mean", mean_std_to_json(report.lambda_mean)},
         {"H_Aplus", mean_std_to_json(report.support_entropy)},
         {"H_Aminus", mean_std_to_json(report.critique_entropy)},
         {"ambivalence", mean_std_to_json(report.ambivalence_mean)},
         {"r_shr", mean_std_to_json(report.shared_share)}};
  j["update_ratio"] =
      report.update_ratio ? mean_std_to_json(*report.update_ratio) : json(nullptr);
  return j;
}

void write_diagnostics_text(std::ostream& out, const DiagnosticsReport& report) {
  out << "# deliberation diagnostics over " << report.tokens << " tokens\n";
  out << "# conventions: ambivalence = mean_i sum_j min(support_ij, critique_ij);\n";
  out << "# r_shr = |y_shared| / (|y_shared| + |y_private| + eps); std is the\n";
  out << "# population deviation over tokens, rounds pooled within each token.\n";
  print_metric(out, "D_mean      ", report.disagreement_mean);
  print_metric(out, "lambda_mean ", report.lambda_mean);
  if (report.update_ratio) {
    print_metric(out, "update_ratio", *report.update_ratio);
  } else {
    out << "update_ratio absent (no deliberation rounds)\n";
  }
  print_metric(out, "H_Aplus     ", report.support_entropy);
  print_metric(out, "H_Aminus    ", report.critique_entropy);
  print_metric(out, "ambivalence ", report.ambivalence_mean);
  print_metric(out, "r_shr       ", report.shared_share);
}

json cost_report_to_json(const CostReport& report) {
  json components = json::array();
  for (const CostComponent& c : report.components) {
    components.push_back(json{{"name", c.name},
                              {"macs", c.macs},
                              {"elementwise", c.elementwise},
                              {"flops", c.flops()}});
  }
  return json{{"record", "cost"},
              {"components", std::move(components)},
              {"rounds", report.rounds},
              {"round_flops", report.round_flops},
              {"deliberation_flops", report.deliberation_flops},
              {"moe_flops", report.moe_flops},
              {"ratio", report.ratio},
              {"param_count", report.param_count},
              {"bottleneck_width", report.bottleneck_width}};
}

void write_cost_text(std::ostream& out, const CostReport& report) {
  out << "# per-layer per-token cost, exact integer counts\n";
  out << "# conventions: 1 MAC = 2 FLOPs; softmax/layer-norm/tanh/sigmoid/"
         "activation = 5 FLOPs per element;\n";
  out << "# baseline counts the routed expert FFN and output maps as MACs "
         "only; anchoring arithmetic is excluded.\n";
  for (const CostComponent& c : report.components) {
    out << std::left << std::setw(14) << c.name << " macs=" << c.macs
        << " elementwise=" << c.elementwise << " flops=" << c.flops() << "\n";
  }
  out << "round_flops        " << report.round_flops << "\n";
  out << "rounds             " << report.rounds << "\n";
  out << "deliberation_flops " << report.deliberation_flops << "\n";
  out << "moe_flops          " << report.moe_flops << "\n";
  out << "ratio              " << format_double(report.ratio) << "\n";
  out << "param_count        " << report.param_count << "\n";
  out << "bottleneck_width   " << report.bottleneck_width << "\n";
}

} // namespace sdg
