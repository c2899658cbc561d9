#include "sdg/params.hpp"

#include <cmath>
#include <limits>

#include "sdg/rng.hpp"

namespace sdg {

InitScheme parse_init_scheme(const std::string& name) {
  if (name == "uniform_fanin") return InitScheme::UniformFanin;
  if (name == "zeros") return InitScheme::Zeros;
  throw ConfigError("unknown init scheme: " + name);
}

std::string init_scheme_name(InitScheme s) {
  return s == InitScheme::UniformFanin ? "uniform_fanin" : "zeros";
}

namespace {

// Fixed stream enumeration. Shared tensors occupy streams 0..15; expert i
// owns the eight streams starting at kExpertBase + 8*i. Biases draw from the
// same fan-in bound as their matrix.
enum Stream : std::uint64_t {
  kRouter = 0,
  kExpertIds = 1,
  kSupportQuery = 2,
  kSupportKey = 3,
  kCritiqueQuery = 4,
  kCritiqueKey = 5,
  kDisagreeProj = 6,
  kMessageProj = 7,
  kUpdateW1 = 8,
  kUpdateB1 = 9,
  kUpdateW2 = 10,
  kUpdateB2 = 11, // reserved; update_b2 is always zero-initialized
  kGateWeight = 12,
  kGateBias = 13,
  kExpertBase = 16,
};

Eigen::MatrixXd fill_matrix(int rows, int cols, int fan_in, std::uint64_t seed,
                            std::uint64_t stream, InitScheme scheme,
                            double scale) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  if (scheme == InitScheme::Zeros || rows == 0 || cols == 0) return m;
  const double bound = scale / std::sqrt(static_cast<double>(fan_in));
  CounterRng rng(seed, stream);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      m(r, c) = rng.uniform_pm(static_cast<std::uint64_t>(r) * cols + c, bound);
  return m;
}

Eigen::VectorXd fill_vector(int n, int fan_in, std::uint64_t seed,
                            std::uint64_t stream, InitScheme scheme,
                            double scale) {
  Eigen::MatrixXd m = fill_matrix(n, 1, fan_in, seed, stream, scheme, scale);
  return m.col(0);
}

Eigen::MatrixXd self_loop_mask(int k, bool allow_self) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
  if (!allow_self) {
    const double ninf = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) m(i, i) = ninf;
  }
  return m;
}

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("params: bad shape for " + what);
}

void require_finite(const Eigen::MatrixXd& m, const std::string& what) {
  if (!m.allFinite()) throw ConfigError("params: non-finite entries in " + what);
}

} // namespace

LayerParams init_params(const LayerConfig& cfg, std::uint64_t seed,
                        InitScheme scheme, double scale) {
  cfg.validate();
  LayerParams p;
  const int d = cfg.model_dim;
  const int dr = cfg.expert_hidden_dim;
  const int ds = cfg.shared_dim;
  const int dp = cfg.private_dim();
  const int df = cfg.feature_dim();

  p.router_weight = fill_matrix(cfg.num_experts, d, d, seed, kRouter, scheme, scale);
  p.expert_ids = fill_matrix(cfg.num_experts, cfg.expert_id_dim,
                             std::max(cfg.expert_id_dim, 1), seed, kExpertIds,
                             scheme, scale);

  p.support_query = fill_matrix(cfg.graph_dim, df, df, seed, kSupportQuery, scheme, scale);
  p.support_key = fill_matrix(cfg.graph_dim, df, df, seed, kSupportKey, scheme, scale);
  p.critique_query = fill_matrix(cfg.graph_dim, df, df, seed, kCritiqueQuery, scheme, scale);
  p.critique_key = fill_matrix(cfg.graph_dim, df, df, seed, kCritiqueKey, scheme, scale);

  p.support_mask = self_loop_mask(cfg.top_k, cfg.support_self_loops);
  p.critique_mask = self_loop_mask(cfg.top_k, cfg.critique_self_loops);

  p.disagree_proj = fill_matrix(cfg.disagree_dim, ds, ds, seed, kDisagreeProj, scheme, scale);
  p.message_proj = fill_matrix(cfg.message_dim, ds, ds, seed, kMessageProj, scheme, scale);

  const int upd_in = ds + 2 * cfg.message_dim;
  p.update_w1 = fill_matrix(cfg.update_hidden_dim, upd_in, upd_in, seed, kUpdateW1, scheme, scale);
  p.update_b1 = fill_vector(cfg.update_hidden_dim, upd_in, seed, kUpdateB1, scheme, scale);
  p.update_w2 = fill_matrix(ds, cfg.update_hidden_dim, cfg.update_hidden_dim,
                            seed, kUpdateW2, scheme, scale);
  p.update_b2 = Eigen::VectorXd::Zero(ds);

  p.gate_weight = fill_matrix(cfg.num_experts, d, d, seed, kGateWeight, scheme, scale);
  p.gate_bias = fill_vector(cfg.num_experts, d, seed, kGateBias, scheme, scale);

  p.experts.resize(cfg.num_experts);
  for (int i = 0; i < cfg.num_experts; ++i) {
    const std::uint64_t base = kExpertBase + 8ull * i;
    ExpertParams& e = p.experts[i];
    e.up_weight = fill_matrix(dr, d, d, seed, base + 0, scheme, scale);
    e.up_bias = fill_vector(dr, d, seed, base + 1, scheme, scale);
    e.private_weight = fill_matrix(dp, dr, dr, seed, base + 2, scheme, scale);
    e.private_bias = fill_vector(dp, dr, seed, base + 3, scheme, scale);
    e.shared_weight = fill_matrix(ds, dr, dr, seed, base + 4, scheme, scale);
    e.shared_bias = fill_vector(ds, dr, seed, base + 5, scheme, scale);
    e.out_private = fill_matrix(d, dp, std::max(dp, 1), seed, base + 6, scheme, scale);
    e.out_shared = fill_matrix(d, ds, ds, seed, base + 7, scheme, scale);
  }
  return p;
}

void validate_params(const LayerParams& p, const LayerConfig& cfg) {
  const int d = cfg.model_dim;
  const int dr = cfg.expert_hidden_dim;
  const int ds = cfg.shared_dim;
  const int dp = cfg.private_dim();
  const int df = cfg.feature_dim();
  const int k = cfg.top_k;

  require_shape(p.router_weight.rows() == cfg.num_experts &&
                    p.router_weight.cols() == d, "router_weight");
  require_shape(static_cast<int>(p.experts.size()) == cfg.num_experts, "experts");
  require_shape(p.expert_ids.rows() == cfg.num_experts &&
                    p.expert_ids.cols() == cfg.expert_id_dim, "expert_ids");
  for (const auto* g : {&p.support_query, &p.support_key, &p.critique_query,
                        &p.critique_key}) {
    require_shape(g->rows() == cfg.graph_dim && g->cols() == df,
                  "graph projection");
  }
  require_shape(p.support_mask.rows() == k && p.support_mask.cols() == k,
                "support_mask");
  require_shape(p.critique_mask.rows() == k && p.critique_mask.cols() == k,
                "critique_mask");
  require_shape(p.disagree_proj.rows() == cfg.disagree_dim &&
                    p.disagree_proj.cols() == ds, "disagree_proj");
  require_shape(p.message_proj.rows() == cfg.message_dim &&
                    p.message_proj.cols() == ds, "message_proj");
  require_shape(p.update_w1.rows() == cfg.update_hidden_dim &&
                    p.update_w1.cols() == ds + 2 * cfg.message_dim, "update_w1");
  require_shape(p.update_b1.size() == cfg.update_hidden_dim, "update_b1");
  require_shape(p.update_w2.rows() == ds &&
                    p.update_w2.cols() == cfg.update_hidden_dim, "update_w2");
  require_shape(p.update_b2.size() == ds, "update_b2");
  require_shape(p.gate_weight.rows() == cfg.num_experts &&
                    p.gate_weight.cols() == d, "gate_weight");
  require_shape(p.gate_bias.size() == cfg.num_experts, "gate_bias");

  require_finite(p.router_weight, "router_weight");
  require_finite(p.expert_ids, "expert_ids");
  require_finite(p.disagree_proj, "disagree_proj");
  require_finite(p.message_proj, "message_proj");
  require_finite(p.update_w1, "update_w1");
  require_finite(p.update_w2, "update_w2");
  require_finite(p.gate_weight, "gate_weight");

  for (int i = 0; i < cfg.num_experts; ++i) {
    const ExpertParams& e = p.experts[i];
    const std::string tag = "expert " + std::to_string(i);
    require_shape(e.up_weight.rows() == dr && e.up_weight.cols() == d, tag);
    require_shape(e.up_bias.size() == dr, tag);
    require_shape(e.private_weight.rows() == dp && e.private_weight.cols() == dr, tag);
    require_shape(e.private_bias.size() == dp, tag);
    require_shape(e.shared_weight.rows() == ds && e.shared_weight.cols() == dr, tag);
    require_shape(e.shared_bias.size() == ds, tag);
    require_shape(e.out_private.rows() == d && e.out_private.cols() == dp, tag);
    require_shape(e.out_shared.rows() == d && e.out_shared.cols() == ds, tag);
    require_finite(e.up_weight, tag);
    require_finite(e.private_weight, tag);
    require_finite(e.shared_weight, tag);
    require_finite(e.out_private, tag);
    require_finite(e.out_shared, tag);
  }
}

} // namespace sdg
