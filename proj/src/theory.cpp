#include "sdg/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sdg/rng.hpp"

namespace sdg {

Eigen::MatrixXd update_field(const Eigen::MatrixXd& shared,
                             const std::vector<int>& experts,
                             const LayerParams& params, const LayerConfig& cfg,
                             const SignedGraphs* frozen) {
  SignedGraphs graphs;
  if (frozen != nullptr) {
    graphs = *frozen;
  } else {
    const GraphFeatures features = build_features(shared, experts, params, cfg);
    graphs = build_graphs(features, params, cfg, 0);
  }
  auto [support_msg, critique_msg] = messages(shared, graphs, params);
  return update_delta(shared, support_msg, critique_msg, params, cfg);
}

Eigen::MatrixXd round_map(const Eigen::MatrixXd& shared,
                          const Eigen::MatrixXd& initial,
                          const std::vector<int>& experts,
                          const Eigen::VectorXd& confidence,
                          const LayerParams& params, const LayerConfig& cfg,
                          const SignedGraphs* frozen) {
  const Eigen::MatrixXd delta = update_field(shared, experts, params, cfg, frozen);
  const double lambda = social_gate(disagreement(shared, params, cfg).first, cfg);
  return anchored_step(shared, initial, delta, lambda, confidence, cfg);
}

std::pair<double, double> drift_bound(double beta, double alpha, double gate_max,
                                      double update_bound, int rounds,
                                      double out_shared_spectral) {
  if (!(beta > 0.0 && beta < 1.0))
    throw std::domain_error("drift_bound: beta must lie in (0, 1)");
  if (rounds < 0) throw std::domain_error("drift_bound: rounds must be >= 0");
  const double head = (1.0 - beta) * alpha * gate_max * update_bound / beta;
  const double hidden = head * (1.0 - std::pow(1.0 - beta, rounds));
  return {hidden, out_shared_spectral * hidden};
}

ContractionCertificate contraction_certificate(const TheoryConstants& consts,
                                               double beta, double alpha) {
  ContractionCertificate cert;
  cert.factor = (1.0 - beta) * (1.0 + alpha * consts.gate_max * consts.composite());
  cert.certified = cert.factor < 1.0;
  return cert;
}

FixedPointResult fixed_point_iterate(const LayerParams& params,
                                     const Eigen::VectorXd& x,
                                     const LayerConfig& cfg, double tol,
                                     int max_iter) {
  const RoutedSet routed = route(x, params, cfg);
  const ExpertStates states = forward_active(x, routed, params, cfg);
  const Eigen::VectorXd confidence =
      confidence_gate(x, routed.experts, params, cfg);

  SignedGraphs frozen;
  bool use_frozen = false;
  if (!cfg.rebuild_graph_each_round) {
    const GraphFeatures features =
        build_features(states.shared_initial, routed.experts, params, cfg);
    frozen = build_graphs(features, params, cfg, 0);
    use_frozen = true;
  }

  FixedPointResult result;
  Eigen::MatrixXd current = states.shared_initial;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd next =
        round_map(current, states.shared_initial, routed.experts, confidence,
                  params, cfg, use_frozen ? &frozen : nullptr);
    const double residual = (next - current).norm();
    result.residuals.push_back(residual);
    current = std::move(next);
    if (residual < tol) {
      result.converged = true;
      break;
    }
  }
  result.fixed_point = std::move(current);
  return result;
}

double spectral_norm(const Eigen::MatrixXd& a, double tol, int max_iter) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  Eigen::VectorXd v(a.cols());
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = 1.0 + 1e-3 * j;
  v.normalize();
  double sigma = 0.0;
  double prev = -1.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = a.transpose() * (a * v);
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    v = w / n;
    sigma = (a * v).norm();
    if (std::abs(sigma - prev) <= tol * std::max(1.0, sigma)) break;
    prev = sigma;
  }
  return sigma;
}

TheoryConstants estimate_constants(const LayerParams& params,
                                   const LayerConfig& cfg, int n_samples,
                                   double fd_step, std::uint64_t seed) {
  if (n_samples < 2)
    throw ConfigError("estimate_constants: n_samples must be >= 2");
  if (!(fd_step > 0.0))
    throw ConfigError("estimate_constants: fd_step must be > 0");

  TheoryConstants consts;
  consts.update_bound_exact = cfg.clip_delta_norm.has_value();

  RngStream rng(seed, 0x7e0cafull);
  const int k = cfg.top_k;
  const int ds = cfg.shared_dim;
  // Extend past the configured round count so the sampled region also covers
  // the tail of a fixed-point iteration.
  const int horizon = std::max(cfg.rounds, 8);
  const int directions = 3;

  double max_update_norm = 0.0;
  double max_update_quotient = 0.0;
  double max_disagree_quotient = 0.0;
  double max_gate = 0.0;

  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd x(cfg.model_dim);
    for (int j = 0; j < cfg.model_dim; ++j) x[j] = rng.gaussian();
    const RoutedSet routed = route(x, params, cfg);
    const ExpertStates states = forward_active(x, routed, params, cfg);
    const Eigen::VectorXd confidence =
        confidence_gate(x, routed.experts, params, cfg);
    max_gate = std::max(max_gate, confidence.maxCoeff());

    Eigen::MatrixXd current = states.shared_initial;
    Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(k, ds);
    for (int t = 0; t <= horizon; ++t) {
      const Eigen::MatrixXd delta =
          update_field(current, routed.experts, params, cfg);
      max_update_norm = std::max(max_update_norm, delta.norm());
      const double score = disagreement(current, params, cfg).first;

      auto probe = [&](const Eigen::MatrixXd& direction) {
        const double dir_norm = direction.norm();
        if (dir_norm == 0.0) return;
        const Eigen::MatrixXd shifted = current + (fd_step / dir_norm) * direction;
        const double separation = (shifted - current).norm();
        if (separation == 0.0) return;
        const Eigen::MatrixXd delta2 =
            update_field(shifted, routed.experts, params, cfg);
        max_update_quotient =
            std::max(max_update_quotient, (delta2 - delta).norm() / separation);
        const double score2 = disagreement(shifted, params, cfg).first;
        max_disagree_quotient =
            std::max(max_disagree_quotient, std::abs(score2 - score) / separation);
      };

      for (int dir = 0; dir < directions; ++dir) {
        Eigen::MatrixXd step(k, ds);
        for (int r = 0; r < k; ++r)
          for (int c = 0; c < ds; ++c) step(r, c) = rng.gaussian();
        probe(step);
      }
      // The trajectory's own step direction dominates the late convergence
      // rate, so probe it explicitly.
      probe(flow);

      if (t < horizon) {
        Eigen::MatrixXd next = round_map(current, states.shared_initial,
                                         routed.experts, confidence, params, cfg);
        flow = next - current;
        current = std::move(next);
      }
    }
  }

  consts.update_bound =
      consts.update_bound_exact ? *cfg.clip_delta_norm : max_update_norm;
  consts.update_lipschitz = max_update_quotient;
  consts.disagreement_lipschitz = max_disagree_quotient;
  consts.gate_max = cfg.confidence_gate_enabled ? max_gate : 1.0;

  // The gate is one-dimensional: scan scores over its full admissible range.
  const double score_cap =
      k >= 2 ? std::sqrt(k / (2.0 * (k - 1))) : 1.0;
  double max_gate_quotient = 0.0;
  const int grid = 2048;
  for (int i = 0; i < grid; ++i) {
    const double d0 = score_cap * i / grid;
    const double d1 = d0 + fd_step;
    max_gate_quotient = std::max(
        max_gate_quotient,
        std::abs(social_gate(d1, cfg) - social_gate(d0, cfg)) / fd_step);
  }
  consts.gate_lipschitz = max_gate_quotient;

  double max_spectral = 0.0;
  for (const ExpertParams& e : params.experts)
    max_spectral = std::max(max_spectral, spectral_norm(e.out_shared));
  consts.out_shared_spectral = max_spectral;
  return consts;
}

CostReport flop_count(const LayerConfig& cfg) {
  cfg.validate();
  const std::int64_t k = cfg.top_k;
  const std::int64_t ds = cfg.shared_dim;
  const std::int64_t dg = cfg.graph_dim;
  const std::int64_t dm = cfg.message_dim;
  const std::int64_t dd = cfg.disagree_dim;
  const std::int64_t du = cfg.update_hidden_dim;
  const std::int64_t de = cfg.expert_id_dim;
  const std::int64_t d = cfg.model_dim;
  const std::int64_t dr = cfg.expert_hidden_dim;

  CostReport report;
  report.rounds = cfg.rounds;

  CostComponent graph;
  graph.name = "graph_build";
  graph.macs = 2 * 2 * k * (ds + de) * dg // query/key projections, both channels
               + 2 * k * k * dg;          // score matrices
  graph.elementwise = k * ds    // layer norm of the shared slice
                      + 2 * k * k; // two softmax matrices

  CostComponent disagree;
  disagree.name = "disagreement";
  disagree.macs = k * ds * dd + k * k * dd;
  disagree.elementwise = k * dd // projection normalization
                         + 1   // gate tanh
                         + (cfg.confidence_gate_enabled ? k : 0);

  CostComponent msg;
  msg.name = "messages";
  msg.macs = k * ds * dm + 2 * k * k * dm;
  msg.elementwise = 0;

  CostComponent update;
  update.name = "update_mlp";
  update.macs = k * (ds + 2 * dm) * du + k * du * ds;
  update.elementwise = k * du;

  report.components = {graph, disagree, msg, update};
  report.round_flops = 0;
  for (const CostComponent& c : report.components) report.round_flops += c.flops();
  report.deliberation_flops = static_cast<std::int64_t>(cfg.rounds) * report.round_flops;

  // Active-expert FFN baseline: gated up projection plus the split down and
  // output maps, MACs only.
  const std::int64_t moe_macs =
      k * (2 * d * dr + dr * (d - ds) + dr * ds + (d - ds) * d + ds * d);
  report.moe_flops = 2 * moe_macs;
  report.ratio = report.moe_flops > 0
                     ? static_cast<double>(report.deliberation_flops) / report.moe_flops
                     : 0.0;

  report.param_count = 4 * dg * (ds + de)       // graph projections
                       + dd * ds                // disagreement projection
                       + dm * ds                // message projection
                       + du * (ds + 2 * dm) + du // update MLP layer 1
                       + ds * du + ds           // update MLP layer 2
                       + cfg.num_experts * de;  // identity table
  if (cfg.confidence_gate_enabled)
    report.param_count += static_cast<std::int64_t>(cfg.num_experts) * (d + 1);

  report.bottleneck_width = static_cast<int>(
      std::max({ds, dg, dm, dd, du, de}));
  return report;
}

CritiqueCheck signed_critique_check(double epsilon, double eta, double xi,
                                    double gamma, const Eigen::VectorXd& r,
                                    int k, RngStream* rng) {
  if (k < 2) throw ConfigError("signed_critique_check: k must be >= 2");
  if (!(eta >= 0.0 && eta <= 1.0 && xi >= 0.0 && xi <= 1.0))
    throw ConfigError("signed_critique_check: eta and xi must lie in [0, 1]");
  if (epsilon < 0.0)
    throw ConfigError("signed_critique_check: epsilon must be >= 0");

  const int dim = static_cast<int>(r.size());
  const int inliers = k - 1; // observing inlier is index 0, outlier is last
  const double r_norm = r.norm();

  // Inlier messages on the epsilon-sphere: aligned with +r in the
  // deterministic worst case, randomized (including sign flips) otherwise.
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(inliers, dim);
  Eigen::VectorXd toward_r = Eigen::VectorXd::Zero(dim);
  if (r_norm > 0.0) toward_r = r / r_norm;
  for (int j = 0; j < inliers; ++j) {
    if (rng == nullptr || r_norm == 0.0) {
      u.row(j) = epsilon * toward_r;
    } else if (rng->uniform01() < 0.5) {
      u.row(j) = epsilon * toward_r;
    } else {
      Eigen::VectorXd dir(dim);
      for (int c = 0; c < dim; ++c) dir[c] = rng->gaussian();
      const double n = dir.norm();
      u.row(j) = n > 0.0 ? (epsilon / n * dir).transpose() : epsilon * toward_r.transpose();
    }
  }

  // Row weights of the observing inlier: xi / eta on the outlier, residual
  // mass spread over the inliers (critique excludes the self edge).
  Eigen::VectorXd support_w = Eigen::VectorXd::Zero(inliers);
  Eigen::VectorXd critique_w = Eigen::VectorXd::Zero(inliers);
  auto spread = [&](Eigen::VectorXd& w, double mass, bool include_self) {
    const int first = include_self ? 0 : 1;
    const int count = inliers - first;
    if (count <= 0 || mass <= 0.0) return;
    if (rng == nullptr) {
      for (int j = first; j < inliers; ++j) w[j] = mass / count;
    } else {
      double total = 0.0;
      for (int j = first; j < inliers; ++j) {
        w[j] = -std::log1p(-rng->uniform01());
        total += w[j];
      }
      for (int j = first; j < inliers; ++j)
        w[j] = total > 0.0 ? mass * w[j] / total : mass / count;
    }
  };
  spread(support_w, 1.0 - xi, /*include_self=*/true);
  spread(critique_w, 1.0 - eta, /*include_self=*/false);

  Eigen::VectorXd contrast = (xi - gamma * eta) * r;
  for (int j = 0; j < inliers; ++j)
    contrast += (support_w[j] - gamma * critique_w[j]) * u.row(j).transpose();

  CritiqueCheck check;
  check.projection = contrast.dot(r);
  const double margin = gamma * eta - xi;
  check.guarantee_active =
      margin > 0.0 && r_norm > (1.0 + gamma) * epsilon / margin;
  return check;
}

GateCalibration gate_calibration(double threshold, int k, double sharpness,
                                 double lambda_min, const TheoryConstants& consts,
                                 double beta, double alpha) {
  if (k < 2) throw ConfigError("gate_calibration: k must be >= 2");
  GateCalibration cal;
  cal.cosine_threshold = 1.0 - 2.0 * threshold * threshold;
  cal.max_disagreement = std::sqrt(k / (2.0 * (k - 1)));
  cal.gate_lipschitz_bound = (1.0 - lambda_min) * sharpness;

  const double conservative =
      (1.0 - beta) *
      (1.0 + alpha * consts.gate_max *
                 (consts.update_lipschitz +
                  consts.update_bound * cal.gate_lipschitz_bound *
                      consts.disagreement_lipschitz));
  cal.stable_gate = conservative < 1.0;

  if (beta > 0.0 && beta < 1.0 && alpha * consts.gate_max > 0.0) {
    const double numerator =
        beta / ((1.0 - beta) * alpha * consts.gate_max) - consts.update_lipschitz;
    if (numerator > 0.0) {
      const double denominator = consts.update_bound * (1.0 - lambda_min) *
                                 consts.disagreement_lipschitz;
      cal.max_certified_sharpness =
          denominator > 0.0 ? numerator / denominator
                            : std::numeric_limits<double>::infinity();
    }
  } else if (beta >= 1.0) {
    cal.max_certified_sharpness = std::numeric_limits<double>::infinity();
  }
  return cal;
}

} // namespace sdg
