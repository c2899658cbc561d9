#include "sdg/certify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "sdg/rng.hpp"
#include "sdg/serialize.hpp"

namespace sdg {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

LayerConfig small_config() {
  LayerConfig cfg;
  cfg.model_dim = 48;
  cfg.expert_hidden_dim = 24;
  cfg.shared_dim = 12;
  cfg.graph_dim = 8;
  cfg.message_dim = 8;
  cfg.disagree_dim = 6;
  cfg.update_hidden_dim = 16;
  cfg.expert_id_dim = 4;
  cfg.num_experts = 8;
  cfg.top_k = 4;
  cfg.critique_fanout = 2;
  cfg.rounds = 2;
  return cfg;
}

Eigen::VectorXd gaussian_token(RngStream& rng, int dim) {
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = rng.gaussian();
  return x;
}

bool bits_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return (a.array() == b.array()).all();
}

// Independent reference: plain-loop softmax routing, expert FFN split, and
// router-weighted aggregation of the round-0 states.
Eigen::VectorXd vanilla_reference(const Eigen::VectorXd& x,
                                  const LayerParams& p, const LayerConfig& cfg) {
  const int n = cfg.num_experts;
  const int d = cfg.model_dim;
  std::vector<double> logits(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) logits[i] += p.router_weight(i, j) * x[j];
  double max_logit = logits[0];
  for (double v : logits) max_logit = std::max(max_logit, v);
  std::vector<double> probs(n);
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    probs[i] = std::exp(logits[i] - max_logit);
    z += probs[i];
  }
  for (double& v : probs) v /= z;

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });
  std::vector<int> active(order.begin(), order.begin() + cfg.top_k);
  std::sort(active.begin(), active.end());
  double mass = 0.0;
  for (int i : active) mass += probs[i];

  Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
  for (int i : active) {
    const ExpertParams& e = p.experts[i];
    std::vector<double> hidden(cfg.expert_hidden_dim);
    for (int r = 0; r < cfg.expert_hidden_dim; ++r) {
      double acc = e.up_bias[r];
      for (int c = 0; c < d; ++c) acc += e.up_weight(r, c) * x[c];
      hidden[r] = apply_activation(cfg.activation, acc);
    }
    std::vector<double> priv(cfg.private_dim()), shared(cfg.shared_dim);
    for (int r = 0; r < cfg.private_dim(); ++r) {
      double acc = e.private_bias[r];
      for (int c = 0; c < cfg.expert_hidden_dim; ++c)
        acc += e.private_weight(r, c) * hidden[c];
      priv[r] = acc;
    }
    for (int r = 0; r < cfg.shared_dim; ++r) {
      double acc = e.shared_bias[r];
      for (int c = 0; c < cfg.expert_hidden_dim; ++c)
        acc += e.shared_weight(r, c) * hidden[c];
      shared[r] = acc;
    }
    const double w = probs[i] / mass;
    for (int r = 0; r < d; ++r) {
      double acc = 0.0;
      for (int c = 0; c < cfg.private_dim(); ++c) acc += e.out_private(r, c) * priv[c];
      for (int c = 0; c < cfg.shared_dim; ++c) acc += e.out_shared(r, c) * shared[c];
      y[r] += w * acc;
    }
  }
  return y;
}

double relative_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  const double scale = std::max(want.norm(), 1e-12);
  return (got - want).norm() / scale;
}

CertResult vanilla_cert(const CertOptions& opt, const std::string& name,
                        int rounds, double beta) {
  const auto start = Clock::now();
  LayerConfig cfg = small_config();
  cfg.rounds = rounds;
  cfg.beta = beta;
  RngStream rng(opt.seed, mix64(0x56414e49ull));
  double max_rel = 0.0;
  LayerParams params;
  for (int t = 0; t < opt.vanilla_tokens; ++t) {
    if (t % 100 == 0) params = init_params(cfg, rng.word());
    const Eigen::VectorXd x = gaussian_token(rng, cfg.model_dim);
    const Eigen::VectorXd got = layer_forward(x, params, cfg);
    const Eigen::VectorXd want = vanilla_reference(x, params, cfg);
    max_rel = std::max(max_rel, relative_error(got, want));
  }
  CertResult res;
  res.name = name;
  res.pass = max_rel <= 1e-6;
  std::ostringstream detail;
  detail << "tokens=" << opt.vanilla_tokens << " rounds=" << rounds
         << " beta=" << format_double(beta)
         << " max_rel_err=" << format_double(max_rel) << " bound=1e-06";
  res.detail = detail.str();
  res.seconds = elapsed_since(start);
  return res;
}

} // namespace

CertResult cert_vanilla_t0(const CertOptions& opt) {
  return vanilla_cert(opt, "vanilla_equivalence_t0", 0, 0.5);
}

CertResult cert_vanilla_beta1(const CertOptions& opt) {
  return vanilla_cert(opt, "vanilla_equivalence_beta1", 2, 1.0);
}

CertResult cert_drift_bound(const CertOptions& opt) {
  const auto start = Clock::now();
  const double clips[] = {0.5, 1.0, 2.0};
  const double betas[] = {0.3, 0.5, 0.8};
  const int round_counts[] = {1, 2, 4};

  int draws = 0;
  int violations = 0;
  double max_hidden_frac = 0.0;
  double max_output_frac = 0.0;

  int cell = 0;
  for (double clip : clips) {
    for (double beta : betas) {
      for (int rounds : round_counts) {
        ++cell;
        LayerConfig cfg = small_config();
        cfg.clip_delta_norm = clip;
        cfg.beta = beta;
        cfg.rounds = rounds;
        RngStream rng(opt.seed, mix64(0xd21f7ull) + cell);
        for (int i = 0; i < opt.drift_draws_per_cell; ++i) {
          const LayerParams params = init_params(cfg, rng.word());
          const Eigen::VectorXd x = gaussian_token(rng, cfg.model_dim);
          double max_spectral = 0.0;
          for (const ExpertParams& e : params.experts)
            max_spectral = std::max(max_spectral, spectral_norm(e.out_shared));
          const auto [hidden_bound, output_bound] =
              drift_bound(beta, cfg.alpha, 1.0, clip, rounds, max_spectral);

          const DeliberationTrace trace = deliberate(x, params, cfg);
          const double hidden_drift =
              (trace.final_shared() - trace.shared.front()).norm();
          ExpertStates base;
          base.private_state = trace.private_state;
          base.shared_initial = trace.shared.front();
          base.shared = trace.shared.front();
          const Eigen::VectorXd y0 = aggregate(base, trace.routed, params, cfg);
          const Eigen::VectorXd yT = aggregate_trace(trace, params, cfg);
          const double output_drift = (yT - y0).norm();

          ++draws;
          if (hidden_drift > hidden_bound || output_drift > output_bound)
            ++violations;
          if (hidden_bound > 0.0)
            max_hidden_frac = std::max(max_hidden_frac, hidden_drift / hidden_bound);
          if (output_bound > 0.0)
            max_output_frac = std::max(max_output_frac, output_drift / output_bound);
        }
      }
    }
  }

  CertResult res;
  res.name = "drift_bound_grid";
  res.pass = violations == 0 && draws >= 1000;
  std::ostringstream detail;
  detail << "draws=" << draws << " violations=" << violations
         << " max_hidden_fraction=" << format_double(max_hidden_frac)
         << " max_output_fraction=" << format_double(max_output_frac);
  res.detail = detail.str();
  res.seconds = elapsed_since(start);
  return res;
}

CertResult cert_contraction(const CertOptions& opt) {
  const auto start = Clock::now();
  RngStream rng(opt.seed, mix64(0xc0a7ac7ull));

  int accepted = 0;
  int attempts = 0;
  int converged = 0;
  int ratio_breaches = 0;
  double worst_margin = 1.0; // min over configs of (limit - late ratio)

  const int max_attempts = 40 * opt.contraction_configs;
  while (accepted < opt.contraction_configs && attempts < max_attempts) {
    ++attempts;
    LayerConfig cfg = small_config();
    cfg.top_k = 2 + static_cast<int>(rng.below(3));
    cfg.num_experts = cfg.top_k + 2;
    cfg.shared_dim = 8 + 4 * static_cast<int>(rng.below(3));
    cfg.rounds = 2;
    cfg.gate_threshold = 0.0;
    cfg.beta = rng.uniform(0.65, 0.92);
    cfg.alpha = rng.uniform(0.2, 0.8);
    cfg.clip_delta_norm = rng.uniform(0.3, 1.0);

    const std::uint64_t config_seed = rng.word();
    const LayerParams params = init_params(cfg, config_seed);
    const TheoryConstants consts = estimate_constants(
        params, cfg, opt.constant_samples, opt.fd_step, config_seed ^ 0x5eedull);
    const ContractionCertificate cert =
        contraction_certificate(consts, cfg.beta, cfg.alpha);
    if (!(cert.factor <= 0.95)) continue;

    ++accepted;
    const Eigen::VectorXd x = gaussian_token(rng, cfg.model_dim);
    const FixedPointResult fp =
        fixed_point_iterate(params, x, cfg, opt.fixed_point_tol, 500);
    if (fp.converged) ++converged;

    const double limit = cert.factor + 0.05;
    for (size_t k = 2; k + 1 < fp.residuals.size(); ++k) {
      if (fp.residuals[k] <= 0.0) break;
      const double ratio = fp.residuals[k + 1] / fp.residuals[k];
      worst_margin = std::min(worst_margin, limit - ratio);
      if (ratio > limit) ++ratio_breaches;
    }
  }

  CertResult res;
  res.name = "contraction_fixed_point";
  res.pass = accepted >= opt.contraction_configs && converged == accepted &&
             ratio_breaches == 0;
  std::ostringstream detail;
  detail << "configs=" << accepted << " converged=" << converged
         << " tol=" << format_double(opt.fixed_point_tol)
         << " ratio_breaches=" << ratio_breaches
         << " min_ratio_margin=" << format_double(worst_margin);
  res.detail = detail.str();
  res.seconds = elapsed_since(start);
  return res;
}

CertResult cert_calibration_identity(const CertOptions& opt) {
  const auto start = Clock::now();
  RngStream rng(opt.seed, mix64(0xca11b0ull));
  LayerConfig cfg = small_config();
  double max_gap = 0.0;
  const int ks[] = {2, 3, 4, 8};
  LayerParams params = init_params(cfg, rng.word());
  for (int i = 0; i < opt.calibration_draws; ++i) {
    const int k = ks[i % 4];
    if (i % 500 == 0) params = init_params(cfg, rng.word());
    Eigen::MatrixXd shared(k, cfg.shared_dim);
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < cfg.shared_dim; ++c) shared(r, c) = rng.gaussian();
    const double score = disagreement(shared, params, cfg).first;

    // Oracle: explicit eps-normalized projections and pairwise cosine mean.
    Eigen::MatrixXd projected = shared * params.disagree_proj.transpose();
    for (int r = 0; r < k; ++r) projected.row(r) /= projected.row(r).norm() + cfg.eps;
    double cos_sum = 0.0;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        if (a != b) cos_sum += projected.row(a).dot(projected.row(b));
    const double mean_cos = cos_sum / (static_cast<double>(k) * (k - 1));
    max_gap = std::max(max_gap, std::abs(score * score - 0.5 * (1.0 - mean_cos)));
  }
  CertResult res;
  res.name = "calibration_identity";
  res.pass = max_gap <= 1e-9;
  std::ostringstream detail;
  detail << "draws=" << opt.calibration_draws
         << " max|D^2-(1-mean_cos)/2|=" << format_double(max_gap)
         << " bound=1e-09";
  res.detail = detail.str();
  res.seconds = elapsed_since(start);
  return res;
}

CertResult cert_calibration_range(const CertOptions& opt) {
  const auto start = Clock::now();
  RngStream rng(opt.seed, mix64(0xca11b1ull));
  LayerConfig cfg = small_config();
  int range_violations = 0;
  int lambda_violations = 0;
  const int ks[] = {2, 3, 4, 8};
  LayerParams params = init_params(cfg, rng.word());
  for (int i = 0; i < opt.calibration_draws; ++i) {
    const int k = ks[i % 4];
    if (i % 500 == 0) params = init_params(cfg, rng.word());
    Eigen::MatrixXd shared(k, cfg.shared_dim);
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < cfg.shared_dim; ++c) shared(r, c) = rng.gaussian();
    const double score = disagreement(shared, params, cfg).first;
    const double cap = std::sqrt(k / (2.0 * (k - 1)));
    if (!(score >= 0.0 && score <= cap + 1e-12)) ++range_violations;
    const double lambda = social_gate(score, cfg);
    if (!(lambda >= cfg.lambda_min && lambda < 1.0)) ++lambda_violations;
  }

  // An antipodal pair saturates the k = 2 cap.
  Eigen::MatrixXd pair(2, cfg.shared_dim);
  for (int c = 0; c < cfg.shared_dim; ++c) pair(0, c) = rng.gaussian();
  pair.row(1) = -pair.row(0);
  const double saturated = disagreement(pair, params, cfg).first;

  // Gate monotonicity over a score grid.
  int monotonicity_breaks = 0;
  double prev = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double lambda = social_gate(1.2 * i / 1000.0, cfg);
    if (lambda < prev) ++monotonicity_breaks;
    prev = lambda;
  }

  CertResult res;
  res.name = "calibration_range";
  res.pass = range_violations == 0 && lambda_violations == 0 &&
             saturated >= 1.0 - 1e-6 && saturated <= 1.0 + 1e-12 &&
             monotonicity_breaks == 0;
  std::ostringstream detail;
  detail << "draws=" << opt.calibration_draws
         << " range_violations=" << range_violations
         << " lambda_violations=" << lambda_violations
         << " antipodal_score=" << format_double(saturated)
         << " monotonicity_breaks=" << monotonicity_breaks;
  res.detail = detail.str();
  res.seconds = elapsed_since(start);
  return res;
}

CertResult cert_gate_lipschitz(const CertOptions& opt) {
  const auto start = Clock::now();
  RngStream rng(opt.seed, mix64(0x11b5ull));
  const double sharpness_values[] = {0.5, 1.0, 2.0, 4.0};
  const double floors[] = {0.0, 0.2, 0.5};
  double worst_excess = -1.0;
  for (double sharpness : sharpness_values) {
    for (double floor : floors) {
      LayerConfig cfg = small_config();
      cfg.gate_sharpness = sharpness;
      cfg.lambda_min = floor;
      const double bound = (1.0 - floor) * sharpness;
      double max_quotient = 0.0;
      for (int i = 0; i < 4000; ++i) {
        const double d0 = rng.uniform(0.0, 1.2);
        const double d1 = d0 + opt.fd_step;
        max_quotient = std::max(
            max_quotient,
            std::abs(social_gate(d1, cfg) - social_gate(d0, cfg)) / opt.fd_step);
      }
      worst_excess = std::max(worst_excess, max_quotient - bound);
    }
  }
  CertResult res;
  res.name = "gate_lipschitz";
  res.pass = worst_excess <= 1e-6;
  std::ostringstream detail;
  detail << "max(empirical-(1-lambda_min)*sharpness)="
         << format_double(worst_excess) << " bound=1e-06";
  res.detail = detail.str();
  res.seconds = elapsed_since(start);
  return res;
}

CertResult cert_signed_critique(const CertOptions& opt) {
  const auto start = Clock::now();
  RngStream rng(opt.seed, mix64(0x5c17ull));
  const double gammas[] = {0.5, 1.0, 2.0};
  const double etas[] = {0.3, 0.6, 0.9};
  const double xis[] = {0.0, 0.05, 0.2};
  const double epsilons[] = {0.01, 0.1};
  const int ks[] = {2, 4, 8};
  const int dim = 6;

  long long active = 0;
  long long violations = 0;
  long long total = 0;
  double worst_projection = -1.0; // max projection among active instances

  int cell = 0;
  for (double gamma : gammas) {
    for (double eta : etas) {
      for (double xi : xis) {
        for (double epsilon : epsilons) {
          ++cell;
          const double margin = gamma * eta - xi;
          for (int i = 0; i < opt.critique_draws; ++i) {
            const int k = ks[i % 3];
            Eigen::VectorXd direction(dim);
            for (int c = 0; c < dim; ++c) direction[c] = rng.gaussian();
            direction.normalize();
            double norm;
            if (margin > 0.0) {
              const double threshold = (1.0 + gamma) * epsilon / margin;
              norm = threshold * rng.uniform(0.2, 3.0);
            } else {
              norm = rng.uniform(0.1, 2.0);
            }
            const Eigen::VectorXd r = norm * direction;
            const CritiqueCheck check =
                signed_critique_check(epsilon, eta, xi, gamma, r, k, &rng);
            ++total;
            if (check.guarantee_active) {
              ++active;
              worst_projection = std::max(worst_projection, check.projection);
              if (!(check.projection < 0.0)) ++violations;
            }
          }
        }
      }
    }
  }

  CertResult res;
  res.name = "signed_critique_grid";
  res.pass = violations == 0 && active > 0;
  std::ostringstream detail;
  detail << "cells=" << cell << " draws=" << total << " active=" << active
         << " violations=" << violations
         << " max_active_projection=" << format_double(worst_projection);
  res.detail = detail.str();
  res.seconds = elapsed_since(start);
  return res;
}

CertResult cert_cost_model(const CertOptions& opt) {
  (void)opt;
  const auto start = Clock::now();
  LayerConfig cfg; // default reference configuration

  bool linear = true;
  const CostReport one = [&] {
    LayerConfig c = cfg;
    c.rounds = 1;
    return flop_count(c);
  }();
  for (int t : {0, 1, 2, 3, 5, 8, 16}) {
    LayerConfig c = cfg;
    c.rounds = t;
    const CostReport rep = flop_count(c);
    if (rep.deliberation_flops != static_cast<std::int64_t>(t) * one.round_flops)
      linear = false;
    std::int64_t sum = 0;
    for (const CostComponent& comp : rep.components) sum += comp.flops();
    if (sum != rep.round_flops) linear = false;
  }

  const CostReport rep = flop_count(cfg); // rounds = 2
  const int layers = 28;
  const double total = static_cast<double>(rep.deliberation_flops) * layers;
  const double reference_overhead = 0.103e9; // budget for the 28-layer stack
  const double ratio = reference_overhead / total;
  const bool within = ratio <= 3.0 && ratio >= 1.0 / 3.0;

  CertResult res;
  res.name = "cost_model";
  res.pass = linear && within;
  std::ostringstream detail;
  detail << "linear_in_rounds=" << (linear ? "yes" : "no")
         << " per_layer_flops=" << rep.deliberation_flops
         << " stack_total=" << format_double(total)
         << " reference_overhead=" << format_double(reference_overhead)
         << " ratio=" << format_double(ratio) << " bound=[1/3,3]";
  res.detail = detail.str();
  res.seconds = elapsed_since(start);
  return res;
}

CertResult cert_graph_contracts(const CertOptions& opt) {
  const auto start = Clock::now();
  RngStream rng(opt.seed, mix64(0x6ea9ull));
  int support_violations = 0;
  int sparsity_violations = 0;
  int sum_violations = 0;
  int diag_violations = 0;

  LayerConfig cfg = small_config();
  cfg.model_dim = 12;
  cfg.expert_hidden_dim = 6;
  cfg.shared_dim = 6;
  LayerParams params = init_params(cfg, rng.word());

  for (int i = 0; i < opt.graph_instances; ++i) {
    LayerConfig c = cfg;
    c.top_k = 1 + static_cast<int>(rng.below(8));
    c.num_experts = std::max(c.top_k, 8);
    c.critique_fanout = 1 + static_cast<int>(rng.below(3));
    c.expert_id_dim = (i % 2 == 0) ? 4 : 0;
    if (i % 97 == 0) params = init_params(cfg, rng.word());

    Eigen::MatrixXd shared(c.top_k, c.shared_dim);
    for (int r = 0; r < c.top_k; ++r)
      for (int col = 0; col < c.shared_dim; ++col) shared(r, col) = rng.gaussian();
    std::vector<int> experts(c.top_k);
    for (int j = 0; j < c.top_k; ++j) experts[j] = j;

    // Masks are sized per active set; rebuild for this k.
    LayerParams local = params;
    local.support_mask = Eigen::MatrixXd::Zero(c.top_k, c.top_k);
    local.critique_mask = Eigen::MatrixXd::Zero(c.top_k, c.top_k);
    for (int j = 0; j < c.top_k; ++j)
      local.critique_mask(j, j) = -std::numeric_limits<double>::infinity();
    if (c.expert_id_dim == 0) {
      LayerConfig wide = cfg;
      wide.expert_id_dim = 0;
      local.support_query = params.support_query.leftCols(wide.feature_dim());
      local.support_key = params.support_key.leftCols(wide.feature_dim());
      local.critique_query = params.critique_query.leftCols(wide.feature_dim());
      local.critique_key = params.critique_key.leftCols(wide.feature_dim());
    }

    const GraphFeatures features = build_features(shared, experts, local, c);
    const Eigen::MatrixXd support = build_support(features, local, c);
    const Eigen::MatrixXd critique = build_critique(features, local, c);

    for (int r = 0; r < c.top_k; ++r) {
      if (std::abs(support.row(r).sum() - 1.0) > 1e-6) ++support_violations;
      int nnz = 0;
      for (int col = 0; col < c.top_k; ++col)
        if (critique(r, col) != 0.0) ++nnz;
      if (nnz > c.critique_fanout) ++sparsity_violations;
      const double row_sum = critique.row(r).sum();
      if (row_sum > 0.0 && std::abs(row_sum - 1.0) > 1e-6) ++sum_violations;
      if (critique(r, r) != 0.0) ++diag_violations;
    }
  }

  CertResult res;
  res.name = "graph_contracts";
  res.pass = support_violations == 0 && sparsity_violations == 0 &&
             sum_violations == 0 && diag_violations == 0;
  std::ostringstream detail;
  detail << "instances=" << opt.graph_instances
         << " support_row_violations=" << support_violations
         << " sparsity_violations=" << sparsity_violations
         << " critique_sum_violations=" << sum_violations
         << " diag_violations=" << diag_violations << " tolerance=1e-06";
  res.detail = detail.str();
  res.seconds = elapsed_since(start);
  return res;
}

CertResult cert_intervention_identities(const CertOptions& opt) {
  const auto start = Clock::now();
  RngStream rng(opt.seed, mix64(0x17e2ull));

  int zero_neg_mismatches = 0;
  int swap_mismatches = 0;
  int closed_gate_mismatches = 0;
  int fixed_zero_mismatches = 0;

  for (int trial = 0; trial < opt.intervention_trials; ++trial) {
    LayerConfig cfg = small_config();
    cfg.rounds = 3;
    cfg.gamma = 1.3;
    const std::uint64_t seed = rng.word();
    const LayerParams params = init_params(cfg, seed);
    const Eigen::VectorXd x = gaussian_token(rng, cfg.model_dim);

    // zero_neg equals gamma = 0 bit for bit.
    {
      const DeliberationTrace a = deliberate(x, params, cfg, InterventionKind::ZeroNeg);
      LayerConfig zero_gamma = cfg;
      zero_gamma.gamma = 0.0;
      const DeliberationTrace b = deliberate(x, params, zero_gamma);
      bool same = a.shared.size() == b.shared.size();
      for (size_t s = 0; same && s < a.shared.size(); ++s)
        same = bits_equal(a.shared[s], b.shared[s]);
      if (!same || !bits_equal(aggregate_trace(a, params, cfg).transpose(),
                               aggregate_trace(b, params, zero_gamma).transpose()))
        ++zero_neg_mismatches;
    }

    // Swapping the channels twice restores the graphs bit for bit.
    {
      const RoutedSet routed = route(x, params, cfg);
      const ExpertStates states = forward_active(x, routed, params, cfg);
      const GraphFeatures features =
          build_features(states.shared_initial, routed.experts, params, cfg);
      const SignedGraphs graphs = build_graphs(features, params, cfg, 0);
      const SignedGraphs twice = swap_graphs(swap_graphs(graphs));
      if (!bits_equal(graphs.support, twice.support) ||
          !bits_equal(graphs.critique, twice.critique))
        ++swap_mismatches;
    }

    // Closed gate: lambda_min = 0 and the threshold above the score cap
    // leave every snapshot bit-identical.
    {
      LayerConfig closed = cfg;
      closed.lambda_min = 0.0;
      closed.gate_threshold = 1.5;
      closed.rounds = 5;
      const DeliberationTrace trace = deliberate(x, params, closed);
      for (const Eigen::MatrixXd& snapshot : trace.shared)
        if (!bits_equal(snapshot, trace.shared.front())) {
          ++closed_gate_mismatches;
          break;
        }
      for (const RoundRecord& rec : trace.rounds)
        if (rec.gate.disagreement > closed.gate_threshold) ++closed_gate_mismatches;
    }

    // fixed_lambda_g with value zero reproduces the zero-round output.
    {
      LayerConfig fixed = cfg;
      fixed.variant = Variant::FixedLambdaG;
      fixed.fixed_lambda_g_value = 0.0;
      const Eigen::VectorXd y_fixed = layer_forward(x, params, fixed);
      LayerConfig no_rounds = cfg;
      no_rounds.rounds = 0;
      const Eigen::VectorXd y0 = layer_forward(x, params, no_rounds);
      if (!bits_equal(y_fixed.transpose(), y0.transpose()))
        ++fixed_zero_mismatches;
    }
  }

  CertResult res;
  res.name = "intervention_identities";
  res.pass = zero_neg_mismatches == 0 && swap_mismatches == 0 &&
             closed_gate_mismatches == 0 && fixed_zero_mismatches == 0;
  std::ostringstream detail;
  detail << "trials=" << opt.intervention_trials
         << " zero_neg_mismatches=" << zero_neg_mismatches
         << " swap_involution_mismatches=" << swap_mismatches
         << " closed_gate_mismatches=" << closed_gate_mismatches
         << " fixed_zero_mismatches=" << fixed_zero_mismatches
         << " comparison=bit_exact";
  res.detail = detail.str();
  res.seconds = elapsed_since(start);
  return res;
}

std::vector<CertResult> run_certificates(const CertOptions& opt) {
  return {cert_vanilla_t0(opt),
          cert_vanilla_beta1(opt),
          cert_drift_bound(opt),
          cert_contraction(opt),
          cert_calibration_identity(opt),
          cert_calibration_range(opt),
          cert_gate_lipschitz(opt),
          cert_signed_critique(opt),
          cert_cost_model(opt),
          cert_graph_contracts(opt),
          cert_intervention_identities(opt)};
}

bool write_certificates(std::ostream& out, const std::vector<CertResult>& results) {
  out << "# certificate suite\n";
  out << "# conventions: Frobenius norms unless noted; estimated regularity\n";
  out << "# constants are maxima over sampled states and therefore lower\n";
  out << "# bounds on the true suprema; the update-field cap is exact when\n";
  out << "# clipping is configured.\n";
  bool all = true;
  for (const CertResult& r : results) {
    out << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "  " << r.detail << "  ("
        << format_double(r.seconds) << "s)\n";
    all = all && r.pass;
  }
  out << (all ? "all certificates passed\n" : "certificate failures present\n");
  return all;
}

} // namespace sdg
