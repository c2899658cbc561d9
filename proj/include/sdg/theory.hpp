#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdg/deliberate.hpp"

namespace sdg {

// Local regularity constants of the round map, plus the derived composite
// and contraction factor. Estimated constants are maxima over sampled
// states, hence lower bounds on the true suprema; update_bound is exact
// when it comes from the configured clipping cap.
struct TheoryConstants {
  double update_bound = 0.0;          // Frobenius cap on the update field
  double update_lipschitz = 0.0;      // of the update field in the shared states
  double disagreement_lipschitz = 0.0;
  double gate_lipschitz = 0.0;        // of lambda as a function of the score
  double gate_max = 1.0;              // confidence-gate bound, <= 1
  double out_shared_spectral = 0.0;   // max spectral norm of the shared output maps
  bool update_bound_exact = false;

  // composite = L_update + B_update * L_gate * L_disagreement.
  double composite() const {
    return update_lipschitz + update_bound * gate_lipschitz * disagreement_lipschitz;
  }
};

// Geometric bounds on how far `rounds` anchored rounds can move the shared
// states and the layer output: (hidden_bound, output_bound). Requires
// beta in (0, 1); throws std::domain_error otherwise.
std::pair<double, double> drift_bound(double beta, double alpha, double gate_max,
                                      double update_bound, int rounds,
                                      double out_shared_spectral);

struct ContractionCertificate {
  double factor = 0.0; // (1-beta)(1 + alpha*gate_max*composite)
  bool certified = false;
};

// The two equivalent tests factor < 1 and alpha*gate_max*composite <
// beta/(1-beta) agree; the certificate stores the factor form.
ContractionCertificate contraction_certificate(const TheoryConstants& consts,
                                               double beta, double alpha);

struct FixedPointResult {
  Eigen::MatrixXd fixed_point;
  std::vector<double> residuals; // Frobenius step sizes per iteration
  bool converged = false;
};

// Iterates the one-round map from the routed initial states until the step
// falls below tol or max_iter is reached. Non-convergence is reported, not
// thrown; the residual series identifies a non-contractive regime.
FixedPointResult fixed_point_iterate(const LayerParams& params,
                                     const Eigen::VectorXd& x,
                                     const LayerConfig& cfg, double tol,
                                     int max_iter);

// Samples deliberation trajectories for n_samples random tokens, extends
// them a few extra rounds to cover the fixed-point region, and estimates the
// constants by finite-difference quotients at separation fd_step.
TheoryConstants estimate_constants(const LayerParams& params,
                                   const LayerConfig& cfg, int n_samples,
                                   double fd_step, std::uint64_t seed);

struct CostComponent {
  std::string name;
  std::int64_t macs = 0;        // multiply-accumulates
  std::int64_t elementwise = 0; // nonlinearity evaluations
  std::int64_t flops() const { return 2 * macs + 5 * elementwise; }
};

// Exact per-layer, per-token operation counts. Convention, also printed in
// report headers: 1 MAC = 2 FLOPs; each elementwise nonlinearity evaluation
// (softmax entry, layer-norm output, tanh, sigmoid, activation) = 5 FLOPs.
// The active-expert FFN baseline counts MACs only. Totals are exact integer
// sums of the components and exactly linear in the round count.
struct CostReport {
  std::vector<CostComponent> components; // graph_build, disagreement, messages, update_mlp
  int rounds = 0;
  std::int64_t round_flops = 0;
  std::int64_t deliberation_flops = 0; // rounds * round_flops
  std::int64_t moe_flops = 0;          // routed FFN + output projection baseline
  std::int64_t param_count = 0;        // deliberation-module parameters
  double ratio = 0.0;                  // deliberation_flops / moe_flops
  int bottleneck_width = 0;
};

CostReport flop_count(const LayerConfig& cfg);

struct CritiqueCheck {
  bool guarantee_active = false;
  double projection = 0.0;
};

// Builds a centered outlier instance over k experts: the outlier message is
// r; the k-1 inlier messages lie on the epsilon-sphere (aligned with +r when
// rng is null, randomized placements and residual-mass splits otherwise);
// the observing inlier row puts weight eta on the outlier in the critique
// graph and at most xi in the support graph. Returns the brute-force
// projection of the signed contrast onto r and whether the hypothesis
// gamma*eta > xi, ||r|| > (1+gamma)*epsilon/(gamma*eta - xi) holds; whenever
// it does, the projection is negative.
CritiqueCheck signed_critique_check(double epsilon, double eta, double xi,
                                    double gamma, const Eigen::VectorXd& r,
                                    int k, RngStream* rng = nullptr);

struct GateCalibration {
  double cosine_threshold = 0.0;     // mean cosine below which the gate opens
  double max_disagreement = 0.0;     // sqrt(k/(2(k-1)))
  double gate_lipschitz_bound = 0.0; // (1-lambda_min)*sharpness
  bool stable_gate = false;          // conservative contraction check
  // Largest sharpness the conservative certificate admits; absent when no
  // positive sharpness is certified, +inf when unconstrained.
  std::optional<double> max_certified_sharpness;
};

GateCalibration gate_calibration(double threshold, int k, double sharpness,
                                 double lambda_min, const TheoryConstants& consts,
                                 double beta, double alpha);

// Largest singular value by power iteration on A^T A.
double spectral_norm(const Eigen::MatrixXd& a, double tol = 1e-8,
                     int max_iter = 500);

// The raw update field of the round map as a function of the shared states
// (graphs rebuilt from `shared` unless frozen ones are supplied), with the
// configured clipping applied. Gate factors are not included.
Eigen::MatrixXd update_field(const Eigen::MatrixXd& shared,
                             const std::vector<int>& experts,
                             const LayerParams& params, const LayerConfig& cfg,
                             const SignedGraphs* frozen = nullptr);

// One application of the full round map including gates and anchoring.
Eigen::MatrixXd round_map(const Eigen::MatrixXd& shared,
                          const Eigen::MatrixXd& initial,
                          const std::vector<int>& experts,
                          const Eigen::VectorXd& confidence,
                          const LayerParams& params, const LayerConfig& cfg,
                          const SignedGraphs* frozen = nullptr);

} // namespace sdg
