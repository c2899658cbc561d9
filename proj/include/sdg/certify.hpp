#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "sdg/theory.hpp"

namespace sdg {

struct CertResult {
  std::string name;
  bool pass = false;
  std::string detail; // inputs, measured quantity, bound
  double seconds = 0.0;
};

// Trial counts of the certificate suite. Defaults are the full sizes the
// acceptance suite runs at; the CLI can scale them down for quick checks.
struct CertOptions {
  std::uint64_t seed = 42;
  int vanilla_tokens = 1000;
  int drift_draws_per_cell = 40; // 27 grid cells
  int contraction_configs = 100;
  int constant_samples = 6;   // tokens per constant estimation
  double fd_step = 1e-4;
  double fixed_point_tol = 1e-8;
  int calibration_draws = 10000;
  int critique_draws = 10000; // per grid cell
  int graph_instances = 10000;
  int intervention_trials = 25;
};

CertResult cert_vanilla_t0(const CertOptions& opt);
CertResult cert_vanilla_beta1(const CertOptions& opt);
CertResult cert_drift_bound(const CertOptions& opt);
CertResult cert_contraction(const CertOptions& opt);
CertResult cert_calibration_identity(const CertOptions& opt);
CertResult cert_calibration_range(const CertOptions& opt);
CertResult cert_gate_lipschitz(const CertOptions& opt);
CertResult cert_signed_critique(const CertOptions& opt);
CertResult cert_cost_model(const CertOptions& opt);
CertResult cert_graph_contracts(const CertOptions& opt);
CertResult cert_intervention_identities(const CertOptions& opt);

std::vector<CertResult> run_certificates(const CertOptions& opt);

// Renders one line per certificate with a header documenting conventions;
// returns true when all passed.
bool write_certificates(std::ostream& out, const std::vector<CertResult>& results);

} // namespace sdg
