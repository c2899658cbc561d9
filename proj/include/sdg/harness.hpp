#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sdg/certify.hpp"
#include "sdg/serialize.hpp"

namespace sdg {

enum class TokenSource { UnitGaussian, FromFile };

// One run of any subcommand is a pure function of this struct, so identical
// configs produce byte-identical artifacts.
struct RunConfig {
  LayerConfig layer;
  std::uint64_t seed = 42;
  InitScheme init_scheme = InitScheme::UniformFanin;
  double init_scale = 1.0;
  TokenSource token_source = TokenSource::UnitGaussian;
  std::string token_file;
  int token_count = 4;
  InterventionKind intervention = InterventionKind::None;
  std::string out_path;

  // verify/theory options
  double tol = 1e-8;
  int n_samples = 16;
  double fd_step = 1e-4;
  // certificate trial scaling in [0,1]; 1 = full acceptance sizes
  double trial_scale = 1.0;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& rc);

// Seeded token batch: unit gaussian rows, or vectors loaded from a
// line-delimited file of JSON arrays.
std::vector<Eigen::VectorXd> make_tokens(const RunConfig& rc);

// Exit codes: 0 success, 1 selftest/assertion failure, 2 malformed
// configuration or usage, 3 failed certificate.
constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCertificate = 3;

// Subcommands: forward, trace, verify, flops, diagnose, intervene, selftest.
// argv excludes the program name. Primary output goes to `out` (and to
// --out PATH when given); errors go to `err`.
int run_command(const std::vector<std::string>& argv, std::ostream& out,
                std::ostream& err);

} // namespace sdg
