#include "sdg/harness.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "sdg/diagnostics.hpp"
#include "sdg/rng.hpp"

namespace sdg {

namespace {

constexpr std::uint64_t kTokenStream = 0x70cull;

} // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig rc;
  if (j.contains("layer")) rc.layer = layer_config_from_json(j.at("layer"));
  if (j.contains("seed")) rc.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("init")) {
    const auto& init = j.at("init");
    if (init.contains("scheme"))
      rc.init_scheme = parse_init_scheme(init.at("scheme").get<std::string>());
    if (init.contains("scale")) rc.init_scale = init.at("scale").get<double>();
  }
  if (j.contains("tokens")) {
    const auto& tokens = j.at("tokens");
    if (tokens.contains("count")) rc.token_count = tokens.at("count").get<int>();
    if (tokens.contains("distribution")) {
      const std::string dist = tokens.at("distribution").get<std::string>();
      if (dist == "unit-gaussian") {
        rc.token_source = TokenSource::UnitGaussian;
      } else if (dist == "from-file") {
        rc.token_source = TokenSource::FromFile;
      } else {
        throw ConfigError("tokens.distribution must be unit-gaussian or from-file");
      }
    }
    if (tokens.contains("path")) rc.token_file = tokens.at("path").get<std::string>();
  }
  if (j.contains("options")) {
    const auto& opt = j.at("options");
    if (opt.contains("tol")) rc.tol = opt.at("tol").get<double>();
    if (opt.contains("n_samples")) rc.n_samples = opt.at("n_samples").get<int>();
    if (opt.contains("fd_step")) rc.fd_step = opt.at("fd_step").get<double>();
    if (opt.contains("trial_scale"))
      rc.trial_scale = opt.at("trial_scale").get<double>();
    if (opt.contains("intervention"))
      rc.intervention = parse_intervention(opt.at("intervention").get<std::string>());
    if (opt.contains("out")) rc.out_path = opt.at("out").get<std::string>();
  }
  return rc;
}

nlohmann::json run_config_to_json(const RunConfig& rc) {
  nlohmann::json tokens{{"count", rc.token_count},
                        {"distribution", rc.token_source == TokenSource::UnitGaussian
                                             ? "unit-gaussian"
                                             : "from-file"}};
  if (!rc.token_file.empty()) tokens["path"] = rc.token_file;
  return nlohmann::json{
      {"layer", layer_config_to_json(rc.layer)},
      {"seed", rc.seed},
      {"init", {{"scheme", init_scheme_name(rc.init_scheme)}, {"scale", rc.init_scale}}},
      {"tokens", std::move(tokens)},
      {"options",
       {{"tol", rc.tol},
        {"n_samples", rc.n_samples},
        {"fd_step", rc.fd_step},
        {"trial_scale", rc.trial_scale},
        {"intervention", intervention_name(rc.intervention)},
        {"out", rc.out_path}}}};
}

std::vector<Eigen::VectorXd> make_tokens(const RunConfig& rc) {
  std::vector<Eigen::VectorXd> tokens;
  if (rc.token_source == TokenSource::UnitGaussian) {
    const CounterRng rng(rc.seed, kTokenStream);
    const int d = rc.layer.model_dim;
    for (int t = 0; t < rc.token_count; ++t) {
      Eigen::VectorXd x(d);
      for (int j = 0; j < d; ++j)
        x[j] = rng.gaussian(static_cast<std::uint64_t>(t) * d + j);
      tokens.push_back(std::move(x));
    }
    return tokens;
  }
  std::ifstream in(rc.token_file);
  if (!in) throw ConfigError("cannot open token file: " + rc.token_file);
  std::string line;
  while (static_cast<int>(tokens.size()) < rc.token_count && std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    Eigen::VectorXd x = vector_from_json(j);
    if (x.size() != rc.layer.model_dim)
      throw ConfigError("token file row width does not match model_dim");
    tokens.push_back(std::move(x));
  }
  if (static_cast<int>(tokens.size()) < rc.token_count)
    throw ConfigError("token file has fewer rows than tokens.count");
  return tokens;
}

namespace {

struct CommandContext {
  RunConfig rc;
  std::ostringstream buffer; // primary artifact, mirrored to --out
};

void emit(CommandContext& ctx, std::ostream& out) {
  const std::string artifact = ctx.buffer.str();
  out << artifact;
  if (!ctx.rc.out_path.empty()) {
    std::ofstream file(ctx.rc.out_path, std::ios::binary);
    if (!file) throw ConfigError("cannot open output path: " + ctx.rc.out_path);
    file << artifact;
  }
}

nlohmann::json meta_record(const std::string& command, const RunConfig& rc) {
  return nlohmann::json{{"record", "meta"},
                        {"command", command},
                        {"config", run_config_to_json(rc)}};
}

int cmd_forward(CommandContext& ctx) {
  const RunConfig& rc = ctx.rc;
  const LayerParams params =
      init_params(rc.layer, rc.seed, rc.init_scheme, rc.init_scale);
  const std::vector<Eigen::VectorXd> tokens = make_tokens(rc);
  ctx.buffer << meta_record("forward", rc).dump() << "\n";
  for (size_t t = 0; t < tokens.size(); ++t) {
    const Eigen::VectorXd y = layer_forward(tokens[t], params, rc.layer, rc.intervention);
    nlohmann::json record{{"record", "forward"},
                          {"token", t},
                          {"intervention", intervention_name(rc.intervention)},
                          {"y", vector_to_json(y)}};
    ctx.buffer << record.dump() << "\n";
  }
  return kExitOk;
}

int cmd_trace(CommandContext& ctx) {
  const RunConfig& rc = ctx.rc;
  const LayerParams params =
      init_params(rc.layer, rc.seed, rc.init_scheme, rc.init_scale);
  const std::vector<Eigen::VectorXd> tokens = make_tokens(rc);
  ctx.buffer << meta_record("trace", rc).dump() << "\n";
  for (size_t t = 0; t < tokens.size(); ++t) {
    const DeliberationTrace trace =
        deliberate(tokens[t], params, rc.layer, rc.intervention);
    ctx.buffer << trace_to_json(trace, static_cast<int>(t)).dump() << "\n";
  }
  return kExitOk;
}

int cmd_flops(CommandContext& ctx) {
  const CostReport report = flop_count(ctx.rc.layer);
  write_cost_text(ctx.buffer, report);
  ctx.buffer << cost_report_to_json(report).dump() << "\n";
  return kExitOk;
}

int cmd_diagnose(CommandContext& ctx) {
  const RunConfig& rc = ctx.rc;
  const LayerParams params =
      init_params(rc.layer, rc.seed, rc.init_scheme, rc.init_scale);
  const std::vector<Eigen::VectorXd> tokens = make_tokens(rc);
  std::vector<DeliberationTrace> traces;
  traces.reserve(tokens.size());
  for (const Eigen::VectorXd& x : tokens)
    traces.push_back(deliberate(x, params, rc.layer, rc.intervention));
  const DiagnosticsReport report = collect(traces, params, rc.layer);
  write_diagnostics_text(ctx.buffer, report);
  ctx.buffer << diagnostics_to_json(report).dump() << "\n";
  return kExitOk;
}

int cmd_intervene(CommandContext& ctx) {
  const RunConfig& rc = ctx.rc;
  const LayerParams params =
      init_params(rc.layer, rc.seed, rc.init_scheme, rc.init_scale);
  const std::vector<Eigen::VectorXd> tokens = make_tokens(rc);
  ctx.buffer << meta_record("intervene", rc).dump() << "\n";
  for (size_t t = 0; t < tokens.size(); ++t) {
    const Eigen::VectorXd base = layer_forward(tokens[t], params, rc.layer);
    const Eigen::VectorXd edited =
        layer_forward(tokens[t], params, rc.layer, rc.intervention);
    nlohmann::json record{{"record", "intervene"},
                          {"token", t},
                          {"intervention", intervention_name(rc.intervention)},
                          {"delta_norm", (edited - base).norm()},
                          {"base_norm", base.norm()},
                          {"y", vector_to_json(edited)}};
    ctx.buffer << record.dump() << "\n";
  }
  return kExitOk;
}

int cmd_verify(CommandContext& ctx) {
  const RunConfig& rc = ctx.rc;
  CertOptions opt;
  opt.seed = rc.seed;
  opt.fixed_point_tol = rc.tol;
  opt.fd_step = rc.fd_step;
  opt.constant_samples = std::max(2, rc.n_samples);
  const auto scaled = [&](int full) {
    return std::max(1, static_cast<int>(std::llround(full * rc.trial_scale)));
  };
  opt.vanilla_tokens = scaled(1000);
  opt.drift_draws_per_cell = scaled(40);
  opt.contraction_configs = scaled(100);
  opt.calibration_draws = scaled(10000);
  opt.critique_draws = scaled(10000);
  opt.graph_instances = scaled(10000);
  opt.intervention_trials = scaled(25);

  const std::vector<CertResult> results = run_certificates(opt);
  const bool all_pass = write_certificates(ctx.buffer, results);
  return all_pass ? kExitOk : kExitCertificate;
}

bool nearly(double a, double b, double tol = 1e-9) { return std::abs(a - b) <= tol; }

int cmd_selftest(CommandContext& ctx) {
  int failures = 0;
  int checks = 0;
  auto expect = [&](bool ok, const char* what) {
    ++checks;
    if (!ok) {
      ++failures;
      ctx.buffer << "selftest failure: " << what << "\n";
    }
  };

  LayerConfig cfg;
  cfg.model_dim = 10;
  cfg.expert_hidden_dim = 6;
  cfg.shared_dim = 4;
  cfg.graph_dim = 3;
  cfg.message_dim = 3;
  cfg.disagree_dim = 3;
  cfg.update_hidden_dim = 5;
  cfg.expert_id_dim = 2;
  cfg.num_experts = 4;
  cfg.top_k = 2;
  cfg.critique_fanout = 2;
  cfg.rounds = 2;
  const LayerParams zeros = init_params(cfg, 1, InitScheme::Zeros);
  const LayerParams random = init_params(cfg, 7);

  { // routing
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(cfg.model_dim);
    const RoutedSet routed = route(x, zeros, cfg);
    expect(routed.experts == std::vector<int>{0, 1}, "tie-break picks lowest indices");
    expect(nearly(routed.weights[0], 0.5) && nearly(routed.weights[1], 0.5),
           "equal logits renormalize to 1/2");
    LayerConfig full = cfg;
    full.top_k = cfg.num_experts;
    const RoutedSet all = route(Eigen::VectorXd::Ones(cfg.model_dim), random, full);
    double max_gap = 0.0;
    for (int i = 0; i < full.num_experts; ++i)
      max_gap = std::max(max_gap, std::abs(all.weights[i] - all.probs[i]));
    expect(max_gap <= 1e-12, "full selection keeps the softmax weights");
  }
  { // expert forward
    const auto [priv, shared] =
        expert_forward(Eigen::VectorXd::Ones(cfg.model_dim), 0, zeros, cfg);
    expect(priv.norm() == 0.0 && shared.norm() == 0.0, "zero expert maps to zero");
    expect(priv.size() == cfg.private_dim() && shared.size() == cfg.shared_dim,
           "expert output shapes");
    expect(apply_activation(Activation::Silu, 0.0) == 0.0, "silu(0) is 0");
  }
  { // aggregation
    LayerConfig one = cfg;
    one.top_k = 1;
    const Eigen::VectorXd x = Eigen::VectorXd::Ones(cfg.model_dim);
    const RoutedSet routed = route(x, random, one);
    ExpertStates states = forward_active(x, routed, random, one);
    const Eigen::VectorXd y = aggregate(states, routed, random, one);
    const ExpertParams& e = random.experts[routed.experts[0]];
    const Eigen::VectorXd direct =
        e.out_private * states.private_state.row(0).transpose() +
        e.out_shared * states.shared.row(0).transpose();
    expect((y - direct).norm() <= 1e-12, "single-expert aggregation is that output");

    LayerParams severed = random;
    for (ExpertParams& ep : severed.experts) ep.out_shared.setZero();
    const RoutedSet routed2 = route(x, severed, cfg);
    ExpertStates s2 = forward_active(x, routed2, severed, cfg);
    const Eigen::VectorXd y_before = aggregate(s2, routed2, severed, cfg);
    s2.shared.setConstant(123.0);
    const Eigen::VectorXd y_after = aggregate(s2, routed2, severed, cfg);
    expect((y_before - y_after).norm() == 0.0,
           "zero shared output maps sever the shared channel");
  }
  { // graph features
    Eigen::MatrixXd constant_rows = Eigen::MatrixXd::Constant(2, cfg.shared_dim, 3.5);
    const GraphFeatures f =
        build_features(constant_rows, {0, 1}, random, cfg);
    expect(f.z.leftCols(cfg.shared_dim).norm() == 0.0,
           "constant state normalizes to zero");
    LayerConfig no_id = cfg;
    no_id.expert_id_dim = 0;
    LayerParams trimmed = random;
    trimmed.support_query = random.support_query.leftCols(no_id.feature_dim());
    trimmed.support_key = random.support_key.leftCols(no_id.feature_dim());
    trimmed.critique_query = random.critique_query.leftCols(no_id.feature_dim());
    trimmed.critique_key = random.critique_key.leftCols(no_id.feature_dim());
    const GraphFeatures g = build_features(constant_rows, {0, 1}, trimmed, no_id);
    expect(g.z.cols() == no_id.shared_dim, "zero id width drops the id block");
  }
  { // graphs
    LayerConfig solo = cfg;
    solo.top_k = 1;
    LayerParams solo_params = random;
    solo_params.support_mask = Eigen::MatrixXd::Zero(1, 1);
    solo_params.critique_mask =
        Eigen::MatrixXd::Constant(1, 1, -std::numeric_limits<double>::infinity());
    Eigen::MatrixXd one_state = Eigen::MatrixXd::Random(1, cfg.shared_dim);
    const GraphFeatures f = build_features(one_state, {0}, solo_params, solo);
    expect(nearly(build_support(f, solo_params, solo)(0, 0), 1.0),
           "single-node support is the identity row");
    expect(build_critique(f, solo_params, solo)(0, 0) == 0.0,
           "fully masked critique row is empty");

    const GraphFeatures f2 = build_features(
        Eigen::MatrixXd::Random(2, cfg.shared_dim), {0, 1}, zeros, cfg);
    const Eigen::MatrixXd uniform = build_support(f2, zeros, cfg);
    expect(nearly(uniform(0, 0), 0.5) && nearly(uniform(1, 1), 0.5),
           "zero projections give uniform support rows");

    Eigen::VectorXd row(3);
    row << 0.0, 0.7, 0.3;
    const Eigen::VectorXd kept = top_m_normalize(row, 5, 1e-12);
    expect((kept - row).norm() <= 1e-9, "top-m with m >= k is renormalization only");
    Eigen::VectorXd onehot(3);
    onehot << 0.0, 1.0, 0.0;
    expect((top_m_normalize(onehot, 1, 1e-12) - onehot).norm() <= 1e-9,
           "one-hot row is already maximally sparse");
  }
  { // gates
    Eigen::MatrixXd same = Eigen::MatrixXd::Ones(3, cfg.shared_dim);
    expect(disagreement(same, random, cfg).first <= 1e-6,
           "identical states do not disagree");
    LayerConfig gate = cfg;
    gate.lambda_min = 0.2;
    expect(social_gate(gate.gate_threshold, gate) == gate.lambda_min,
           "gate sits at the floor on the threshold");
    expect(social_gate(0.0, gate) == gate.lambda_min, "gate floor below threshold");
    const Eigen::VectorXd ones =
        confidence_gate(Eigen::VectorXd::Ones(cfg.model_dim), {0, 1}, random, cfg);
    expect(ones.isOnes(), "disabled confidence gate is all ones");
    LayerConfig gated = cfg;
    gated.confidence_gate_enabled = true;
    const Eigen::VectorXd half =
        confidence_gate(Eigen::VectorXd::Zero(cfg.model_dim), {0, 1}, zeros, gated);
    expect(nearly(half[0], 0.5) && nearly(half[1], 0.5), "sigmoid(0) gates at 1/2");
  }
  { // messages and updates
    SignedGraphs graphs;
    graphs.support = Eigen::MatrixXd::Identity(2, 2);
    graphs.critique = Eigen::MatrixXd::Zero(2, 2);
    Eigen::MatrixXd shared = Eigen::MatrixXd::Random(2, cfg.shared_dim);
    const auto [mp, mn] = messages(shared, graphs, random);
    expect((mp - shared * random.message_proj.transpose()).norm() <= 1e-12,
           "identity support passes the projected state through");
    expect(mn.norm() == 0.0, "zero critique graph sends nothing");
    graphs.support = Eigen::MatrixXd::Constant(2, 2, 0.5);
    const auto [mp2, mn2] = messages(shared, graphs, random);
    (void)mn2;
    expect((mp2.row(0) - mp2.row(1)).norm() <= 1e-12,
           "uniform support averages the messages");

    const Eigen::MatrixXd dead =
        update_delta(shared, mp, mn, zeros, cfg);
    expect(dead.norm() == 0.0, "dead update MLP emits zero");
  }
  { // anchoring
    Eigen::MatrixXd h0 = Eigen::MatrixXd::Random(2, cfg.shared_dim);
    Eigen::MatrixXd delta = Eigen::MatrixXd::Random(2, cfg.shared_dim);
    LayerConfig anchored = cfg;
    anchored.beta = 1.0;
    const Eigen::MatrixXd stay = anchored_step(h0, h0, delta, 0.7,
                                               Eigen::VectorXd::Ones(2), anchored);
    expect((stay.array() == h0.array()).all(), "full anchoring returns the start");
    LayerConfig still = cfg;
    still.alpha = 0.0;
    const Eigen::MatrixXd idle =
        anchored_step(h0, h0, delta, 0.7, Eigen::VectorXd::Ones(2), still);
    expect((idle.array() == h0.array()).all(), "zero step at round zero is a no-op");
  }
  { // deliberation shapes and variants
    LayerConfig t0 = cfg;
    t0.rounds = 0;
    const Eigen::VectorXd x = Eigen::VectorXd::Ones(cfg.model_dim);
    const DeliberationTrace trace = deliberate(x, random, t0);
    expect(trace.shared.size() == 1 && trace.rounds.empty(),
           "zero rounds trace has one snapshot");
    LayerConfig uns = cfg;
    uns.variant = Variant::UnsignedOne;
    const DeliberationTrace utrace = deliberate(x, random, uns);
    expect(utrace.rounds[0].graphs.critique.norm() == 0.0,
           "unsigned variant zeroes the critique channel");
  }
  { // theory
    const CostReport zero_rounds = [&] {
      LayerConfig c = cfg;
      c.rounds = 0;
      return flop_count(c);
    }();
    expect(zero_rounds.deliberation_flops == 0, "zero rounds cost nothing");
    LayerConfig c2 = cfg;
    c2.rounds = 2;
    LayerConfig c4 = cfg;
    c4.rounds = 4;
    expect(flop_count(c4).deliberation_flops == 2 * flop_count(c2).deliberation_flops,
           "doubling rounds doubles the cost");
    expect(drift_bound(0.5, 1.0, 1.0, 1.0, 0, 1.0).first == 0.0,
           "zero rounds cannot drift");
    TheoryConstants consts;
    consts.gate_max = 1.0;
    expect(nearly(contraction_certificate(consts, 0.25, 0.0).factor, 0.75),
           "zero social step contracts at 1-beta");
    const CritiqueCheck null_case = signed_critique_check(
        0.01, 0.9, 0.05, 1.0, Eigen::VectorXd::Zero(4), 4);
    expect(null_case.projection == 0.0 && !null_case.guarantee_active,
           "zero outlier projects to zero");
    Eigen::VectorXd r = Eigen::VectorXd::Ones(4);
    expect(!signed_critique_check(0.01, 0.2, 0.5, 1.0, r, 4).guarantee_active,
           "failed hypothesis stays inactive");
    const GateCalibration cal =
        gate_calibration(0.5, 4, 1.0, 0.0, consts, 0.5, 1.0);
    expect(nearly(cal.cosine_threshold, 0.5), "threshold 0.5 maps to cosine 0.5");
    expect(nearly(gate_calibration(0.0, 4, 1.0, 0.0, consts, 0.5, 1.0).cosine_threshold, 1.0),
           "threshold 0 opens at any disagreement");
    expect(nearly(cal.max_disagreement, 0.81649658092772603, 1e-12),
           "score cap for four experts");
  }
  { // diagnostics
    const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(4, 4, 0.25);
    expect(nearly(row_entropy_mean(uniform), std::log(4.0)), "uniform entropy is ln 4");
    expect(row_entropy_mean(Eigen::MatrixXd::Identity(4, 4)) == 0.0,
           "one-hot rows carry no entropy");
    expect(nearly(ambivalence(uniform, uniform), 1.0), "identical channels overlap fully");
    expect(ambivalence(uniform, Eigen::MatrixXd::Zero(4, 4)) == 0.0,
           "empty critique has no overlap");
  }
  { // determinism of initialization
    const LayerParams a = init_params(cfg, 99);
    const LayerParams b = init_params(cfg, 99);
    expect((a.router_weight.array() == b.router_weight.array()).all() &&
               (a.update_w1.array() == b.update_w1.array()).all(),
           "same seed reproduces the parameters");
    const LayerParams c = init_params(cfg, 100);
    expect(!(a.router_weight.array() == c.router_weight.array()).all(),
           "next seed changes the parameters");
  }

  ctx.buffer << "selftest: " << (checks - failures) << "/" << checks
             << " checks passed\n";
  return failures == 0 ? kExitOk : kExitFailure;
}

} // namespace

int run_command(const std::vector<std::string>& argv, std::ostream& out,
                std::ostream& err) {
  CLI::App app{"signed-deliberation mixture-of-experts harness"};
  app.require_subcommand(1);

  std::string config_path, out_path, variant_str, intervention_str;
  std::uint64_t seed = 0;
  int tokens = 0, rounds = 0, n_samples = 0;
  double tol = 0.0, fd_step = 0.0, trial_scale = 0.0;

  std::vector<CLI::App*> subs;
  for (const char* name : {"forward", "trace", "verify", "flops", "diagnose",
                           "intervene", "selftest"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration file");
    sub->add_option("--seed", seed, "64-bit unsigned seed");
    sub->add_option("--out", out_path, "write the artifact to this path too");
    sub->add_option("--tokens", tokens, "number of tokens");
    sub->add_option("--rounds", rounds, "deliberation rounds");
    sub->add_option("--intervention", intervention_str)
        ->check(CLI::IsMember({"none", "zero_neg", "zero_pos", "swap_sign"}));
    sub->add_option("--variant", variant_str)
        ->check(CLI::IsMember({"sdg", "unsigned", "dual_unsigned", "fixed_lambda_g"}));
    sub->add_option("--tol", tol, "fixed-point tolerance");
    sub->add_option("--n-samples", n_samples, "constant-estimation sample count");
    sub->add_option("--fd-step", fd_step, "finite-difference step");
    sub->add_option("--trial-scale", trial_scale, "certificate trial scaling");
    subs.push_back(sub);
  }

  try {
    std::vector<const char*> raw;
    raw.push_back("sdg");
    for (const std::string& s : argv) raw.push_back(s.c_str());
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitConfig;
  }

  CommandContext ctx;
  try {
    if (!config_path.empty()) {
      std::ifstream file(config_path);
      if (!file) throw ConfigError("cannot open config file: " + config_path);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(file);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
      }
      ctx.rc = run_config_from_json(j);
    }
    // Flag overrides.
    CLI::App* active = app.get_subcommands().front();
    if (active->count("--seed")) ctx.rc.seed = seed;
    if (active->count("--tokens")) ctx.rc.token_count = tokens;
    if (active->count("--rounds")) ctx.rc.layer.rounds = rounds;
    if (active->count("--variant")) ctx.rc.layer.variant = parse_variant(variant_str);
    if (active->count("--intervention"))
      ctx.rc.intervention = parse_intervention(intervention_str);
    if (active->count("--out")) ctx.rc.out_path = out_path;
    if (active->count("--tol")) ctx.rc.tol = tol;
    if (active->count("--n-samples")) ctx.rc.n_samples = n_samples;
    if (active->count("--fd-step")) ctx.rc.fd_step = fd_step;
    if (active->count("--trial-scale")) ctx.rc.trial_scale = trial_scale;
    ctx.rc.layer.validate();

    const std::string name = active->get_name();
    int code = kExitFailure;
    if (name == "forward") code = cmd_forward(ctx);
    else if (name == "trace") code = cmd_trace(ctx);
    else if (name == "verify") code = cmd_verify(ctx);
    else if (name == "flops") code = cmd_flops(ctx);
    else if (name == "diagnose") code = cmd_diagnose(ctx);
    else if (name == "intervene") code = cmd_intervene(ctx);
    else if (name == "selftest") code = cmd_selftest(ctx);
    emit(ctx, out);
    return code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

} // namespace sdg
