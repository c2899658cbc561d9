#include "sdg/diagnostics.hpp"

#include <cmath>

namespace sdg {

double row_entropy_mean(const Eigen::MatrixXd& a) {
  double total = 0.0;
  int counted = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double row_sum = a.row(i).sum();
    if (row_sum <= 0.0) continue;
    double h = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double p = a(i, j) / row_sum;
      if (p > 0.0) h -= p * std::log(p);
    }
    total += h;
    ++counted;
  }
  return counted > 0 ? total / counted : 0.0;
}

double ambivalence(const Eigen::MatrixXd& support, const Eigen::MatrixXd& critique) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < support.rows(); ++i)
    for (Eigen::Index j = 0; j < support.cols(); ++j)
      total += std::min(support(i, j), critique(i, j));
  return support.rows() > 0 ? total / support.rows() : 0.0;
}

std::pair<std::optional<double>, double> update_and_share(
    const DeliberationTrace& trace, const LayerParams& params,
    const LayerConfig& cfg) {
  std::optional<double> update_ratio;
  if (!trace.rounds.empty()) {
    double total = 0.0;
    int count = 0;
    for (const RoundRecord& rec : trace.rounds) {
      for (Eigen::Index i = 0; i < rec.delta.rows(); ++i) {
        total += rec.delta.row(i).norm() /
                 (trace.shared.front().row(i).norm() + cfg.eps);
        ++count;
      }
    }
    update_ratio = total / count;
  }

  Eigen::VectorXd y_shared = Eigen::VectorXd::Zero(cfg.model_dim);
  Eigen::VectorXd y_private = Eigen::VectorXd::Zero(cfg.model_dim);
  for (size_t j = 0; j < trace.routed.experts.size(); ++j) {
    const ExpertParams& e = params.experts[trace.routed.experts[j]];
    const double w = trace.routed.weights[static_cast<Eigen::Index>(j)];
    y_shared += w * (e.out_shared * trace.final_shared().row(j).transpose());
    y_private += w * (e.out_private * trace.private_state.row(j).transpose());
  }
  const double share = y_shared.norm() /
                       (y_shared.norm() + y_private.norm() + cfg.eps);
  return {update_ratio, share};
}

namespace {

MeanStd summarize(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / values.size();
  double sq = 0.0;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(sq / values.size());
  return out;
}

double round_mean(const DeliberationTrace& trace,
                  double (*metric)(const RoundRecord&)) {
  if (trace.rounds.empty()) return 0.0;
  double total = 0.0;
  for (const RoundRecord& rec : trace.rounds) total += metric(rec);
  return total / trace.rounds.size();
}

} // namespace

DiagnosticsReport collect(const std::vector<DeliberationTrace>& traces,
                          const LayerParams& params, const LayerConfig& cfg) {
  if (traces.empty()) throw ConfigError("collect: no traces");

  std::vector<double> d_vals, lambda_vals, entropy_pos, entropy_neg, ambiv, share;
  std::vector<double> update_vals;
  for (const DeliberationTrace& trace : traces) {
    d_vals.push_back(round_mean(
        trace, [](const RoundRecord& r) { return r.gate.disagreement; }));
    lambda_vals.push_back(
        round_mean(trace, [](const RoundRecord& r) { return r.gate.lambda; }));
    entropy_pos.push_back(round_mean(
        trace, [](const RoundRecord& r) { return row_entropy_mean(r.graphs.support); }));
    entropy_neg.push_back(round_mean(
        trace, [](const RoundRecord& r) { return row_entropy_mean(r.graphs.critique); }));
    ambiv.push_back(round_mean(trace, [](const RoundRecord& r) {
      return ambivalence(r.graphs.support, r.graphs.critique);
    }));
    auto [update, shr] = update_and_share(trace, params, cfg);
    if (update) update_vals.push_back(*update);
    share.push_back(shr);
  }

  DiagnosticsReport report;
  report.tokens = static_cast<int>(traces.size());
  report.disagreement_mean = summarize(d_vals);
  report.lambda_mean = summarize(lambda_vals);
  if (!update_vals.empty()) report.update_ratio = summarize(update_vals);
  report.support_entropy = summarize(entropy_pos);
  report.critique_entropy = summarize(entropy_neg);
  report.ambivalence_mean = summarize(ambiv);
  report.shared_share = summarize(share);
  return report;
}

} // namespace sdg
