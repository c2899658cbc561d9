#include "sdg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace sdg {

namespace {

// Row-wise masked softmax. A row whose entries are all -inf becomes all-zero
// when allow_empty_rows, otherwise it is an error.
Eigen::MatrixXd masked_softmax(const Eigen::MatrixXd& scores,
                               const Eigen::MatrixXd& mask,
                               bool allow_empty_rows) {
  const Eigen::Index k = scores.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < k; ++j)
      row_max = std::max(row_max, scores(i, j) + mask(i, j));
    if (!std::isfinite(row_max)) {
      if (allow_empty_rows) continue;
      throw std::runtime_error("fully masked support row");
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double s = scores(i, j) + mask(i, j);
      const double e = std::isfinite(s) ? std::exp(s - row_max) : 0.0;
      out(i, j) = e;
      sum += e;
    }
    out.row(i) /= sum;
  }
  return out;
}

Eigen::MatrixXd attention_scores(const GraphFeatures& features,
                                 const Eigen::MatrixXd& query_proj,
                                 const Eigen::MatrixXd& key_proj,
                                 const LayerConfig& cfg) {
  const Eigen::MatrixXd queries = features.z * query_proj.transpose(); // k x d_g
  const Eigen::MatrixXd keys = features.z * key_proj.transpose();
  return queries * keys.transpose() / std::sqrt(static_cast<double>(cfg.graph_dim));
}

} // namespace

GraphFeatures build_features(const Eigen::MatrixXd& shared,
                             const std::vector<int>& experts,
                             const LayerParams& params, const LayerConfig& cfg) {
  const int k = static_cast<int>(shared.rows());
  const int ds = cfg.shared_dim;
  GraphFeatures features;
  features.z.resize(k, cfg.feature_dim());
  for (int i = 0; i < k; ++i) {
    const Eigen::VectorXd h = shared.row(i).transpose();
    const double mean = h.mean();
    const double var = (h.array() - mean).square().sum() / ds;
    features.z.row(i).head(ds) =
        ((h.array() - mean) / std::sqrt(var + cfg.eps)).transpose();
    if (cfg.expert_id_dim > 0)
      features.z.row(i).tail(cfg.expert_id_dim) = params.expert_ids.row(experts[i]);
  }
  return features;
}

Eigen::MatrixXd build_support(const GraphFeatures& features,
                              const LayerParams& params, const LayerConfig& cfg) {
  const Eigen::MatrixXd scores =
      attention_scores(features, params.support_query, params.support_key, cfg);
  return masked_softmax(scores, params.support_mask.topLeftCorner(scores.rows(), scores.cols()),
                        /*allow_empty_rows=*/false);
}

Eigen::VectorXd top_m_normalize(const Eigen::VectorXd& row, int m, double eps) {
  if (m <= 0) throw ConfigError("top_m_normalize: m must be >= 1");
  const Eigen::Index k = row.size();
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  const Eigen::Index keep = std::min<Eigen::Index>(m, k);
  std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                    [&](int a, int b) {
                      if (row[a] != row[b]) return row[a] > row[b];
                      return a < b;
                    });
  Eigen::VectorXd out = Eigen::VectorXd::Zero(k);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < keep; ++j) sum += row[order[j]];
  if (sum <= 0.0) return out; // all-zero row stays all-zero
  for (Eigen::Index j = 0; j < keep; ++j) out[order[j]] = row[order[j]] / (sum + eps);
  return out;
}

Eigen::MatrixXd build_critique(const GraphFeatures& features,
                               const LayerParams& params, const LayerConfig& cfg) {
  const Eigen::MatrixXd scores =
      attention_scores(features, params.critique_query, params.critique_key, cfg);
  // A fully masked row (k == 1 without critique self-loops) becomes all-zero,
  // carrying an empty critique rather than NaN.
  Eigen::MatrixXd dense = masked_softmax(
      scores, params.critique_mask.topLeftCorner(scores.rows(), scores.cols()),
      /*allow_empty_rows=*/true);
  for (Eigen::Index i = 0; i < dense.rows(); ++i)
    dense.row(i) = top_m_normalize(dense.row(i), cfg.critique_fanout, cfg.eps).transpose();
  return dense;
}

SignedGraphs build_graphs(const GraphFeatures& features, const LayerParams& params,
                          const LayerConfig& cfg, int round) {
  SignedGraphs graphs;
  graphs.round = round;
  graphs.support = build_support(features, params, cfg);
  switch (cfg.variant) {
    case Variant::Sdg:
    case Variant::FixedLambdaG:
      graphs.critique = build_critique(features, params, cfg);
      break;
    case Variant::UnsignedOne:
      graphs.critique = Eigen::MatrixXd::Zero(features.z.rows(), features.z.rows());
      break;
    case Variant::DualUnsigned: {
      // Second dense channel: critique projections, support-style mask,
      // no sparsification.
      const Eigen::MatrixXd scores = attention_scores(
          features, params.critique_query, params.critique_key, cfg);
      graphs.critique = masked_softmax(
          scores, params.support_mask.topLeftCorner(scores.rows(), scores.cols()),
          /*allow_empty_rows=*/false);
      break;
    }
  }
  return graphs;
}

} // namespace sdg
