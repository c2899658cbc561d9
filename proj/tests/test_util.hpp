#pragma once

#include <Eigen/Dense>

#include "sdg/params.hpp"
#include "sdg/rng.hpp"

namespace sdg::test {

inline LayerConfig tiny_config() {
  LayerConfig cfg;
  cfg.model_dim = 12;
  cfg.expert_hidden_dim = 8;
  cfg.shared_dim = 6;
  cfg.graph_dim = 4;
  cfg.message_dim = 4;
  cfg.disagree_dim = 3;
  cfg.update_hidden_dim = 8;
  cfg.expert_id_dim = 3;
  cfg.num_experts = 6;
  cfg.top_k = 3;
  cfg.critique_fanout = 2;
  cfg.rounds = 2;
  return cfg;
}

inline Eigen::VectorXd gaussian_vector(RngStream& rng, int dim) {
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = rng.gaussian();
  return x;
}

inline Eigen::MatrixXd gaussian_matrix(RngStream& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.gaussian();
  return m;
}

inline bool bits_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return (a.array() == b.array()).all();
}

} // namespace sdg::test
