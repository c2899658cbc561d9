#pragma once

#include <json.hpp>
#include <ostream>
#include <string>

#include "sdg/diagnostics.hpp"
#include "sdg/theory.hpp"

namespace sdg {

// Matrices travel as {"shape": [rows, cols], "data": [row-major entries]}.
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

nlohmann::json layer_config_to_json(const LayerConfig& cfg);
LayerConfig layer_config_from_json(const nlohmann::json& j);

// One line-delimited record per token; shared-state snapshots and per-round
// graphs, gates, messages, and updates are kept in full so diagnostics can
// be recomputed from the dump alone.
nlohmann::json trace_to_json(const DeliberationTrace& trace, int token_index);
DeliberationTrace trace_from_json(const nlohmann::json& j);

nlohmann::json diagnostics_to_json(const DiagnosticsReport& report);
void write_diagnostics_text(std::ostream& out, const DiagnosticsReport& report);

nlohmann::json cost_report_to_json(const CostReport& report);
void write_cost_text(std::ostream& out, const CostReport& report);

// Full-precision decimal; round-trips through parse exactly.
std::string format_double(double v);

} // namespace sdg
