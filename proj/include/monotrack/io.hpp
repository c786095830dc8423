#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "monotrack/ensemble.hpp"
#include "monotrack/simverify.hpp"

namespace monotrack::io {

using nlohmann::json;

Matrix matrix_from_json(const json& j, const std::string& what);
json matrix_to_json(const Matrix& M);
json complex_to_json(Complex z);

LtiSystem system_from_json(const json& j);
json system_to_json(const LtiSystem& sys);
LtiSystem load_system(const std::string& path);

// {"vstar_g": {"V": n x k rows, "W": m x k rows, "modes": [..]},
//  "directions": [{"output": 1-based, "v": [..], "w": [..]}]}
ReplayInputs replay_from_json(const json& j, const LtiSystem& sys);
ReplayInputs load_replay(const std::string& path, const LtiSystem& sys);

json read_json(const std::string& path);
void write_text(const std::string& path, const std::string& text);

json zeros_to_json(const std::vector<InvariantZero>& zeros);
json audit_to_json(const AssumptionReport& rep);
json verdict_to_json(const SolvabilityVerdict& v);
json paired_basis_to_json(const PairedBasis& pb);
json feedback_to_json(const FeedbackResult& fb);
json trace_to_json(const SimulationTrace& tr);
json stats_to_json(const GenericityStats& st);

// 15 significant digits.
std::string format_number(double x);
void write_trace_csv(std::ostream& os, const SimulationTrace& tr);
void write_trace_long_csv(std::ostream& os, const SimulationTrace& tr);
void write_gain_csv(std::ostream& os, const Matrix& F);

}  // namespace monotrack::io
