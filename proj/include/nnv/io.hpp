#pragma once

#include "nnv/minimize.hpp"
#include "nnv/problems.hpp"
#include "nnv/verifier.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <set>

namespace nnv {

using Json = nlohmann::json;

// All readers throw std::invalid_argument with a message naming the offending
// field when the input does not follow the schema. Rationals are written as
// "p/q" strings; readers also accept JSON integers.

/// {"layers": [[{}, ...], [{"act": "relu"|"id", "bias": "p/q", "weights": [...]}, ...], ...]};
/// layer 0 lists the inputs and carries no data.
Json to_json(const Network& net);
Network network_from_json(const Json& j);

/// {"dim": n, "rows": [{"coeffs": [...], "rel": "<="|"<"|"=", "rhs": "p/q"}]}
Json to_json(const LinSpec& spec);
LinSpec spec_from_json(const Json& j);

/// {"problem": "vip", "net": ..., "net2": ..., "inspec": ..., "outspec": ...,
///  "metric": "l1"|"linf", "eps": "p/q"|"inf", "delta": ..., "lip": ...,
///  "center": [...], "label": j, "strict": bool}; only the fields of the problem.
Json to_json(const ProblemInstance& inst);
ProblemInstance instance_from_json(const Json& j);

/// Pattern as a string of 'A'/'I', one letter per ReLU node.
Json to_json(const Certificate& cert);
Certificate certificate_from_json(const Json& j);

/// {"holds", "witness", "certificate", "label_witnesses", "stats"}; absent parts are null.
Json to_json(const Verdict& v);
Json to_json(const AneceResult& r);

/// Node sets as arrays of "layer:index" strings.
Json to_json(const std::set<NodeRef>& nodes);
std::set<NodeRef> nodes_from_json(const Json& j);

Json to_json(std::span<const Rational> v);
RatVector vector_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace nnv
