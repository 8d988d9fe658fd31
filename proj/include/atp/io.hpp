#pragma once

// JSON reading and writing for instances, bids, curves and reports.
//
// Instance:  {"supplies": [1, 2], "agents": [{"desired": [0, 1]}, {"desired": [1]}]}
// Bids:      [[0.5, "beta"], [0, 1.0]]
// Curves:    [{"coeff": 1, "degree": 2}, ...]  or the strings
//            "atp_rho:<rho>" and "uniform:<coeff>:<degree>"

#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "atp/atp_engine.hpp"
#include "atp/ces_solver.hpp"
#include "atp/core.hpp"
#include "atp/equilibrium.hpp"
#include "atp/maxmin_mech.hpp"

namespace atp::io {

using nlohmann::json;

/// Malformed input. what() names the source and either a line/column or a
/// JSON path such as agents[2].desired[0].
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads and parses a JSON document; syntax errors carry line and column.
json read_json_file(const std::filesystem::path& path);
json parse_json_text(const std::string& text, const std::string& source = "<input>");

Instance instance_from_json(const json& doc);
json to_json(const Instance& inst);

BidMatrix bids_from_json(const json& doc, std::size_t agents, std::size_t goods);
json to_json(const BidMatrix& b);

CurveFamily curves_from_json(const json& doc, std::size_t goods);
/// "atp_rho:<rho>" or "uniform:<coeff>:<degree>".
CurveFamily curves_from_spec(const std::string& spec, std::size_t goods);
json to_json(const CurveFamily& f);

Allocation allocation_from_json(const json& doc, std::size_t agents, std::size_t goods);
json to_json(const Allocation& x);

json to_json(const SolveResult& r);
json to_json(const NeReport& r);
json to_json(const PceReport& r);
json to_json(const BadNeReport& r);
json to_json(const Mechanism2NeReport& r);
json to_json(const AllGoodsM2Report& r);
json to_json(const StrategyproofnessReport& r);

}  // namespace atp::io
