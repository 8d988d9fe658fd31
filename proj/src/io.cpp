#include "atp/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace atp::io {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ParseError(path + ": " + message);
}

std::string item(const std::string& path, std::size_t index) { return path + "[" + std::to_string(index) + "]"; }

const json& member(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) fail(path.empty() ? "document" : path, "expected an object");
    const auto it = obj.find(key);
    const std::string where = path.empty() ? key : path + "." + key;
    if (it == obj.end()) fail(where, "missing field");
    return *it;
}

const json& array_at(const json& v, const std::string& path) {
    if (!v.is_array()) fail(path, "expected an array");
    return v;
}

double number_at(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double value = v.get<double>();
    if (!std::isfinite(value)) fail(path, "expected a finite number");
    return value;
}

std::size_t index_at(const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(path, "expected a nonnegative integer");
    return v.get<std::size_t>();
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t k = 0; k < std::min(byte > 0 ? byte - 1 : 0, text.size()); ++k) {
        if (text[k] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

json vector_json(const std::vector<double>& v) { return json(v); }

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

json set_json(const GoodSet& set) { return json(set); }

}  // namespace

json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, column] = line_column(text, e.byte);
        std::string message = e.what();
        const auto pos = message.find(": ", message.find("parse error"));
        if (pos != std::string::npos) message = message.substr(pos + 2);
        throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + message);
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_json_text(buffer.str(), path.string());
}

Instance instance_from_json(const json& doc) {
    const auto& supplies_json = array_at(member(doc, "supplies", ""), "supplies");
    std::vector<double> supplies;
    for (std::size_t j = 0; j < supplies_json.size(); ++j)
        supplies.push_back(number_at(supplies_json[j], item("supplies", j)));

    const auto& agents_json = array_at(member(doc, "agents", ""), "agents");
    std::vector<GoodSet> desired;
    for (std::size_t i = 0; i < agents_json.size(); ++i) {
        const std::string path = item("agents", i);
        const auto& set_json = array_at(member(agents_json[i], "desired", path), path + ".desired");
        GoodSet set;
        for (std::size_t k = 0; k < set_json.size(); ++k) {
            const std::string at = item(path + ".desired", k);
            const std::size_t j = index_at(set_json[k], at);
            if (j >= supplies.size())
                fail(at, "good " + std::to_string(j) + " out of range (" + std::to_string(supplies.size()) +
                             " goods)");
            set.push_back(j);
        }
        desired.push_back(std::move(set));
    }
    try {
        return Instance(std::move(supplies), std::move(desired));
    } catch (const InvalidInstance& e) {
        throw ParseError(std::string("instance: ") + e.what());
    }
}

json to_json(const Instance& inst) {
    json agents = json::array();
    for (const auto& set : inst.desired_sets()) agents.push_back({{"desired", set}});
    return {{"supplies", inst.supplies()}, {"agents", std::move(agents)}};
}

BidMatrix bids_from_json(const json& doc, std::size_t agents, std::size_t goods) {
    const auto& rows = array_at(doc.is_object() ? member(doc, "bids", "") : doc, "bids");
    if (rows.size() != agents)
        fail("bids", "expected " + std::to_string(agents) + " rows, found " + std::to_string(rows.size()));
    BidMatrix b(agents, goods);
    for (std::size_t i = 0; i < agents; ++i) {
        const auto& row = array_at(rows[i], item("bids", i));
        if (row.size() != goods)
            fail(item("bids", i), "expected " + std::to_string(goods) + " entries, found " + std::to_string(row.size()));
        for (std::size_t j = 0; j < goods; ++j) {
            const std::string at = item(item("bids", i), j);
            const auto& v = row[j];
            if (v.is_string()) {
                if (v.get<std::string>() != "beta") fail(at, "the only string bid is \"beta\"");
                b(i, j) = Bid::beta();
                continue;
            }
            const double amount = number_at(v, at);
            if (amount < 0.0) fail(at, "bids must be nonnegative");
            b(i, j) = amount == 0.0 ? Bid::zero() : Bid::positive(amount);
        }
    }
    return b;
}

json to_json(const BidMatrix& b) {
    json rows = json::array();
    for (std::size_t i = 0; i < b.agents(); ++i) {
        json row = json::array();
        for (const Bid& bid : b.row(i)) {
            if (bid.is_beta())
                row.push_back("beta");
            else if (bid.is_zero())
                row.push_back(0);
            else
                row.push_back(bid.amount());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

CurveFamily curves_from_json(const json& doc, std::size_t goods) {
    if (doc.is_string()) return curves_from_spec(doc.get<std::string>(), goods);
    const auto& list = array_at(doc.is_object() ? member(doc, "curves", "") : doc, "curves");
    if (list.size() != goods)
        fail("curves", "expected " + std::to_string(goods) + " curves, found " + std::to_string(list.size()));
    std::vector<PowerCurve> curves;
    for (std::size_t j = 0; j < goods; ++j) {
        const std::string at = item("curves", j);
        curves.push_back({number_at(member(list[j], "coeff", at), at + ".coeff"),
                          number_at(member(list[j], "degree", at), at + ".degree")});
    }
    return CurveFamily(std::move(curves));
}

CurveFamily curves_from_spec(const std::string& spec, std::size_t goods) {
    std::vector<std::string> parts;
    std::stringstream stream(spec);
    for (std::string part; std::getline(stream, part, ':');) parts.push_back(part);
    auto number = [&](const std::string& text) {
        try {
            std::size_t used = 0;
            const double value = std::stod(text, &used);
            if (used != text.size() || !std::isfinite(value)) throw std::invalid_argument(text);
            return value;
        } catch (const std::exception&) {
            throw ParseError("curves '" + spec + "': '" + text + "' is not a number");
        }
    };
    if (parts.size() == 2 && parts[0] == "atp_rho") {
        const double rho = number(parts[1]);
        if (!(rho < 1.0)) throw ParseError("curves '" + spec + "': rho must be below 1");
        return CurveFamily::atp_rho(goods, rho);
    }
    if (parts.size() == 3 && parts[0] == "uniform") return CurveFamily::uniform(goods, {number(parts[1]), number(parts[2])});
    throw ParseError("curves '" + spec + "': expected atp_rho:<rho> or uniform:<coeff>:<degree>");
}

json to_json(const CurveFamily& f) {
    json list = json::array();
    for (const auto& c : f.curves()) list.push_back({{"coeff", c.coeff}, {"degree", c.degree}});
    return list;
}

Allocation allocation_from_json(const json& doc, std::size_t agents, std::size_t goods) {
    const auto& rows = array_at(doc.is_object() ? member(doc, "allocation", "") : doc, "allocation");
    if (rows.size() != agents)
        fail("allocation", "expected " + std::to_string(agents) + " rows, found " + std::to_string(rows.size()));
    Allocation x(agents, goods);
    for (std::size_t i = 0; i < agents; ++i) {
        const auto& row = array_at(rows[i], item("allocation", i));
        if (row.size() != goods) fail(item("allocation", i), "expected " + std::to_string(goods) + " entries");
        for (std::size_t j = 0; j < goods; ++j) {
            const std::string at = item(item("allocation", i), j);
            x(i, j) = number_at(row[j], at);
            if (x(i, j) < 0.0) fail(at, "quantities must be nonnegative");
        }
    }
    return x;
}

json to_json(const Allocation& x) {
    json rows = json::array();
    for (std::size_t i = 0; i < x.agents(); ++i) {
        const auto row = x.row(i);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

json to_json(const SolveResult& r) {
    return {{"utilities", vector_json(r.u_star)},
            {"allocation", to_json(r.x_star)},
            {"q", vector_json(r.q)},
            {"objective", r.objective},
            {"kkt_residual", r.kkt_residual},
            {"iterations", r.iterations}};
}

json to_json(const NeReport& r) {
    json out = {{"is_ne", r.is_ne},
                {"violated_condition", optional_string(r.violated_condition)},
                {"conditions_hold", r.conditions_hold},
                {"oracle_disagreement", r.oracle_disagreement},
                {"allocation", to_json(r.allocation)},
                {"utilities", vector_json(r.utilities)}};
    out["sweep_found_gain"] = r.sweep_found_gain ? json(*r.sweep_found_gain) : json(nullptr);
    if (r.deviation_witness) {
        BidMatrix row(1, r.deviation_witness->bids.size());
        row.set_row(0, r.deviation_witness->bids);
        out["deviation_witness"] = {{"agent", r.deviation_witness->agent},
                                    {"bids", to_json(row)[0]},
                                    {"gain", r.deviation_witness->gain}};
    } else {
        out["deviation_witness"] = nullptr;
    }
    return out;
}

json to_json(const PceReport& r) {
    return {{"is_pce", r.is_pce}, {"violated_condition", optional_string(r.violated_condition)}};
}

json to_json(const BadNeReport& r) {
    return {{"n", r.n},
            {"all_goods_profile_is_ne", r.all_goods_profile_is_ne},
            {"truthful_profile_is_ne", r.truthful_profile_is_ne},
            {"all_goods_maxmin", r.all_goods_maxmin},
            {"optimal_maxmin", r.optimal_maxmin},
            {"ratio", r.ratio}};
}

namespace {

json deviation_json(const std::optional<ReportRowDeviation>& d) {
    if (!d) return nullptr;
    json row = json::array();
    for (const auto& set : d->row) row.push_back(set_json(set));
    return {{"agent", d->agent},
            {"row", std::move(row)},
            {"before", d->before},
            {"after", d->after},
            {"was_overclaimed", d->was_overclaimed},
            {"still_overclaimed", d->still_overclaimed}};
}

}  // namespace

json to_json(const Mechanism2NeReport& r) {
    return {{"is_ne", r.is_ne},
            {"exhaustive", r.exhaustive},
            {"deviations_checked", r.deviations_checked},
            {"witness", deviation_json(r.witness)},
            {"utilities", vector_json(r.utilities)},
            {"welfare", r.welfare},
            {"optimal_welfare", r.optimal_welfare}};
}

json to_json(const AllGoodsM2Report& r) {
    json devs = json::array();
    for (const auto& d : r.deviations) devs.push_back(deviation_json(d));
    return {{"n", r.n}, {"deviations", std::move(devs)}, {"check", to_json(r.check)}};
}

json to_json(const StrategyproofnessReport& r) {
    return {{"rho", r.rho.to_string()},
            {"truthful_utilities", vector_json(r.truthful_utilities)},
            {"lie_utilities", vector_json(r.lie_utilities)},
            {"truthful_u4", r.truthful_u4},
            {"lie_u4", r.lie_u4},
            {"truthful_below_half", r.truthful_below_half},
            {"lie_at_least_half", r.lie_at_least_half},
            {"lie_profitable", r.lie_profitable}};
}

}  // namespace atp::io
