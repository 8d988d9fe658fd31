// atp: command line front end for the trading post library.
//
//   atp solve instance.json --rho -1
//   atp equilibrium instance.json --rho 0
//   atp verify instance.json bids.json --curves atp_rho:-1 [--sweep] [--assert]
//   atp verify instance.json pce.json --kind pce --curves pce.json
//   atp reduce instance.json bids.json --direction tp2pc --curves atp_rho:0
//   atp dynamics instance.json --rho 0.5 --seed 7
//   atp demos not-strategyproof --rho 0
//
// Reports are JSON on stdout (or --out). Exit codes: 0 success, 2 bad
// input, 3 solver failure, 4 verification failed under --assert.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "atp/atp_engine.hpp"
#include "atp/ces_solver.hpp"
#include "atp/core.hpp"
#include "atp/equilibrium.hpp"
#include "atp/io.hpp"
#include "atp/maxmin_mech.hpp"

namespace {

using atp::io::json;

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitSolver = 3;
constexpr int kExitVerify = 4;

struct RunConfig {
    std::string instance_path;
    std::string second_path;
    std::string rho_text;
    std::string curves;
    std::string kind = "tp";
    std::string direction;
    std::string demo;
    std::string h_spec = "1:1";
    std::string out_path;
    std::uint64_t seed = 0x5eed;
    double tol_eq = atp::kTolEq;
    double tol_kkt = 1e-7;
    double tol_gain = 1e-6;
    int max_rounds = 500;
    double dynamics_tolerance = 1e-9;
    std::size_t n = 3;
    std::size_t samples = 10'000;
    bool sweep = false;
    bool assert_mode = false;
};

struct BadInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VerificationFailed {
    json report;
};

atp::Rho parse_rho(const std::string& text, bool allow_one) {
    if (text.empty()) throw BadInput("--rho is required");
    atp::Rho rho = atp::Rho::maxmin();
    try {
        rho = atp::Rho::parse(text);
    } catch (const std::invalid_argument& e) {
        throw BadInput(e.what());
    }
    if (!allow_one && rho.kind() == atp::Rho::Kind::One) throw BadInput("rho = 1 is only accepted by solve and demos");
    return rho;
}

atp::Rho parse_finite_rho(const std::string& text) {
    const atp::Rho rho = parse_rho(text, false);
    if (!rho.is_finite()) throw BadInput("this command needs a finite rho below 1");
    return rho;
}

atp::CurveFamily load_curves(const std::string& spec, std::size_t goods) {
    if (spec.empty()) throw BadInput("--curves is required");
    if (std::filesystem::exists(spec)) return atp::io::curves_from_json(atp::io::read_json_file(spec), goods);
    return atp::io::curves_from_spec(spec, goods);
}

atp::PowerCurve parse_h(const std::string& spec) {
    const auto colon = spec.find(':');
    try {
        if (colon == std::string::npos) throw std::invalid_argument(spec);
        return {std::stod(spec.substr(0, colon)), std::stod(spec.substr(colon + 1))};
    } catch (const std::exception&) {
        throw BadInput("--free-curve expects <coeff>:<degree>, got '" + spec + "'");
    }
}

json tolerances(const RunConfig& c) {
    return {{"tol_eq", c.tol_eq},
            {"tol_kkt", c.tol_kkt},
            {"tol_gain", c.tol_gain},
            {"tol_feas", atp::kTolFeas},
            {"tol_bid", atp::kTolBid},
            {"tol_best_response", atp::kTolBestResponse}};
}

atp::NeCheckOptions ne_options(const RunConfig& c, bool sweep) {
    atp::NeCheckOptions o;
    o.tol_eq = c.tol_eq;
    o.tol_gain = c.tol_gain;
    o.deviation_sweep = sweep;
    o.seed = c.seed;
    return o;
}

atp::SolverOptions solver_options(const RunConfig& c) {
    atp::SolverOptions o;
    o.tol_kkt = c.tol_kkt;
    return o;
}

json cmd_solve(const RunConfig& c) {
    const auto inst = atp::io::instance_from_json(atp::io::read_json_file(c.instance_path));
    const atp::Rho rho = parse_rho(c.rho_text, true);
    const auto result =
        rho.kind() == atp::Rho::Kind::NegInfinity ? atp::solve_maxmin(inst) : atp::solve_ces(inst, rho, solver_options(c));
    json out = {{"command", "solve"}, {"rho", rho.to_string()}, {"result", atp::io::to_json(result)}};
    if (rho.kind() == atp::Rho::Kind::NegInfinity) out["gamma"] = result.objective;
    return out;
}

json cmd_equilibrium(const RunConfig& c) {
    const auto inst = atp::io::instance_from_json(atp::io::read_json_file(c.instance_path));
    const atp::Rho rho = parse_finite_rho(c.rho_text);
    const auto eq = atp::construct_atp_rho_equilibrium(inst, rho, solver_options(c));
    const auto check = atp::verify_tp_ne(inst, eq.curves, eq.bids, ne_options(c, true));
    const double gap = std::abs(eq.welfare - eq.optimum.objective) / std::max(1.0, std::abs(eq.optimum.objective));
    return {{"command", "equilibrium"},
            {"rho", rho.to_string()},
            {"bids", atp::io::to_json(eq.bids)},
            {"curves", atp::io::to_json(eq.curves)},
            {"allocation", atp::io::to_json(eq.allocation)},
            {"welfare", eq.welfare},
            {"optimum", eq.optimum.objective},
            {"relative_gap", gap},
            {"q", eq.optimum.q},
            {"verdict", atp::io::to_json(check)}};
}

json cmd_verify(const RunConfig& c) {
    const auto inst = atp::io::instance_from_json(atp::io::read_json_file(c.instance_path));
    if (c.second_path.empty()) throw BadInput("verify needs a bids or allocation file");
    const auto doc = atp::io::read_json_file(c.second_path);
    const auto curves = load_curves(c.curves, inst.goods());
    json out = {{"command", "verify"}, {"kind", c.kind}};
    bool ok = false;
    if (c.kind == "tp") {
        const auto bids = atp::io::bids_from_json(doc, inst.agents(), inst.goods());
        const auto report = atp::verify_tp_ne(inst, curves, bids, ne_options(c, c.sweep));
        ok = report.is_ne;
        out["report"] = atp::io::to_json(report);
    } else if (c.kind == "pce") {
        const auto x = atp::io::allocation_from_json(doc, inst.agents(), inst.goods());
        const auto report = atp::verify_pce(inst, curves, x, c.tol_eq);
        ok = report.is_pce;
        out["report"] = atp::io::to_json(report);
    } else {
        throw BadInput("--kind must be tp or pce");
    }
    if (c.assert_mode && !ok) throw VerificationFailed{out};
    return out;
}

json cmd_reduce(const RunConfig& c) {
    const auto inst = atp::io::instance_from_json(atp::io::read_json_file(c.instance_path));
    if (c.second_path.empty()) throw BadInput("reduce needs a bids or allocation file");
    const auto doc = atp::io::read_json_file(c.second_path);
    const auto curves = load_curves(c.curves, inst.goods());
    if (c.direction == "tp2pc") {
        const auto bids = atp::io::bids_from_json(doc, inst.agents(), inst.goods());
        const auto pce = atp::tp_to_pce(inst, curves, bids, c.tol_eq);
        return {{"command", "reduce"},
                {"direction", c.direction},
                {"allocation", atp::io::to_json(pce.allocation)},
                {"curves", atp::io::to_json(pce.price_curves)}};
    }
    if (c.direction == "pc2tp") {
        const auto x = atp::io::allocation_from_json(doc, inst.agents(), inst.goods());
        const auto tp = atp::pce_to_tp(inst, curves, x, parse_h(c.h_spec), c.tol_eq);
        return {{"command", "reduce"},
                {"direction", c.direction},
                {"bids", atp::io::to_json(tp.bids)},
                {"curves", atp::io::to_json(tp.constraint_curves)}};
    }
    throw BadInput("--direction must be tp2pc or pc2tp");
}

json cmd_dynamics(const RunConfig& c) {
    const auto inst = atp::io::instance_from_json(atp::io::read_json_file(c.instance_path));
    const atp::Rho rho = parse_finite_rho(c.rho_text);
    const auto curves = c.curves.empty() ? atp::CurveFamily::atp_rho(inst.goods(), rho.value())
                                         : load_curves(c.curves, inst.goods());
    atp::DynamicsOptions o;
    o.max_rounds = c.max_rounds;
    o.tolerance = c.dynamics_tolerance;
    o.seed = c.seed;
    const auto result = atp::best_response_dynamics(inst, curves, rho, o);
    return {{"command", "dynamics"},
            {"rho", rho.to_string()},
            {"seed", c.seed},
            {"rounds", result.rounds},
            {"converged", result.converged},
            {"welfare_per_round", result.welfare_per_round},
            {"bids", atp::io::to_json(result.bids)},
            {"final_check", atp::io::to_json(result.final_check)}};
}

json cmd_demos(const RunConfig& c) {
    atp::DeviationSearch search;
    search.samples = c.samples;
    search.seed = c.seed;
    search.tol = c.tol_eq;
    json out = {{"command", "demos"}, {"demo", c.demo}};
    if (c.demo == "not-strategyproof") {
        out["report"] = atp::io::to_json(atp::demo_not_strategyproof_ces(parse_rho(c.rho_text, true), c.tol_eq,
                                                                         solver_options(c)));
    } else if (c.demo == "bad-ne") {
        out["report"] = atp::io::to_json(atp::demo_bad_ne_m1(c.n));
    } else if (c.demo == "m2-truthful") {
        if (c.instance_path.empty()) throw BadInput("m2-truthful needs --instance");
        const auto inst = atp::io::instance_from_json(atp::io::read_json_file(c.instance_path));
        out["report"] = atp::io::to_json(atp::demo_m2_truthful_ne(inst, search));
    } else if (c.demo == "m2-all-goods") {
        out["report"] = atp::io::to_json(atp::demo_m2_all_goods(c.n, search));
    } else {
        throw BadInput("unknown demo '" + c.demo + "'");
    }
    return out;
}

void emit(const RunConfig& c, json report) {
    report["tolerances"] = tolerances(c);
    const std::string text = report.dump(2) + "\n";
    if (c.out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(c.out_path);
    if (!out) throw BadInput("cannot write " + c.out_path);
    out << text;
}

void add_common(CLI::App* cmd, RunConfig& c) {
    cmd->add_option("-o,--out", c.out_path, "Write the report here instead of stdout");
    cmd->add_option("--seed", c.seed, "Random seed");
    cmd->add_option("--tol-eq", c.tol_eq, "Equilibrium tolerance")->check(CLI::Range(1e-12, 1.0));
    cmd->add_option("--tol-kkt", c.tol_kkt, "Solver optimality tolerance")->check(CLI::Range(1e-12, 1.0));
    cmd->add_option("--tol-gain", c.tol_gain, "Deviation gain that counts as profitable")
        ->check(CLI::Range(1e-12, 1.0));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Augmented trading post: CES welfare, equilibria and maxmin mechanisms"};
    app.require_subcommand(1);
    RunConfig c;

    auto* solve = app.add_subcommand("solve", "Maximize CES welfare");
    solve->add_option("instance", c.instance_path)->required();
    solve->add_option("--rho", c.rho_text, "-inf, a real below 1, or 1")->required();

    auto* equilibrium = app.add_subcommand("equilibrium", "Build and check an equilibrium of ATP(rho)");
    equilibrium->add_option("instance", c.instance_path)->required();
    equilibrium->add_option("--rho", c.rho_text)->required();

    auto* verify = app.add_subcommand("verify", "Check a trading post profile or a price curve equilibrium");
    verify->add_option("instance", c.instance_path)->required();
    verify->add_option("input", c.second_path, "Bids (tp) or allocation (pce)")->required();
    verify->add_option("--curves", c.curves, "atp_rho:<rho>, uniform:<c>:<d>, or a JSON file")->required();
    verify->add_option("--kind", c.kind)->check(CLI::IsMember({"tp", "pce"}));
    verify->add_flag("--sweep", c.sweep, "Also search for profitable deviations");
    verify->add_flag("--assert", c.assert_mode, "Exit with status 4 if the check fails");

    auto* reduce = app.add_subcommand("reduce", "Convert between trading post and price curve equilibria");
    reduce->add_option("instance", c.instance_path)->required();
    reduce->add_option("input", c.second_path)->required();
    reduce->add_option("--direction", c.direction)->required()->check(CLI::IsMember({"tp2pc", "pc2tp"}));
    reduce->add_option("--curves", c.curves, "Constraint curves (tp2pc) or price curves (pc2tp)")->required();
    reduce->add_option("--free-curve", c.h_spec, "Curve for unpriced goods as <coeff>:<degree>");

    auto* dynamics = app.add_subcommand("dynamics", "Round-robin best response dynamics");
    dynamics->add_option("instance", c.instance_path)->required();
    dynamics->add_option("--rho", c.rho_text)->required();
    dynamics->add_option("--curves", c.curves, "Defaults to the ATP(rho) curves");
    dynamics->add_option("--max-rounds", c.max_rounds)->check(CLI::PositiveNumber);
    dynamics->add_option("--tolerance", c.dynamics_tolerance)->check(CLI::Range(1e-12, 1.0));

    auto* demos = app.add_subcommand("demos", "Mechanism demonstrations");
    demos->add_option("demo", c.demo, "not-strategyproof | bad-ne | m2-truthful | m2-all-goods")
        ->required()
        ->check(CLI::IsMember({"not-strategyproof", "bad-ne", "m2-truthful", "m2-all-goods"}));
    demos->add_option("--rho", c.rho_text);
    demos->add_option("--n", c.n)->check(CLI::Range(2, 12));
    demos->add_option("--instance", c.instance_path);
    demos->add_option("--samples", c.samples);

    for (auto* cmd : {solve, equilibrium, verify, reduce, dynamics, demos}) add_common(cmd, c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitParse;
    }

    try {
        json report;
        if (solve->parsed()) report = cmd_solve(c);
        else if (equilibrium->parsed()) report = cmd_equilibrium(c);
        else if (verify->parsed()) report = cmd_verify(c);
        else if (reduce->parsed()) report = cmd_reduce(c);
        else if (dynamics->parsed()) report = cmd_dynamics(c);
        else report = cmd_demos(c);
        emit(c, std::move(report));
        return kExitOk;
    } catch (const VerificationFailed& failed) {
        emit(c, failed.report);
        return kExitVerify;
    } catch (const atp::io::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const BadInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const atp::NonConvergence& e) {
        std::cerr << "solver failed: " << e.what() << "\n";
        return kExitSolver;
    } catch (const atp::NotAnEquilibrium& e) {
        std::cerr << "not an equilibrium: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }
}
