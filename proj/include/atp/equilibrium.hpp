#pragma once

// Equilibrium checks for ATP(f) and price-curve markets, the conversions
// between the two, curve scaling, and construction of an equilibrium of
// ATP(rho) from the CES optimum.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "atp/atp_engine.hpp"
#include "atp/ces_solver.hpp"
#include "atp/core.hpp"

namespace atp {

/// Relative tolerance for equilibrium equalities (against max(1, s_j)).
inline constexpr double kTolEq = 1e-6;

class NotAnEquilibrium : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DeviationWitness {
    std::size_t agent = 0;
    BidRow bids;
    double gain = 0.0;
};

struct NeReport {
    bool is_ne = false;
    /// First failed condition, e.g. "condition 2: agent 1 spends 0.5 of budget 1".
    std::optional<std::string> violated_condition;
    std::optional<DeviationWitness> deviation_witness;
    bool conditions_hold = false;         ///< verdict of the structural conditions alone
    std::optional<bool> sweep_found_gain; ///< set when a deviation sweep ran
    bool oracle_disagreement = false;     ///< conditions and sweep disagree
    Allocation allocation;
    std::vector<double> utilities;
};

struct PceReport {
    bool is_pce = false;
    std::optional<std::string> violated_condition;
};

struct NeCheckOptions {
    double tol_eq = kTolEq;
    bool deviation_sweep = false;
    /// Absolute utility gain (scaled by max(1, u_i)) that counts as profitable.
    double tol_gain = 1e-6;
    int random_deviations = 200;
    std::uint64_t seed = 0x5eed;
};

/// Nash check for ATP(f). Structural conditions: every agent has positive
/// utility; on every good with a positive bid each agent holds exactly
/// w_ij * u_i; every agent spends exactly its budget. With deviation_sweep
/// set, a best response plus random budget-exhausting rows are also tried
/// for every agent; is_ne then requires both verdicts.
NeReport verify_tp_ne(const Instance& inst, const CurveFamily& f, const BidMatrix& b,
                      const NeCheckOptions& options = {});

/// Price-curve equilibrium check: bundles proportional to w_i on priced
/// goods, exhausted budgets, supply respected and exhausted on priced goods.
PceReport verify_pce(const Instance& inst, const CurveFamily& g, const Allocation& x, double tol_eq = kTolEq);

struct PriceCurveEquilibrium {
    Allocation allocation;
    CurveFamily price_curves;
};

struct TradingPostEquilibrium {
    CurveFamily constraint_curves;
    BidMatrix bids;
};

/// g_j = (total_j / s_j)^{alpha_j} f_j on goods with a positive bid, zero
/// elsewhere; allocation from the ATP rule. Throws NotAnEquilibrium unless b
/// passes verify_tp_ne.
PriceCurveEquilibrium tp_to_pce(const Instance& inst, const CurveFamily& f, const BidMatrix& b,
                                double tol_eq = kTolEq);

/// f_j = h on zero-price goods, g_j otherwise; b_ij = Beta / Zero on
/// zero-price goods (by desire), x_ij otherwise. Throws NotAnEquilibrium
/// unless (x, g) passes verify_pce.
TradingPostEquilibrium pce_to_tp(const Instance& inst, const CurveFamily& g, const Allocation& x,
                                 const PowerCurve& h, double tol_eq = kTolEq);

/// f'_j = a_j f_j. Scalars must be positive.
CurveFamily scale_curves(const CurveFamily& f, const std::vector<double>& scalars);

/// b'_ij = a_j^{-1/alpha_j} b_ij on positive bids; Zero and Beta unchanged.
BidMatrix transform_bids(const BidMatrix& b, const std::vector<double>& scalars, const std::vector<double>& degrees);

struct AtpRhoEquilibrium {
    BidMatrix bids;
    Allocation allocation;
    CurveFamily curves;  ///< f_j(b) = b^{1-rho}
    SolveResult optimum;
    double welfare = 0.0;
};

/// Solve -> price curves q_j t^{1-rho} -> trading post bids -> rescale onto
/// the unit curves of ATP(rho). Positive bids end up as q_j^{1/(1-rho)} x*_ij.
/// Throws NotAnEquilibrium if the result fails verification.
AtpRhoEquilibrium construct_atp_rho_equilibrium(const Instance& inst, const Rho& rho,
                                                const SolverOptions& options = {});

struct DynamicsOptions {
    int max_rounds = 500;
    /// Stop once no agent's best response gains more than this.
    double tolerance = 1e-9;
    std::uint64_t seed = 0x5eed;
};

struct DynamicsResult {
    BidMatrix bids;
    std::vector<double> welfare_per_round;
    int rounds = 0;
    bool converged = false;
    NeReport final_check;
};

/// Round-robin best-response dynamics from a seeded random feasible profile.
DynamicsResult best_response_dynamics(const Instance& inst, const CurveFamily& f, const Rho& rho,
                                      const DynamicsOptions& options = {});

/// Random positive row on the desired goods scaled so that its cost is 1.
BidRow random_budget_row(const Instance& inst, const CurveFamily& f, std::size_t agent, std::uint64_t seed);

}  // namespace atp
