#pragma once

// Maxmin mechanisms over reported desired sets.
//
// Mechanism 1 takes one reported set per agent and gives every agent with a
// nonempty report gamma* units of each reported good. Mechanism 2 asks every
// agent to report the whole profile, penalizes disagreement and
// over-claiming, then runs Mechanism 1 on the self-reports.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "atp/ces_solver.hpp"
#include "atp/core.hpp"

namespace atp {

/// reports[i][k] is the set agent i claims agent k desires.
using ReportMatrix = std::vector<std::vector<GoodSet>>;

struct PenaltyState {
    std::vector<std::size_t> eta;   ///< disagreement counts
    std::vector<std::size_t> nbar;  ///< over-claimed agents, ascending
    std::vector<double> alpha;      ///< multiplicative penalty per agent
};

struct Mechanism2Outcome {
    Allocation allocation;  ///< alpha_i * y_i
    Allocation unpenalized; ///< y
    PenaltyState penalty;
};

/// x_ij = gamma* on reported goods. Empty reports get nothing and do not
/// constrain gamma; if every report is empty the allocation is zero.
Allocation mechanism1(std::size_t goods, const std::vector<double>& supplies, const std::vector<GoodSet>& reports);

PenaltyState mechanism2_penalty(const ReportMatrix& reports);

Mechanism2Outcome mechanism2(std::size_t goods, const std::vector<double>& supplies, const ReportMatrix& reports);

struct ReportDeviation {
    std::size_t agent = 0;
    GoodSet report;
    double truthful_utility = 0.0;
    double deviation_utility = 0.0;
};

/// Tries all 2^m reports for `agent` with everyone else truthful. Returns
/// the first report that raises its true utility by more than tol, if any.
/// Requires m <= 12.
std::optional<ReportDeviation> check_strategyproof_m1(std::size_t goods, const std::vector<double>& supplies,
                                                      const std::vector<GoodSet>& true_sets, std::size_t agent,
                                                      double tol = 1e-6);

struct BadNeReport {
    std::size_t n = 0;
    bool all_goods_profile_is_ne = false;
    bool truthful_profile_is_ne = false;
    double all_goods_maxmin = 0.0;
    double optimal_maxmin = 0.0;
    double ratio = 0.0;
};

/// n agents, n unit goods, agent i wants only good i. Everyone reporting
/// every good is an equilibrium of Mechanism 1 worth 1/n instead of 1.
BadNeReport demo_bad_ne_m1(std::size_t n);

struct ReportRowDeviation {
    std::size_t agent = 0;
    std::vector<GoodSet> row;
    double before = 0.0;
    double after = 0.0;
    bool was_overclaimed = false;
    bool still_overclaimed = false;
};

struct Mechanism2NeReport {
    bool is_ne = false;
    bool exhaustive = false;
    std::size_t deviations_checked = 0;
    std::optional<ReportRowDeviation> witness;
    std::vector<double> utilities;  ///< true utilities at the profile
    double welfare = 0.0;           ///< min true utility
    double optimal_welfare = 0.0;   ///< gamma* of the true instance
};

struct DeviationSearch {
    /// Exhaustive when n <= 3 and m <= 3, otherwise this many random rows per agent.
    std::size_t samples = 10'000;
    std::uint64_t seed = 0x5eed;
    double tol = 1e-6;
};

/// Single-agent deviation search over whole report rows of Mechanism 2.
Mechanism2NeReport check_mechanism2_ne(const Instance& inst, const ReportMatrix& profile,
                                       const DeviationSearch& search = {});

/// Everyone reports the true profile.
Mechanism2NeReport demo_m2_truthful_ne(const Instance& inst, const DeviationSearch& search = {});

struct AllGoodsM2Report {
    std::size_t n = 0;
    /// One entry per agent: its best deviation from the profile, if any.
    std::vector<std::optional<ReportRowDeviation>> deviations;
    Mechanism2NeReport check;
};

/// Same instance as demo_bad_ne_m1. Agent 0 reports its true set for
/// itself, every other entry of every row is the full good set.
AllGoodsM2Report demo_m2_all_goods(std::size_t n, const DeviationSearch& search = {});

struct StrategyproofnessReport {
    Rho rho = Rho::utilitarian();
    std::vector<double> truthful_utilities;
    std::vector<double> lie_utilities;
    double truthful_u4 = 0.0;
    double lie_u4 = 0.0;
    bool truthful_below_half = false;
    bool lie_at_least_half = false;
    bool lie_profitable = false;
};

/// Five agents, seven goods (supply 2 on the last, 1 elsewhere). Agent 3
/// wants goods {0, 2, 4}; adding good 6 to its report raises its utility.
Instance strategyproofness_instance();
Instance strategyproofness_lie_instance();
inline constexpr std::size_t kLyingAgent = 3;

StrategyproofnessReport demo_not_strategyproof_ces(const Rho& rho, double tol_eq = 1e-6,
                                                   const SolverOptions& options = {});

}  // namespace atp
