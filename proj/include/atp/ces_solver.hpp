#pragma once

// CES welfare maximization over feasible allocations.
//
// Every feasible utility vector u is realized by x_ij = w_ij * u_i, so the
// solver works in utility space:
//
//     max Phi_rho(u)   s.t.   sum_i w_ij u_i <= s_j  (all j),   u >= 0.
//
// For finite rho the multipliers q_j are normalized so that every agent's
// budget identity  sum_{j in R_i} q_j u_i^{1-rho} = 1  holds; with that
// normalization g_j(t) = q_j t^{1-rho} are equilibrium price curves.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "atp/core.hpp"

namespace atp {

struct SolverOptions {
    double tol_kkt = 1e-7;
    double tol_dual = 1e-8;
    long max_iterations = 1'000'000;
};

struct SolveResult {
    std::vector<double> u_star;
    Allocation x_star;
    std::vector<double> q;
    double objective = 0.0;
    double kkt_residual = 0.0;
    long iterations = 0;
};

class NonConvergence : public std::runtime_error {
public:
    NonConvergence(long iterations, double residual);
    long iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    long iterations_;
    double residual_;
};

/// Maximizes CES welfare for rho Finite (< 1) or One. For One the LP optimum
/// closest to equal utilities (largest minimum utility on the optimal face)
/// is returned.
SolveResult solve_ces(const Instance& inst, const Rho& rho, const SolverOptions& options = {});

/// Maxmin program with all utilities pinned equal: gamma* = min_j s_j / |{i : j in R_i}|.
SolveResult solve_maxmin(const Instance& inst);

/// gamma* over arbitrary (possibly empty) desired sets. Agents with empty
/// sets do not constrain gamma; goods nobody desires are ignored. Returns
/// nullopt when every set is empty.
std::optional<double> maxmin_gamma(const std::vector<double>& supplies, const std::vector<GoodSet>& sets);

/// Largest violation of the optimality conditions for (u, q):
/// primal feasibility, complementary slackness (for q_j > tol_dual), the
/// budget identity for agents with positive utility, and dual feasibility.
/// Goods' terms are relative to max(1, s_j).
double kkt_residual(const Instance& inst, const Rho& rho, const std::vector<double>& u,
                    const std::vector<double>& q, double tol_dual = 1e-8);

}  // namespace atp
