#include "atp/maxmin_mech.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace atp {

namespace {

using Mask = std::uint32_t;

GoodSet from_mask(Mask mask, std::size_t goods) {
    GoodSet set;
    for (std::size_t j = 0; j < goods; ++j)
        if (mask & (Mask{1} << j)) set.push_back(j);
    return set;
}

GoodSet all_goods(std::size_t goods) {
    GoodSet set(goods);
    for (std::size_t j = 0; j < goods; ++j) set[j] = j;
    return set;
}

void check_supplies(std::size_t goods, const std::vector<double>& supplies) {
    if (supplies.size() != goods) throw std::invalid_argument("supply vector length must equal the good count");
    for (double s : supplies)
        if (!(s > 0.0)) throw std::invalid_argument("supplies must be positive");
}

bool strict_subset(const GoodSet& a, const GoodSet& b) {
    return a.size() < b.size() && std::includes(b.begin(), b.end(), a.begin(), a.end());
}

ReportMatrix normalized(const ReportMatrix& reports) {
    const std::size_t n = reports.size();
    ReportMatrix out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (reports[i].size() != n)
            throw std::invalid_argument("report row " + std::to_string(i) + " must name a set for every agent");
        out[i].reserve(n);
        for (const auto& set : reports[i]) out[i].push_back(normalize_set(set));
    }
    return out;
}

std::vector<double> true_utilities(const Instance& inst, const Allocation& x) {
    std::vector<double> u(inst.agents());
    for (std::size_t i = 0; i < inst.agents(); ++i) u[i] = utility_for_set(inst.desired(i), x.row(i));
    return u;
}

bool in_nbar(const PenaltyState& p, std::size_t agent) {
    return std::binary_search(p.nbar.begin(), p.nbar.end(), agent);
}

double m2_true_utility(const Instance& inst, const ReportMatrix& profile, std::size_t agent) {
    const auto outcome = mechanism2(inst.goods(), inst.supplies(), profile);
    return utility_for_set(inst.desired(agent), outcome.allocation.row(agent));
}

// Best row for one agent of Mechanism 2, exhaustive or sampled.
std::optional<ReportRowDeviation> best_row_deviation(const Instance& inst, const ReportMatrix& profile,
                                                     std::size_t agent, bool exhaustive,
                                                     const DeviationSearch& search, std::size_t& checked) {
    const std::size_t n = inst.agents();
    const std::size_t m = inst.goods();
    const Mask subsets = Mask{1} << m;

    const double before = m2_true_utility(inst, profile, agent);
    const bool was_overclaimed = in_nbar(mechanism2_penalty(profile), agent);

    std::optional<ReportRowDeviation> best;
    ReportMatrix trial = profile;
    auto consider = [&](const std::vector<Mask>& row) {
        for (std::size_t k = 0; k < n; ++k) trial[agent][k] = from_mask(row[k], m);
        ++checked;
        const auto outcome = mechanism2(m, inst.supplies(), trial);
        const double after = utility_for_set(inst.desired(agent), outcome.allocation.row(agent));
        if (after <= before + search.tol * std::max(1.0, before)) return;
        if (best && after <= best->after) return;
        best = ReportRowDeviation{agent, trial[agent], before, after, was_overclaimed,
                                  in_nbar(outcome.penalty, agent)};
    };

    std::vector<Mask> row(n, 0);
    if (exhaustive) {
        while (true) {
            consider(row);
            std::size_t k = 0;
            while (k < n && ++row[k] == subsets) row[k++] = 0;
            if (k == n) break;
        }
    } else {
        std::mt19937_64 rng(search.seed + 0x9e3779b97f4a7c15ULL * (agent + 1));
        std::uniform_int_distribution<Mask> pick(0, subsets - 1);
        for (std::size_t s = 0; s < search.samples; ++s) {
            for (auto& mask : row) mask = pick(rng);
            consider(row);
        }
    }
    return best;
}

}  // namespace

Allocation mechanism1(std::size_t goods, const std::vector<double>& supplies, const std::vector<GoodSet>& reports) {
    check_supplies(goods, supplies);
    std::vector<GoodSet> sets;
    sets.reserve(reports.size());
    for (const auto& r : reports) sets.push_back(normalize_set(r));

    Allocation x(sets.size(), goods);
    const auto gamma = maxmin_gamma(supplies, sets);
    if (!gamma) return x;
    for (std::size_t i = 0; i < sets.size(); ++i)
        for (std::size_t j : sets[i]) x(i, j) = *gamma;
    return x;
}

PenaltyState mechanism2_penalty(const ReportMatrix& raw) {
    const auto reports = normalized(raw);
    const std::size_t n = reports.size();
    PenaltyState p;
    p.eta.assign(n, 0);
    p.alpha.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        bool over = false;
        for (std::size_t k = 0; k < n; ++k) {
            if (reports[k][k] != reports[i][k]) ++p.eta[i];
            if (strict_subset(reports[k][k], reports[i][k])) over = true;
        }
        if (over)
            p.nbar.push_back(i);
        else
            p.alpha[i] = 1.0 - static_cast<double>(p.eta[i]) / static_cast<double>(n);
    }
    return p;
}

Mechanism2Outcome mechanism2(std::size_t goods, const std::vector<double>& supplies, const ReportMatrix& raw) {
    const auto reports = normalized(raw);
    const std::size_t n = reports.size();
    Mechanism2Outcome out;
    out.penalty = mechanism2_penalty(reports);

    std::vector<GoodSet> self(n);
    for (std::size_t i = 0; i < n; ++i)
        if (!in_nbar(out.penalty, i)) self[i] = reports[i][i];
    out.unpenalized = mechanism1(goods, supplies, self);
    out.allocation = out.unpenalized;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < goods; ++j) out.allocation(i, j) *= out.penalty.alpha[i];
    return out;
}

std::optional<ReportDeviation> check_strategyproof_m1(std::size_t goods, const std::vector<double>& supplies,
                                                      const std::vector<GoodSet>& true_sets, std::size_t agent,
                                                      double tol) {
    if (goods > 12) throw std::invalid_argument("exhaustive report search supports at most 12 goods");
    if (agent >= true_sets.size()) throw std::out_of_range("agent index out of range");
    auto reports = true_sets;
    const GoodSet truth = normalize_set(true_sets[agent]);
    const double truthful = utility_for_set(truth, mechanism1(goods, supplies, reports).row(agent));
    for (Mask mask = 0; mask < (Mask{1} << goods); ++mask) {
        reports[agent] = from_mask(mask, goods);
        const double u = utility_for_set(truth, mechanism1(goods, supplies, reports).row(agent));
        if (u > truthful + tol * std::max(1.0, truthful)) return ReportDeviation{agent, reports[agent], truthful, u};
    }
    return std::nullopt;
}

BadNeReport demo_bad_ne_m1(std::size_t n) {
    if (n < 2) throw std::invalid_argument("the bad equilibrium demo needs at least two agents");
    if (n > 12) throw std::invalid_argument("the bad equilibrium demo enumerates 2^n reports; use n <= 12");
    const std::vector<double> supplies(n, 1.0);
    std::vector<GoodSet> truth(n);
    for (std::size_t i = 0; i < n; ++i) truth[i] = {i};

    auto is_ne = [&](const std::vector<GoodSet>& profile) {
        for (std::size_t i = 0; i < n; ++i) {
            auto reports = profile;
            const double current = utility_for_set(truth[i], mechanism1(n, supplies, reports).row(i));
            for (Mask mask = 0; mask < (Mask{1} << n); ++mask) {
                reports[i] = from_mask(mask, n);
                const double u = utility_for_set(truth[i], mechanism1(n, supplies, reports).row(i));
                if (u > current + 1e-12) return false;
            }
        }
        return true;
    };
    auto maxmin_of = [&](const std::vector<GoodSet>& profile) {
        const auto x = mechanism1(n, supplies, profile);
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) worst = std::min(worst, utility_for_set(truth[i], x.row(i)));
        return worst;
    };

    const std::vector<GoodSet> everything(n, all_goods(n));
    BadNeReport r;
    r.n = n;
    r.all_goods_profile_is_ne = is_ne(everything);
    r.truthful_profile_is_ne = is_ne(truth);
    r.all_goods_maxmin = maxmin_of(everything);
    r.optimal_maxmin = maxmin_of(truth);
    r.ratio = r.optimal_maxmin / r.all_goods_maxmin;
    return r;
}

Mechanism2NeReport check_mechanism2_ne(const Instance& inst, const ReportMatrix& profile,
                                       const DeviationSearch& search) {
    const std::size_t n = inst.agents();
    const std::size_t m = inst.goods();
    if (m > 16) throw std::invalid_argument("report search supports at most 16 goods");
    const auto reports = normalized(profile);
    if (reports.size() != n) throw std::invalid_argument("report matrix must have one row per agent");

    Mechanism2NeReport r;
    r.exhaustive = n <= 3 && m <= 3;
    r.utilities = true_utilities(inst, mechanism2(m, inst.supplies(), reports).allocation);
    r.welfare = *std::min_element(r.utilities.begin(), r.utilities.end());
    r.optimal_welfare = solve_maxmin(inst).objective;
    for (std::size_t i = 0; i < n && !r.witness; ++i)
        r.witness = best_row_deviation(inst, reports, i, r.exhaustive, search, r.deviations_checked);
    r.is_ne = !r.witness.has_value();
    return r;
}

Mechanism2NeReport demo_m2_truthful_ne(const Instance& inst, const DeviationSearch& search) {
    const ReportMatrix profile(inst.agents(), inst.desired_sets());
    return check_mechanism2_ne(inst, profile, search);
}

AllGoodsM2Report demo_m2_all_goods(std::size_t n, const DeviationSearch& search) {
    if (n < 2) throw std::invalid_argument("the all-goods demo needs at least two agents");
    std::vector<GoodSet> truth(n);
    for (std::size_t i = 0; i < n; ++i) truth[i] = {i};
    const Instance inst(std::vector<double>(n, 1.0), truth);

    ReportMatrix profile(n, std::vector<GoodSet>(n, all_goods(n)));
    profile[0][0] = truth[0];

    AllGoodsM2Report r;
    r.n = n;
    r.check = check_mechanism2_ne(inst, profile, search);
    const bool exhaustive = r.check.exhaustive;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t checked = 0;
        r.deviations.push_back(best_row_deviation(inst, profile, i, exhaustive, search, checked));
    }
    return r;
}

Instance strategyproofness_instance() {
    return Instance({1, 1, 1, 1, 1, 1, 2}, {{0, 1, 6}, {2, 3, 6}, {4, 5, 6}, {0, 2, 4}, {1, 3, 5}});
}

Instance strategyproofness_lie_instance() {
    return Instance({1, 1, 1, 1, 1, 1, 2}, {{0, 1, 6}, {2, 3, 6}, {4, 5, 6}, {0, 2, 4, 6}, {1, 3, 5}});
}

StrategyproofnessReport demo_not_strategyproof_ces(const Rho& rho, double tol_eq, const SolverOptions& options) {
    if (rho.kind() == Rho::Kind::NegInfinity)
        throw std::invalid_argument("the CES counterexample needs a finite rho or rho = 1");
    const Instance truth = strategyproofness_instance();
    const Instance lie = strategyproofness_lie_instance();
    const auto honest = solve_ces(truth, rho, options);
    const auto lying = solve_ces(lie, rho, options);

    StrategyproofnessReport r;
    r.rho = rho;
    r.truthful_utilities = true_utilities(truth, honest.x_star);
    r.lie_utilities = true_utilities(truth, lying.x_star);
    r.truthful_u4 = r.truthful_utilities[kLyingAgent];
    r.lie_u4 = r.lie_utilities[kLyingAgent];
    r.truthful_below_half = r.truthful_u4 < 0.5;
    r.lie_at_least_half = r.lie_u4 >= 0.5 - tol_eq;
    r.lie_profitable = r.lie_u4 > r.truthful_u4 + tol_eq;
    return r;
}

}  // namespace atp
