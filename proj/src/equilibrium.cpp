#include "atp/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace atp {
namespace {

std::string describe(const char* condition, std::size_t agent, std::size_t good, double got, double want) {
    std::ostringstream out;
    out.precision(10);
    out << condition << ": agent " << agent << ", good " << good << " holds " << got << ", expected " << want;
    return out.str();
}

// Multiplier c with sum_j f_j(c * w_j) == 1 over the positive weights.
double scale_to_budget(const CurveFamily& f, const std::vector<double>& weights) {
    auto cost = [&](double c) {
        double total = 0.0;
        for (std::size_t j = 0; j < weights.size(); ++j)
            if (weights[j] > 0.0) total += f[j](c * weights[j]);
        return total;
    };
    double lo = 1e-300, hi = 1.0;
    while (cost(hi) < 1.0 && hi < 1e300) hi *= 2.0;
    while (cost(lo) > 1.0 && lo > 1e-300) lo *= 0.5;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = std::sqrt(lo) * std::sqrt(hi);
        if (cost(mid) <= 1.0)
            lo = mid;
        else
            hi = mid;
        if (hi / lo - 1.0 < 1e-15) break;
    }
    return lo;
}

BidRow row_from_weights(const CurveFamily& f, const std::vector<double>& weights, const BidRow& template_row) {
    const double c = scale_to_budget(f, weights);
    BidRow row = template_row;
    for (std::size_t j = 0; j < weights.size(); ++j)
        if (weights[j] > 0.0) row[j] = Bid::positive(c * weights[j]);
    return row;
}

BidRow random_row(const Instance& inst, const CurveFamily& f, std::size_t agent, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> weight(0.1, 1.0);
    std::vector<double> weights(inst.goods(), 0.0);
    for (std::size_t j : inst.desired(agent)) weights[j] = weight(rng);
    return row_from_weights(f, weights, BidRow(inst.goods(), Bid::zero()));
}

// Jitters the positive part of the current row (or starts fresh), keeps some
// Beta bids, and rescales to an exhausted budget.
BidRow perturbed_row(const Instance& inst, const CurveFamily& f, std::size_t agent, std::span<const Bid> current,
                     std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 0.5);
    if (unit(rng) < 0.2) return random_row(inst, f, agent, rng);
    std::vector<double> weights(inst.goods(), 0.0);
    BidRow base(inst.goods(), Bid::zero());
    bool any = false;
    for (std::size_t j : inst.desired(agent)) {
        const Bid& bid = current[j];
        if (bid.is_beta() && unit(rng) < 0.5) {
            base[j] = Bid::beta();
            continue;
        }
        const double start = bid.is_positive() ? bid.amount() : 0.1 * unit(rng);
        weights[j] = start * std::exp(jitter(rng));
        any = any || weights[j] > 0.0;
    }
    if (!any) return random_row(inst, f, agent, rng);
    return row_from_weights(f, weights, base);
}

}  // namespace

BidRow random_budget_row(const Instance& inst, const CurveFamily& f, std::size_t agent, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return random_row(inst, f, agent, rng);
}

NeReport verify_tp_ne(const Instance& inst, const CurveFamily& f, const BidMatrix& b, const NeCheckOptions& options) {
    f.require_constraint_curves();
    NeReport report;
    AllocationTrace trace;
    try {
        trace = atp_allocate_traced(inst, f, b);
    } catch (const InfeasibleBid& e) {
        report.violated_condition = std::string("bid constraint: ") + e.what();
        return report;
    }
    report.allocation = trace.final;
    report.utilities = utilities(inst, trace.final);
    const auto& x = report.allocation;
    const auto& u = report.utilities;

    auto fail = [&](std::string why) {
        if (!report.violated_condition) report.violated_condition = std::move(why);
    };
    for (std::size_t i = 0; i < inst.agents() && !report.violated_condition; ++i) {
        if (!(u[i] > 0.0)) {
            const bool penalized = std::find(trace.penalized.begin(), trace.penalized.end(), i) != trace.penalized.end();
            fail("positive utility: agent " + std::to_string(i) + " has utility 0" +
                 (penalized ? " (free-claim penalty)" : ""));
        }
    }
    for (std::size_t j = 0; j < inst.goods() && !report.violated_condition; ++j) {
        if (!b.has_positive_bid(j)) continue;
        const double tol = options.tol_eq * std::max(1.0, inst.supply(j));
        for (std::size_t i = 0; i < inst.agents(); ++i) {
            const double want = inst.desires(i, j) ? u[i] : 0.0;
            if (std::abs(x(i, j) - want) > tol) {
                fail(describe("condition 1", i, j, x(i, j), want));
                break;
            }
        }
    }
    for (std::size_t i = 0; i < inst.agents() && !report.violated_condition; ++i) {
        const double cost = bid_cost(f, b.row(i));
        if (std::abs(cost - 1.0) > options.tol_eq) {
            std::ostringstream out;
            out.precision(10);
            out << "condition 2: agent " << i << " spends " << cost << " of budget 1";
            fail(out.str());
        }
    }
    report.conditions_hold = !report.violated_condition.has_value();

    if (options.deviation_sweep) {
        std::mt19937_64 rng(options.seed);
        std::optional<DeviationWitness> best;
        for (std::size_t i = 0; i < inst.agents(); ++i) {
            const double threshold = options.tol_gain * std::max(1.0, u[i]);
            auto consider = [&](BidRow row, double achieved) {
                const double gain = achieved - u[i];
                if (gain > threshold && (!best || gain > best->gain)) best = DeviationWitness{i, std::move(row), gain};
            };
            auto br = best_response(inst, f, b, i);
            consider(std::move(br.bids), br.utility);
            for (int k = 0; k < options.random_deviations; ++k) {
                BidRow row = perturbed_row(inst, f, i, b.row(i), rng);
                const auto trial = atp_allocate(inst, f, with_row(b, i, row));
                consider(std::move(row), utility(inst, i, trial.row(i)));
            }
        }
        report.sweep_found_gain = best.has_value();
        report.deviation_witness = std::move(best);
        report.oracle_disagreement = report.conditions_hold == *report.sweep_found_gain;
        if (report.deviation_witness && report.conditions_hold) {
            std::ostringstream out;
            out << "deviation sweep: agent " << report.deviation_witness->agent << " gains "
                << report.deviation_witness->gain;
            report.violated_condition = out.str();
        }
    }
    report.is_ne = report.conditions_hold && !report.sweep_found_gain.value_or(false);
    return report;
}

PceReport verify_pce(const Instance& inst, const CurveFamily& g, const Allocation& x, double tol_eq) {
    PceReport report;
    auto fail = [&](std::string why) {
        report.violated_condition = std::move(why);
        return report;
    };
    try {
        g.require_price_curves();
    } catch (const std::invalid_argument& e) {
        return fail(e.what());
    }
    if (g.size() != inst.goods() || x.agents() != inst.agents() || x.goods() != inst.goods())
        return fail("shape: allocation or curves do not match the instance");

    const auto u = utilities(inst, x);
    for (std::size_t j = 0; j < inst.goods(); ++j) {
        const double tol = tol_eq * std::max(1.0, inst.supply(j));
        for (std::size_t i = 0; i < inst.agents(); ++i) {
            if (x(i, j) < 0.0) return fail(describe("nonnegativity", i, j, x(i, j), 0.0));
            if (g[j].is_zero()) continue;
            const double want = inst.desires(i, j) ? u[i] : 0.0;
            if (std::abs(x(i, j) - want) > tol) return fail(describe("condition 1", i, j, x(i, j), want));
        }
    }
    for (std::size_t i = 0; i < inst.agents(); ++i) {
        const double cost = g.cost(x.row(i));
        if (std::abs(cost - 1.0) > tol_eq) {
            std::ostringstream out;
            out.precision(10);
            out << "condition 2: agent " << i << " spends " << cost << " of budget 1";
            return fail(out.str());
        }
    }
    for (std::size_t j = 0; j < inst.goods(); ++j) {
        const double tol = tol_eq * std::max(1.0, inst.supply(j));
        const double load = x.column_sum(j);
        const bool over = load > inst.supply(j) + tol;
        const bool slack = !g[j].is_zero() && load < inst.supply(j) - tol;
        if (over || slack) {
            std::ostringstream out;
            out.precision(10);
            out << "condition 3: good " << j << " allocates " << load << " of supply " << inst.supply(j)
                << (slack ? " while priced" : "");
            return fail(out.str());
        }
    }
    report.is_pce = true;
    return report;
}

PriceCurveEquilibrium tp_to_pce(const Instance& inst, const CurveFamily& f, const BidMatrix& b, double tol_eq) {
    NeCheckOptions check;
    check.tol_eq = tol_eq;
    const auto report = verify_tp_ne(inst, f, b, check);
    if (!report.is_ne) throw NotAnEquilibrium("bids are not a Nash equilibrium: " + *report.violated_condition);

    std::vector<PowerCurve> curves(inst.goods());
    for (std::size_t j = 0; j < inst.goods(); ++j) {
        if (!b.has_positive_bid(j)) {
            curves[j] = PowerCurve{0.0, f[j].degree};
            continue;
        }
        const double scale = std::pow(b.column_total(j) / inst.supply(j), f[j].degree);
        curves[j] = PowerCurve{scale * f[j].coeff, f[j].degree};
    }
    return {report.allocation, CurveFamily(std::move(curves))};
}

TradingPostEquilibrium pce_to_tp(const Instance& inst, const CurveFamily& g, const Allocation& x, const PowerCurve& h,
                                 double tol_eq) {
    if (!(h.coeff > 0.0) || !(h.degree > 0.0)) throw std::invalid_argument("h must be strictly increasing");
    const auto report = verify_pce(inst, g, x, tol_eq);
    if (!report.is_pce) throw NotAnEquilibrium("not a price curve equilibrium: " + *report.violated_condition);

    TradingPostEquilibrium out;
    std::vector<PowerCurve> curves(inst.goods());
    out.bids = BidMatrix(inst.agents(), inst.goods());
    for (std::size_t j = 0; j < inst.goods(); ++j) {
        const bool free = g[j].is_zero();
        curves[j] = free ? h : g[j];
        for (std::size_t i = 0; i < inst.agents(); ++i) {
            if (free)
                out.bids(i, j) = inst.desires(i, j) ? Bid::beta() : Bid::zero();
            else
                out.bids(i, j) = Bid::positive(x(i, j));
        }
    }
    out.constraint_curves = CurveFamily(std::move(curves));
    return out;
}

CurveFamily scale_curves(const CurveFamily& f, const std::vector<double>& scalars) {
    if (scalars.size() != f.size()) throw std::invalid_argument("one scalar per good is required");
    std::vector<PowerCurve> curves = f.curves();
    for (std::size_t j = 0; j < curves.size(); ++j) {
        if (!(scalars[j] > 0.0)) throw std::invalid_argument("curve scalars must be positive");
        curves[j].coeff *= scalars[j];
    }
    return CurveFamily(std::move(curves));
}

BidMatrix transform_bids(const BidMatrix& b, const std::vector<double>& scalars, const std::vector<double>& degrees) {
    if (scalars.size() != b.goods() || degrees.size() != b.goods())
        throw std::invalid_argument("one scalar and one degree per good are required");
    BidMatrix out = b;
    for (std::size_t j = 0; j < b.goods(); ++j) {
        if (!(scalars[j] > 0.0) || !(degrees[j] > 0.0))
            throw std::invalid_argument("scalars and degrees must be positive");
        const double factor = std::pow(scalars[j], -1.0 / degrees[j]);
        for (std::size_t i = 0; i < b.agents(); ++i)
            if (b(i, j).is_positive()) out(i, j) = Bid::positive(factor * b(i, j).amount());
    }
    return out;
}

AtpRhoEquilibrium construct_atp_rho_equilibrium(const Instance& inst, const Rho& rho, const SolverOptions& options) {
    if (!rho.is_finite()) throw std::invalid_argument("ATP(rho) equilibria exist for finite rho < 1 only");
    const std::size_t m = inst.goods();
    const double degree = 1.0 - rho.value();

    AtpRhoEquilibrium out;
    out.optimum = solve_ces(inst, rho, options);

    std::vector<PowerCurve> prices(m);
    std::vector<double> scalars(m, 1.0);
    for (std::size_t j = 0; j < m; ++j) {
        const double q = out.optimum.q[j];
        if (q > options.tol_dual) {
            prices[j] = PowerCurve{q, degree};
            scalars[j] = 1.0 / q;
        } else {
            prices[j] = PowerCurve{0.0, degree};
        }
    }
    const auto tp = pce_to_tp(inst, CurveFamily(std::move(prices)), out.optimum.x_star, PowerCurve{1.0, degree});

    // scale_curves(tp.constraint_curves, scalars) is the unit family up to
    // rounding; use the exact one.
    out.curves = CurveFamily::atp_rho(m, rho.value());
    out.bids = transform_bids(tp.bids, scalars, std::vector<double>(m, degree));

    const auto report = verify_tp_ne(inst, out.curves, out.bids);
    if (!report.is_ne) throw NotAnEquilibrium("constructed bids failed verification: " + *report.violated_condition);
    out.allocation = report.allocation;
    out.welfare = ces_welfare(rho, report.utilities);
    return out;
}

DynamicsResult best_response_dynamics(const Instance& inst, const CurveFamily& f, const Rho& rho,
                                      const DynamicsOptions& options) {
    f.require_constraint_curves();
    std::mt19937_64 rng(options.seed);
    DynamicsResult result;
    result.bids = BidMatrix(inst.agents(), inst.goods());
    for (std::size_t i = 0; i < inst.agents(); ++i) result.bids.set_row(i, random_row(inst, f, i, rng));

    auto welfare_now = [&] {
        const auto x = atp_allocate(inst, f, result.bids);
        return ces_welfare(rho, utilities(inst, x));
    };
    result.welfare_per_round.push_back(welfare_now());

    // Goods on which every positive bid costs less than `dust` are handed to
    // their bidders as Beta claims. Sequential play only shrinks such bids
    // geometrically, so they would otherwise never clear.
    const double dust = std::sqrt(options.tolerance);
    auto clear_dust = [&] {
        bool changed = false;
        for (std::size_t j = 0; j < inst.goods(); ++j) {
            if (!result.bids.has_positive_bid(j)) continue;
            bool all_dust = true;
            for (std::size_t i = 0; i < inst.agents() && all_dust; ++i)
                if (result.bids(i, j).is_positive() && f[j](result.bids(i, j).amount()) > dust) all_dust = false;
            if (!all_dust) continue;
            BidMatrix cleared = result.bids;
            for (std::size_t i = 0; i < inst.agents(); ++i)
                if (cleared(i, j).is_positive()) cleared(i, j) = Bid::beta();
            const auto before = utilities(inst, atp_allocate(inst, f, result.bids));
            const auto after = utilities(inst, atp_allocate(inst, f, cleared));
            bool harmless = true;
            for (std::size_t i = 0; i < inst.agents(); ++i)
                if (after[i] < before[i] - options.tolerance * std::max(1.0, before[i])) harmless = false;
            if (!harmless) continue;
            result.bids = std::move(cleared);
            changed = true;
        }
        return changed;
    };
    for (int round = 0; round < options.max_rounds; ++round) {
        double max_gain = 0.0;
        for (std::size_t i = 0; i < inst.agents(); ++i) {
            const auto x = atp_allocate(inst, f, result.bids);
            const double current = utility(inst, i, x.row(i));
            auto br = best_response(inst, f, result.bids, i);
            const double gain = br.utility - current;
            if (gain > options.tolerance * std::max(1.0, current)) {
                result.bids.set_row(i, br.bids);
                max_gain = std::max(max_gain, gain);
            }
        }
        const bool cleared = clear_dust();
        result.rounds = round + 1;
        result.welfare_per_round.push_back(welfare_now());
        if (max_gain <= 0.0 && !cleared) {
            result.converged = true;
            break;
        }
    }
    NeCheckOptions check;
    check.deviation_sweep = true;
    check.seed = options.seed;
    result.final_check = verify_tp_ne(inst, f, result.bids, check);
    return result;
}

}  // namespace atp
