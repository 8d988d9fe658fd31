#include "atp/atp_engine.hpp"

#include <algorithm>
#include <limits>

namespace atp {

Bid Bid::positive(double amount) {
    if (!std::isfinite(amount)) throw std::invalid_argument("bid amount must be finite");
    if (amount <= kTolBid) return zero();
    return Bid(Kind::Positive, amount);
}

void BidMatrix::set_row(std::size_t i, std::span<const Bid> row) {
    if (i >= n_ || row.size() != m_) throw std::invalid_argument("bid row shape mismatch");
    std::copy(row.begin(), row.end(), bids_.begin() + static_cast<std::ptrdiff_t>(i * m_));
}

double BidMatrix::column_total(std::size_t j, std::size_t excluded) const {
    double total = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
        if (i != excluded) total += (*this)(i, j).amount();
    return total;
}

bool BidMatrix::has_positive_bid(std::size_t j) const {
    for (std::size_t i = 0; i < n_; ++i)
        if ((*this)(i, j).is_positive()) return true;
    return false;
}

void CurveFamily::require_constraint_curves() const {
    for (std::size_t j = 0; j < curves_.size(); ++j) {
        const auto& c = curves_[j];
        if (!(c.coeff > 0.0) || !(c.degree > 0.0) || !std::isfinite(c.coeff) || !std::isfinite(c.degree))
            throw std::invalid_argument("constraint curve " + std::to_string(j) +
                                        " must have positive coefficient and degree");
    }
}

void CurveFamily::require_price_curves() const {
    for (std::size_t j = 0; j < curves_.size(); ++j) {
        const auto& c = curves_[j];
        if (c.coeff < 0.0 || !(c.degree > 0.0) || !std::isfinite(c.coeff) || !std::isfinite(c.degree))
            throw std::invalid_argument("price curve " + std::to_string(j) +
                                        " must have nonnegative coefficient and positive degree");
    }
}

double CurveFamily::cost(std::span<const double> bundle) const {
    if (bundle.size() != curves_.size()) throw std::invalid_argument("bundle length must equal curve count");
    double total = 0.0;
    for (std::size_t j = 0; j < bundle.size(); ++j) total += curves_[j](bundle[j]);
    return total;
}

InfeasibleBid::InfeasibleBid(std::size_t agent, double cost)
    : std::runtime_error("bid of agent " + std::to_string(agent) + " costs " + std::to_string(cost) +
                         ", above the budget of 1"),
      agent_(agent) {}

double bid_cost(const CurveFamily& f, std::span<const Bid> row) {
    if (row.size() != f.size()) throw std::invalid_argument("bid row length must equal curve count");
    double total = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j)
        if (row[j].is_positive()) total += f[j](row[j].amount());
    return total;
}

AllocationTrace atp_allocate_traced(const Instance& inst, const CurveFamily& f, const BidMatrix& b) {
    const std::size_t n = inst.agents();
    const std::size_t m = inst.goods();
    if (b.agents() != n || b.goods() != m || f.size() != m)
        throw std::invalid_argument("bid matrix or curve family does not match the instance");
    for (std::size_t i = 0; i < n; ++i) {
        const double cost = bid_cost(f, b.row(i));
        if (cost > 1.0 + kTolFeas) throw InfeasibleBid(i, cost);
    }

    AllocationTrace trace;
    Allocation x(n, m);
    std::vector<bool> free_good(m, false);
    for (std::size_t j = 0; j < m; ++j) {
        const double total = b.column_total(j);
        if (!b.has_positive_bid(j)) {
            free_good[j] = true;
            trace.free_goods.push_back(j);
            continue;
        }
        for (std::size_t i = 0; i < n; ++i)
            if (b(i, j).is_positive()) x(i, j) = b(i, j).amount() / total * inst.supply(j);
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto row = b.row(i);
        const auto anchor = std::find_if(row.begin(), row.end(), [](const Bid& bid) { return bid.is_positive(); });
        const double claim =
            anchor == row.end() ? 0.0 : x(i, static_cast<std::size_t>(std::distance(row.begin(), anchor)));
        for (std::size_t j : trace.free_goods)
            if (row[j].is_beta()) x(i, j) = claim;
    }
    trace.after_step2 = x;

    std::vector<bool> penalized(n, false);
    for (std::size_t j : trace.free_goods) {
        if (x.column_sum(j) <= inst.supply(j) + kTolFeas) continue;
        for (std::size_t i = 0; i < n; ++i)
            if (b(i, j).is_beta()) penalized[i] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!penalized[i]) continue;
        trace.penalized.push_back(i);
        for (std::size_t j = 0; j < m; ++j) x(i, j) = 0.0;
    }
    trace.final = std::move(x);
    return trace;
}

Allocation atp_allocate(const Instance& inst, const CurveFamily& f, const BidMatrix& b) {
    return atp_allocate_traced(inst, f, b).final;
}

BidMatrix with_row(const BidMatrix& b, std::size_t agent, std::span<const Bid> row) {
    BidMatrix out = b;
    out.set_row(agent, row);
    return out;
}

namespace {

// Level t on a contested good j needs b = t * B_j / (s_j - t), where B_j is
// everyone else's positive total; the cost of reaching t is increasing in t.
double max_affordable_level(const Instance& inst, const CurveFamily& f, const std::vector<std::size_t>& contested,
                            const std::vector<double>& others, double budget) {
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t j : contested) hi = std::min(hi, inst.supply(j));
    auto cost = [&](double t) {
        double total = 0.0;
        for (std::size_t j : contested) total += f[j](t * others[j] / (inst.supply(j) - t));
        return total;
    };
    double lo = 0.0;
    const double resolution = kTolBestResponse * 1e-3 * std::max(1.0, hi);
    for (int iter = 0; iter < 200 && hi - lo > resolution; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (cost(mid) <= budget)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

}  // namespace

BestResponse best_response(const Instance& inst, const CurveFamily& f, const BidMatrix& b, std::size_t agent) {
    if (agent >= inst.agents()) throw std::out_of_range("agent index out of range");
    const std::size_t m = inst.goods();
    std::vector<double> others(m);
    for (std::size_t j = 0; j < m; ++j) others[j] = b.column_total(j, agent);

    std::vector<std::size_t> contested, uncontested;
    for (std::size_t j : inst.desired(agent)) (others[j] > 0.0 ? contested : uncontested).push_back(j);

    // Smallest positive bid on an uncontested good: negligible cost, but
    // still above the Zero threshold.
    std::vector<double> eps(m, 0.0);
    double eps_cost = 0.0;
    for (std::size_t j : uncontested) {
        eps[j] = std::max(f[j].inverse(1e-10), 10.0 * kTolBid);
        eps_cost += f[j](eps[j]);
    }

    BestResponse best;
    best.utility = -1.0;
    for (const bool use_beta : {true, false}) {
        if (use_beta && contested.empty()) continue;
        const double budget = use_beta ? 1.0 : 1.0 - eps_cost;
        if (budget <= 0.0) continue;
        BidRow row(m, Bid::zero());
        for (std::size_t j : uncontested) row[j] = use_beta ? Bid::beta() : Bid::positive(eps[j]);
        if (!contested.empty()) {
            const double level = max_affordable_level(inst, f, contested, others, budget);
            for (std::size_t j : contested)
                row[j] = Bid::positive(level * others[j] / (inst.supply(j) - level));
        }
        const auto x = atp_allocate(inst, f, with_row(b, agent, row));
        const double u = utility(inst, agent, x.row(agent));
        // The Beta row is tried first and kept unless the other row is
        // better by more than the oracle's resolution.
        if (u > best.utility + kTolBestResponse * std::max(1.0, u) || best.utility < 0.0) {
            best.utility = u;
            best.bids = std::move(row);
        }
    }
    return best;
}

}  // namespace atp
