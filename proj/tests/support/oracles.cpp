#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace atp::testing {

namespace {

double welfare(const Rho& rho, const std::vector<double>& u) {
    switch (rho.kind()) {
        case Rho::Kind::NegInfinity: return *std::min_element(u.begin(), u.end());
        case Rho::Kind::One: {
            double sum = 0.0;
            for (double v : u) sum += v;
            return sum;
        }
        case Rho::Kind::Finite: break;
    }
    const double r = rho.value();
    if (r == 0.0) {
        double logs = 0.0;
        for (double v : u) {
            if (v <= 0.0) return 0.0;
            logs += std::log(v);
        }
        return std::exp(logs / static_cast<double>(u.size()));
    }
    double sum = 0.0;
    for (double v : u) {
        if (v <= 0.0) {
            if (r < 0.0) return 0.0;
            continue;
        }
        sum += std::pow(v, r);
    }
    return std::pow(sum, 1.0 / r);
}

}  // namespace

GridOptimum grid_search_ces(const Instance& inst, const Rho& rho, double step) {
    const std::size_t n = inst.agents();
    const std::size_t m = inst.goods();
    std::vector<double> cap(n);
    for (std::size_t i = 0; i < n; ++i) {
        cap[i] = std::numeric_limits<double>::infinity();
        for (std::size_t j : inst.desired(i)) cap[i] = std::min(cap[i], inst.supply(j));
    }

    GridOptimum best;
    best.objective = -1.0;
    std::vector<double> u(n, 0.0);
    std::vector<double> load(m, 0.0);

    auto finish = [&] {
        double last = cap[n - 1];
        for (std::size_t j : inst.desired(n - 1)) last = std::min(last, inst.supply(j) - load[j]);
        if (last < -1e-12) return;
        u[n - 1] = std::max(0.0, last);
        const double w = welfare(rho, u);
        if (w > best.objective) {
            best.objective = w;
            best.u = u;
        }
    };

    // Enumerates agents 0..n-2 on [lo_i, hi_i] with spacing h.
    auto sweep = [&](const std::vector<double>& lo, const std::vector<double>& hi, double h) {
        std::function<void(std::size_t)> rec = [&](std::size_t i) {
            if (i + 1 == n) {
                finish();
                return;
            }
            const long count = static_cast<long>(std::floor((hi[i] - lo[i]) / h + 1e-9));
            for (long k = 0; k <= count; ++k) {
                const double v = lo[i] + static_cast<double>(k) * h;
                bool ok = true;
                for (std::size_t j : inst.desired(i)) ok = ok && load[j] + v <= inst.supply(j) + 1e-12;
                if (!ok) break;
                u[i] = v;
                for (std::size_t j : inst.desired(i)) load[j] += v;
                rec(i + 1);
                for (std::size_t j : inst.desired(i)) load[j] -= v;
            }
            u[i] = 0.0;
        };
        rec(0);
    };

    double widest = 0.0;
    for (double c : cap) widest = std::max(widest, c);
    std::vector<double> lo(n, 0.0), hi(cap);
    double h = widest / 40.0;
    sweep(lo, hi, h);
    for (double next : {h / 10.0, step}) {
        next = std::max(next, step);
        const auto center = best.u;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            lo[i] = std::max(0.0, center[i] - 2.0 * h);
            hi[i] = std::min(cap[i], center[i] + 2.0 * h);
        }
        sweep(lo, hi, next);
        h = next;
    }
    return best;
}

double bisection_gamma(const std::vector<double>& supplies, const std::vector<GoodSet>& sets) {
    auto feasible = [&](double gamma) {
        for (std::size_t j = 0; j < supplies.size(); ++j) {
            double load = 0.0;
            for (const auto& set : sets)
                if (std::find(set.begin(), set.end(), j) != set.end()) load += gamma;
            if (load > supplies[j]) return false;
        }
        return true;
    };
    double lo = 0.0;
    double hi = *std::max_element(supplies.begin(), supplies.end()) + 1.0;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? lo : hi) = mid;
    }
    return lo;
}

Allocation reference_allocate(const Instance& inst, const BidMatrix& b) {
    const std::size_t n = inst.agents();
    const std::size_t m = inst.goods();
    Allocation x(n, m);
    std::vector<char> priced(m, 0);
    for (std::size_t j = 0; j < m; ++j) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (b(i, j).kind() == Bid::Kind::Positive) total += b(i, j).amount();
        if (total <= 0.0) continue;
        priced[j] = 1;
        for (std::size_t i = 0; i < n; ++i)
            if (b(i, j).kind() == Bid::Kind::Positive) x(i, j) = inst.supply(j) * b(i, j).amount() / total;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double claim = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (b(i, j).kind() == Bid::Kind::Positive) {
                claim = x(i, j);
                break;
            }
        }
        for (std::size_t j = 0; j < m; ++j)
            if (!priced[j] && b(i, j).kind() == Bid::Kind::Beta) x(i, j) = claim;
    }
    std::vector<char> zeroed(n, 0);
    for (std::size_t j = 0; j < m; ++j) {
        if (priced[j]) continue;
        double claimed = 0.0;
        for (std::size_t i = 0; i < n; ++i) claimed += x(i, j);
        if (claimed <= inst.supply(j) + 1e-9) continue;
        for (std::size_t i = 0; i < n; ++i)
            if (b(i, j).kind() == Bid::Kind::Beta) zeroed[i] = 1;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (zeroed[i])
            for (std::size_t j = 0; j < m; ++j) x(i, j) = 0.0;
    return x;
}

namespace {

double true_utility(const Instance& inst, std::size_t i, const Allocation& x) {
    double u = std::numeric_limits<double>::infinity();
    for (std::size_t j : inst.desired(i)) u = std::min(u, x(i, j));
    return u;
}

double row_utility(const Instance& inst, const BidMatrix& b, std::size_t i, const BidRow& row) {
    BidMatrix trial = b;
    for (std::size_t j = 0; j < row.size(); ++j) trial(i, j) = row[j];
    return true_utility(inst, i, reference_allocate(inst, trial));
}

}  // namespace

DeviationResult deviation_oracle(const Instance& inst, const CurveFamily& f, const BidMatrix& b, std::size_t agent,
                                 double step) {
    const std::size_t m = inst.goods();
    const auto& want = inst.desired(agent);
    DeviationResult out;
    out.current = true_utility(inst, agent, reference_allocate(inst, b));
    out.best = out.current;

    auto offer = [&](const BidRow& row) {
        const double u = row_utility(inst, b, agent, row);
        if (u > out.best) {
            out.best = u;
            out.witness = row;
        }
    };

    // Grid part: units of `step` distributed over the desired goods, each
    // unfunded desired good either Beta or Zero.
    const int slots = step > 0.0 ? static_cast<int>(std::lround(1.0 / step)) : 0;
    std::vector<int> units(want.size(), 0);
    std::function<void(std::size_t, int)> split = [&](std::size_t k, int left) {
        if (k == want.size()) {
            std::vector<std::size_t> unfunded;
            for (std::size_t t = 0; t < want.size(); ++t)
                if (units[t] == 0) unfunded.push_back(t);
            for (unsigned mask = 0; mask < (1u << unfunded.size()); ++mask) {
                BidRow row(m, Bid::zero());
                for (std::size_t t = 0; t < want.size(); ++t)
                    if (units[t] > 0) row[want[t]] = Bid::positive(f[want[t]].inverse(units[t] * step));
                for (std::size_t t = 0; t < unfunded.size(); ++t)
                    if (mask & (1u << t)) row[want[unfunded[t]]] = Bid::beta();
                offer(row);
            }
            return;
        }
        for (int u = 0; u <= left; ++u) {
            units[k] = u;
            split(k + 1, left - u);
        }
        units[k] = 0;
    };
    if (step > 0.0) split(0, slots);

    // Continuous part: reach the same level t on every good somebody else
    // bids on; take the rest with a negligible positive bid.
    std::vector<double> others(m, 0.0);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < inst.agents(); ++k)
            if (k != agent && b(k, j).kind() == Bid::Kind::Positive) others[j] += b(k, j).amount();
    std::vector<std::size_t> contested;
    double free_cap = std::numeric_limits<double>::infinity();
    for (std::size_t j : want) {
        if (others[j] > 0.0)
            contested.push_back(j);
        else
            free_cap = std::min(free_cap, inst.supply(j));
    }
    const double tiny = 1e-9;
    auto cost = [&](double t) {
        double c = 0.0;
        for (std::size_t j : contested) c += f[j](t * others[j] / (inst.supply(j) - t));
        for (std::size_t j : want)
            if (others[j] <= 0.0) c += f[j](tiny);
        return c;
    };
    double lo = 0.0;
    double hi = free_cap;
    for (std::size_t j : contested) hi = std::min(hi, inst.supply(j));
    if (!contested.empty()) {
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            (cost(mid) <= 1.0 ? lo : hi) = mid;
        }
    } else {
        lo = hi;
    }
    BidRow row(m, Bid::zero());
    for (std::size_t j : contested) row[j] = Bid::positive(lo * others[j] / (inst.supply(j) - lo));
    for (std::size_t j : want)
        if (others[j] <= 0.0) row[j] = Bid::positive(tiny);
    offer(row);
    return out;
}

bool oracle_says_ne(const Instance& inst, const CurveFamily& f, const BidMatrix& b, double tol, double step) {
    for (std::size_t i = 0; i < inst.agents(); ++i) {
        const auto d = deviation_oracle(inst, f, b, i, step);
        if (d.best > d.current + tol * std::max(1.0, d.current)) return false;
    }
    return true;
}

}  // namespace atp::testing
