#include "support/generators.hpp"

#include <cmath>

namespace atp::testing {

Instance random_instance(std::mt19937_64& rng, const InstanceShape& shape) {
    std::uniform_int_distribution<std::size_t> agents(shape.min_agents, shape.max_agents);
    std::uniform_int_distribution<std::size_t> goods(shape.min_goods, shape.max_goods);
    const std::size_t n = agents(rng);
    const std::size_t m = goods(rng);

    std::vector<double> supplies(m);
    for (auto& s : supplies) {
        if (shape.integer_supplies)
            s = std::uniform_int_distribution<int>(shape.min_supply, shape.max_supply)(rng);
        else
            s = std::uniform_real_distribution<double>(shape.min_supply, shape.max_supply)(rng);
    }

    std::bernoulli_distribution pick(shape.desire_probability);
    std::uniform_int_distribution<std::size_t> any_good(0, m - 1);
    std::uniform_int_distribution<std::size_t> any_agent(0, n - 1);
    std::vector<GoodSet> sets(n);
    for (auto& set : sets) {
        for (std::size_t j = 0; j < m; ++j)
            if (pick(rng)) set.push_back(j);
        if (set.empty()) set.push_back(any_good(rng));
    }
    for (std::size_t j = 0; j < m; ++j) {
        bool wanted = false;
        for (const auto& set : sets)
            for (std::size_t g : set) wanted = wanted || g == j;
        if (!wanted) sets[any_agent(rng)].push_back(j);
    }
    return Instance(std::move(supplies), std::move(sets));
}

Instance random_instance(std::uint64_t seed, const InstanceShape& shape) {
    std::mt19937_64 rng(seed);
    return random_instance(rng, shape);
}

namespace {

// Converts cost shares into bids on the given curves.
Bid bid_for_share(const PowerCurve& c, double share) {
    return share <= 0.0 ? Bid::zero() : Bid::positive(c.inverse(share));
}

}  // namespace

BidMatrix random_profile(std::mt19937_64& rng, const Instance& inst, const CurveFamily& f) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    BidMatrix b(inst.agents(), inst.goods());
    for (std::size_t i = 0; i < inst.agents(); ++i) {
        const double budget = unit(rng) < 0.5 ? 1.0 : unit(rng);
        std::vector<double> weight(inst.goods(), 0.0);
        double total = 0.0;
        for (std::size_t j = 0; j < inst.goods(); ++j) {
            const double roll = unit(rng);
            const bool desired = inst.desires(i, j);
            if ((desired && roll < 0.75) || (!desired && roll < 0.1)) {
                weight[j] = 0.05 + unit(rng);
                total += weight[j];
            } else if (roll > 0.9) {
                b(i, j) = Bid::beta();
            }
        }
        for (std::size_t j = 0; j < inst.goods(); ++j)
            if (weight[j] > 0.0) b(i, j) = bid_for_share(f[j], budget * weight[j] / total);
    }
    return b;
}

BidMatrix grid_profile(std::mt19937_64& rng, const Instance& inst, const CurveFamily& f, double step) {
    const int slots = static_cast<int>(std::lround(1.0 / step));
    std::uniform_int_distribution<int> good(0, static_cast<int>(inst.goods()) - 1);
    std::uniform_int_distribution<int> used(0, slots);
    std::bernoulli_distribution coin(0.5);
    BidMatrix b(inst.agents(), inst.goods());
    for (std::size_t i = 0; i < inst.agents(); ++i) {
        std::vector<int> units(inst.goods(), 0);
        const int spend = coin(rng) ? slots : used(rng);
        for (int k = 0; k < spend; ++k) {
            const auto& want = inst.desired(i);
            const std::size_t j = coin(rng) ? want[std::uniform_int_distribution<std::size_t>(0, want.size() - 1)(rng)]
                                            : static_cast<std::size_t>(good(rng));
            ++units[j];
        }
        for (std::size_t j = 0; j < inst.goods(); ++j) {
            if (units[j] > 0)
                b(i, j) = bid_for_share(f[j], units[j] * step);
            else if (inst.desires(i, j) && coin(rng))
                b(i, j) = Bid::beta();
        }
    }
    return b;
}

std::vector<double> random_scalars(std::mt19937_64& rng, std::size_t count, double lo, double hi) {
    std::uniform_real_distribution<double> log_scale(std::log(lo), std::log(hi));
    std::vector<double> out(count);
    for (auto& a : out) a = std::exp(log_scale(rng));
    return out;
}

}  // namespace atp::testing
