#include <gtest/gtest.h>

#include <random>

#include "atp/atp_engine.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace atp;

namespace {

BidMatrix matrix(std::initializer_list<std::initializer_list<Bid>> rows) {
    BidMatrix b(rows.size(), rows.begin()->size());
    std::size_t i = 0;
    for (const auto& row : rows) b.set_row(i++, std::vector<Bid>(row));
    return b;
}

Bid pos(double v) { return Bid::positive(v); }

}  // namespace

TEST(Bid, TinyPositiveBecomesZero) {
    EXPECT_TRUE(Bid::positive(1e-13).is_zero());
    EXPECT_TRUE(Bid::positive(1e-6).is_positive());
    EXPECT_THROW(Bid::positive(std::nan("")), std::invalid_argument);
    EXPECT_EQ(Bid::beta().amount(), 0.0);
}

TEST(BidCost, Examples) {
    const auto linear = CurveFamily::uniform(2, {1.0, 1.0});
    EXPECT_DOUBLE_EQ(bid_cost(linear, std::vector<Bid>{pos(0.4), pos(0.6)}), 1.0);
    const auto square = CurveFamily::uniform(3, {1.0, 2.0});
    EXPECT_DOUBLE_EQ(bid_cost(square, std::vector<Bid>{pos(0.5), Bid::beta(), pos(0.5)}), 0.5);
    const auto rho = CurveFamily::atp_rho(2, -1.0);
    EXPECT_DOUBLE_EQ(bid_cost(rho, std::vector<Bid>{pos(1.0), Bid::zero()}), 1.0);
}

TEST(Allocate, ProportionalSplit) {
    const Instance inst({1.0}, {{0}, {0}});
    const auto x = atp_allocate(inst, CurveFamily::uniform(1, {1, 1}), matrix({{pos(0.5)}, {pos(0.5)}}));
    EXPECT_DOUBLE_EQ(x(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(x(1, 0), 0.5);
}

TEST(Allocate, BetaClaimCopiesFirstPositiveHolding) {
    const Instance inst({1, 1}, {{0, 1}, {0}});
    const auto x = atp_allocate(inst, CurveFamily::uniform(2, {1, 1}),
                                matrix({{pos(0.6), Bid::beta()}, {pos(0.4), Bid::zero()}}));
    EXPECT_NEAR(x(0, 0), 0.6, 1e-15);
    EXPECT_NEAR(x(0, 1), 0.6, 1e-15);
    EXPECT_NEAR(x(1, 0), 0.4, 1e-15);
    EXPECT_DOUBLE_EQ(x(1, 1), 0.0);
}

TEST(Allocate, OverclaimedFreeGoodZeroesEveryBetaBidder) {
    const Instance inst({1, 0.5}, {{0, 1}, {0, 1}});
    const auto trace = atp_allocate_traced(inst, CurveFamily::uniform(2, {1, 1}),
                                           matrix({{pos(0.5), Bid::beta()}, {pos(0.5), Bid::beta()}}));
    EXPECT_DOUBLE_EQ(trace.after_step2(0, 1), 0.5);
    EXPECT_EQ(trace.penalized, (std::vector<std::size_t>{0, 1}));
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(trace.final(i, j), 0.0);
}

TEST(Allocate, BetaWithoutPositiveBidClaimsNothing) {
    const Instance inst({1, 1}, {{0, 1}, {1}});
    const auto x = atp_allocate(inst, CurveFamily::uniform(2, {1, 1}),
                                matrix({{Bid::beta(), Bid::beta()}, {Bid::zero(), pos(1.0)}}));
    EXPECT_EQ(x(0, 0), 0.0);
    EXPECT_EQ(x(0, 1), 0.0);
    EXPECT_EQ(x(1, 1), 1.0);
}

TEST(Allocate, RejectsOverBudgetRows) {
    const Instance inst({1.0}, {{0}});
    try {
        atp_allocate(inst, CurveFamily::uniform(1, {1, 2}), matrix({{pos(1.1)}}));
        FAIL() << "expected InfeasibleBid";
    } catch (const InfeasibleBid& e) {
        EXPECT_EQ(e.agent(), 0u);
    }
}

TEST(Allocate, AgreesWithReferenceAndClearsPricedGoods) {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 300; ++k) {
        const Instance inst = atp::testing::random_instance(rng, {1, 5, 1, 5});
        const double rho = std::uniform_real_distribution<double>(-2.0, 0.8)(rng);
        const auto f = CurveFamily::atp_rho(inst.goods(), rho);
        const auto b = atp::testing::random_profile(rng, inst, f);
        const auto trace = atp_allocate_traced(inst, f, b);
        EXPECT_LE(trace.final.max_abs_diff(atp::testing::reference_allocate(inst, b)), 1e-12);
        for (std::size_t j = 0; j < inst.goods(); ++j)
            if (b.has_positive_bid(j))
                EXPECT_NEAR(trace.after_step2.column_sum(j), inst.supply(j), 1e-12 * inst.supply(j));
    }
}

TEST(Allocate, ScalingOneColumnLeavesItsSplitUnchanged) {
    std::mt19937_64 rng(22);
    for (int k = 0; k < 100; ++k) {
        const Instance inst = atp::testing::random_instance(rng, {2, 5, 1, 5});
        const auto f = CurveFamily::atp_rho(inst.goods(), 0.0);
        const auto b = atp::testing::random_profile(rng, inst, f);
        const std::size_t j = std::uniform_int_distribution<std::size_t>(0, inst.goods() - 1)(rng);
        BidMatrix scaled = b;
        const double c = 0.5;
        for (std::size_t i = 0; i < inst.agents(); ++i)
            if (b(i, j).is_positive()) scaled(i, j) = Bid::positive(c * b(i, j).amount());
        if (!b.has_positive_bid(j)) continue;
        const auto x = atp_allocate(inst, f, b);
        const auto y = atp_allocate(inst, f, scaled);
        for (std::size_t i = 0; i < inst.agents(); ++i) EXPECT_NEAR(x(i, j), y(i, j), 1e-12);
    }
}

TEST(BestResponse, AgainstOneRival) {
    const Instance inst({1.0}, {{0}, {0}});
    const auto f = CurveFamily::uniform(1, {1, 1});
    const auto br = best_response(inst, f, matrix({{pos(0.3)}, {pos(1.0)}}), 0);
    EXPECT_NEAR(br.utility, 0.5, 1e-8);
    ASSERT_TRUE(br.bids[0].is_positive());
    EXPECT_NEAR(br.bids[0].amount(), 1.0, 1e-7);
}

TEST(BestResponse, AloneTakesTheWholeSupply) {
    const Instance inst({2.0}, {{0}});
    const auto br = best_response(inst, CurveFamily::uniform(1, {1, 1}), matrix({{Bid::zero()}}), 0);
    EXPECT_NEAR(br.utility, 2.0, 2.0 * 1e-8);
    EXPECT_TRUE(br.bids[0].is_positive());
}

TEST(BestResponse, StaysWithinBudgetAndBeatsTheReferenceGrid) {
    std::mt19937_64 rng(23);
    for (int k = 0; k < 150; ++k) {
        const Instance inst = atp::testing::random_instance(rng, {1, 4, 1, 4});
        const double rho = std::uniform_real_distribution<double>(-2.0, 0.8)(rng);
        const auto f = CurveFamily::atp_rho(inst.goods(), rho);
        const auto b = atp::testing::random_profile(rng, inst, f);
        const std::size_t i = std::uniform_int_distribution<std::size_t>(0, inst.agents() - 1)(rng);
        const auto br = best_response(inst, f, b, i);
        EXPECT_LE(bid_cost(f, br.bids), 1.0 + kTolFeas);
        const auto x = atp_allocate(inst, f, with_row(b, i, br.bids));
        EXPECT_NEAR(utility(inst, i, x.row(i)), br.utility, 1e-12);
        const auto oracle = atp::testing::deviation_oracle(inst, f, b, i);
        EXPECT_GE(br.utility, oracle.best - 1e-6 * std::max(1.0, oracle.best)) << "case " << k;
    }
}
