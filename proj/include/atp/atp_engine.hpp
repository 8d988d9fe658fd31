#pragma once

// Augmented trading post ATP(f).
//
// Bids are Zero, Beta (a zero-cost bid claiming a free good), or a positive
// amount. Each agent's row must satisfy sum_j f_j(b_ij) <= 1. Allocation:
//   1. goods with a positive bid are split in proportion to positive bids;
//   2. goods with only Zero/Beta bids give each Beta bidder x_{i,l_i}, where
//      l_i is the lowest-index good agent i bids positively on (0 if none);
//   3. if the Step-2 claims on a good exceed supply, every Beta bidder on it
//      loses its whole bundle.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "atp/core.hpp"

namespace atp {

/// Positive bids at or below this are stored as Zero.
inline constexpr double kTolBid = 1e-12;
/// Utility resolution of the best-response oracle.
inline constexpr double kTolBestResponse = 1e-8;

class Bid {
public:
    enum class Kind { Zero, Beta, Positive };

    constexpr Bid() = default;
    static constexpr Bid zero() { return Bid(); }
    static constexpr Bid beta() { return Bid(Kind::Beta, 0.0); }
    /// Amounts <= kTolBid normalize to Zero.
    static Bid positive(double amount);

    Kind kind() const noexcept { return kind_; }
    bool is_positive() const noexcept { return kind_ == Kind::Positive; }
    bool is_beta() const noexcept { return kind_ == Kind::Beta; }
    bool is_zero() const noexcept { return kind_ == Kind::Zero; }
    /// Arithmetic value: Beta and Zero count as 0.
    double amount() const noexcept { return amount_; }

    friend bool operator==(const Bid&, const Bid&) = default;

private:
    constexpr Bid(Kind kind, double amount) : kind_(kind), amount_(amount) {}
    Kind kind_ = Kind::Zero;
    double amount_ = 0.0;
};

using BidRow = std::vector<Bid>;

class BidMatrix {
public:
    BidMatrix() = default;
    BidMatrix(std::size_t agents, std::size_t goods) : n_(agents), m_(goods), bids_(agents * goods) {}

    std::size_t agents() const noexcept { return n_; }
    std::size_t goods() const noexcept { return m_; }

    Bid& operator()(std::size_t i, std::size_t j) { return bids_[i * m_ + j]; }
    const Bid& operator()(std::size_t i, std::size_t j) const { return bids_[i * m_ + j]; }

    std::span<const Bid> row(std::size_t i) const { return {bids_.data() + i * m_, m_}; }
    void set_row(std::size_t i, std::span<const Bid> row);

    /// Sum of positive bids on good j, optionally leaving out one agent.
    double column_total(std::size_t j, std::size_t excluded = static_cast<std::size_t>(-1)) const;
    bool has_positive_bid(std::size_t j) const;

    friend bool operator==(const BidMatrix&, const BidMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::vector<Bid> bids_;
};

/// coeff * t^degree. Constraint curves need coeff > 0; a price curve with
/// coeff == 0 is the identically-zero curve.
struct PowerCurve {
    double coeff = 1.0;
    double degree = 1.0;

    double operator()(double t) const { return t <= 0.0 ? 0.0 : coeff * std::pow(t, degree); }
    /// Smallest t with curve(t) == value (coeff > 0).
    double inverse(double value) const { return value <= 0.0 ? 0.0 : std::pow(value / coeff, 1.0 / degree); }
    bool is_zero() const noexcept { return coeff == 0.0; }

    friend bool operator==(const PowerCurve&, const PowerCurve&) = default;
};

class CurveFamily {
public:
    CurveFamily() = default;
    explicit CurveFamily(std::vector<PowerCurve> curves) : curves_(std::move(curves)) {}
    static CurveFamily uniform(std::size_t goods, PowerCurve curve) {
        return CurveFamily(std::vector<PowerCurve>(goods, curve));
    }
    /// ATP(rho): f_j(b) = b^{1-rho} on every good.
    static CurveFamily atp_rho(std::size_t goods, double rho) { return uniform(goods, {1.0, 1.0 - rho}); }

    std::size_t size() const noexcept { return curves_.size(); }
    const PowerCurve& operator[](std::size_t j) const { return curves_.at(j); }
    PowerCurve& operator[](std::size_t j) { return curves_.at(j); }
    const std::vector<PowerCurve>& curves() const noexcept { return curves_; }

    /// Throws std::invalid_argument unless every curve is strictly increasing.
    void require_constraint_curves() const;
    /// Throws std::invalid_argument unless every curve is increasing or zero.
    void require_price_curves() const;

    /// C_g(x_i) = sum_j g_j(x_ij)
    double cost(std::span<const double> bundle) const;

    friend bool operator==(const CurveFamily&, const CurveFamily&) = default;

private:
    std::vector<PowerCurve> curves_;
};

class InfeasibleBid : public std::runtime_error {
public:
    InfeasibleBid(std::size_t agent, double cost);
    std::size_t agent() const noexcept { return agent_; }

private:
    std::size_t agent_;
};

/// C_f(b_i) = sum_j f_j(b_ij); Zero and Beta cost nothing.
double bid_cost(const CurveFamily& f, std::span<const Bid> row);

/// Intermediate and final allocations of one run of the allocation rule.
struct AllocationTrace {
    Allocation after_step2;
    Allocation final;
    std::vector<std::size_t> penalized;   ///< agents zeroed by Step 3
    std::vector<std::size_t> free_goods;  ///< goods allocated by Step 2
};

/// Runs Steps 1-3. Throws InfeasibleBid if a row costs more than 1 + kTolFeas.
AllocationTrace atp_allocate_traced(const Instance& inst, const CurveFamily& f, const BidMatrix& b);

Allocation atp_allocate(const Instance& inst, const CurveFamily& f, const BidMatrix& b);

struct BestResponse {
    BidRow bids;
    double utility = 0.0;
};

/// Utility-maximizing bid row for `agent` with everyone else's bids fixed,
/// accurate to kTolBestResponse. Positive bids go only to desired goods;
/// desired goods nobody else bids on get Beta when that is safe, otherwise a
/// tiny positive bid.
BestResponse best_response(const Instance& inst, const CurveFamily& f, const BidMatrix& b, std::size_t agent);

/// Returns b with row `agent` replaced.
BidMatrix with_row(const BidMatrix& b, std::size_t agent, std::span<const Bid> row);

}  // namespace atp
