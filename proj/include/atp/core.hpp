#pragma once

// Problem instances, allocations, CES welfare.
//
// Agents have bandwidth utilities: agent i wants the goods (links) in R_i and
// its utility for a bundle is the smallest quantity it holds of any of them.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace atp {

/// Absolute slack allowed on supply constraints.
inline constexpr double kTolFeas = 1e-9;

class InvalidInstance : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using GoodSet = std::vector<std::size_t>;

/// Sorts and deduplicates a set of good indices.
GoodSet normalize_set(GoodSet set);

class Instance {
public:
    /// Validates: n, m >= 1; positive supplies; every R_i nonempty and in
    /// range; every good desired by at least one agent.
    Instance(std::vector<double> supplies, std::vector<GoodSet> desired);

    std::size_t agents() const noexcept { return desired_.size(); }
    std::size_t goods() const noexcept { return supplies_.size(); }

    double supply(std::size_t j) const { return supplies_.at(j); }
    const std::vector<double>& supplies() const noexcept { return supplies_; }

    const GoodSet& desired(std::size_t i) const { return desired_.at(i); }
    const std::vector<GoodSet>& desired_sets() const noexcept { return desired_; }

    /// w_ij
    bool desires(std::size_t i, std::size_t j) const;

    /// Number of agents desiring good j.
    std::size_t demand_count(std::size_t j) const;

private:
    std::vector<double> supplies_;
    std::vector<GoodSet> desired_;
    std::vector<unsigned char> weights_;  // row-major n x m
};

/// Nonnegative n x m quantity matrix.
class Allocation {
public:
    Allocation() = default;
    Allocation(std::size_t agents, std::size_t goods) : n_(agents), m_(goods), data_(agents * goods, 0.0) {}

    std::size_t agents() const noexcept { return n_; }
    std::size_t goods() const noexcept { return m_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * m_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * m_ + j]; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * m_, m_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * m_, m_}; }

    double column_sum(std::size_t j) const;

    /// Largest entrywise absolute difference; shapes must match.
    double max_abs_diff(const Allocation& other) const;

    /// True when every column sum is within `tol` of its supply bound and all
    /// entries are nonnegative.
    bool is_feasible(std::span<const double> supplies, double tol = kTolFeas) const;

private:
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::vector<double> data_;
};

/// CES parameter: maxmin (-inf), finite rho < 1 (0 is Nash welfare), or
/// utilitarian (1).
class Rho {
public:
    enum class Kind { NegInfinity, Finite, One };

    static Rho maxmin() { return Rho(Kind::NegInfinity, 0.0); }
    static Rho utilitarian() { return Rho(Kind::One, 1.0); }
    /// Throws std::invalid_argument unless value < 1 and finite.
    static Rho finite(double value);

    /// Accepts "-inf", "maxmin", "1", "utilitarian", or a real < 1.
    static Rho parse(const std::string& text);

    Kind kind() const noexcept { return kind_; }
    bool is_finite() const noexcept { return kind_ == Kind::Finite; }
    /// Meaningful for Finite and One.
    double value() const noexcept { return value_; }

    std::string to_string() const;

    friend bool operator==(const Rho&, const Rho&) = default;

private:
    Rho(Kind kind, double value) : kind_(kind), value_(value) {}
    Kind kind_;
    double value_;
};

/// min_{j in R_i} x_ij
double utility(const Instance& inst, std::size_t agent, std::span<const double> bundle);

/// Utility under an arbitrary desired set (used by mechanisms that evaluate
/// reported sets). An empty set yields 0.
double utility_for_set(const GoodSet& desired, std::span<const double> bundle);

std::vector<double> utilities(const Instance& inst, const Allocation& x);

/// CES welfare. For rho < 0 any zero utility gives 0; rho = 0 is the
/// geometric mean.
double ces_welfare(const Rho& rho, std::span<const double> u);

}  // namespace atp
