#include "atp/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace atp {

GoodSet normalize_set(GoodSet set) {
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    return set;
}

Instance::Instance(std::vector<double> supplies, std::vector<GoodSet> desired)
    : supplies_(std::move(supplies)), desired_(std::move(desired)) {
    const std::size_t n = desired_.size();
    const std::size_t m = supplies_.size();
    if (n == 0) throw InvalidInstance("instance needs at least one agent");
    if (m == 0) throw InvalidInstance("instance needs at least one good");
    for (std::size_t j = 0; j < m; ++j) {
        if (!(supplies_[j] > 0.0) || !std::isfinite(supplies_[j]))
            throw InvalidInstance("supply of good " + std::to_string(j) + " must be positive and finite");
    }
    weights_.assign(n * m, 0);
    for (std::size_t i = 0; i < n; ++i) {
        desired_[i] = normalize_set(std::move(desired_[i]));
        if (desired_[i].empty())
            throw InvalidInstance("agent " + std::to_string(i) + " desires no goods");
        for (std::size_t j : desired_[i]) {
            if (j >= m)
                throw InvalidInstance("agent " + std::to_string(i) + " desires good " + std::to_string(j) +
                                      " but only " + std::to_string(m) + " goods exist");
            weights_[i * m + j] = 1;
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (demand_count(j) == 0)
            throw InvalidInstance("good " + std::to_string(j) + " is desired by no agent");
    }
}

bool Instance::desires(std::size_t i, std::size_t j) const {
    if (i >= agents() || j >= goods()) throw std::out_of_range("agent or good index out of range");
    return weights_[i * goods() + j] != 0;
}

std::size_t Instance::demand_count(std::size_t j) const {
    if (j >= goods()) throw std::out_of_range("good index out of range");
    std::size_t count = 0;
    for (std::size_t i = 0; i < agents(); ++i) count += weights_[i * goods() + j];
    return count;
}

double Allocation::column_sum(std::size_t j) const {
    double total = 0.0;
    for (std::size_t i = 0; i < n_; ++i) total += (*this)(i, j);
    return total;
}

double Allocation::max_abs_diff(const Allocation& other) const {
    if (other.n_ != n_ || other.m_ != m_) throw std::invalid_argument("allocation shape mismatch");
    double worst = 0.0;
    for (std::size_t k = 0; k < data_.size(); ++k) worst = std::max(worst, std::abs(data_[k] - other.data_[k]));
    return worst;
}

bool Allocation::is_feasible(std::span<const double> supplies, double tol) const {
    if (supplies.size() != m_) return false;
    if (std::any_of(data_.begin(), data_.end(), [](double v) { return v < 0.0; })) return false;
    for (std::size_t j = 0; j < m_; ++j) {
        if (column_sum(j) > supplies[j] + tol) return false;
    }
    return true;
}

Rho Rho::finite(double value) {
    if (!std::isfinite(value) || value >= 1.0)
        throw std::invalid_argument("finite rho must be a real number below 1, got " + std::to_string(value));
    return Rho(Kind::Finite, value);
}

Rho Rho::parse(const std::string& text) {
    if (text == "-inf" || text == "maxmin" || text == "-infinity") return maxmin();
    if (text == "utilitarian") return utilitarian();
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot parse rho '" + text + "'");
    }
    if (used != text.size()) throw std::invalid_argument("cannot parse rho '" + text + "'");
    if (std::isinf(value) && value < 0) return maxmin();
    if (value == 1.0) return utilitarian();
    return finite(value);
}

std::string Rho::to_string() const {
    switch (kind_) {
        case Kind::NegInfinity: return "-inf";
        case Kind::One: return "1";
        case Kind::Finite: break;
    }
    std::ostringstream out;
    out.precision(17);
    out << value_;
    return out.str();
}

double utility(const Instance& inst, std::size_t agent, std::span<const double> bundle) {
    if (agent >= inst.agents()) throw std::out_of_range("agent index out of range");
    if (bundle.size() != inst.goods()) throw std::invalid_argument("bundle length must equal the number of goods");
    return utility_for_set(inst.desired(agent), bundle);
}

double utility_for_set(const GoodSet& desired, std::span<const double> bundle) {
    if (desired.empty()) return 0.0;
    double u = std::numeric_limits<double>::infinity();
    for (std::size_t j : desired) u = std::min(u, bundle[j]);
    return u;
}

std::vector<double> utilities(const Instance& inst, const Allocation& x) {
    std::vector<double> u(inst.agents());
    for (std::size_t i = 0; i < inst.agents(); ++i) u[i] = utility(inst, i, x.row(i));
    return u;
}

double ces_welfare(const Rho& rho, std::span<const double> u) {
    if (u.empty()) throw std::invalid_argument("welfare of an empty utility vector");
    switch (rho.kind()) {
        case Rho::Kind::NegInfinity: return *std::min_element(u.begin(), u.end());
        case Rho::Kind::One: return std::accumulate(u.begin(), u.end(), 0.0);
        case Rho::Kind::Finite: break;
    }
    const double r = rho.value();
    const bool has_zero = std::any_of(u.begin(), u.end(), [](double v) { return v <= 0.0; });
    if (r == 0.0) {
        if (has_zero) return 0.0;
        double log_sum = 0.0;
        for (double v : u) log_sum += std::log(v);
        return std::exp(log_sum / static_cast<double>(u.size()));
    }
    if (r < 0.0 && has_zero) return 0.0;
    // Factor out the largest utility so u^rho stays in range for large |rho|.
    const double scale = *std::max_element(u.begin(), u.end());
    if (scale <= 0.0) return 0.0;
    double total = 0.0;
    for (double v : u) total += std::pow(v / scale, r);
    return scale * std::pow(total, 1.0 / r);
}

}  // namespace atp
