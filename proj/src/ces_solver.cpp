#include "atp/ces_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dense_simplex.hpp"

namespace atp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Allocation allocation_from_utilities(const Instance& inst, const std::vector<double>& u) {
    Allocation x(inst.agents(), inst.goods());
    for (std::size_t i = 0; i < inst.agents(); ++i)
        for (std::size_t j : inst.desired(i)) x(i, j) = u[i];
    return x;
}

std::vector<double> loads(const Instance& inst, const std::vector<double>& u) {
    std::vector<double> load(inst.goods(), 0.0);
    for (std::size_t i = 0; i < inst.agents(); ++i)
        for (std::size_t j : inst.desired(i)) load[j] += u[i];
    return load;
}

// Dual of the finite-rho program. With p_i = sum_{j in R_i} q_j the inner
// maximization gives u_i = p_i^{-1/(1-rho)}, and
//     D(q) = s.q + sum_i phi(p_i),  phi(p) = (1-rho)/rho * (p^{-rho/(1-rho)} - 1)
// (the constant is dropped; phi -> -log p as rho -> 0). D is smooth and
// convex on q >= 0; its gradient is the slack s_j - load_j.
class FiniteDual {
public:
    FiniteDual(const Instance& inst, double rho) : inst_(inst), rho_(rho), sigma_(1.0 / (1.0 - rho)) {}

    struct Point {
        std::vector<double> p, u, grad;
        double value = kInf;
        bool valid = false;
    };

    Point evaluate(const std::vector<double>& q) const {
        Point pt;
        const std::size_t n = inst_.agents();
        pt.p.assign(n, 0.0);
        pt.u.assign(n, 0.0);
        double value = 0.0;
        for (std::size_t j = 0; j < inst_.goods(); ++j) value += inst_.supply(j) * q[j];
        for (std::size_t i = 0; i < n; ++i) {
            double p = 0.0;
            for (std::size_t j : inst_.desired(i)) p += q[j];
            if (!(p > 0.0)) return pt;
            pt.p[i] = p;
            const double log_p = std::log(p);
            pt.u[i] = std::exp(-sigma_ * log_p);
            if (!std::isfinite(pt.u[i])) return pt;
            if (rho_ == 0.0) {
                value += -log_p;
            } else {
                value += (1.0 - rho_) / rho_ * std::expm1(-rho_ * sigma_ * log_p);
            }
        }
        const auto load = loads(inst_, pt.u);
        pt.grad.resize(inst_.goods());
        for (std::size_t j = 0; j < inst_.goods(); ++j) pt.grad[j] = inst_.supply(j) - load[j];
        pt.value = value;
        pt.valid = std::isfinite(value);
        return pt;
    }

    /// D(to) - D(from), summed term by term so that the large common parts
    /// of the two values cancel exactly.
    double change(const std::vector<double>& from, const Point& at_from, const std::vector<double>& to) const {
        double delta = 0.0;
        for (std::size_t j = 0; j < inst_.goods(); ++j) delta += inst_.supply(j) * (to[j] - from[j]);
        for (std::size_t i = 0; i < inst_.agents(); ++i) {
            double dp = 0.0;
            for (std::size_t j : inst_.desired(i)) dp += to[j] - from[j];
            const double log_ratio = std::log1p(dp / at_from.p[i]);
            if (rho_ == 0.0)
                delta -= log_ratio;
            else
                delta += (1.0 - rho_) / rho_ * std::pow(at_from.p[i], -rho_ * sigma_) * std::expm1(-rho_ * sigma_ * log_ratio);
        }
        return delta;
    }

    Eigen::MatrixXd hessian(const Point& pt) const {
        const auto m = static_cast<Eigen::Index>(inst_.goods());
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
        for (std::size_t i = 0; i < inst_.agents(); ++i) {
            const double c = sigma_ * pt.u[i] / pt.p[i];
            for (std::size_t a : inst_.desired(i))
                for (std::size_t b : inst_.desired(i)) h(a, b) += c;
        }
        return h;
    }

private:
    const Instance& inst_;
    double rho_;
    double sigma_;
};

std::vector<double> initial_duals(const Instance& inst, double rho) {
    std::size_t widest = 1;
    for (const auto& set : inst.desired_sets()) widest = std::max(widest, set.size());
    std::vector<double> q(inst.goods());
    for (std::size_t j = 0; j < inst.goods(); ++j) {
        const double share = inst.supply(j) / static_cast<double>(inst.demand_count(j));
        q[j] = std::pow(share, rho - 1.0) / static_cast<double>(widest);
    }
    return q;
}

// Projected Newton on the dual (Bertsekas-style two-metric projection):
// Newton step on the free coordinates, scaled gradient on coordinates held
// at the bound, Armijo search along the projection arc.
SolveResult solve_finite(const Instance& inst, const Rho& rho, const SolverOptions& options) {
    const double r = rho.value();
    const std::size_t m = inst.goods();
    FiniteDual dual(inst, r);

    std::vector<double> q = initial_duals(inst, r);
    const std::vector<double> scale = q;
    auto pt = dual.evaluate(q);
    if (!pt.valid) throw NonConvergence(0, kInf);

    const double target = std::min(options.tol_kkt * 1e-4, 1e-12);
    long iter = 0;
    double residual = kkt_residual(inst, rho, pt.u, q, options.tol_dual);
    for (; iter < options.max_iterations && residual > target; ++iter) {
        // The active-set test runs on z_j = q_j / scale_j, which is of order
        // one for every good.
        double proj_norm = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double z = q[j] / scale[j];
            proj_norm = std::max(proj_norm, std::abs(z - std::max(0.0, z - scale[j] * pt.grad[j])));
        }
        const double eps_active = std::min(1e-3, proj_norm);

        const Eigen::MatrixXd h = dual.hessian(pt);
        // Curvature underflows when prices are far too high; such goods then
        // get their price halved.
        auto diagonal_step = [&](std::size_t j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const double step = -pt.grad[j] / h(jj, jj);
            if (h(jj, jj) > 1e-300 && std::isfinite(step)) return step;
            return pt.grad[j] > 0.0 ? -0.5 * q[j] : 0.0;
        };
        std::vector<int> free_idx;
        std::vector<bool> active(m, false);
        for (std::size_t j = 0; j < m; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            if ((q[j] / scale[j] <= eps_active && pt.grad[j] > 0.0) || !(h(jj, jj) > 1e-300))
                active[j] = true;
            else
                free_idx.push_back(static_cast<int>(j));
        }

        std::vector<double> dir(m, 0.0);
        for (std::size_t j = 0; j < m; ++j)
            if (active[j]) dir[j] = diagonal_step(j);
        if (!free_idx.empty()) {
            const auto k = static_cast<Eigen::Index>(free_idx.size());
            // Symmetric Jacobi scaling: q spans many orders of magnitude at
            // strongly negative rho and the raw Hessian is then numerically
            // singular.
            Eigen::VectorXd d(k);
            for (Eigen::Index a = 0; a < k; ++a) d(a) = 1.0 / std::sqrt(h(free_idx[a], free_idx[a]));
            Eigen::MatrixXd hf(k, k);
            Eigen::VectorXd gf(k);
            for (Eigen::Index a = 0; a < k; ++a) {
                gf(a) = d(a) * pt.grad[free_idx[a]];
                for (Eigen::Index b = 0; b < k; ++b) hf(a, b) = d(a) * h(free_idx[a], free_idx[b]) * d(b);
            }
            // Damping proportional to the scaled gradient keeps steps bounded
            // along the null space of the Hessian and vanishes at the optimum.
            hf.diagonal().array() += 1e-13 + std::min(1.0, gf.lpNorm<Eigen::Infinity>());
            Eigen::LDLT<Eigen::MatrixXd> ldlt(hf);
            Eigen::VectorXd df = ldlt.solve(-gf);
            if (ldlt.info() != Eigen::Success || !df.allFinite() || gf.dot(df) >= 0.0) df = -gf;
            df = d.cwiseProduct(df);
            for (Eigen::Index a = 0; a < k; ++a) dir[free_idx[a]] = df(a);
        }

        auto search = [&](const std::vector<double>& direction, int halvings) {
            double alpha = 1.0;
            for (int ls = 0; ls < halvings; ++ls, alpha *= 0.5) {
                std::vector<double> trial(m);
                double decrease = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    trial[j] = std::max(0.0, q[j] + alpha * direction[j]);
                    decrease += pt.grad[j] * (trial[j] - q[j]);
                }
                auto next = dual.evaluate(trial);
                if (!next.valid) continue;
                if (dual.change(q, pt, trial) <= 1e-4 * decrease) {
                    residual = kkt_residual(inst, rho, next.u, trial, options.tol_dual);
                    q = std::move(trial);
                    pt = std::move(next);
                    return true;
                }
            }
            return false;
        };
        if (search(dir, 40)) continue;
        // The projection can spoil the Newton direction; the diagonally scaled
        // gradient always descends along its projection arc.
        for (std::size_t j = 0; j < m; ++j) dir[j] = std::max(diagonal_step(j), -0.9 * q[j]);
        if (!search(dir, 80)) break;
    }

    if (residual > options.tol_kkt) throw NonConvergence(iter, residual);

    SolveResult result;
    result.u_star = pt.u;
    result.x_star = allocation_from_utilities(inst, pt.u);
    result.q = q;
    result.objective = ces_welfare(rho, pt.u);
    result.kkt_residual = residual;
    result.iterations = iter;
    return result;
}

// Utilitarian welfare is an LP. Stage one maximizes sum u; stage two keeps
// only columns with zero reduced cost (the optimal face) and maximizes the
// smallest utility t, with t <= u_i as extra rows.
SolveResult solve_utilitarian(const Instance& inst, const Rho& rho, const SolverOptions& options) {
    const auto n = static_cast<Eigen::Index>(inst.agents());
    const auto m = static_cast<Eigen::Index>(inst.goods());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + n, n + 1);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m + n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t j : inst.desired(static_cast<std::size_t>(i))) a(static_cast<Eigen::Index>(j), i) = 1.0;
        a(m + i, i) = -1.0;
        a(m + i, n) = 1.0;
    }
    for (Eigen::Index j = 0; j < m; ++j) b(j) = inst.supply(static_cast<std::size_t>(j));

    detail::DenseSimplex lp(a, b);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
    c.head(n).setOnes();
    lp.set_objective(c);
    const std::vector<bool> all(static_cast<std::size_t>(lp.column_count()), true);
    if (lp.maximize(all) != detail::DenseSimplex::Status::Optimal) throw NonConvergence(0, kInf);

    const Eigen::VectorXd y = lp.duals();
    std::vector<bool> on_face(all.size(), true);
    for (int k = 0; k < lp.column_count(); ++k)
        if (lp.reduced_costs()(k) < -1e-9) on_face[static_cast<std::size_t>(k)] = false;
    Eigen::VectorXd tie = Eigen::VectorXd::Zero(n + 1);
    tie(n) = 1.0;
    lp.set_objective(tie);
    if (lp.maximize(on_face) != detail::DenseSimplex::Status::Optimal) throw NonConvergence(0, kInf);

    const Eigen::VectorXd z = lp.primal();
    std::vector<double> u(inst.agents());
    for (Eigen::Index i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] = z(i);
    std::vector<double> q(inst.goods());
    for (Eigen::Index j = 0; j < m; ++j) q[static_cast<std::size_t>(j)] = std::max(0.0, y(j));

    SolveResult result;
    result.u_star = u;
    result.x_star = allocation_from_utilities(inst, u);
    result.q = q;
    result.objective = ces_welfare(rho, u);
    result.kkt_residual = kkt_residual(inst, rho, u, q, options.tol_dual);
    if (result.kkt_residual > options.tol_kkt) throw NonConvergence(0, result.kkt_residual);
    return result;
}

}  // namespace

NonConvergence::NonConvergence(long iterations, double residual)
    : std::runtime_error("solver did not converge after " + std::to_string(iterations) +
                         " iterations (KKT residual " + std::to_string(residual) + ")"),
      iterations_(iterations),
      residual_(residual) {}

SolveResult solve_ces(const Instance& inst, const Rho& rho, const SolverOptions& options) {
    switch (rho.kind()) {
        case Rho::Kind::Finite: return solve_finite(inst, rho, options);
        case Rho::Kind::One: return solve_utilitarian(inst, rho, options);
        case Rho::Kind::NegInfinity: break;
    }
    throw std::invalid_argument("solve_ces takes a finite rho or rho = 1; use solve_maxmin for -inf");
}

std::optional<double> maxmin_gamma(const std::vector<double>& supplies, const std::vector<GoodSet>& sets) {
    std::vector<std::size_t> count(supplies.size(), 0);
    bool any = false;
    for (const auto& set : sets) {
        for (std::size_t j : set) {
            if (j >= supplies.size()) throw std::out_of_range("reported good index out of range");
            ++count[j];
            any = true;
        }
    }
    if (!any) return std::nullopt;
    double gamma = kInf;
    for (std::size_t j = 0; j < supplies.size(); ++j)
        if (count[j] > 0) gamma = std::min(gamma, supplies[j] / static_cast<double>(count[j]));
    return gamma;
}

SolveResult solve_maxmin(const Instance& inst) {
    const double gamma = *maxmin_gamma(inst.supplies(), inst.desired_sets());
    std::size_t bottleneck = 0;
    double best = kInf;
    for (std::size_t j = 0; j < inst.goods(); ++j) {
        const double ratio = inst.supply(j) / static_cast<double>(inst.demand_count(j));
        if (ratio < best) {
            best = ratio;
            bottleneck = j;
        }
    }
    SolveResult result;
    result.u_star.assign(inst.agents(), gamma);
    result.x_star = allocation_from_utilities(inst, result.u_star);
    result.q.assign(inst.goods(), 0.0);
    result.q[bottleneck] = 1.0 / static_cast<double>(inst.demand_count(bottleneck));
    result.objective = gamma;
    result.kkt_residual = kkt_residual(inst, Rho::maxmin(), result.u_star, result.q);
    return result;
}

double kkt_residual(const Instance& inst, const Rho& rho, const std::vector<double>& u,
                    const std::vector<double>& q, double tol_dual) {
    if (u.size() != inst.agents() || q.size() != inst.goods())
        throw std::invalid_argument("kkt_residual: shape mismatch");
    const auto load = loads(inst, u);
    double worst = 0.0;
    for (std::size_t j = 0; j < inst.goods(); ++j) {
        const double scale = std::max(1.0, inst.supply(j));
        worst = std::max(worst, (load[j] - inst.supply(j)) / scale);
        if (q[j] > tol_dual) worst = std::max(worst, std::abs(load[j] - inst.supply(j)) / scale);
        worst = std::max(worst, -q[j]);
    }
    switch (rho.kind()) {
        case Rho::Kind::Finite:
            for (std::size_t i = 0; i < inst.agents(); ++i) {
                if (!(u[i] > 0.0)) continue;
                double price = 0.0;
                for (std::size_t j : inst.desired(i)) price += q[j];
                worst = std::max(worst, std::abs(price * std::pow(u[i], 1.0 - rho.value()) - 1.0));
            }
            break;
        case Rho::Kind::One:
            for (std::size_t i = 0; i < inst.agents(); ++i) {
                double price = 0.0;
                for (std::size_t j : inst.desired(i)) price += q[j];
                worst = std::max(worst, 1.0 - price);
                if (u[i] > 1e-12) worst = std::max(worst, std::abs(price - 1.0));
            }
            break;
        case Rho::Kind::NegInfinity: {
            double weighted = 0.0;
            for (std::size_t j = 0; j < inst.goods(); ++j)
                weighted += q[j] * static_cast<double>(inst.demand_count(j));
            worst = std::max(worst, std::abs(weighted - 1.0));
            break;
        }
    }
    return std::max(worst, 0.0);
}

}  // namespace atp
