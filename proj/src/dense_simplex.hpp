#pragma once

// Small dense tableau simplex for  max c^T z  s.t.  A z <= b, z >= 0, b >= 0.
// The slack basis is feasible at the start, so no phase one is needed.
// Bland's rule keeps degenerate problems from cycling.

#include <Eigen/Dense>
#include <vector>

namespace atp::detail {

class DenseSimplex {
public:
    enum class Status { Optimal, Unbounded, PivotLimit };

    DenseSimplex(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

    /// Installs a new objective over the structural columns, keeping the
    /// current basis.
    void set_objective(const Eigen::VectorXd& c);

    /// Pivots until optimal. Columns with allowed[k] == false never enter.
    Status maximize(const std::vector<bool>& allowed, long max_pivots = 100000);

    /// Reduced costs over all columns (structural then slack); <= 0 at optimum.
    const Eigen::VectorXd& reduced_costs() const { return reduced_; }

    /// Values of the structural variables.
    Eigen::VectorXd primal() const;

    /// Row duals y = c_B B^{-1}.
    Eigen::VectorXd duals() const;

    double objective_value() const;

    int structural_count() const { return structural_; }
    int column_count() const { return static_cast<int>(tableau_.cols()) - 1; }

private:
    void pivot(int row, int col);

    Eigen::MatrixXd tableau_;  // [B^{-1}A | B^{-1}b]
    Eigen::VectorXd cost_;     // over all columns
    Eigen::VectorXd reduced_;
    std::vector<int> basis_;
    int structural_;
    static constexpr double kPivotTol = 1e-11;
};

}  // namespace atp::detail
