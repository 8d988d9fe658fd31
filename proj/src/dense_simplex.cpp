#include "dense_simplex.hpp"

#include <limits>
#include <stdexcept>

namespace atp::detail {

DenseSimplex::DenseSimplex(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
    : structural_(static_cast<int>(a.cols())) {
    const int rows = static_cast<int>(a.rows());
    if (b.size() != rows) throw std::invalid_argument("simplex: rhs length mismatch");
    if ((b.array() < 0.0).any()) throw std::invalid_argument("simplex: rhs must be nonnegative");
    tableau_ = Eigen::MatrixXd::Zero(rows, structural_ + rows + 1);
    tableau_.leftCols(structural_) = a;
    tableau_.block(0, structural_, rows, rows).setIdentity();
    tableau_.col(structural_ + rows) = b;
    basis_.resize(rows);
    for (int r = 0; r < rows; ++r) basis_[r] = structural_ + r;
    cost_ = Eigen::VectorXd::Zero(structural_ + rows);
    reduced_ = cost_;
}

void DenseSimplex::set_objective(const Eigen::VectorXd& c) {
    if (c.size() != structural_) throw std::invalid_argument("simplex: objective length mismatch");
    cost_.setZero();
    cost_.head(structural_) = c;
    const int cols = column_count();
    for (int k = 0; k < cols; ++k) {
        double value = cost_(k);
        for (int r = 0; r < static_cast<int>(basis_.size()); ++r) value -= cost_(basis_[r]) * tableau_(r, k);
        reduced_(k) = value;
    }
}

void DenseSimplex::pivot(int row, int col) {
    tableau_.row(row) /= tableau_(row, col);
    for (int r = 0; r < tableau_.rows(); ++r) {
        if (r == row) continue;
        const double factor = tableau_(r, col);
        if (factor != 0.0) tableau_.row(r) -= factor * tableau_.row(row);
    }
    const double factor = reduced_(col);
    reduced_ -= factor * tableau_.row(row).head(column_count()).transpose();
    basis_[row] = col;
}

DenseSimplex::Status DenseSimplex::maximize(const std::vector<bool>& allowed, long max_pivots) {
    const int cols = column_count();
    const int rhs = cols;
    for (long iter = 0; iter < max_pivots; ++iter) {
        int entering = -1;
        for (int k = 0; k < cols; ++k) {
            if (k < static_cast<int>(allowed.size()) && !allowed[k]) continue;
            if (reduced_(k) > kPivotTol) {
                entering = k;
                break;
            }
        }
        if (entering < 0) return Status::Optimal;

        int leaving = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int r = 0; r < tableau_.rows(); ++r) {
            const double coef = tableau_(r, entering);
            if (coef <= kPivotTol) continue;
            const double ratio = tableau_(r, rhs) / coef;
            if (leaving < 0 || ratio < best_ratio - 1e-14) {
                leaving = r;
                best_ratio = ratio;
            } else if (ratio <= best_ratio + 1e-14 && basis_[r] < basis_[leaving]) {
                leaving = r;
                best_ratio = std::min(best_ratio, ratio);
            }
        }
        if (leaving < 0) return Status::Unbounded;
        pivot(leaving, entering);
    }
    return Status::PivotLimit;
}

Eigen::VectorXd DenseSimplex::primal() const {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(structural_);
    const int rhs = column_count();
    for (int r = 0; r < static_cast<int>(basis_.size()); ++r) {
        if (basis_[r] < structural_) z(basis_[r]) = std::max(0.0, tableau_(r, rhs));
    }
    return z;
}

Eigen::VectorXd DenseSimplex::duals() const {
    const int rows = static_cast<int>(basis_.size());
    return -reduced_.segment(structural_, rows);
}

double DenseSimplex::objective_value() const {
    const int rhs = column_count();
    double value = 0.0;
    for (int r = 0; r < static_cast<int>(basis_.size()); ++r) value += cost_(basis_[r]) * tableau_(r, rhs);
    return value;
}

}  // namespace atp::detail
