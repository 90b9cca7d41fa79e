#include "tubetrack/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tubetrack {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest-augmenting-path assignment on a square matrix. Returns row->col.
std::vector<int> solve_square(const Eigen::MatrixXd& c) {
    const int n = static_cast<int>(c.rows());
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j])
                    continue;
                const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0)
            row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

// Minimal total cost of a maximum matching on a rectangular block, selected
// by (row index, col index) lists into the full matrix.
double solve_total(const Eigen::MatrixXd& cost, const std::vector<int>& rows,
                   const std::vector<int>& cols) {
    const int m = static_cast<int>(rows.size());
    const int n = static_cast<int>(cols.size());
    if (m == 0 || n == 0)
        return 0.0;
    const int side = std::max(m, n);
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(side, side);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c)
            padded(r, c) = cost(rows[r], cols[c]);
    const std::vector<int> rtc = solve_square(padded);
    double total = 0;
    for (int r = 0; r < m; ++r)
        if (rtc[r] < n)
            total += cost(rows[r], cols[rtc[r]]);
    return total;
}

}  // namespace

Assignment hungarian(const Eigen::MatrixXd& cost) {
    const int m = static_cast<int>(cost.rows());
    const int n = static_cast<int>(cost.cols());
    Assignment result;
    result.row_to_col.assign(m, -1);
    if (m == 0 || n == 0)
        return result;
    if (!cost.allFinite())
        throw std::invalid_argument("hungarian: costs must be finite");

    std::vector<int> all_rows(m), all_cols(n);
    for (int r = 0; r < m; ++r) all_rows[r] = r;
    for (int c = 0; c < n; ++c) all_cols[c] = c;
    const double optimum = solve_total(cost, all_rows, all_cols);
    const double tol = 1e-9 * (1.0 + cost.cwiseAbs().maxCoeff() * std::min(m, n));

    // Row-by-row lexicographic refinement: fix the smallest column (unassigned
    // last) whose completion still reaches the optimum.
    const int need = std::min(m, n);
    std::vector<int> free_cols = all_cols;
    double fixed_cost = 0;
    int assigned = 0;
    for (int r = 0; r < m; ++r) {
        std::vector<int> tail_rows(all_rows.begin() + r + 1, all_rows.end());
        int best_choice = -2;  // -2 none evaluated, -1 unassigned, >=0 column
        double best_total = kInf;
        bool accepted = false;

        for (std::size_t k = 0; k < free_cols.size(); ++k) {
            const int c = free_cols[k];
            std::vector<int> rest = free_cols;
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
            const double total = fixed_cost + cost(r, c) + solve_total(cost, tail_rows, rest);
            if (total <= optimum + tol) {
                best_choice = c;
                accepted = true;
                break;
            }
            if (total < best_total) {
                best_total = total;
                best_choice = c;
            }
        }
        if (!accepted) {
            const bool unassigned_feasible = (m - r - 1) >= (need - assigned);
            if (unassigned_feasible) {
                const double total = fixed_cost + solve_total(cost, tail_rows, free_cols);
                if (total <= optimum + tol || total < best_total)
                    best_choice = -1;
            }
        }

        if (best_choice >= 0) {
            result.row_to_col[r] = best_choice;
            fixed_cost += cost(r, best_choice);
            ++assigned;
            free_cols.erase(std::find(free_cols.begin(), free_cols.end(), best_choice));
        }
    }

    result.total_cost = 0;
    for (int r = 0; r < m; ++r)
        if (result.row_to_col[r] >= 0) {
            result.total_cost += cost(r, result.row_to_col[r]);
            ++result.n_assigned;
        }
    return result;
}

}  // namespace tubetrack
