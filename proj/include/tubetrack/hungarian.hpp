#pragma once

#include <Eigen/Dense>
#include <vector>

namespace tubetrack {

struct Assignment {
    std::vector<int> row_to_col;  // one entry per row; -1 = unassigned
    double total_cost = 0;        // sum of assigned cells, accumulated in row order
    int n_assigned = 0;
};

// Minimum-cost maximum matching on a rectangular cost matrix (Munkres /
// shortest augmenting path; rectangular inputs are padded internally). All
// costs must be finite. Among equal-cost optima the lexicographically
// smallest row_to_col vector is returned, with "unassigned" ordered after
// every real column; optima are considered equal within a relative 1e-9
// tolerance. An empty matrix yields an empty assignment.
Assignment hungarian(const Eigen::MatrixXd& cost);

}  // namespace tubetrack
