#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace semicl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

/// One real slice per time index, n_t + 1 entries.
using FieldHistory = std::vector<Vec>;

struct GridPoint {
    int n = 0;  ///< time index
    int x = 0;  ///< site index
    bool operator==(const GridPoint&) const = default;
};

enum class Exec { serial, parallel };

}  // namespace semicl
