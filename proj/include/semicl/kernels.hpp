#pragma once

#include <vector>

#include "semicl/types.hpp"

/**
 * Stencil kernels for leapfrog (kick/drift) updates of per-order block towers.
 *
 * A kick adds h * K(src)_k to dst_k where
 *   K(X)_k = Lap X_k - a o X_k - sum_{q=1..k} V_q o X_{k-q},
 * acting on the first (rows) or second (cols) matrix index. `pot[q]` for q >= 1
 * is the lambda^q potential slice; pot[0] is ignored.
 */
namespace semicl::kernels {

void kick_rows(std::vector<CMat>& dst, const std::vector<CMat>& src, const Vec& a,
               const std::vector<Vec>& pot, double h, double dx, Exec exec);

void kick_cols(std::vector<CMat>& dst, const std::vector<CMat>& src, const Vec& a,
               const std::vector<Vec>& pot, double h, double dx, Exec exec);

/// dst_k += dt * src_k
void drift(std::vector<CMat>& dst, const std::vector<CMat>& src, double dt, Exec exec);

}  // namespace semicl::kernels

/// Dense-matrix formulation of the same updates; slow, used as a test oracle.
namespace semicl::reference {

Mat laplacian_matrix(int n, double dx);

void kick_rows(std::vector<CMat>& dst, const std::vector<CMat>& src, const Vec& a,
               const std::vector<Vec>& pot, double h, double dx);

void kick_cols(std::vector<CMat>& dst, const std::vector<CMat>& src, const Vec& a,
               const std::vector<Vec>& pot, double h, double dx);

}  // namespace semicl::reference
