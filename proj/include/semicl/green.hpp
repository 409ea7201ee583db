#pragma once

#include <vector>

#include "semicl/lattice.hpp"

namespace semicl {

/// V(t, x) per slice; an empty history means V = 0.
struct PotentialHistory {
    FieldHistory slices;

    bool is_zero() const { return slices.empty(); }
    /// Slice n, or an empty vector when zero.
    Vec at(int n) const;
};

/// V = 2 lambda chi psi.
PotentialHistory coupling_potential(const SwitchingFunction& chi, const FieldHistory& psi, double lambda);

enum class KernelKind { retarded, advanced, commutator };

/**
 * Bi-kernel on the lattice stored column by source point. Column entries are
 * indexed (site, slice); sources may be a subset of the grid.
 */
class GreenKernel {
public:
    GreenKernel() = default;
    GreenKernel(const LatticeSpec& spec, KernelKind kind, double mu, std::vector<GridPoint> sources);

    KernelKind kind() const { return kind_; }
    double mass() const { return mu_; }
    const LatticeSpec& spec() const { return spec_; }
    const std::vector<GridPoint>& sources() const { return sources_; }

    bool has_source(GridPoint y) const;
    bool is_complete() const;
    const Mat& column(GridPoint y) const;
    Mat& column_at(std::size_t i) { return columns_[i]; }
    const Mat& column_at(std::size_t i) const { return columns_[i]; }

    /// Kernel value K(x, y); y must be a stored source.
    double operator()(GridPoint x, GridPoint y) const;

private:
    LatticeSpec spec_{};
    KernelKind kind_ = KernelKind::retarded;
    double mu_ = 0.0;
    std::vector<GridPoint> sources_;
    std::vector<Mat> columns_;
    std::vector<int> index_;
};

std::vector<GridPoint> all_points(const LatticeSpec& spec);
std::vector<GridPoint> slice_points(const LatticeSpec& spec, int n);

/// Retarded solve of (d_t^2 - d_x^2 + mu^2 + V) u = f; f and u are (site, slice) arrays.
Mat solve_retarded(const LatticeSpec& spec, double mu, const PotentialHistory& V, const Mat& f);

/// Advanced counterpart: zero after the last source slice, marched backward.
Mat solve_advanced(const LatticeSpec& spec, double mu, const PotentialHistory& V, const Mat& f);

/// Columns solve (d_t^2 - d_x^2 + mu^2 + V) E+(., y) = delta_y / (dt dx). Empty sources = all points.
GreenKernel build_retarded(const LatticeSpec& spec, double mu, const PotentialHistory& V,
                           std::vector<GridPoint> sources = {}, Exec exec = Exec::parallel);

/// Advanced columns by backward time stepping.
GreenKernel build_advanced_direct(const LatticeSpec& spec, double mu, const PotentialHistory& V,
                                  std::vector<GridPoint> sources = {}, Exec exec = Exec::parallel);

/// E-(x, y) = E+(y, x); needs a complete retarded kernel.
GreenKernel advanced_from_retarded(const GreenKernel& retarded);

/// E = E- - E+ on complete kernels.
GreenKernel commutator_kernel(const GreenKernel& retarded, const GreenKernel& advanced);

/// E(a, b) from retarded columns; needs the column of the earlier point.
double commutator_value(const GreenKernel& retarded, GridPoint a, GridPoint b);

/// True when |x - y| (periodic) <= n_x - n_y - 1 cells, or forward/backward per kind.
bool in_discrete_cone(const LatticeSpec& spec, GridPoint x, GridPoint y, KernelKind kind);

struct BornTower {
    int order = 0;
    KernelKind kind = KernelKind::retarded;
    std::vector<GreenKernel> orders;  ///< E_k, k = 0..order
};

/// E_k = -E_0 o (sum_{q=1..k} W_q E_{k-q}); W[q] multiplies lambda^q, W[0] ignored.
BornTower born_series(const LatticeSpec& spec, double mu, const std::vector<PotentialHistory>& W, int n,
                      std::vector<GridPoint> sources, KernelKind kind = KernelKind::retarded,
                      Exec exec = Exec::parallel);

/// Single perturbing potential W at order lambda.
BornTower born_series(const LatticeSpec& spec, double mu, const PotentialHistory& W, int n,
                      std::vector<GridPoint> sources, KernelKind kind = KernelKind::retarded,
                      Exec exec = Exec::parallel);

/// sum_k lambda^k E_k for one source column.
Mat resum_column(const BornTower& tower, GridPoint y, double lambda);

/**
 * E(y, z) and its normal derivative in y for y on slice `surface`, stored as
 * functions of z at and after the surface. E[y] is the unit-momentum response
 * over dx; NE[y] is minus the unit-field response over dx.
 */
struct SurfaceKernel {
    LatticeSpec spec{};
    double mu = 0.0;
    int surface = 0;
    std::vector<Mat> E;
    std::vector<Mat> NE;
};

SurfaceKernel build_surface_kernel(const LatticeSpec& spec, double mu, const PotentialHistory& V,
                                   int surface = 0, Exec exec = Exec::parallel);

}  // namespace semicl
