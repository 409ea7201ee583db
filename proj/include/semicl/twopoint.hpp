#pragma once

#include <map>
#include <memory>
#include <vector>

#include "semicl/green.hpp"
#include "semicl/lattice.hpp"

namespace semicl {

/**
 * Equal-time two-point blocks on one slice. G_ab(x, y) = <a(x) b(y)>, entries
 * approximate kernel values; sums over sites carry weight dx.
 */
struct CauchyData2pt {
    CMat phiphi;
    CMat phipi;
    CMat piphi;
    CMat pipi;

    static CauchyData2pt zero(int n);
    int size() const { return static_cast<int>(phiphi.rows()); }

    CauchyData2pt& operator+=(const CauchyData2pt& o);
    CauchyData2pt& operator-=(const CauchyData2pt& o);
    CauchyData2pt& operator*=(double s);
    double max_abs() const;
};

CauchyData2pt operator+(CauchyData2pt a, const CauchyData2pt& b);
CauchyData2pt operator-(CauchyData2pt a, const CauchyData2pt& b);
CauchyData2pt operator*(double s, CauchyData2pt a);

/// Violations in units of 1/dx.
struct CcrReport {
    double ccr_i = 0.0;
    double sym_phiphi = 0.0;
    double sym_pipi = 0.0;
    double hermiticity = 0.0;
    double tolerance = 1e-10;

    double max() const;
    bool passes() const { return max() < tolerance; }
};

/// CCR (i)-(iii) and hermiticity of order-0 data.
CcrReport validate(const CauchyData2pt& data, const LatticeSpec& spec, double tolerance = 1e-10);

/// Same checks for a perturbative correction, whose commutator part must vanish.
CcrReport validate_correction(const CauchyData2pt& data, const LatticeSpec& spec, double tolerance = 1e-10);

/// m^2 + (2/dx)^2 sin^2(k dx / 2) for momentum index p.
double spatial_omega2(const LatticeSpec& spec, double m, int p);

/// Frequency of the leapfrog stencil: w^2 (1 - w^2 dt^2 / 4).
double stencil_omega2(const LatticeSpec& spec, double m, int p);

/// Largest w dt over lattice momenta; the leapfrog is stable below 2.
double max_omega_dt(const LatticeSpec& spec, double m);

CauchyData2pt vacuum_data(const LatticeSpec& spec, double m);
CauchyData2pt thermal_data(const LatticeSpec& spec, double m, double temperature);

/// Mode occupation 1 / (exp(W_p / T) - 1).
double occupation(const LatticeSpec& spec, double m, double temperature, int p);

/// Exact leapfrog evolution of translation-invariant data, mode by mode.
CauchyData2pt mode_sum_covariance(const CauchyData2pt& data, const LatticeSpec& spec, double mu, int steps);

/**
 * Leapfrog (kick-drift-kick) evolution of a tower of block sets C_k under the
 * potential mu^2 + V0 + sum_q lambda^q V_q, expanded order by order. Each step
 * is C -> S C S^T with S the one-step map, applied to rows and columns.
 */
class CovarianceStepper {
public:
    CovarianceStepper(const LatticeSpec& spec, double mu, const std::vector<CauchyData2pt>& orders,
                      Exec exec = Exec::parallel);

    /// Advance from slice n to n + 1 given potentials at both slices; pot[q], q >= 1.
    void step(const Vec& base_n, const Vec& base_np1, const std::vector<Vec>& pot_n,
              const std::vector<Vec>& pot_np1);

    int order() const { return static_cast<int>(ff_.size()) - 1; }
    CauchyData2pt block(int k) const;
    std::vector<CauchyData2pt> blocks() const;
    void set_block(int k, const CauchyData2pt& d);
    /// Real part of diag G_phiphi at order k.
    Vec diagonal(int k) const;
    /// Largest CCR violation across orders, units of 1/dx.
    double ccr_drift() const;

private:
    void kick(const Vec& base, const std::vector<Vec>& pot);
    void drift();

    LatticeSpec spec_;
    double mu_;
    Exec exec_;
    std::vector<CMat> ff_, fp_, pf_, pp_;
};

struct CovarianceHistory {
    std::vector<int> steps;
    std::vector<CauchyData2pt> blocks;
    std::vector<double> ccr_drift;  ///< one entry per slice
};

/// Evolve data under mu and V; blocks kept every `stride` slices and at the last one.
CovarianceHistory evolve_covariance(const CauchyData2pt& data, const LatticeSpec& spec, double mu,
                                    const PotentialHistory& V, int stride = 1, Exec exec = Exec::parallel);

struct CovarianceTower {
    std::vector<FieldHistory> diag;                       ///< Re diag G_phiphi per order
    std::map<int, std::vector<CauchyData2pt>> blocks;     ///< slice -> per-order blocks
    std::vector<double> ccr_drift;                        ///< one entry per slice
};

/// Per-order evolution; data[k] are the order-k initial blocks, V[0] the base potential.
CovarianceTower evolve_covariance_tower(const std::vector<CauchyData2pt>& data, const LatticeSpec& spec,
                                        double mu, const std::vector<PotentialHistory>& V, int order,
                                        const std::vector<int>& block_slices = {},
                                        Exec exec = Exec::parallel);

/**
 * Wightman function G+(z, z') from data on a surface and the surface kernel:
 * dx^2 sum [G_ff NE NE - G_fp NE E - G_pf E NE + G_pp E E].
 */
class WightmanEval {
public:
    WightmanEval(CauchyData2pt data, std::shared_ptr<const SurfaceKernel> kernel);

    cplx operator()(GridPoint a, GridPoint b) const;
    const SurfaceKernel& kernel() const { return *kernel_; }

private:
    CauchyData2pt data_;
    std::shared_ptr<const SurfaceKernel> kernel_;
};

WightmanEval reconstruct(const CauchyData2pt& data, std::shared_ptr<const SurfaceKernel> kernel);

}  // namespace semicl
