#pragma once

#include <map>
#include <vector>

#include "semicl/lattice.hpp"
#include "semicl/renorm.hpp"
#include "semicl/twopoint.hpp"

namespace semicl {

struct CouplingConfig {
    double lambda = 0.0;
    int order = 1;
    double M = 1.0;  ///< classical mass
    double m = 1.0;  ///< quantum mass
    double beta1 = 0.0;
    double beta2 = 0.0;
    double beta3 = 0.0;
    double ell = 1.0;
    int max_order = 4;

    RenormParams renorm() const { return {m, beta1, beta2, beta3}; }
};

/// Throws on order outside [0, max_order] or nonpositive masses/scale.
void check_config(const CouplingConfig& c);

/**
 * Leapfrog solution of (box - M^2) psi = J with psi = varsigma, d_t psi = varpi
 * on slice 0; the first step is the velocity-Verlet half step. Empty J = 0.
 */
FieldHistory classical_solve(const LatticeSpec& spec, double M, const FieldHistory& J, const Vec& varsigma,
                             const Vec& varpi);

/// Per-order initial data; missing orders are zero.
struct TowerInitialData {
    std::vector<Vec> varsigma;
    std::vector<Vec> varpi;
    std::vector<CauchyData2pt> blocks;
};

/// Assembled truncations and couplings for the in-sweep quantum residual.
struct ResidualProbe {
    std::vector<double> lambdas;
    std::vector<int> truncations;
};

struct TowerOptions {
    std::vector<int> block_slices;  ///< per-order blocks kept at these slices
    ResidualProbe probe;
    Exec exec = Exec::parallel;
};

struct SolutionTower {
    LatticeSpec spec{};
    SwitchingFunction chi;
    CouplingConfig config;
    std::vector<FieldHistory> psi;     ///< [k][n]
    std::vector<FieldHistory> g_diag;  ///< Re diag G_k
    std::vector<FieldHistory> h_diag;  ///< Re diag H_k
    Phi2Field phi2;
    std::map<int, std::vector<CauchyData2pt>> blocks;
    std::vector<double> ccr_drift;  ///< per slice, all orders
    /// max_n |C(lambda)^{n+1} - step(C(lambda)^n)| / dt^2, [truncation][lambda]
    std::vector<std::vector<double>> quantum_residual;
    ResidualProbe probe;

    int order() const { return static_cast<int>(psi.size()) - 1; }
};

/**
 * One time sweep building psi_k, G_k, H_k and phi2_k for k = 0..order. At each
 * slice: H and phi2 from the current fields, J_k = chi phi2_{k-1}, psi advanced,
 * then the covariance tower stepped with V_q = 2 chi psi_{q-1}.
 */
SolutionTower solve_tower(const LatticeSpec& spec, const SwitchingFunction& chi, const CouplingConfig& config,
                          const TowerInitialData& init, const TowerOptions& options = {});

/// Switched scenario: order-0 data only.
SolutionTower solve_tower(const LatticeSpec& spec, const SwitchingFunction& chi, const CouplingConfig& config,
                          const Vec& varsigma, const Vec& varpi, const CauchyData2pt& data,
                          const TowerOptions& options = {});

struct Assembled {
    FieldHistory psi;
    FieldHistory g_diag;
    std::map<int, CauchyData2pt> blocks;
};

/// psi = sum lambda^k psi_k, G = sum lambda^k G_k up to `truncate` (-1 = all).
Assembled assemble(const SolutionTower& tower, double lambda, int truncate = -1);

/// [data, H_1, ..., H_n] from subtraction blocks H[k] on the initial surface.
std::vector<CauchyData2pt> correct_data(const CauchyData2pt& data, const std::vector<CauchyData2pt>& H, int n);

/// H_k on slice 0 for an always-on coupling: V_1 = 2 varsigma, higher V zero.
std::vector<CauchyData2pt> initial_subtraction(const LatticeSpec& spec, double m, const Vec& varsigma, int n);

struct RestartData {
    int slice = 0;
    LatticeSpec tail{};
    TowerInitialData init;
};

/// Per-order restart data on slice s (needs stored blocks there and 1 <= s < n_t).
RestartData restart(const SolutionTower& tower, int s);

/// max over interior slices of |dalembert(psi) - lambda chi phi2| for the truncated assembly,
/// with G assembled and H evaluated non-perturbatively at the truncated potential.
double classical_residual(const SolutionTower& tower, double lambda, int truncate);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace semicl
