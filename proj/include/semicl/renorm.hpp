#pragma once

#include <map>
#include <vector>

#include "semicl/lattice.hpp"
#include "semicl/twopoint.hpp"

namespace semicl {

/**
 * Vacuum blocks of the leapfrog stencil for A = -Lap + m^2 + diag(V) and their
 * expansion in lambda for V = sum_{k>=1} lambda^k V_k. With B = A - dt^2 A^2 / 4,
 * G_phiphi = B^{-1/2} / (2 dx), G_pipi = B^{1/2} / (2 dx).
 */
class InstantaneousVacuum {
public:
    InstantaneousVacuum(const LatticeSpec& spec, double m);

    /// Blocks H_0..H_order for potentials V[q], q >= 1 (V[0] ignored; missing or empty entries are zero).
    std::vector<CauchyData2pt> series(const std::vector<Vec>& V, int order) const;

    /// Real diagonals of the phiphi blocks of `series`.
    std::vector<Vec> diagonal_series(const std::vector<Vec>& V, int order) const;

    /// Non-perturbative blocks for the full potential V (empty = free).
    CauchyData2pt exact(const Vec& V) const;

    const LatticeSpec& spec() const { return spec_; }
    double mass() const { return m_; }

private:
    struct Parts {
        std::vector<Mat> S;  // eigenbasis B^{-1/2} terms
        std::vector<Mat> R;  // eigenbasis B^{1/2} terms
    };
    Parts expand(const std::vector<Vec>& V, int order) const;

    LatticeSpec spec_;
    double m_;
    Mat A0_;
    Mat U_;
    Vec r_;
};

/**
 * Subtraction tower: per-order Re diag H_k on every slice, plus full blocks on
 * requested surfaces. H_k at slice n uses V_q = 2 chi psi_{q-1} at slice n.
 */
struct SubtractionTower {
    int order = 0;
    double m = 0.0;
    std::vector<FieldHistory> diag;                       ///< [k][n]
    std::map<int, std::vector<CauchyData2pt>> surfaces;   ///< slice -> H_0..H_order
};

/// V_q slices at one time index from a psi tower: V_q = 2 chi psi_{q-1}.
std::vector<Vec> tower_potentials(const SwitchingFunction& chi, const std::vector<FieldHistory>& psi, int n,
                                  int order);

SubtractionTower subtraction_tower(const LatticeSpec& spec, const SwitchingFunction& chi,
                                   const std::vector<FieldHistory>& psi, double m, int order,
                                   const std::vector<int>& surfaces = {});

struct RenormParams {
    double m = 1.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double beta3 = 0.0;
};

struct Phi2Field {
    std::vector<FieldHistory> orders;  ///< [k][n]

    /// sum_k lambda^k phi2_k on slice n, up to order `truncate` (-1 = all).
    Vec assemble(int n, double lambda, int truncate = -1) const;
};

/// phi2_0 = Re diag(G_0 - H_0) + beta1 m^2; phi2_k = Re diag(G_k - H_k) + beta2 chi psi_{k-1}.
Phi2Field phi_squared(const std::vector<FieldHistory>& g_diag, const SubtractionTower& H,
                      const RenormParams& params, const SwitchingFunction& chi,
                      const std::vector<FieldHistory>& psi);

/// Adds d1 m^2 + lambda d2 chi psi + d3 R order by order (R = 0 on the flat cylinder).
Phi2Field ambiguity_shift(const Phi2Field& phi2, double d1, double d2, double d3, const SwitchingFunction& chi,
                          const std::vector<FieldHistory>& psi, const RenormParams& params);

/// alpha = ln(ell0 / ell) / (8 pi^2); must have positive scales.
double scale_alpha(double ell0, double ell);

/// Lattice counterpart of moving the renormalization length from ell0 to ell: beta1 += alpha, beta2 += 2 alpha.
Phi2Field rescale(const Phi2Field& phi2, double ell0, double ell, const SwitchingFunction& chi,
                  const std::vector<FieldHistory>& psi, const RenormParams& params);

}  // namespace semicl
