#include "semicl/renorm.hpp"

#include <cmath>
#include <numbers>

#include "semicl/errors.hpp"
#include "semicl/kernels.hpp"

namespace semicl {

InstantaneousVacuum::InstantaneousVacuum(const LatticeSpec& spec, double m) : spec_(spec), m_(m) {
    if (!(m > 0.0)) fail_validation("bad_mass", "quantum mass must be positive");
    const int n = spec.n_x;
    A0_ = -reference::laplacian_matrix(n, spec.dx()) + m * m * Mat::Identity(n, n);
    Eigen::SelfAdjointEigenSolver<Mat> es(A0_);
    U_ = es.eigenvectors();
    const Vec a = es.eigenvalues();
    r_ = (a.array() - 0.25 * spec.dt * spec.dt * a.array().square()).sqrt();
    if (!r_.allFinite() || r_.minCoeff() <= 0.0)
        fail_instability("unstable_stencil", "largest w dt reaches 2; leapfrog is unstable");
}

InstantaneousVacuum::Parts InstantaneousVacuum::expand(const std::vector<Vec>& V, int order) const {
    const int n = spec_.n_x;
    const double q = 0.25 * spec_.dt * spec_.dt;
    const Vec lam = (U_.transpose() * A0_ * U_).diagonal();

    std::vector<Mat> Vt(static_cast<std::size_t>(order + 1), Mat::Zero(n, n));
    for (int k = 1; k <= order; ++k) {
        const auto i = static_cast<std::size_t>(k);
        if (i < V.size() && V[i].size() != 0) Vt[i] = U_.transpose() * V[i].asDiagonal() * U_;
    }
    Parts P;
    P.S.assign(static_cast<std::size_t>(order + 1), Mat::Zero(n, n));
    P.R.assign(static_cast<std::size_t>(order + 1), Mat::Zero(n, n));
    P.S[0] = r_.cwiseInverse().asDiagonal();
    P.R[0] = r_.asDiagonal();
    Mat denom(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) denom(i, j) = r_[i] + r_[j];

    for (int k = 1; k <= order; ++k) {
        const auto K = static_cast<std::size_t>(k);
        Mat B = Vt[K] - q * (lam.asDiagonal() * Vt[K] + Vt[K] * lam.asDiagonal());
        for (int a = 1; a < k; ++a) B -= q * Vt[static_cast<std::size_t>(a)] * Vt[static_cast<std::size_t>(k - a)];
        for (int j = 1; j < k; ++j) B -= P.R[static_cast<std::size_t>(j)] * P.R[static_cast<std::size_t>(k - j)];
        P.R[K] = B.cwiseQuotient(denom);
        Mat acc = Mat::Zero(n, n);
        for (int j = 1; j <= k; ++j) acc += P.R[static_cast<std::size_t>(j)] * P.S[static_cast<std::size_t>(k - j)];
        P.S[K] = -(P.S[0] * acc);
    }
    return P;
}

namespace {

bool all_zero(const std::vector<Vec>& V, int order) {
    for (int q = 1; q <= order && q < static_cast<int>(V.size()); ++q)
        if (V[static_cast<std::size_t>(q)].size() != 0 && !V[static_cast<std::size_t>(q)].isZero(0.0)) return false;
    return true;
}

}  // namespace

std::vector<CauchyData2pt> InstantaneousVacuum::series(const std::vector<Vec>& V, int order) const {
    if (order < 0) fail_validation("bad_order", "order must be nonnegative");
    const int n = spec_.n_x;
    std::vector<CauchyData2pt> out(static_cast<std::size_t>(order + 1), CauchyData2pt::zero(n));
    out[0] = vacuum_data(spec_, m_);
    if (order == 0 || all_zero(V, order)) return out;
    const Parts P = expand(V, order);
    const double s = 0.5 / spec_.dx();
    for (int k = 1; k <= order; ++k) {
        const auto K = static_cast<std::size_t>(k);
        out[K].phiphi = (s * U_ * P.S[K] * U_.transpose()).cast<cplx>();
        out[K].pipi = (s * U_ * P.R[K] * U_.transpose()).cast<cplx>();
    }
    return out;
}

std::vector<Vec> InstantaneousVacuum::diagonal_series(const std::vector<Vec>& V, int order) const {
    if (order < 0) fail_validation("bad_order", "order must be nonnegative");
    const int n = spec_.n_x;
    std::vector<Vec> out(static_cast<std::size_t>(order + 1), Vec::Zero(n));
    out[0] = vacuum_data(spec_, m_).phiphi.diagonal().real();
    if (order == 0 || all_zero(V, order)) return out;
    const Parts P = expand(V, order);
    const double s = 0.5 / spec_.dx();
    for (int k = 1; k <= order; ++k) {
        const Mat T = U_ * P.S[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(k)] = s * (T.array() * U_.array()).rowwise().sum().matrix();
    }
    return out;
}

CauchyData2pt InstantaneousVacuum::exact(const Vec& V) const {
    const int n = spec_.n_x;
    if (V.size() == 0) return vacuum_data(spec_, m_);
    if (V.size() != n) fail_validation("size_mismatch", "potential slice must have n_x entries");
    const Mat A = A0_ + Mat(V.asDiagonal());
    const Mat B = A - 0.25 * spec_.dt * spec_.dt * A * A;
    Eigen::SelfAdjointEigenSolver<Mat> es(B);
    const Vec b = es.eigenvalues();
    if (b.minCoeff() <= 0.0) fail_instability("unstable_stencil", "instantaneous vacuum has no positive frequency");
    const Mat& W = es.eigenvectors();
    const double s = 0.5 / spec_.dx();
    CauchyData2pt d;
    d.phiphi = (s * W * b.cwiseSqrt().cwiseInverse().asDiagonal() * W.transpose()).cast<cplx>();
    d.pipi = (s * W * b.cwiseSqrt().asDiagonal() * W.transpose()).cast<cplx>();
    d.phipi = CMat::Identity(n, n) * cplx(0.0, s);
    d.piphi = d.phipi.adjoint();
    return d;
}

std::vector<Vec> tower_potentials(const SwitchingFunction& chi, const std::vector<FieldHistory>& psi, int n,
                                  int order) {
    std::vector<Vec> V(static_cast<std::size_t>(order + 1));
    for (int q = 1; q <= order; ++q) {
        const auto j = static_cast<std::size_t>(q - 1);
        if (j >= psi.size()) fail_validation("missing_order", "psi tower is missing an order");
        V[static_cast<std::size_t>(q)] = 2.0 * chi[n] * psi[j][static_cast<std::size_t>(n)];
    }
    return V;
}

SubtractionTower subtraction_tower(const LatticeSpec& spec, const SwitchingFunction& chi,
                                   const std::vector<FieldHistory>& psi, double m, int order,
                                   const std::vector<int>& surfaces) {
    if (order < 0) fail_validation("bad_order", "order must be nonnegative");
    if (order > 0 && static_cast<int>(psi.size()) < order)
        fail_validation("missing_order", "psi tower is missing an order");
    const InstantaneousVacuum iv(spec, m);
    SubtractionTower T;
    T.order = order;
    T.m = m;
    T.diag.assign(static_cast<std::size_t>(order + 1), FieldHistory(static_cast<std::size_t>(spec.n_slices())));
    for (int n = 0; n <= spec.n_t; ++n) {
        const auto V = tower_potentials(chi, psi, n, order);
        const auto d = iv.diagonal_series(V, order);
        for (int k = 0; k <= order; ++k) T.diag[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] = d[static_cast<std::size_t>(k)];
    }
    for (int s : surfaces) {
        if (s < 0 || s > spec.n_t) fail_validation("surface_outside", "surface index outside the run");
        T.surfaces[s] = iv.series(tower_potentials(chi, psi, s, order), order);
    }
    return T;
}

Vec Phi2Field::assemble(int n, double lambda, int truncate) const {
    const int K = truncate < 0 ? static_cast<int>(orders.size()) - 1 : truncate;
    Vec acc = Vec::Zero(orders[0][static_cast<std::size_t>(n)].size());
    double w = 1.0;
    for (int k = 0; k <= K; ++k, w *= lambda) acc += w * orders[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
    return acc;
}

Phi2Field phi_squared(const std::vector<FieldHistory>& g_diag, const SubtractionTower& H,
                      const RenormParams& params, const SwitchingFunction& chi,
                      const std::vector<FieldHistory>& psi) {
    if (g_diag.size() != H.diag.size()) fail_validation("misaligned", "G and H towers differ in order");
    Phi2Field out;
    out.orders.resize(g_diag.size());
    const double m2 = params.m * params.m;
    for (std::size_t k = 0; k < g_diag.size(); ++k) {
        if (g_diag[k].size() != H.diag[k].size()) fail_validation("misaligned", "G and H towers differ in length");
        if (k >= 1 && psi.size() < k) fail_validation("missing_order", "psi tower is missing an order");
        for (std::size_t n = 0; n < g_diag[k].size(); ++n) {
            Vec v = g_diag[k][n] - H.diag[k][n];
            if (k == 0)
                v.array() += params.beta1 * m2;
            else
                v += params.beta2 * chi.values[n] * psi[k - 1][n];
            out.orders[k].push_back(std::move(v));
        }
    }
    return out;
}

Phi2Field ambiguity_shift(const Phi2Field& phi2, double d1, double d2, double d3, const SwitchingFunction& chi,
                          const std::vector<FieldHistory>& psi, const RenormParams& params) {
    (void)d3;  // multiplies R = 0
    Phi2Field out = phi2;
    const double m2 = params.m * params.m;
    for (std::size_t k = 0; k < out.orders.size(); ++k)
        for (std::size_t n = 0; n < out.orders[k].size(); ++n) {
            if (k == 0)
                out.orders[k][n].array() += d1 * m2;
            else
                out.orders[k][n] += d2 * chi.values[n] * psi[k - 1][n];
        }
    return out;
}

double scale_alpha(double ell0, double ell) {
    if (!(ell0 > 0.0) || !(ell > 0.0)) fail_validation("bad_scale", "renormalization lengths must be positive");
    return std::log(ell0 / ell) / (8.0 * std::numbers::pi * std::numbers::pi);
}

Phi2Field rescale(const Phi2Field& phi2, double ell0, double ell, const SwitchingFunction& chi,
                  const std::vector<FieldHistory>& psi, const RenormParams& params) {
    const double a = scale_alpha(ell0, ell);
    return ambiguity_shift(phi2, a, 2.0 * a, 0.0, chi, psi, params);
}

}  // namespace semicl
