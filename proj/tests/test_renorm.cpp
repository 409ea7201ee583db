#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "semicl/perturb.hpp"
#include "semicl/renorm.hpp"

using namespace semicl;

namespace {

std::vector<FieldHistory> sample_tower(const LatticeSpec& s, int order) {
    std::vector<FieldHistory> psi;
    for (int k = 0; k <= order; ++k) {
        FieldHistory h;
        for (int n = 0; n <= s.n_t; ++n)
            h.push_back(testing::cosine_profile(s, 0.3 / (k + 1), 0.4 * std::cos(0.05 * n + k), k + 1));
        psi.push_back(h);
    }
    return psi;
}

double max_abs(const FieldHistory& h) {
    double m = 0.0;
    for (const auto& v : h) m = std::max(m, v.cwiseAbs().maxCoeff());
    return m;
}

}  // namespace

TEST_SUITE("renorm") {

TEST_CASE("leading subtraction term is the stencil vacuum bitwise") {
    const LatticeSpec s = testing::desk_lattice(32, 20);
    const InstantaneousVacuum iv(s, 1.0);
    const auto H = iv.series({Vec(), testing::cosine_profile(s, 0.2, 0.1)}, 1);
    const CauchyData2pt v = vacuum_data(s, 1.0);
    CHECK(H[0].phiphi == v.phiphi);
    CHECK(H[0].pipi == v.pipi);
    CHECK(H[0].phipi == v.phipi);
}

TEST_CASE("vanishing switching gives vanishing corrections") {
    const LatticeSpec s = testing::desk_lattice(24, 30);
    const auto T = subtraction_tower(s, make_switching(s, SwitchShape::zero), sample_tower(s, 3), 1.0, 3, {0, 10});
    for (int k = 1; k <= 3; ++k) CHECK(max_abs(T.diag[static_cast<std::size_t>(k)]) == 0.0);
    for (const auto& [slice, blocks] : T.surfaces)
        for (int k = 1; k <= 3; ++k) CHECK(blocks[static_cast<std::size_t>(k)].max_abs() == 0.0);
}

TEST_CASE("corrections vanish wherever the switching function does") {
    const LatticeSpec s = testing::desk_lattice(24, 60, 0.5, 3.0);
    const auto chi = make_switching(s, SwitchShape::bump);
    const auto T = subtraction_tower(s, chi, sample_tower(s, 2), 1.0, 2);
    for (int n = 0; n <= s.n_t; ++n)
        for (int k = 1; k <= 2; ++k) {
            const double v = T.diag[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)].cwiseAbs().maxCoeff();
            if (chi[n] == 0.0) CHECK(v == 0.0);
            else CHECK(v > 0.0);
        }
}

TEST_CASE("first correction equals the mass derivative of the vacuum") {
    const LatticeSpec s = testing::desk_lattice(32, 20);
    const double psi0 = 0.7, h = 1e-4;
    const InstantaneousVacuum iv(s, 1.0);
    const auto d = iv.diagonal_series({Vec(), Vec::Constant(32, 2 * psi0)}, 1);
    const double up = vacuum_data(s, std::sqrt(1 + h)).phiphi(0, 0).real();
    const double dn = vacuum_data(s, std::sqrt(1 - h)).phiphi(0, 0).real();
    const double fd = 2 * psi0 * (up - dn) / (2 * h);
    for (int j = 0; j < 32; ++j) CHECK(d[1][j] == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("truncated series converges to the exact instantaneous vacuum") {
    const LatticeSpec s = testing::desk_lattice(32, 20);
    const InstantaneousVacuum iv(s, 1.0);
    const Vec v1 = testing::cosine_profile(s, 0.3, 0.5), v2 = testing::cosine_profile(s, 0.0, 0.2, 2);
    const auto S = iv.series({Vec(), v1, v2, Vec::Zero(32)}, 3);
    const std::vector<double> lams{1e-2, 3e-2, 1e-1};
    for (int t = 0; t <= 3; ++t) {
        std::vector<double> err;
        for (double lam : lams) {
            CauchyData2pt acc = S[0];
            double w = lam;
            for (int k = 1; k <= t; ++k, w *= lam) acc += w * S[static_cast<std::size_t>(k)];
            err.push_back((iv.exact(lam * v1 + lam * lam * v2) - acc).max_abs());
        }
        CHECK(loglog_slope(lams, err) == doctest::Approx(t + 1).epsilon(0.3 / (t + 1)));
    }
}

TEST_CASE("corrections depend only on lower orders of the classical field") {
    const LatticeSpec s = testing::desk_lattice(24, 20, 0.5, 2.0);
    const auto chi = make_switching(s, SwitchShape::constant_one);
    auto psi = sample_tower(s, 3);
    const auto A = subtraction_tower(s, chi, psi, 1.0, 3, {5});
    for (int k = 0; k <= 3; ++k) {
        auto moved = psi;
        for (auto& v : moved[static_cast<std::size_t>(k)]) v.array() += 0.37;
        const auto B = subtraction_tower(s, chi, moved, 1.0, 3, {5});
        for (int q = 0; q <= k; ++q) {
            const auto Q = static_cast<std::size_t>(q);
            for (int n = 0; n <= s.n_t; ++n)
                CHECK(A.diag[Q][static_cast<std::size_t>(n)] == B.diag[Q][static_cast<std::size_t>(n)]);
            CHECK(A.surfaces.at(5)[Q].phiphi == B.surfaces.at(5)[Q].phiphi);
        }
        if (k < 3) CHECK(max_abs(A.diag[static_cast<std::size_t>(k + 1)]) != max_abs(B.diag[static_cast<std::size_t>(k + 1)]));
    }
}

TEST_CASE("missing classical orders are rejected") {
    const LatticeSpec s = testing::desk_lattice(16, 10);
    CHECK(testing::throws_kind(
        [&] { subtraction_tower(s, make_switching(s, SwitchShape::bump), sample_tower(s, 0), 1.0, 3); },
        ErrorKind::validation));
}

TEST_CASE("vacuum without coupling has vanishing field square") {
    const LatticeSpec s = testing::desk_lattice(32, 60);
    CouplingConfig c;
    c.order = 2;
    const auto T = solve_tower(s, make_switching(s, SwitchShape::zero), c, Vec::Zero(32), Vec::Zero(32), vacuum_data(s, 1.0));
    for (int k = 0; k <= 2; ++k) CHECK(max_abs(T.phi2.orders[static_cast<std::size_t>(k)]) == 0.0);
}

TEST_CASE("thermal field square is the occupation mode sum") {
    const LatticeSpec s = testing::desk_lattice(32, 60);
    CouplingConfig c;
    c.order = 1;
    const double T = 0.6;
    const auto tower = solve_tower(s, make_switching(s, SwitchShape::zero), c, Vec::Zero(32), Vec::Zero(32), thermal_data(s, 1.0, T));
    double expect = 0.0;
    for (int p = 0; p < 32; ++p) expect += occupation(s, 1.0, T, p) / (std::sqrt(stencil_omega2(s, 1.0, p)) * s.L);
    CHECK(expect > 0.0);
    for (const Vec& v : tower.phi2.orders[0])
        for (int j = 0; j < 32; ++j) CHECK(v[j] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ambiguity shifts") {
    const LatticeSpec s = testing::desk_lattice(24, 60, 0.5, 3.0);
    const auto chi = make_switching(s, SwitchShape::bump);
    CouplingConfig c;
    c.order = 2;
    c.m = 1.3;
    const Vec vs = testing::cosine_profile(s, 0.5, 1.0);
    const auto base = solve_tower(s, chi, c, vs, Vec::Zero(24), thermal_data(s, 1.3, 0.5));
    const auto vac = solve_tower(s, chi, c, vs, Vec::Zero(24), vacuum_data(s, 1.3));

    SUBCASE("zero deltas are the identity") {
        const Phi2Field same = ambiguity_shift(base.phi2, 0, 0, 0, chi, base.psi, c.renorm());
        CHECK(same.orders == base.phi2.orders);
    }
    SUBCASE("shift matches recomputation with shifted constants") {
        const double d1 = 0.25, d2 = -0.4;
        const Phi2Field shifted = ambiguity_shift(base.phi2, d1, d2, 0.7, chi, base.psi, c.renorm());
        RenormParams p = c.renorm();
        p.beta1 += d1;
        p.beta2 += d2;
        const auto H = subtraction_tower(s, chi, base.psi, c.m, 2);
        const Phi2Field again = phi_squared(base.g_diag, H, p, chi, base.psi);
        for (int k = 0; k <= 2; ++k)
            for (int n = 0; n <= s.n_t; ++n) {
                const auto K = static_cast<std::size_t>(k), N = static_cast<std::size_t>(n);
                CHECK((shifted.orders[K][N] - again.orders[K][N]).cwiseAbs().maxCoeff() < 1e-12);
            }
        const Vec delta0 = shifted.orders[0][30] - base.phi2.orders[0][30];
        CHECK((delta0.array() - d1 * c.m * c.m).abs().maxCoeff() < 1e-15);
    }
    SUBCASE("shift does not depend on the quantum state") {
        const Phi2Field a = ambiguity_shift(base.phi2, 0.1, 0.2, 0, chi, base.psi, c.renorm());
        const Phi2Field b = ambiguity_shift(vac.phi2, 0.1, 0.2, 0, chi, base.psi, c.renorm());
        double worst = 0.0;
        for (int k = 0; k <= 2; ++k)
            for (int n = 0; n <= s.n_t; ++n) {
                const auto K = static_cast<std::size_t>(k), N = static_cast<std::size_t>(n);
                const Vec da = a.orders[K][N] - base.phi2.orders[K][N], db = b.orders[K][N] - vac.phi2.orders[K][N];
                worst = std::max(worst, (da - db).cwiseAbs().maxCoeff());
            }
        CHECK(worst < 1e-14);
    }
    SUBCASE("rescaling the length is the affine shift with alpha and two alpha") {
        const double a = scale_alpha(1.0, 2.0);
        CHECK(a == doctest::Approx(std::log(0.5) / (8 * std::numbers::pi * std::numbers::pi)));
        const Phi2Field r = rescale(base.phi2, 1.0, 2.0, chi, base.psi, c.renorm());
        const Phi2Field d = ambiguity_shift(base.phi2, a, 2 * a, 0, chi, base.psi, c.renorm());
        CHECK(r.orders == d.orders);
        CHECK(scale_alpha(1.5, 1.5) == 0.0);
        CHECK(testing::throws_kind([] { scale_alpha(0.0, 1.0); }, ErrorKind::validation));
    }
}

}
