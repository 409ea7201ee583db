#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "semicl/perturb.hpp"

using namespace semicl;

namespace {

FieldHistory pulse(const LatticeSpec& s, int n0, int j0) {
    FieldHistory J(static_cast<std::size_t>(s.n_slices()), Vec::Zero(s.n_x));
    J[static_cast<std::size_t>(n0)][j0] = 1.0 / (s.dt * s.dx());
    return J;
}

double diff(const FieldHistory& a, const FieldHistory& b) {
    double m = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, (a[n] - b[n]).cwiseAbs().maxCoeff());
    return m;
}

CouplingConfig config(int order) {
    CouplingConfig c;
    c.order = order;
    return c;
}

}  // namespace

TEST_SUITE("perturb") {

TEST_CASE("free classical mode follows the discrete oscillator exactly") {
    const LatticeSpec s = testing::desk_lattice(32, 200);
    const Vec c = testing::cosine_profile(s, 0.0, 1.0);
    const FieldHistory psi = classical_solve(s, 1.0, {}, c, Vec::Zero(32));
    const double k2 = std::pow(2.0 / s.dx() * std::sin(0.5 * s.dx()), 2);
    const double theta = std::acos(1.0 - 0.5 * (1.0 + k2) * s.dt * s.dt);
    double err = 0.0;
    for (int n = 0; n <= s.n_t; ++n) err = std::max(err, (psi[static_cast<std::size_t>(n)] - std::cos(n * theta) * c).cwiseAbs().maxCoeff());
    CHECK(err < 1e-12);
}

TEST_CASE("free classical mode converges to the continuum oscillator at second order") {
    std::vector<double> errs;
    for (int n_x : {16, 32, 64}) {
        const double L = 2.0 * std::numbers::pi;
        const LatticeSpec s = make_lattice(n_x, L, 0.9 * L / n_x, 2 * n_x, 0.0, 0.5, 1.5);
        const Vec c = testing::cosine_profile(s, 0.0, 1.0);
        const FieldHistory psi = classical_solve(s, 1.0, {}, c, Vec::Zero(n_x));
        errs.push_back((psi.back() - std::cos(std::sqrt(2.0) * s.time(s.n_t)) * c).cwiseAbs().maxCoeff());
    }
    for (std::size_t i = 1; i < errs.size(); ++i) CHECK(std::log2(errs[i - 1] / errs[i]) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("pulse response is minus the retarded column") {
    const LatticeSpec s = testing::desk_lattice(24, 40);
    const GridPoint y{3, 7};
    const FieldHistory psi = classical_solve(s, 1.2, pulse(s, y.n, y.x), Vec::Zero(24), Vec::Zero(24));
    const Mat col = build_retarded(s, 1.2, {}, {y}).column(y);
    double err = 0.0;
    for (int n = 0; n <= s.n_t; ++n) err = std::max(err, (psi[static_cast<std::size_t>(n)] + col.col(n)).cwiseAbs().maxCoeff());
    CHECK(err < 1e-12 * col.cwiseAbs().maxCoeff());
}

TEST_CASE("Green representation of the classical solution") {
    const LatticeSpec s = testing::desk_lattice(24, 60);
    FieldHistory J(static_cast<std::size_t>(s.n_slices()), Vec::Zero(24));
    Mat f = Mat::Zero(24, s.n_slices());
    for (int n = 1; n <= s.n_t; ++n) {
        J[static_cast<std::size_t>(n)] = testing::cosine_profile(s, 0.1, std::sin(0.2 * n), 2);
        f.col(n) = J[static_cast<std::size_t>(n)];
    }
    const Vec vs = testing::cosine_profile(s, 0.5, 1.0), vp = testing::cosine_profile(s, 0.0, 0.3, 3);
    const FieldHistory psi = classical_solve(s, 1.0, J, vs, vp);
    const FieldHistory Q = classical_solve(s, 1.0, {}, vs, vp);
    const Mat EJ = solve_retarded(s, 1.0, {}, f);
    double err = 0.0;
    for (int n = 0; n <= s.n_t; ++n)
        err = std::max(err, (psi[static_cast<std::size_t>(n)] - (Q[static_cast<std::size_t>(n)] - EJ.col(n))).cwiseAbs().maxCoeff());
    CHECK(err < 1e-8);
}

TEST_CASE("classical solve is linear") {
    const LatticeSpec s = testing::desk_lattice(24, 60);
    const FieldHistory J1 = pulse(s, 4, 2), J2 = pulse(s, 9, 15);
    FieldHistory J(J1.size());
    for (std::size_t n = 0; n < J.size(); ++n) J[n] = 2.0 * J1[n] - 0.5 * J2[n];
    const Vec a = testing::cosine_profile(s, 0.1, 1.0), b = testing::cosine_profile(s, 0.0, 0.7, 2);
    const FieldHistory x = classical_solve(s, 1.0, J1, a, b), y = classical_solve(s, 1.0, J2, b, a);
    const FieldHistory z = classical_solve(s, 1.0, J, 2.0 * a - 0.5 * b, 2.0 * b - 0.5 * a);
    FieldHistory w(x.size());
    for (std::size_t n = 0; n < w.size(); ++n) w[n] = 2.0 * x[n] - 0.5 * y[n];
    CHECK(diff(z, w) < 1e-12 * 100);
}

TEST_CASE("zero switching collapses the tower to the free solution") {
    const LatticeSpec s = testing::desk_lattice(24, 60);
    const auto T = solve_tower(s, make_switching(s, SwitchShape::zero), config(3), testing::cosine_profile(s, 0.5, 1.0),
                               Vec::Zero(24), thermal_data(s, 1.0, 0.5), {{0, 30, 60}, {}, Exec::parallel});
    for (int k = 1; k <= 3; ++k) {
        const auto K = static_cast<std::size_t>(k);
        for (int n = 0; n <= s.n_t; ++n) {
            CHECK(T.psi[K][static_cast<std::size_t>(n)].isZero(0.0));
            CHECK(T.g_diag[K][static_cast<std::size_t>(n)].isZero(0.0));
        }
        for (const auto& [n, b] : T.blocks) CHECK(b[K].max_abs() == 0.0);
    }
    const Assembled a = assemble(T, 0.0);
    CHECK(diff(a.psi, T.psi[0]) == 0.0);
    CHECK(diff(a.g_diag, T.g_diag[0]) == 0.0);
}

TEST_CASE("early times are exactly decoupled") {
    const LatticeSpec s = testing::desk_lattice(24, 80, 1.0, 5.0);
    TowerOptions o;
    for (int n = 0; n <= s.on_index; ++n) o.block_slices.push_back(n);
    const auto T = solve_tower(s, make_switching(s, SwitchShape::bump), config(3), testing::cosine_profile(s, 0.5, 1.0),
                               testing::cosine_profile(s, 0.0, 0.2), thermal_data(s, 1.0, 0.5), o);
    const Assembled a = assemble(T, 0.3);
    const Assembled free = assemble(T, 0.0);
    for (int n = 0; n <= s.on_index; ++n) {
        const auto N = static_cast<std::size_t>(n);
        for (int k = 1; k <= 3; ++k) {
            const auto K = static_cast<std::size_t>(k);
            CHECK(T.psi[K][N].isZero(0.0));
            CHECK(T.g_diag[K][N].isZero(0.0));
            CHECK(T.phi2.orders[K][N].isZero(0.0));
            CHECK(T.blocks.at(n)[K].max_abs() == 0.0);
        }
        CHECK(a.psi[N] == free.psi[N]);
        CHECK(a.blocks.at(n).phiphi == free.blocks.at(n).phiphi);
    }
    CHECK_FALSE(T.psi[1][static_cast<std::size_t>(s.on_index + 2)].isZero(0.0));
}

TEST_CASE("residuals of the truncated assembly scale with the next power of lambda") {
    const LatticeSpec s = testing::desk_lattice(32, 120, 0.5, 8.0);
    const std::vector<double> lams{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
    TowerOptions o;
    o.probe = {lams, {1, 2}};
    const auto T = solve_tower(s, make_switching(s, SwitchShape::bump), config(2), testing::cosine_profile(s, 0.5, 1.0),
                               Vec::Zero(32), thermal_data(s, 1.0, 0.5), o);
    for (int t = 1; t <= 2; ++t) {
        std::vector<double> cl;
        for (double l : lams) cl.push_back(classical_residual(T, l, t));
        CHECK(std::abs(loglog_slope(lams, cl) - (t + 1)) <= 0.3);
        CHECK(std::abs(loglog_slope(lams, T.quantum_residual[static_cast<std::size_t>(t - 1)]) - (t + 1)) <= 0.3);
    }
    for (double d : T.ccr_drift) CHECK(d < 1e-8);
}

TEST_CASE("assembly is linear and deterministic") {
    const LatticeSpec s = testing::desk_lattice(24, 50, 0.5, 4.0);
    const auto chi = make_switching(s, SwitchShape::bump);
    const auto T1 = solve_tower(s, chi, config(2), testing::cosine_profile(s, 0.5, 1.0), Vec::Zero(24), thermal_data(s, 1.0, 0.5));
    const auto T2 = solve_tower(s, chi, config(2), testing::cosine_profile(s, 0.5, 1.0), Vec::Zero(24), thermal_data(s, 1.0, 0.5));
    for (int k = 0; k <= 2; ++k) CHECK(diff(T1.psi[static_cast<std::size_t>(k)], T2.psi[static_cast<std::size_t>(k)]) == 0.0);
    CHECK(diff(T1.phi2.orders[2], T2.phi2.orders[2]) == 0.0);
    const double lam = 0.2;
    const Assembled a = assemble(T1, lam);
    const auto N = static_cast<std::size_t>(40);
    const Vec expect = T1.psi[0][N] + lam * T1.psi[1][N] + lam * lam * T1.psi[2][N];
    CHECK((a.psi[N] - expect).cwiseAbs().maxCoeff() < 1e-15);
    const Assembled one = assemble(T1, lam, 1);
    CHECK((one.psi[N] - (T1.psi[0][N] + lam * T1.psi[1][N])).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("corrected initial data") {
    const LatticeSpec s = testing::desk_lattice(24, 20);
    const CauchyData2pt d = thermal_data(s, 1.0, 0.4);
    SUBCASE("vanishing subtraction pads with zeros") {
        const auto c = correct_data(d, std::vector<CauchyData2pt>(3, CauchyData2pt::zero(24)), 2);
        REQUIRE(c.size() == 3);
        CHECK(c[0].phiphi == d.phiphi);
        CHECK(c[1].max_abs() == 0.0);
        CHECK(c[2].max_abs() == 0.0);
    }
    SUBCASE("assembled correction equals the weighted subtraction blocks") {
        const auto H = initial_subtraction(s, 1.0, testing::cosine_profile(s, 0.5, 1.0), 3);
        const auto c = correct_data(d, H, 3);
        CHECK(c[0].phiphi == d.phiphi);
        CHECK(c[0].pipi == d.pipi);
        const double lam = 0.1;
        CauchyData2pt acc = c[0], hs = CauchyData2pt::zero(24);
        double w = lam;
        for (std::size_t k = 1; k <= 3; ++k, w *= lam) {
            acc += w * c[k];
            hs += w * H[k];
            CHECK(validate_correction(c[k], s).passes());
        }
        CHECK(((acc - d) - hs).max_abs() < 1e-12);
    }
    SUBCASE("missing subtraction orders are rejected") {
        CHECK(testing::throws_kind([&] { correct_data(d, {d}, 2); }, ErrorKind::validation));
    }
}

TEST_CASE("restart data") {
    const LatticeSpec s = testing::desk_lattice(24, 80, 1.5, 5.0);
    const auto chi = make_switching(s, SwitchShape::bump);
    TowerOptions o;
    o.block_slices = {3, 40};
    const auto T = solve_tower(s, chi, config(2), testing::cosine_profile(s, 0.5, 1.0), Vec::Zero(24), thermal_data(s, 1.0, 0.5), o);
    SUBCASE("before the switch the data are free") {
        const RestartData r = restart(T, 3);
        CHECK(r.init.blocks[0].phiphi == T.blocks.at(3)[0].phiphi);
        for (std::size_t k = 1; k <= 2; ++k) {
            CHECK(r.init.varsigma[k].isZero(0.0));
            CHECK(r.init.varpi[k].isZero(0.0));
            CHECK(r.init.blocks[k].max_abs() == 0.0);
        }
        CHECK(r.tail.n_t == s.n_t - 3);
    }
    SUBCASE("higher-order blocks carry no commutator") {
        const RestartData r = restart(T, 40);
        CHECK(validate(r.init.blocks[0], s).passes());
        for (std::size_t k = 1; k <= 2; ++k) {
            CHECK(r.init.blocks[k].max_abs() > 0.0);
            CHECK(validate_correction(r.init.blocks[k], s, 1e-8).passes());
        }
    }
    SUBCASE("restart outside the run or without blocks is rejected") {
        CHECK(testing::throws_kind([&] { restart(T, 0); }, ErrorKind::validation));
        CHECK(testing::throws_kind([&] { restart(T, s.n_t); }, ErrorKind::validation));
        CHECK(testing::throws_kind([&] { restart(T, 10); }, ErrorKind::validation));
    }
}

TEST_CASE("split run with a constant continuation equals the unsplit run") {
    const LatticeSpec s = testing::desk_lattice(24, 80, 0.5, 6.0);
    const int at = 30;
    const auto chi = splice_constant_one(make_switching(s, SwitchShape::bump), at);
    const Vec vs = testing::cosine_profile(s, 0.5, 1.0);
    const CauchyData2pt d = thermal_data(s, 1.0, 0.5);
    const auto full = solve_tower(s, chi, config(2), vs, Vec::Zero(24), d);
    TowerOptions o;
    o.block_slices = {at};
    const auto head = solve_tower(head_lattice(s, at + 1), head_switching(chi, at + 1), config(2), vs, Vec::Zero(24), d, o);
    RestartData r = restart(head, at);
    r.tail = tail_lattice(s, at);
    const auto tail = solve_tower(r.tail, make_switching(r.tail, SwitchShape::constant_one), config(2), r.init);
    double worst = 0.0, scale = 0.0;
    for (int k = 0; k <= 2; ++k)
        for (int n = 0; n <= r.tail.n_t; ++n) {
            const auto K = static_cast<std::size_t>(k);
            worst = std::max(worst, (tail.psi[K][static_cast<std::size_t>(n)] - full.psi[K][static_cast<std::size_t>(n + at)]).cwiseAbs().maxCoeff());
            worst = std::max(worst, (tail.phi2.orders[K][static_cast<std::size_t>(n)] - full.phi2.orders[K][static_cast<std::size_t>(n + at)]).cwiseAbs().maxCoeff());
            scale = std::max(scale, full.psi[K][static_cast<std::size_t>(n + at)].cwiseAbs().maxCoeff());
        }
    CHECK(scale > 0.0);
    CHECK(worst < 1e-12 * scale);
}

TEST_CASE("configuration checks") {
    CouplingConfig c;
    c.order = 5;
    CHECK(testing::throws_kind([&] { check_config(c); }, ErrorKind::validation));
    c.order = 2;
    c.m = 0.0;
    CHECK(testing::throws_kind([&] { check_config(c); }, ErrorKind::validation));
}

}
