#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "semicl/twopoint.hpp"

using namespace semicl;

TEST_SUITE("twopoint") {

TEST_CASE("vacuum data passes the commutation checks and is homogeneous") {
    const LatticeSpec s = testing::desk_lattice();
    const CauchyData2pt v = vacuum_data(s, 1.0);
    const CcrReport r = validate(v, s);
    CHECK(r.passes());
    CHECK(r.max() < 1e-12);
    const Vec d = v.phiphi.diagonal().real();
    CHECK((d.array() - d[0]).abs().maxCoeff() < 1e-15);
}

TEST_CASE("missing mixed blocks violate the first relation by exactly one") {
    const LatticeSpec s = testing::desk_lattice(32, 10);
    CauchyData2pt v = vacuum_data(s, 1.0);
    v.phipi.setZero();
    v.piphi.setZero();
    const CcrReport r = validate(v, s);
    CHECK_FALSE(r.passes());
    CHECK(r.ccr_i == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("asymmetric field block fails the symmetry check") {
    const LatticeSpec s = testing::desk_lattice(32, 10);
    CauchyData2pt v = vacuum_data(s, 1.0);
    v.phiphi(0, 1) += 0.1;
    const CcrReport r = validate(v, s);
    CHECK_FALSE(r.passes());
    CHECK(r.sym_phiphi > 1e-3);
}

TEST_CASE("size mismatch is rejected") {
    const LatticeSpec s = testing::desk_lattice(32, 10);
    CHECK(testing::throws_kind([&] { validate(CauchyData2pt::zero(16), s); }, ErrorKind::validation));
}

TEST_CASE("vacuum kernel approaches the continuum Bessel kernel") {
    std::vector<double> errs;
    for (int n_x : {200, 400, 800}) {
        const double L = 40.0, dx = L / n_x;
        const LatticeSpec s = make_lattice(n_x, L, 0.5 * dx, 8, 0.0, dx, 3 * dx);
        const CauchyData2pt v = vacuum_data(s, 1.0);
        const int sep = n_x / 40;
        errs.push_back(std::abs(v.phiphi(0, sep).real() - std::cyl_bessel_k(0.0, 1.0) / (2.0 * std::numbers::pi)));
    }
    CHECK(errs.back() < 1e-4);
    CHECK(errs[0] / errs[2] > 10.0);
}

TEST_CASE("zero temperature reproduces the vacuum bitwise") {
    const LatticeSpec s = testing::desk_lattice();
    const CauchyData2pt v = vacuum_data(s, 1.3), t = thermal_data(s, 1.3, 0.0);
    CHECK(v.phiphi == t.phiphi);
    CHECK(v.phipi == t.phipi);
    CHECK(v.piphi == t.piphi);
    CHECK(v.pipi == t.pipi);
}

TEST_CASE("thermal data passes validation and differs by a smooth kernel") {
    const LatticeSpec s = testing::desk_lattice();
    const CauchyData2pt t = thermal_data(s, 1.0, 0.5);
    CHECK(validate(t, s).passes());
    const Vec col = (t.phiphi - vacuum_data(s, 1.0).phiphi).col(0).real();
    // Fourier coefficients of the difference
    std::vector<double> c(33);
    for (int p = 0; p <= 32; ++p) {
        double acc = 0.0;
        for (int j = 0; j < 64; ++j) acc += col[j] * std::cos(2.0 * std::numbers::pi * p * j / 64);
        c[static_cast<std::size_t>(p)] = std::abs(acc);
    }
    for (int p = 0; p <= 32; ++p) {
        const double expect = 64 * occupation(s, 1.0, 0.5, p) / (std::sqrt(stencil_omega2(s, 1.0, p)) * s.L);
        CHECK(c[static_cast<std::size_t>(p)] == doctest::Approx(expect).epsilon(1e-9));
    }
    CHECK(c[32] < 1e-6 * c[0]);
}

TEST_CASE("invalid masses and temperatures are rejected") {
    const LatticeSpec s = testing::desk_lattice(16, 10);
    CHECK(testing::throws_kind([&] { vacuum_data(s, 0.0); }, ErrorKind::validation));
    CHECK(testing::throws_kind([&] { thermal_data(s, 1.0, -0.1); }, ErrorKind::validation));
}

TEST_CASE("free vacuum evolution is stationary and matches the mode sum") {
    const LatticeSpec s = testing::desk_lattice();
    const CauchyData2pt v = vacuum_data(s, 1.0);
    const CovarianceHistory h = evolve_covariance(v, s, 1.0, {}, 50);
    for (const auto& b : h.blocks) CHECK((b - v).max_abs() / v.max_abs() < 1e-12);
    const CauchyData2pt ms = mode_sum_covariance(v, s, 1.0, s.n_t);
    CHECK((h.blocks.back() - ms).max_abs() / ms.max_abs() < 1e-12);
}

TEST_CASE("thermal evolution under a different mass matches the mode sum") {
    const LatticeSpec s = testing::desk_lattice();
    const CauchyData2pt t = thermal_data(s, 1.0, 0.7);
    const CovarianceHistory h = evolve_covariance(t, s, 0.8, {}, 200);
    const CauchyData2pt ms = mode_sum_covariance(t, s, 0.8, 200);
    CHECK((h.blocks.back() - ms).max_abs() / ms.max_abs() < 1e-10);
}

TEST_CASE("commutation relations survive a space-time dependent potential") {
    const LatticeSpec s = testing::desk_lattice(32, 150, 0.5, 5.0);
    PotentialHistory V;
    for (int n = 0; n <= s.n_t; ++n) V.slices.push_back(testing::cosine_profile(s, 0.3, 0.5 * std::sin(0.1 * n), 2));
    const CovarianceHistory h = evolve_covariance(thermal_data(s, 1.0, 0.4), s, 1.0, V, 10);
    double worst = 0.0;
    for (double d : h.ccr_drift) worst = std::max(worst, d);
    CHECK(worst < 1e-8);
}

TEST_CASE("serial and parallel evolution are bitwise identical") {
    const LatticeSpec s = testing::desk_lattice(24, 40);
    PotentialHistory V;
    for (int n = 0; n <= s.n_t; ++n) V.slices.push_back(testing::cosine_profile(s, 0.1, 0.2));
    const auto a = evolve_covariance(thermal_data(s, 1.0, 0.3), s, 1.0, V, 40, Exec::serial);
    const auto b = evolve_covariance(thermal_data(s, 1.0, 0.3), s, 1.0, V, 40, Exec::parallel);
    CHECK((a.blocks.back() - b.blocks.back()).max_abs() == 0.0);
}

TEST_CASE("reconstruction agrees with the data, with evolution and with the commutator") {
    const double L = 2.0 * std::numbers::pi;
    const LatticeSpec s = make_lattice(16, L, 0.9 * L / 16, 30, 0.0, 0.5, 1.5);
    const CauchyData2pt t = thermal_data(s, 1.0, 0.7);
    PotentialHistory V;
    for (int n = 0; n <= s.n_t; ++n) V.slices.push_back(testing::cosine_profile(s, 0.2, 0.3 * std::cos(0.2 * n)));
    const auto K = std::make_shared<SurfaceKernel>(build_surface_kernel(s, 1.0, V, 0));
    const WightmanEval W = reconstruct(t, K);
    const CovarianceHistory ev = evolve_covariance(t, s, 1.0, V, 1);
    const GreenKernel R = build_retarded(s, 1.0, V);
    std::mt19937 g(5);
    std::uniform_int_distribution<int> site(0, 15), slice(0, s.n_t);
    double e0 = 0.0, e1 = 0.0, ec = 0.0;
    for (int x = 0; x < 16; ++x)
        for (int y = 0; y < 16; ++y) e0 = std::max(e0, std::abs(W({0, x}, {0, y}) - t.phiphi(x, y)));
    for (int i = 0; i < 100; ++i) {
        const int n = slice(g), x = site(g), y = site(g);
        e1 = std::max(e1, std::abs(W({n, x}, {n, y}) - ev.blocks[static_cast<std::size_t>(n)].phiphi(x, y)));
        const GridPoint a{slice(g), site(g)}, b{slice(g), site(g)};
        ec = std::max(ec, std::abs(W(a, b) - W(b, a) - cplx(0.0, commutator_value(R, a, b))));
    }
    CHECK(e0 < 1e-8);
    CHECK(e1 < 1e-6);
    CHECK(ec < 1e-8);
}

TEST_CASE("antisymmetric part is state independent") {
    const double L = 2.0 * std::numbers::pi;
    const LatticeSpec s = make_lattice(16, L, 0.9 * L / 16, 30, 0.0, 0.5, 1.5);
    const auto K = std::make_shared<SurfaceKernel>(build_surface_kernel(s, 1.0, {}, 0));
    const WightmanEval a = reconstruct(vacuum_data(s, 1.0), K), b = reconstruct(thermal_data(s, 1.0, 0.9), K);
    double worst = 0.0;
    for (int n : {3, 17, 30})
        for (int m : {0, 9, 22})
            for (int x = 0; x < 16; x += 3)
                for (int y = 0; y < 16; y += 5) {
                    const GridPoint p{n, x}, q{m, y};
                    worst = std::max(worst, std::abs((a(p, q) - a(q, p)) - (b(p, q) - b(q, p))));
                }
    CHECK(worst < 1e-10);
}

}
