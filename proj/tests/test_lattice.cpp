#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "semicl/errors.hpp"
#include "semicl/lattice.hpp"

using namespace semicl;

TEST_SUITE("lattice") {

TEST_CASE("desk lattice is valid and snaps the switching window") {
    const LatticeSpec s = testing::desk_lattice();
    CHECK(s.n_x == 64);
    CHECK(s.dx() == doctest::Approx(2.0 * std::numbers::pi / 64));
    CHECK(s.courant() == doctest::Approx(0.9));
    CHECK(s.t_on == doctest::Approx(s.on_index * s.dt));
    CHECK(s.t_f == doctest::Approx(s.f_index * s.dt));
    CHECK(std::abs(s.t_on - 0.5) <= 0.5 * s.dt);
    CHECK(std::abs(s.t_f - 1.5) <= 0.5 * s.dt);
    CHECK(s.t_on_requested == 0.5);
}

TEST_CASE("invalid lattices are rejected") {
    const double L = 2.0 * std::numbers::pi, dx = L / 64;
    CHECK(testing::throws_kind([&] { make_lattice(64, L, 1.1 * dx, 200, 0, 0.5, 1.5); }, ErrorKind::validation));
    CHECK(testing::throws_kind([&] { make_lattice(64, L, 0.9 * dx, 200, 0, 1.0, 1.0); }, ErrorKind::validation));
    CHECK(testing::throws_kind([&] { make_lattice(3, L, 0.9 * L / 3, 200, 0, 0.5, 1.5); }, ErrorKind::validation));
    CHECK_NOTHROW(make_lattice(64, L, dx, 200, 0, 0.5, 1.5));
}

TEST_CASE("bump vanishes at the window edges and peaks at one") {
    const LatticeSpec s = testing::desk_lattice(64, 200, 0.5, 1.5);
    const SwitchingFunction chi = make_switching(s, SwitchShape::bump);
    REQUIRE(chi.size() == s.n_slices());
    for (int n = 0; n <= s.on_index; ++n) CHECK(chi[n] == 0.0);
    for (int n = s.f_index; n <= s.n_t; ++n) CHECK(chi[n] == 0.0);
    for (int n = s.on_index + 1; n < s.f_index; ++n) CHECK(chi[n] > 0.0);
    CHECK(bump_profile(0.5, 0.5, 1.5) == 0.0);
    CHECK(bump_profile(1.0, 0.5, 1.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(bump_profile(1.6, 0.5, 1.5) == 0.0);
}

TEST_CASE("constant and zero switching") {
    const LatticeSpec s = testing::desk_lattice();
    const auto one = make_switching(s, SwitchShape::constant_one);
    const auto zero = make_switching(s, SwitchShape::zero);
    for (int n = 0; n <= s.n_t; ++n) {
        CHECK(one[n] == 1.0);
        CHECK(zero[n] == 0.0);
    }
}

TEST_CASE("splice, head and tail") {
    const LatticeSpec s = testing::desk_lattice(32, 100, 0.5, 3.0);
    const auto chi = make_switching(s, SwitchShape::bump);
    const auto sp = splice_constant_one(chi, 20);
    for (int n = 0; n < 20; ++n) CHECK(sp[n] == chi[n]);
    for (int n = 20; n <= s.n_t; ++n) CHECK(sp[n] == 1.0);
    const LatticeSpec h = head_lattice(s, 21);
    CHECK(h.n_t == 21);
    CHECK(head_switching(sp, 21).size() == 22);
    const LatticeSpec t = tail_lattice(s, 20);
    CHECK(t.n_t == 80);
    CHECK(t.t_i == doctest::Approx(s.time(20)));
}

TEST_CASE("dalembert of zero and of a constant") {
    const LatticeSpec s = testing::desk_lattice(16, 10);
    FieldHistory z(3, Vec::Zero(16));
    CHECK(dalembert(s, z, 1, 1.0).cwiseAbs().maxCoeff() == 0.0);
    FieldHistory one(3, Vec::Ones(16));
    const Vec r = dalembert(s, one, 1, 1.0);
    for (int j = 0; j < 16; ++j) CHECK(r[j] == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("dalembert of a plane wave converges at second order") {
    std::vector<double> errs;
    for (int n_x : {16, 32, 64, 128}) {
        const double L = 2.0 * std::numbers::pi, dx = L / n_x;
        const LatticeSpec s = make_lattice(n_x, L, 0.5 * dx, 8, 0.0, dx, 3.0 * dx);
        const double k = 2.0 * std::numbers::pi / L, w = k;
        FieldHistory u;
        for (int n = 0; n < 3; ++n) {
            Vec v(n_x);
            for (int j = 0; j < n_x; ++j) v[j] = std::cos(k * j * dx - w * s.time(n));
            u.push_back(v);
        }
        errs.push_back(dalembert(s, u, 1, 0.0).cwiseAbs().maxCoeff());
    }
    for (std::size_t i = 1; i < errs.size(); ++i) CHECK(std::log2(errs[i - 1] / errs[i]) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("dalembert rejects mismatched slices") {
    const LatticeSpec s = testing::desk_lattice(16, 10);
    CHECK_THROWS(dalembert(s, Vec::Zero(16), Vec::Zero(15), Vec::Zero(16), 1.0, Vec()));
}

}
