#pragma once

#include <cmath>
#include <numbers>

#include "semicl/errors.hpp"
#include "semicl/lattice.hpp"

namespace testing {

inline semicl::LatticeSpec desk_lattice(int n_x = 64, int n_t = 200, double t_on = 0.5, double t_f = 1.5) {
    const double L = 2.0 * std::numbers::pi;
    return semicl::make_lattice(n_x, L, 0.9 * L / n_x, n_t, 0.0, t_on, t_f);
}

inline semicl::Vec cosine_profile(const semicl::LatticeSpec& spec, double offset, double amp, int mode = 1) {
    semicl::Vec v(spec.n_x);
    for (int j = 0; j < spec.n_x; ++j)
        v[j] = offset + amp * std::cos(2.0 * std::numbers::pi * mode * j / spec.n_x);
    return v;
}

template <class F>
bool throws_kind(F&& f, semicl::ErrorKind kind) {
    try {
        f();
    } catch (const semicl::Error& e) {
        return e.kind() == kind;
    }
    return false;
}

}  // namespace testing
