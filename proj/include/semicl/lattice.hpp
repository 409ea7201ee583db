#pragma once

#include "semicl/types.hpp"

namespace semicl {

/// Flat (1+1) cylinder: n_x sites on a circle of length L, n_t leapfrog steps.
struct LatticeSpec {
    int n_x = 0;
    double L = 0.0;
    double dt = 0.0;
    int n_t = 0;
    double t_i = 0.0;
    double t_on = 0.0;  ///< snapped to the grid
    double t_f = 0.0;   ///< snapped to the grid
    int on_index = 0;
    int f_index = 0;
    double t_on_requested = 0.0;
    double t_f_requested = 0.0;

    double dx() const { return L / n_x; }
    double time(int n) const { return t_i + n * dt; }
    int n_slices() const { return n_t + 1; }
    double courant() const { return dt / dx(); }
};

LatticeSpec make_lattice(int n_x, double L, double dt, int n_t, double t_i, double t_on, double t_f);

/// Copy of `spec` restarted at slice `s`, keeping the remaining steps.
LatticeSpec tail_lattice(const LatticeSpec& spec, int s);

/// First n_t steps of `spec`; the switching window is kept as is.
LatticeSpec head_lattice(const LatticeSpec& spec, int n_t);

enum class SwitchShape { bump, constant_one, zero };

struct SwitchingFunction {
    std::vector<double> values;  ///< one entry per time slice

    double operator[](int n) const { return values[static_cast<std::size_t>(n)]; }
    int size() const { return static_cast<int>(values.size()); }
};

/// Unit-peak bump exp(1 - 1/(1 - s^2)), s = 2(t - a)/(b - a) - 1, zero off (a, b).
double bump_profile(double t, double a, double b);

SwitchingFunction make_switching(const LatticeSpec& spec, SwitchShape shape);

/// First n_t + 1 entries.
SwitchingFunction head_switching(const SwitchingFunction& chi, int n_t);

/// chi for n < s, one from s on.
SwitchingFunction splice_constant_one(const SwitchingFunction& chi, int s);

struct FieldSlice {
    Vec values;
    int time_index = 0;
};

FieldHistory zero_history(const LatticeSpec& spec);

/// Periodic second difference along a slice.
Vec laplacian(const Vec& u, double dx);

/// Centered (box - mu^2 - V) u at the middle slice, box = -d_t^2 + d_x^2.
Vec dalembert(const LatticeSpec& spec, const Vec& prev, const Vec& cur, const Vec& next, double mu,
              const Vec& V);

/// Same at slice n of a history (1 <= n < n_t); empty V means zero.
Vec dalembert(const LatticeSpec& spec, const FieldHistory& u, int n, double mu, const Vec& V = Vec());

}  // namespace semicl
