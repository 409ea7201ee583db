#include "semicl/lattice.hpp"

#include <cmath>
#include <sstream>

#include "semicl/errors.hpp"

namespace semicl {

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

LatticeSpec make_lattice(int n_x, double L, double dt, int n_t, double t_i, double t_on, double t_f) {
    if (n_x < 4) fail_validation("grid_too_small", "n_x must be at least 4, got " + std::to_string(n_x));
    if (!(L > 0.0)) fail_validation("bad_circumference", "circumference must be positive");
    if (!(dt > 0.0)) fail_validation("bad_dt", "dt must be positive");
    if (n_t < 1) fail_validation("bad_n_t", "n_t must be positive");
    const double dx = L / n_x;
    if (dt > dx * (1.0 + 1e-12))
        fail_validation("cfl_violation", "dt/dx = " + num(dt / dx) + " exceeds 1");
    if (!(t_on < t_f)) fail_validation("empty_window", "t_on must be smaller than t_f");
    if (!(t_i < t_on)) fail_validation("bad_window", "t_i must be smaller than t_on");

    LatticeSpec s;
    s.n_x = n_x;
    s.L = L;
    s.dt = dt;
    s.n_t = n_t;
    s.t_i = t_i;
    s.t_on_requested = t_on;
    s.t_f_requested = t_f;
    s.on_index = static_cast<int>(std::lround((t_on - t_i) / dt));
    s.f_index = static_cast<int>(std::lround((t_f - t_i) / dt));
    if (s.f_index > n_t)
        fail_validation("window_outside_run", "t_f = " + num(t_f) + " lies beyond the last slice");
    if (s.on_index < 1 || s.f_index <= s.on_index + 1)
        fail_validation("empty_window", "switching window has no interior grid point after snapping");
    s.t_on = s.time(s.on_index);
    s.t_f = s.time(s.f_index);
    return s;
}

LatticeSpec tail_lattice(const LatticeSpec& spec, int s) {
    if (s < 0 || s >= spec.n_t) fail_validation("bad_restart_index", "restart slice outside run");
    LatticeSpec t = spec;
    t.t_i = spec.time(s);
    t.n_t = spec.n_t - s;
    t.on_index = std::max(1, spec.on_index - s);
    t.f_index = std::max(t.on_index + 2, spec.f_index - s);
    if (t.f_index > t.n_t) {
        t.on_index = 0;
        t.f_index = t.n_t;
    }
    t.t_on = t.time(t.on_index);
    t.t_f = t.time(t.f_index);
    t.t_on_requested = t.t_on;
    t.t_f_requested = t.t_f;
    return t;
}

LatticeSpec head_lattice(const LatticeSpec& spec, int n_t) {
    if (n_t < 1 || n_t > spec.n_t) fail_validation("bad_head_length", "head run must keep 1..n_t steps");
    LatticeSpec h = spec;
    h.n_t = n_t;
    return h;
}

SwitchingFunction head_switching(const SwitchingFunction& chi, int n_t) {
    SwitchingFunction out;
    out.values.assign(chi.values.begin(), chi.values.begin() + n_t + 1);
    return out;
}

double bump_profile(double t, double a, double b) {
    const double s = 2.0 * (t - a) / (b - a) - 1.0;
    if (!(std::abs(s) < 1.0)) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

SwitchingFunction make_switching(const LatticeSpec& spec, SwitchShape shape) {
    SwitchingFunction chi;
    chi.values.assign(static_cast<std::size_t>(spec.n_slices()), 0.0);
    switch (shape) {
    case SwitchShape::zero:
        break;
    case SwitchShape::constant_one:
        for (auto& v : chi.values) v = 1.0;
        break;
    case SwitchShape::bump:
        for (int n = spec.on_index + 1; n < spec.f_index; ++n)
            chi.values[static_cast<std::size_t>(n)] = bump_profile(spec.time(n), spec.t_on, spec.t_f);
        break;
    }
    return chi;
}

SwitchingFunction splice_constant_one(const SwitchingFunction& chi, int s) {
    SwitchingFunction out = chi;
    for (int n = s; n < out.size(); ++n) out.values[static_cast<std::size_t>(n)] = 1.0;
    return out;
}

FieldHistory zero_history(const LatticeSpec& spec) {
    return FieldHistory(static_cast<std::size_t>(spec.n_slices()), Vec::Zero(spec.n_x));
}

Vec laplacian(const Vec& u, double dx) {
    const Eigen::Index n = u.size();
    Vec out(n);
    const double inv = 1.0 / (dx * dx);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index ip = (i + 1 == n) ? 0 : i + 1;
        const Eigen::Index im = (i == 0) ? n - 1 : i - 1;
        out[i] = (u[ip] - 2.0 * u[i] + u[im]) * inv;
    }
    return out;
}

Vec dalembert(const LatticeSpec& spec, const Vec& prev, const Vec& cur, const Vec& next, double mu,
              const Vec& V) {
    const Eigen::Index n = spec.n_x;
    if (prev.size() != n || cur.size() != n || next.size() != n || (V.size() != 0 && V.size() != n))
        fail_validation("slice_length", "slice length does not match n_x");
    Vec r = -(next - 2.0 * cur + prev) / (spec.dt * spec.dt) + laplacian(cur, spec.dx()) - mu * mu * cur;
    if (V.size() != 0) r -= V.cwiseProduct(cur);
    return r;
}

Vec dalembert(const LatticeSpec& spec, const FieldHistory& u, int n, double mu, const Vec& V) {
    if (n < 1 || n + 1 >= static_cast<int>(u.size()))
        fail_validation("slice_index", "dalembert needs slices n-1, n, n+1");
    const auto k = static_cast<std::size_t>(n);
    return dalembert(spec, u[k - 1], u[k], u[k + 1], mu, V);
}

}  // namespace semicl
