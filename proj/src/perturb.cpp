#include "semicl/perturb.hpp"

#include <cmath>
#include <set>

#include "semicl/errors.hpp"

namespace semicl {

void check_config(const CouplingConfig& c) {
    if (c.order < 0) fail_validation("bad_order", "order must be nonnegative");
    if (c.order > c.max_order) fail_validation("order_too_high", "order exceeds the configured maximum");
    if (!(c.M > 0.0)) fail_validation("bad_mass", "classical mass must be positive");
    if (!(c.m > 0.0)) fail_validation("bad_mass", "quantum mass must be positive");
    if (!(c.ell > 0.0)) fail_validation("bad_scale", "renormalization length must be positive");
}

namespace {

// F = Lap psi - M^2 psi - J
Vec force(const LatticeSpec& spec, double M2, const Vec& cur, const Vec& J) {
    Vec f = laplacian(cur, spec.dx()) - M2 * cur;
    if (J.size() != 0) f -= J;
    return f;
}

Vec first_step(const LatticeSpec& spec, double M2, const Vec& psi0, const Vec& varpi, const Vec& J) {
    return psi0 + spec.dt * varpi + 0.5 * spec.dt * spec.dt * force(spec, M2, psi0, J);
}

Vec leap_step(const LatticeSpec& spec, double M2, const Vec& cur, const Vec& prev, const Vec& J) {
    return 2.0 * cur - prev + spec.dt * spec.dt * force(spec, M2, cur, J);
}

Vec or_zero(const std::vector<Vec>& v, std::size_t k, int n) {
    if (k < v.size() && v[k].size() != 0) {
        if (v[k].size() != n) fail_validation("size_mismatch", "initial slice must have n_x entries");
        return v[k];
    }
    return Vec::Zero(n);
}

CauchyData2pt combine(const std::vector<CauchyData2pt>& b, double lambda, int t) {
    CauchyData2pt acc = b[0];
    double w = lambda;
    for (int k = 1; k <= t; ++k, w *= lambda) acc += w * b[static_cast<std::size_t>(k)];
    return acc;
}

Vec combine(const std::vector<Vec>& V, double lambda, int t, int n) {
    Vec acc = Vec::Zero(n);
    double w = lambda;
    for (int q = 1; q <= t; ++q, w *= lambda) acc += w * V[static_cast<std::size_t>(q)];
    return acc;
}

}  // namespace

FieldHistory classical_solve(const LatticeSpec& spec, double M, const FieldHistory& J, const Vec& varsigma,
                             const Vec& varpi) {
    if (varsigma.size() != spec.n_x || varpi.size() != spec.n_x)
        fail_validation("size_mismatch", "initial slices must have n_x entries");
    if (!J.empty() && static_cast<int>(J.size()) != spec.n_slices())
        fail_validation("size_mismatch", "source history must cover every slice");
    const double M2 = M * M;
    auto Jn = [&](int n) { return J.empty() ? Vec() : J[static_cast<std::size_t>(n)]; };
    FieldHistory psi(static_cast<std::size_t>(spec.n_slices()));
    psi[0] = varsigma;
    psi[1] = first_step(spec, M2, varsigma, varpi, Jn(0));
    for (int n = 1; n < spec.n_t; ++n)
        psi[static_cast<std::size_t>(n + 1)] =
            leap_step(spec, M2, psi[static_cast<std::size_t>(n)], psi[static_cast<std::size_t>(n - 1)], Jn(n));
    if (!psi.back().allFinite()) fail_instability("blow_up", "classical field diverged");
    return psi;
}

SolutionTower solve_tower(const LatticeSpec& spec, const SwitchingFunction& chi, const CouplingConfig& config,
                          const TowerInitialData& init, const TowerOptions& options) {
    check_config(config);
    if (chi.size() != spec.n_slices()) fail_validation("size_mismatch", "switching function must cover every slice");
    const int K = config.order;
    const int nx = spec.n_x;
    const double M2 = config.M * config.M;
    const auto Ks = static_cast<std::size_t>(K + 1);

    std::vector<CauchyData2pt> blocks(Ks, CauchyData2pt::zero(nx));
    if (init.blocks.empty()) fail_validation("missing_data", "order-0 two-point data required");
    for (std::size_t k = 0; k < Ks && k < init.blocks.size(); ++k) blocks[k] = init.blocks[k];
    const CcrReport rep = validate(blocks[0], spec);
    if (!rep.passes()) fail_validation("ccr_violation", "initial data violate the commutation relations");

    SolutionTower T;
    T.spec = spec;
    T.chi = chi;
    T.config = config;
    T.probe = options.probe;
    T.psi.assign(Ks, FieldHistory(static_cast<std::size_t>(spec.n_slices())));
    T.g_diag = T.psi;
    T.h_diag = T.psi;
    T.phi2.orders = T.psi;
    std::vector<Vec> varpi(Ks);
    for (std::size_t k = 0; k < Ks; ++k) {
        T.psi[k][0] = or_zero(init.varsigma, k, nx);
        varpi[k] = or_zero(init.varpi, k, nx);
    }
    for (int t : options.probe.truncations)
        if (t < 0 || t > K) fail_validation("bad_probe", "probe truncation outside the tower order");
    T.quantum_residual.assign(options.probe.truncations.size(),
                              std::vector<double>(options.probe.lambdas.size(), 0.0));

    const InstantaneousVacuum iv(spec, config.m);
    CovarianceStepper st(spec, config.m, blocks, options.exec);
    const CauchyData2pt vac = vacuum_data(spec, config.m);
    const bool pinned = blocks[0].phiphi == vac.phiphi && blocks[0].phipi == vac.phipi &&
                        blocks[0].piphi == vac.piphi && blocks[0].pipi == vac.pipi;
    const std::set<int> keep(options.block_slices.begin(), options.block_slices.end());
    const double m2 = config.m * config.m;
    const double inv_dt2 = 1.0 / (spec.dt * spec.dt);

    std::vector<Vec> V = tower_potentials(chi, T.psi, 0, K);
    for (int n = 0;; ++n) {
        const auto N = static_cast<std::size_t>(n);
        const std::vector<Vec> h = iv.diagonal_series(V, K);
        for (std::size_t k = 0; k < Ks; ++k) {
            T.g_diag[k][N] = st.diagonal(static_cast<int>(k));
            T.h_diag[k][N] = h[k];
            Vec p = T.g_diag[k][N] - h[k];
            if (k == 0)
                p.array() += config.beta1 * m2;
            else
                p += config.beta2 * chi[n] * T.psi[k - 1][N];
            T.phi2.orders[k][N] = std::move(p);
        }
        T.ccr_drift.push_back(st.ccr_drift());
        if (keep.count(n)) T.blocks[n] = st.blocks();
        if (n == spec.n_t) break;

        for (std::size_t k = 0; k < Ks; ++k) {
            const Vec J = k == 0 ? Vec() : Vec(chi[n] * T.phi2.orders[k - 1][N]);
            T.psi[k][N + 1] = n == 0 ? first_step(spec, M2, T.psi[k][0], varpi[k], J)
                                     : leap_step(spec, M2, T.psi[k][N], T.psi[k][N - 1], J);
        }
        const std::vector<Vec> Vn = V;
        V = tower_potentials(chi, T.psi, n + 1, K);

        std::vector<CauchyData2pt> pre;
        if (!T.quantum_residual.empty()) {
            const auto cur = st.blocks();
            for (int t : options.probe.truncations)
                for (double lam : options.probe.lambdas) pre.push_back(combine(cur, lam, t));
        }
        st.step(Vec(), Vec(), Vn, V);
        if (pinned) st.set_block(0, vac);
        if (!pre.empty()) {
            const auto next = st.blocks();
            std::size_t i = 0;
            for (std::size_t a = 0; a < options.probe.truncations.size(); ++a) {
                const int t = options.probe.truncations[a];
                for (std::size_t b = 0; b < options.probe.lambdas.size(); ++b, ++i) {
                    const double lam = options.probe.lambdas[b];
                    CovarianceStepper one(spec, config.m, {pre[i]}, options.exec);
                    one.step(combine(Vn, lam, t, nx), combine(V, lam, t, nx), {}, {});
                    const double d = (combine(next, lam, t) - one.block(0)).max_abs() * inv_dt2;
                    T.quantum_residual[a][b] = std::max(T.quantum_residual[a][b], d);
                }
            }
        }
    }
    for (const auto& p : T.psi)
        if (!p.back().allFinite()) fail_instability("blow_up", "classical field diverged");
    for (const auto& g : T.g_diag)
        if (!g.back().allFinite()) fail_instability("blow_up", "covariance evolution diverged");
    return T;
}

SolutionTower solve_tower(const LatticeSpec& spec, const SwitchingFunction& chi, const CouplingConfig& config,
                          const Vec& varsigma, const Vec& varpi, const CauchyData2pt& data,
                          const TowerOptions& options) {
    TowerInitialData init;
    init.varsigma = {varsigma};
    init.varpi = {varpi};
    init.blocks = {data};
    return solve_tower(spec, chi, config, init, options);
}

Assembled assemble(const SolutionTower& tower, double lambda, int truncate) {
    const int t = truncate < 0 ? tower.order() : std::min(truncate, tower.order());
    Assembled out;
    const std::size_t ns = tower.psi[0].size();
    out.psi.resize(ns);
    out.g_diag.resize(ns);
    for (std::size_t n = 0; n < ns; ++n) {
        Vec p = tower.psi[0][n];
        Vec g = tower.g_diag[0][n];
        double w = lambda;
        for (int k = 1; k <= t; ++k, w *= lambda) {
            p += w * tower.psi[static_cast<std::size_t>(k)][n];
            g += w * tower.g_diag[static_cast<std::size_t>(k)][n];
        }
        out.psi[n] = std::move(p);
        out.g_diag[n] = std::move(g);
    }
    for (const auto& [s, b] : tower.blocks) out.blocks[s] = combine(b, lambda, t);
    return out;
}

std::vector<CauchyData2pt> correct_data(const CauchyData2pt& data, const std::vector<CauchyData2pt>& H, int n) {
    if (n < 0) fail_validation("bad_order", "order must be nonnegative");
    if (static_cast<int>(H.size()) < n + 1) fail_validation("missing_subtraction", "subtraction blocks missing an order");
    std::vector<CauchyData2pt> out{data};
    for (int k = 1; k <= n; ++k) {
        const CauchyData2pt& h = H[static_cast<std::size_t>(k)];
        if (h.size() != data.size()) fail_validation("size_mismatch", "subtraction blocks differ in size");
        out.push_back(h);
    }
    return out;
}

std::vector<CauchyData2pt> initial_subtraction(const LatticeSpec& spec, double m, const Vec& varsigma, int n) {
    const InstantaneousVacuum iv(spec, m);
    std::vector<Vec> V(static_cast<std::size_t>(n + 1));
    if (n >= 1) V[1] = 2.0 * varsigma;
    return iv.series(V, n);
}

RestartData restart(const SolutionTower& tower, int s) {
    const LatticeSpec& spec = tower.spec;
    if (s < 1 || s >= spec.n_t) fail_validation("restart_outside", "restart slice outside the run window");
    const auto it = tower.blocks.find(s);
    if (it == tower.blocks.end()) fail_validation("missing_blocks", "tower keeps no blocks on the restart slice");
    RestartData r;
    r.slice = s;
    r.tail = tail_lattice(spec, s);
    const auto S = static_cast<std::size_t>(s);
    for (const auto& p : tower.psi) {
        r.init.varsigma.push_back(p[S]);
        r.init.varpi.push_back((p[S + 1] - p[S - 1]) / (2.0 * spec.dt));
    }
    r.init.blocks = it->second;
    return r;
}

double classical_residual(const SolutionTower& tower, double lambda, int truncate) {
    const LatticeSpec& spec = tower.spec;
    const CouplingConfig& c = tower.config;
    const Assembled a = assemble(tower, lambda, truncate);
    const InstantaneousVacuum iv(spec, c.m);
    const double m2 = c.m * c.m;
    double worst = 0.0;
    for (int n = 1; n < spec.n_t; ++n) {
        const auto N = static_cast<std::size_t>(n);
        Vec r = dalembert(spec, a.psi[N - 1], a.psi[N], a.psi[N + 1], c.M, Vec());
        const double chi = tower.chi[n];
        if (chi != 0.0) {
            const Vec V = 2.0 * lambda * chi * a.psi[N];
            Vec p = a.g_diag[N] - iv.exact(V).phiphi.diagonal().real();
            p.array() += c.beta1 * m2;
            p += lambda * c.beta2 * chi * a.psi[N];
            r -= lambda * chi * p;
        }
        worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
    return worst;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) fail_validation("bad_fit", "slope fit needs matching samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) fail_validation("bad_fit", "slope fit needs positive samples");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace semicl
