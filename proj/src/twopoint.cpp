#include "semicl/twopoint.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "semicl/errors.hpp"
#include "semicl/kernels.hpp"

namespace semicl {

CauchyData2pt CauchyData2pt::zero(int n) {
    return {CMat::Zero(n, n), CMat::Zero(n, n), CMat::Zero(n, n), CMat::Zero(n, n)};
}

CauchyData2pt& CauchyData2pt::operator+=(const CauchyData2pt& o) {
    phiphi += o.phiphi;
    phipi += o.phipi;
    piphi += o.piphi;
    pipi += o.pipi;
    return *this;
}

CauchyData2pt& CauchyData2pt::operator-=(const CauchyData2pt& o) {
    phiphi -= o.phiphi;
    phipi -= o.phipi;
    piphi -= o.piphi;
    pipi -= o.pipi;
    return *this;
}

CauchyData2pt& CauchyData2pt::operator*=(double s) {
    phiphi *= s;
    phipi *= s;
    piphi *= s;
    pipi *= s;
    return *this;
}

double CauchyData2pt::max_abs() const {
    return std::max({phiphi.cwiseAbs().maxCoeff(), phipi.cwiseAbs().maxCoeff(), piphi.cwiseAbs().maxCoeff(),
                     pipi.cwiseAbs().maxCoeff()});
}

CauchyData2pt operator+(CauchyData2pt a, const CauchyData2pt& b) { return a += b; }
CauchyData2pt operator-(CauchyData2pt a, const CauchyData2pt& b) { return a -= b; }
CauchyData2pt operator*(double s, CauchyData2pt a) { return a *= s; }

double CcrReport::max() const { return std::max({ccr_i, sym_phiphi, sym_pipi, hermiticity}); }

namespace {

void check_square(const CauchyData2pt& d, const LatticeSpec& spec) {
    const Eigen::Index n = spec.n_x;
    for (const CMat* m : {&d.phiphi, &d.phipi, &d.piphi, &d.pipi})
        if (m->rows() != n || m->cols() != n) fail_validation("size_mismatch", "data blocks must be n_x by n_x");
}

CcrReport check(const CauchyData2pt& d, const LatticeSpec& spec, double tol, double commutator) {
    check_square(d, spec);
    const double dx = spec.dx();
    CcrReport r;
    r.tolerance = tol;
    CMat c = d.phipi - d.piphi.transpose();
    c.diagonal().array() -= cplx(0.0, commutator / dx);
    r.ccr_i = c.cwiseAbs().maxCoeff() * dx;
    r.sym_phiphi = (d.phiphi - d.phiphi.transpose()).cwiseAbs().maxCoeff() * dx;
    r.sym_pipi = (d.pipi - d.pipi.transpose()).cwiseAbs().maxCoeff() * dx;
    r.hermiticity = std::max({(d.piphi - d.phipi.adjoint()).cwiseAbs().maxCoeff(),
                              (d.phiphi - d.phiphi.adjoint()).cwiseAbs().maxCoeff(),
                              (d.pipi - d.pipi.adjoint()).cwiseAbs().maxCoeff()}) *
                    dx;
    return r;
}

}  // namespace

CcrReport validate(const CauchyData2pt& data, const LatticeSpec& spec, double tolerance) {
    return check(data, spec, tolerance, 1.0);
}

CcrReport validate_correction(const CauchyData2pt& data, const LatticeSpec& spec, double tolerance) {
    return check(data, spec, tolerance, 0.0);
}

double spatial_omega2(const LatticeSpec& spec, double m, int p) {
    const double s = std::sin(std::numbers::pi * p / spec.n_x);
    const double kh = 2.0 / spec.dx() * s;
    return m * m + kh * kh;
}

double stencil_omega2(const LatticeSpec& spec, double m, int p) {
    const double w2 = spatial_omega2(spec, m, p);
    return w2 * (1.0 - 0.25 * w2 * spec.dt * spec.dt);
}

double max_omega_dt(const LatticeSpec& spec, double m) {
    double best = 0.0;
    for (int p = 0; p < spec.n_x; ++p) best = std::max(best, std::sqrt(spatial_omega2(spec, m, p)) * spec.dt);
    return best;
}

double occupation(const LatticeSpec& spec, double m, double temperature, int p) {
    if (temperature <= 0.0) return 0.0;
    const double W = std::sqrt(stencil_omega2(spec, m, p));
    return 1.0 / std::expm1(W / temperature);
}

namespace {

// Circulant blocks from per-mode weights: G(x, y) = sum_p w_p cos(k_p (x - y)) / L.
CMat circulant(const LatticeSpec& spec, const std::vector<double>& w) {
    const int n = spec.n_x;
    std::vector<double> g(static_cast<std::size_t>(n), 0.0);
    for (int d = 0; d < n; ++d) {
        double acc = 0.0;
        for (int p = 0; p < n; ++p) acc += w[static_cast<std::size_t>(p)] * std::cos(2.0 * std::numbers::pi * p * d / n);
        g[static_cast<std::size_t>(d)] = acc / spec.L;
    }
    CMat G(n, n);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) G(x, y) = g[static_cast<std::size_t>(((x - y) % n + n) % n)];
    return G;
}

CauchyData2pt gaussian_data(const LatticeSpec& spec, double m, double temperature) {
    if (!(m > 0.0)) fail_validation("bad_mass", "quantum mass must be positive");
    if (temperature < 0.0) fail_validation("bad_temperature", "temperature must be nonnegative");
    if (max_omega_dt(spec, m) >= 2.0)
        fail_instability("unstable_stencil", "largest w dt reaches 2; leapfrog is unstable");
    const int n = spec.n_x;
    std::vector<double> wf(static_cast<std::size_t>(n)), wp(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) {
        const double W = std::sqrt(stencil_omega2(spec, m, p));
        const double occ = temperature > 0.0 ? 1.0 + 2.0 * occupation(spec, m, temperature, p) : 1.0;
        wf[static_cast<std::size_t>(p)] = occ / (2.0 * W);
        wp[static_cast<std::size_t>(p)] = occ * W / 2.0;
    }
    CauchyData2pt d;
    d.phiphi = circulant(spec, wf);
    d.pipi = circulant(spec, wp);
    d.phipi = CMat::Identity(n, n) * cplx(0.0, 0.5 / spec.dx());
    d.piphi = d.phipi.adjoint();
    return d;
}

}  // namespace

CauchyData2pt vacuum_data(const LatticeSpec& spec, double m) { return gaussian_data(spec, m, 0.0); }

CauchyData2pt thermal_data(const LatticeSpec& spec, double m, double temperature) {
    return gaussian_data(spec, m, temperature);
}

CauchyData2pt mode_sum_covariance(const CauchyData2pt& data, const LatticeSpec& spec, double mu, int steps) {
    check_square(data, spec);
    const int n = spec.n_x;
    const double dt = spec.dt;
    const CMat* blocks[4] = {&data.phiphi, &data.phipi, &data.piphi, &data.pipi};
    std::vector<Eigen::Matrix2cd> modes(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) {
        Eigen::Matrix2cd c;
        for (int b = 0; b < 4; ++b) {
            cplx acc = 0.0;
            for (int d = 0; d < n; ++d)
                acc += (*blocks[b])(d, 0) * std::polar(1.0, -2.0 * std::numbers::pi * p * d / n);
            c(b / 2, b % 2) = acc;
        }
        const double a = spatial_omega2(spec, mu, p);
        Eigen::Matrix2d M;
        M << 1.0 - 0.5 * a * dt * dt, dt, -a * dt * (1.0 - 0.25 * a * dt * dt), 1.0 - 0.5 * a * dt * dt;
        const double theta = std::acos(1.0 - 0.5 * a * dt * dt);
        const Eigen::Matrix2d Mn =
            (std::sin(steps * theta) * M - std::sin((steps - 1) * theta) * Eigen::Matrix2d::Identity()) /
            std::sin(theta);
        const Eigen::Matrix2cd Mc = Mn.cast<cplx>();
        modes[static_cast<std::size_t>(p)] = Mc * c * Mc.transpose();
    }
    CauchyData2pt out = CauchyData2pt::zero(n);
    CMat* outb[4] = {&out.phiphi, &out.phipi, &out.piphi, &out.pipi};
    for (int b = 0; b < 4; ++b) {
        std::vector<cplx> g(static_cast<std::size_t>(n));
        for (int d = 0; d < n; ++d) {
            cplx acc = 0.0;
            for (int p = 0; p < n; ++p)
                acc += modes[static_cast<std::size_t>(p)](b / 2, b % 2) *
                       std::polar(1.0, 2.0 * std::numbers::pi * p * d / n);
            g[static_cast<std::size_t>(d)] = acc / static_cast<double>(n);
        }
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) (*outb[b])(x, y) = g[static_cast<std::size_t>(((x - y) % n + n) % n)];
    }
    return out;
}

CovarianceStepper::CovarianceStepper(const LatticeSpec& spec, double mu, const std::vector<CauchyData2pt>& orders,
                                     Exec exec)
    : spec_(spec), mu_(mu), exec_(exec) {
    if (orders.empty()) fail_validation("empty_tower", "covariance tower needs order 0 data");
    for (const auto& d : orders) {
        check_square(d, spec);
        ff_.push_back(d.phiphi);
        fp_.push_back(d.phipi);
        pf_.push_back(d.piphi);
        pp_.push_back(d.pipi);
    }
}

void CovarianceStepper::kick(const Vec& base, const std::vector<Vec>& pot) {
    const double h = 0.5 * spec_.dt;
    const double dx = spec_.dx();
    Vec a = Vec::Constant(spec_.n_x, mu_ * mu_);
    if (base.size() != 0) a += base;
    kernels::kick_rows(pf_, ff_, a, pot, h, dx, exec_);
    kernels::kick_rows(pp_, fp_, a, pot, h, dx, exec_);
    kernels::kick_cols(fp_, ff_, a, pot, h, dx, exec_);
    kernels::kick_cols(pp_, pf_, a, pot, h, dx, exec_);
}

void CovarianceStepper::drift() {
    kernels::drift(ff_, pf_, spec_.dt, exec_);
    kernels::drift(fp_, pp_, spec_.dt, exec_);
    kernels::drift(ff_, fp_, spec_.dt, exec_);
    kernels::drift(pf_, pp_, spec_.dt, exec_);
}

void CovarianceStepper::step(const Vec& base_n, const Vec& base_np1, const std::vector<Vec>& pot_n,
                             const std::vector<Vec>& pot_np1) {
    const std::size_t K = ff_.size();
    auto pad = [&](const std::vector<Vec>& p) {
        std::vector<Vec> out(K);
        for (std::size_t q = 1; q < K; ++q)
            out[q] = (q < p.size() && p[q].size() != 0) ? p[q] : Vec::Zero(spec_.n_x);
        return out;
    };
    kick(base_n, pad(pot_n));
    drift();
    kick(base_np1, pad(pot_np1));
}

CauchyData2pt CovarianceStepper::block(int k) const {
    const auto i = static_cast<std::size_t>(k);
    return {ff_[i], fp_[i], pf_[i], pp_[i]};
}

std::vector<CauchyData2pt> CovarianceStepper::blocks() const {
    std::vector<CauchyData2pt> out;
    for (int k = 0; k <= order(); ++k) out.push_back(block(k));
    return out;
}

void CovarianceStepper::set_block(int k, const CauchyData2pt& d) {
    const auto K = static_cast<std::size_t>(k);
    ff_[K] = d.phiphi;
    fp_[K] = d.phipi;
    pf_[K] = d.piphi;
    pp_[K] = d.pipi;
}

Vec CovarianceStepper::diagonal(int k) const { return ff_[static_cast<std::size_t>(k)].diagonal().real(); }

double CovarianceStepper::ccr_drift() const {
    double worst = 0.0;
    for (int k = 0; k <= order(); ++k) {
        const CauchyData2pt b = block(k);
        const double v = k == 0 ? validate(b, spec_).max() : validate_correction(b, spec_).max();
        worst = std::max(worst, v);
    }
    return worst;
}

CovarianceHistory evolve_covariance(const CauchyData2pt& data, const LatticeSpec& spec, double mu,
                                    const PotentialHistory& V, int stride, Exec exec) {
    if (stride < 1) fail_validation("bad_stride", "stride must be positive");
    CovarianceStepper st(spec, mu, {data}, exec);
    CovarianceHistory h;
    auto record = [&](int n) {
        h.ccr_drift.push_back(st.ccr_drift());
        if (n % stride == 0 || n == spec.n_t) {
            h.steps.push_back(n);
            h.blocks.push_back(st.block(0));
        }
    };
    record(0);
    for (int n = 0; n < spec.n_t; ++n) {
        st.step(V.at(n), V.at(n + 1), {}, {});
        record(n + 1);
    }
    if (!h.blocks.back().phiphi.allFinite()) fail_instability("blow_up", "covariance evolution diverged");
    return h;
}

CovarianceTower evolve_covariance_tower(const std::vector<CauchyData2pt>& data, const LatticeSpec& spec,
                                        double mu, const std::vector<PotentialHistory>& V, int order,
                                        const std::vector<int>& block_slices, Exec exec) {
    if (order < 0) fail_validation("bad_order", "order must be nonnegative");
    std::vector<CauchyData2pt> init(static_cast<std::size_t>(order + 1), CauchyData2pt::zero(spec.n_x));
    for (std::size_t k = 0; k < init.size() && k < data.size(); ++k) init[k] = data[k];
    CovarianceStepper st(spec, mu, init, exec);
    const std::set<int> keep(block_slices.begin(), block_slices.end());

    CovarianceTower out;
    out.diag.assign(static_cast<std::size_t>(order + 1), FieldHistory{});
    auto pot_at = [&](int n) {
        std::vector<Vec> p(static_cast<std::size_t>(order + 1));
        for (int q = 1; q <= order && q < static_cast<int>(V.size()); ++q) p[static_cast<std::size_t>(q)] = V[static_cast<std::size_t>(q)].at(n);
        return p;
    };
    auto base_at = [&](int n) { return V.empty() ? Vec() : V[0].at(n); };
    auto record = [&](int n) {
        for (int k = 0; k <= order; ++k) out.diag[static_cast<std::size_t>(k)].push_back(st.diagonal(k));
        out.ccr_drift.push_back(st.ccr_drift());
        if (keep.count(n)) out.blocks[n] = st.blocks();
    };
    record(0);
    for (int n = 0; n < spec.n_t; ++n) {
        st.step(base_at(n), base_at(n + 1), pot_at(n), pot_at(n + 1));
        record(n + 1);
    }
    return out;
}

WightmanEval::WightmanEval(CauchyData2pt data, std::shared_ptr<const SurfaceKernel> kernel)
    : data_(std::move(data)), kernel_(std::move(kernel)) {
    if (!kernel_) fail_validation("missing_kernel", "reconstruction needs a surface kernel");
    check_square(data_, kernel_->spec);
}

cplx WightmanEval::operator()(GridPoint a, GridPoint b) const {
    const SurfaceKernel& K = *kernel_;
    if (a.n < K.surface || b.n < K.surface || a.n > K.spec.n_t || b.n > K.spec.n_t)
        fail_validation("point_outside", "evaluation point before the data surface");
    const int n = K.spec.n_x;
    Eigen::VectorXcd ea(n), na(n), eb(n), nb(n);
    for (int y = 0; y < n; ++y) {
        const auto i = static_cast<std::size_t>(y);
        ea[y] = K.E[i](a.x, a.n);
        na[y] = K.NE[i](a.x, a.n);
        eb[y] = K.E[i](b.x, b.n);
        nb[y] = K.NE[i](b.x, b.n);
    }
    const double dx = K.spec.dx();
    const cplx s = (na.transpose() * data_.phiphi * nb).value() - (na.transpose() * data_.phipi * eb).value() -
                   (ea.transpose() * data_.piphi * nb).value() + (ea.transpose() * data_.pipi * eb).value();
    return dx * dx * s;
}

WightmanEval reconstruct(const CauchyData2pt& data, std::shared_ptr<const SurfaceKernel> kernel) {
    return WightmanEval(data, std::move(kernel));
}

}  // namespace semicl
