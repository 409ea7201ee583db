#include "semicl/green.hpp"

#include <algorithm>
#include <cstdlib>

#include "semicl/errors.hpp"

namespace semicl {

Vec PotentialHistory::at(int n) const {
    if (slices.empty()) return Vec();
    return slices[static_cast<std::size_t>(n)];
}

PotentialHistory coupling_potential(const SwitchingFunction& chi, const FieldHistory& psi, double lambda) {
    PotentialHistory V;
    V.slices.reserve(psi.size());
    for (std::size_t n = 0; n < psi.size(); ++n) V.slices.push_back(2.0 * lambda * chi.values[n] * psi[n]);
    return V;
}

GreenKernel::GreenKernel(const LatticeSpec& spec, KernelKind kind, double mu, std::vector<GridPoint> sources)
    : spec_(spec), kind_(kind), mu_(mu), sources_(std::move(sources)) {
    index_.assign(static_cast<std::size_t>(spec.n_slices() * spec.n_x), -1);
    columns_.assign(sources_.size(), Mat::Zero(spec.n_x, spec.n_slices()));
    for (std::size_t i = 0; i < sources_.size(); ++i) {
        const GridPoint y = sources_[i];
        if (y.n < 0 || y.n > spec.n_t || y.x < 0 || y.x >= spec.n_x)
            fail_validation("bad_source", "source point outside the lattice");
        index_[static_cast<std::size_t>(y.n * spec.n_x + y.x)] = static_cast<int>(i);
    }
}

bool GreenKernel::has_source(GridPoint y) const {
    if (y.n < 0 || y.n > spec_.n_t || y.x < 0 || y.x >= spec_.n_x) return false;
    return index_[static_cast<std::size_t>(y.n * spec_.n_x + y.x)] >= 0;
}

bool GreenKernel::is_complete() const {
    return sources_.size() == static_cast<std::size_t>(spec_.n_slices() * spec_.n_x) &&
           std::none_of(index_.begin(), index_.end(), [](int i) { return i < 0; });
}

const Mat& GreenKernel::column(GridPoint y) const {
    if (!has_source(y)) fail_validation("missing_column", "no stored column for the requested source");
    return columns_[static_cast<std::size_t>(index_[static_cast<std::size_t>(y.n * spec_.n_x + y.x)])];
}

double GreenKernel::operator()(GridPoint x, GridPoint y) const { return column(y)(x.x, x.n); }

std::vector<GridPoint> all_points(const LatticeSpec& spec) {
    std::vector<GridPoint> pts;
    pts.reserve(static_cast<std::size_t>(spec.n_slices() * spec.n_x));
    for (int n = 0; n <= spec.n_t; ++n)
        for (int x = 0; x < spec.n_x; ++x) pts.push_back({n, x});
    return pts;
}

std::vector<GridPoint> slice_points(const LatticeSpec& spec, int n) {
    std::vector<GridPoint> pts;
    for (int x = 0; x < spec.n_x; ++x) pts.push_back({n, x});
    return pts;
}

namespace {

// One leapfrog update: out = 2 cur - other + dt^2 (Lap cur - (mu^2 + V) cur + f).
void leap(const LatticeSpec& spec, double mu2, const double* V, const double* f, const double* cur,
          const double* other, double* out) {
    const int n = spec.n_x;
    const double dt2 = spec.dt * spec.dt;
    const double inv = 1.0 / (spec.dx() * spec.dx());
    for (int i = 0; i < n; ++i) {
        const int ip = (i + 1 == n) ? 0 : i + 1;
        const int im = (i == 0) ? n - 1 : i - 1;
        double acc = (cur[ip] + cur[im] - 2.0 * cur[i]) * inv - mu2 * cur[i];
        if (V) acc -= V[i] * cur[i];
        if (f) acc += f[i];
        out[i] = 2.0 * cur[i] - other[i] + dt2 * acc;
    }
}

int first_nonzero_slice(const Mat& f) {
    for (int n = 0; n < f.cols(); ++n)
        if (!f.col(n).isZero(0.0)) return n;
    return static_cast<int>(f.cols());
}

int last_nonzero_slice(const Mat& f) {
    for (int n = static_cast<int>(f.cols()) - 1; n >= 0; --n)
        if (!f.col(n).isZero(0.0)) return n;
    return -1;
}

void check_shape(const LatticeSpec& spec, const Mat& f) {
    if (f.rows() != spec.n_x || f.cols() != spec.n_slices())
        fail_validation("shape", "source array must be n_x by n_t + 1");
}

void check_finite(const Mat& u) {
    if (!u.allFinite()) fail_instability("blow_up", "non-finite values in Green column");
}

}  // namespace

Mat solve_retarded(const LatticeSpec& spec, double mu, const PotentialHistory& V, const Mat& f) {
    check_shape(spec, f);
    Mat u = Mat::Zero(spec.n_x, spec.n_slices());
    const int j0 = first_nonzero_slice(f);
    const double mu2 = mu * mu;
    const Vec zero = Vec::Zero(spec.n_x);
    for (int n = std::max(j0, 0); n < spec.n_t; ++n) {
        const double* vp = V.is_zero() ? nullptr : V.slices[static_cast<std::size_t>(n)].data();
        const double* prev = n > 0 ? u.col(n - 1).data() : zero.data();
        leap(spec, mu2, vp, f.col(n).data(), u.col(n).data(), prev, u.col(n + 1).data());
    }
    check_finite(u);
    return u;
}

Mat solve_advanced(const LatticeSpec& spec, double mu, const PotentialHistory& V, const Mat& f) {
    check_shape(spec, f);
    Mat u = Mat::Zero(spec.n_x, spec.n_slices());
    const int j1 = last_nonzero_slice(f);
    const double mu2 = mu * mu;
    const Vec zero = Vec::Zero(spec.n_x);
    for (int n = std::min(j1, spec.n_t); n > 0; --n) {
        const double* vp = V.is_zero() ? nullptr : V.slices[static_cast<std::size_t>(n)].data();
        const double* next = n < spec.n_t ? u.col(n + 1).data() : zero.data();
        leap(spec, mu2, vp, f.col(n).data(), u.col(n).data(), next, u.col(n - 1).data());
    }
    check_finite(u);
    return u;
}

namespace {

Mat delta_source(const LatticeSpec& spec, GridPoint y) {
    Mat f = Mat::Zero(spec.n_x, spec.n_slices());
    f(y.x, y.n) = 1.0 / (spec.dt * spec.dx());
    return f;
}

GreenKernel build_columns(const LatticeSpec& spec, double mu, const PotentialHistory& V,
                          std::vector<GridPoint> sources, Exec exec, KernelKind kind) {
    if (sources.empty()) sources = all_points(spec);
    GreenKernel K(spec, kind, mu, std::move(sources));
    const auto& src = K.sources();
    const long count = static_cast<long>(src.size());
    const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(dynamic) if (par)
    for (long i = 0; i < count; ++i) {
        const Mat f = delta_source(spec, src[static_cast<std::size_t>(i)]);
        K.column_at(static_cast<std::size_t>(i)) =
            kind == KernelKind::retarded ? solve_retarded(spec, mu, V, f) : solve_advanced(spec, mu, V, f);
    }
    return K;
}

}  // namespace

GreenKernel build_retarded(const LatticeSpec& spec, double mu, const PotentialHistory& V,
                           std::vector<GridPoint> sources, Exec exec) {
    return build_columns(spec, mu, V, std::move(sources), exec, KernelKind::retarded);
}

GreenKernel build_advanced_direct(const LatticeSpec& spec, double mu, const PotentialHistory& V,
                                  std::vector<GridPoint> sources, Exec exec) {
    return build_columns(spec, mu, V, std::move(sources), exec, KernelKind::advanced);
}

GreenKernel advanced_from_retarded(const GreenKernel& retarded) {
    if (!retarded.is_complete())
        fail_validation("incomplete_kernel", "transposition needs a column for every grid point");
    const LatticeSpec& spec = retarded.spec();
    const KernelKind out_kind =
        retarded.kind() == KernelKind::retarded ? KernelKind::advanced : KernelKind::retarded;
    GreenKernel A(spec, out_kind, retarded.mass(), retarded.sources());
    const auto& src = A.sources();
    for (std::size_t i = 0; i < src.size(); ++i) {
        Mat& col = A.column_at(i);
        for (int n = 0; n <= spec.n_t; ++n)
            for (int x = 0; x < spec.n_x; ++x) col(x, n) = retarded(src[i], GridPoint{n, x});
    }
    return A;
}

GreenKernel commutator_kernel(const GreenKernel& retarded, const GreenKernel& advanced) {
    if (!retarded.is_complete() || !advanced.is_complete())
        fail_validation("incomplete_kernel", "commutator kernel needs complete kernels");
    if (retarded.spec().n_x != advanced.spec().n_x || retarded.spec().n_t != advanced.spec().n_t ||
        retarded.mass() != advanced.mass())
        fail_validation("kernel_mismatch", "retarded and advanced kernels do not match");
    GreenKernel C(retarded.spec(), KernelKind::commutator, retarded.mass(), retarded.sources());
    for (std::size_t i = 0; i < C.sources().size(); ++i)
        C.column_at(i) = advanced.column(C.sources()[i]) - retarded.column_at(i);
    return C;
}

double commutator_value(const GreenKernel& retarded, GridPoint a, GridPoint b) {
    if (a.n >= b.n) return -retarded(a, b);
    return retarded(b, a);
}

bool in_discrete_cone(const LatticeSpec& spec, GridPoint x, GridPoint y, KernelKind kind) {
    const int steps = kind == KernelKind::advanced ? y.n - x.n : x.n - y.n;
    if (steps < 1) return false;
    int d = std::abs(x.x - y.x);
    d = std::min(d, spec.n_x - d);
    return d <= steps - 1;
}

BornTower born_series(const LatticeSpec& spec, double mu, const std::vector<PotentialHistory>& W, int n,
                      std::vector<GridPoint> sources, KernelKind kind, Exec exec) {
    if (n < 0) fail_validation("bad_order", "Born order must be nonnegative");
    if (kind == KernelKind::commutator) fail_validation("bad_kind", "Born series is built per propagator");
    if (sources.empty()) sources = all_points(spec);
    BornTower tower;
    tower.order = n;
    tower.kind = kind;
    const PotentialHistory none;
    tower.orders.push_back(build_columns(spec, mu, none, sources, exec, kind));
    for (int k = 1; k <= n; ++k) tower.orders.emplace_back(spec, kind, mu, sources);

    const long count = static_cast<long>(sources.size());
    const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(dynamic) if (par)
    for (long i = 0; i < count; ++i) {
        const auto c = static_cast<std::size_t>(i);
        for (int k = 1; k <= n; ++k) {
            Mat f = Mat::Zero(spec.n_x, spec.n_slices());
            for (int q = 1; q <= k; ++q) {
                if (q >= static_cast<int>(W.size()) || W[static_cast<std::size_t>(q)].is_zero()) continue;
                const auto& Wq = W[static_cast<std::size_t>(q)].slices;
                const Mat& prev = tower.orders[static_cast<std::size_t>(k - q)].column_at(c);
                for (int s = 0; s <= spec.n_t; ++s)
                    f.col(s) += Wq[static_cast<std::size_t>(s)].cwiseProduct(prev.col(s));
            }
            Mat u = kind == KernelKind::retarded ? solve_retarded(spec, mu, none, f)
                                                 : solve_advanced(spec, mu, none, f);
            tower.orders[static_cast<std::size_t>(k)].column_at(c) = -u;
        }
    }
    return tower;
}

BornTower born_series(const LatticeSpec& spec, double mu, const PotentialHistory& W, int n,
                      std::vector<GridPoint> sources, KernelKind kind, Exec exec) {
    std::vector<PotentialHistory> Ws(2);
    Ws[1] = W;
    return born_series(spec, mu, Ws, n, std::move(sources), kind, exec);
}

Mat resum_column(const BornTower& tower, GridPoint y, double lambda) {
    Mat out = tower.orders[0].column(y);
    double p = 1.0;
    for (std::size_t k = 1; k < tower.orders.size(); ++k) {
        p *= lambda;
        out += p * tower.orders[k].column(y);
    }
    return out;
}

namespace {

// Verlet data (phi, pi) on slice s, then leapfrog; slices before s stay zero.
Mat response(const LatticeSpec& spec, double mu, const PotentialHistory& V, int s, const Vec& phi,
             const Vec& pi) {
    Mat u = Mat::Zero(spec.n_x, spec.n_slices());
    u.col(s) = phi;
    if (s == spec.n_t) return u;
    const double mu2 = mu * mu;
    Vec F = laplacian(phi, spec.dx()) - mu2 * phi;
    if (!V.is_zero()) F -= V.slices[static_cast<std::size_t>(s)].cwiseProduct(phi);
    u.col(s + 1) = phi + spec.dt * pi + 0.5 * spec.dt * spec.dt * F;
    for (int n = s + 1; n < spec.n_t; ++n) {
        const double* vp = V.is_zero() ? nullptr : V.slices[static_cast<std::size_t>(n)].data();
        leap(spec, mu2, vp, nullptr, u.col(n).data(), u.col(n - 1).data(), u.col(n + 1).data());
    }
    check_finite(u);
    return u;
}

}  // namespace

SurfaceKernel build_surface_kernel(const LatticeSpec& spec, double mu, const PotentialHistory& V, int surface,
                                   Exec exec) {
    if (surface < 0 || surface > spec.n_t) fail_validation("bad_surface", "surface slice outside run");
    SurfaceKernel K;
    K.spec = spec;
    K.mu = mu;
    K.surface = surface;
    K.E.assign(static_cast<std::size_t>(spec.n_x), Mat());
    K.NE.assign(static_cast<std::size_t>(spec.n_x), Mat());
    const double dx = spec.dx();
    const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(dynamic) if (par)
    for (int y = 0; y < spec.n_x; ++y) {
        Vec unit = Vec::Zero(spec.n_x);
        unit[y] = 1.0;
        const Vec zero = Vec::Zero(spec.n_x);
        K.E[static_cast<std::size_t>(y)] = response(spec, mu, V, surface, zero, unit) / dx;
        K.NE[static_cast<std::size_t>(y)] = -response(spec, mu, V, surface, unit, zero) / dx;
    }
    return K;
}

}  // namespace semicl
