#include "semicl/hadamard4d.hpp"

#include <numbers>
#include <sstream>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "semicl/errors.hpp"

namespace semicl::h4d {

double bessel_k1_cf2(double x) {
    if (!(x > 0.0)) fail_validation("bad_argument", "K1 needs a positive argument");
    constexpr double eps = 1e-16;
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d, delh = d;
    double q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25;
    double q = a1, c = a1, a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i <= 100000; ++i) {
        a -= 2 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < eps) break;
    }
    h = a1 * h;
    const double k0 = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
    return k0 * (x + 0.5 - h) / x;
}

double bessel_k1(double z) {
    if (!(z > 0.0)) fail_validation("bad_argument", "K1 needs a positive argument");
    return z < 2.0 ? bessel_k1_series(z) : bessel_k1_cf2(z);
}

double bessel_k1_quadrature(double z, double h) {
    if (!(z > 0.0)) fail_validation("bad_argument", "K1 needs a positive argument");
    const double T = std::acosh(1.0 + 60.0 / z);
    const int n = static_cast<int>(std::ceil(T / h));
    double acc = 0.5 * std::exp(-z);
    for (int i = 1; i <= n; ++i) {
        const double t = i * h;
        acc += std::exp(-z * std::cosh(t)) * std::cosh(t);
    }
    return acc * h;
}

double vacuum_kernel(double r, double eps, double m) {
    if (!(m > 0.0)) fail_validation("bad_mass", "mass must be positive");
    if (r < 0.0 || eps < 0.0) fail_validation("bad_argument", "separation and regulator must be nonnegative");
    if (r == 0.0 && eps == 0.0) fail_validation("singular_point", "kernel is singular at zero separation");
    const double s = std::hypot(r, eps);
    return m * bessel_k1(m * s) / (4.0 * std::numbers::pi * std::numbers::pi * s);
}

namespace {

bool rational_row(const std::array<Rat, 4>& a) { return a[1] == Rat(0) && a[2] == Rat(0) && a[3] == Rat(0); }
bool zero_row(const std::array<Rat, 4>& a) { return a[0] == Rat(0) && rational_row(a); }

void clean(Symbolic& s) {
    for (auto it = s.terms.begin(); it != s.terms.end();)
        it = zero_row(it->second) ? s.terms.erase(it) : std::next(it);
}

}  // namespace

Symbolic::Symbolic(Rat r) {
    if (r != Rat(0)) terms[0] = {r, 0, 0, 0};
}

Symbolic Symbolic::m2_power(int p, Rat c) {
    Symbolic s;
    if (c != Rat(0)) s.terms[p] = {c, 0, 0, 0};
    return s;
}

Symbolic Symbolic::basis(int i, Rat c) {
    Symbolic s;
    std::array<Rat, 4> row{0, 0, 0, 0};
    row[static_cast<std::size_t>(i)] = c;
    if (c != Rat(0)) s.terms[0] = row;
    return s;
}

bool Symbolic::is_rational_in_m2() const {
    for (const auto& [p, r] : terms)
        if (!rational_row(r)) return false;
    return true;
}

Symbolic& Symbolic::operator+=(const Symbolic& o) {
    for (const auto& [p, r] : o.terms) {
        auto& row = terms[p];
        for (std::size_t i = 0; i < 4; ++i) row[i] += r[i];
    }
    clean(*this);
    return *this;
}

Symbolic& Symbolic::operator-=(const Symbolic& o) { return *this += -o; }

Symbolic& Symbolic::operator*=(const Rat& r) {
    for (auto& [p, row] : terms)
        for (auto& x : row) x *= r;
    clean(*this);
    return *this;
}

Symbolic Symbolic::operator-() const {
    Symbolic s = *this;
    for (auto& [p, row] : s.terms)
        for (auto& x : row) x = -x;
    return s;
}

Symbolic operator+(Symbolic a, const Symbolic& b) { return a += b; }
Symbolic operator-(Symbolic a, const Symbolic& b) { return a -= b; }
Symbolic operator*(Symbolic a, const Rat& r) { return a *= r; }

Symbolic operator*(const Symbolic& a, const Symbolic& b) {
    Symbolic out;
    for (const auto& [p, x] : a.terms)
        for (const auto& [q, y] : b.terms) {
            std::array<Rat, 4> row;
            if (rational_row(x)) {
                for (std::size_t i = 0; i < 4; ++i) row[i] = x[0] * y[i];
            } else if (rational_row(y)) {
                for (std::size_t i = 0; i < 4; ++i) row[i] = y[0] * x[i];
            } else {
                fail_validation("symbolic_product", "product of two transcendental terms");
            }
            auto& dst = out.terms[p + q];
            for (std::size_t i = 0; i < 4; ++i) dst[i] += row[i];
        }
    clean(out);
    return out;
}

double Symbolic::eval(double m, double ell) const { return eval_t<double>(m, ell); }

std::string Symbolic::str() const {
    if (terms.empty()) return "0";
    static const char* names[4] = {"", "gamma", "ln2", "L"};
    std::ostringstream os;
    bool first_term = true;
    for (const auto& [p, row] : terms) {
        if (!first_term) os << " + ";
        first_term = false;
        if (p != 0) os << "m^" << 2 * p << "*";
        os << "(";
        bool first = true;
        for (std::size_t i = 0; i < 4; ++i) {
            if (row[i] == Rat(0)) continue;
            if (!first) os << " + ";
            first = false;
            os << row[i].numerator();
            if (row[i].denominator() != 1) os << "/" << row[i].denominator();
            if (i > 0) os << "*" << names[i];
        }
        os << ")";
    }
    return os.str();
}

PsiPolynomial PsiPolynomial::constant(double c) {
    PsiPolynomial p = zero();
    p.add_term({0, 0, 0, 0}, c);
    return p;
}

namespace {

std::optional<Rat> exact_rational(double c) {
    double scaled = c;
    long long den = 1;
    for (int k = 0; k <= 30; ++k) {
        if (std::nearbyint(scaled) == scaled && std::abs(scaled) < 9.0e15)
            return Rat(static_cast<long long>(scaled), den);
        scaled *= 2.0;
        den *= 2;
    }
    return std::nullopt;
}

}  // namespace

void PsiPolynomial::add_term(Exponent e, double c) {
    numeric[e] += c;
    if (exact) {
        const auto r = exact_rational(c);
        if (r)
            (*exact)[e] += *r;
        else
            exact.reset();
    }
}

void PsiPolynomial::add_term(Exponent e, Rat c) {
    numeric[e] += boost::rational_cast<double>(c);
    if (exact) (*exact)[e] += c;
}

int PsiPolynomial::degree() const {
    int d = -1;
    for (const auto& [e, c] : numeric)
        if (c != 0.0) d = std::max(d, e[0] + e[1] + e[2] + e[3]);
    return d;
}

namespace {

int deg(const Exponent& e) { return e[0] + e[1] + e[2] + e[3]; }

template <class T>
bool is_zero(const T& x) {
    if constexpr (std::is_same_v<T, Symbolic>)
        return x.is_zero();
    else
        return x == T(0);
}

template <class T>
T scaled(const T& x, const Rat& r) {
    if constexpr (std::is_same_v<T, Symbolic>)
        return x * r;
    else
        return x * boost::rational_cast<double>(r);
}

template <class T>
void accumulate(Poly<T>& p, const Exponent& e, const T& c) {
    if (is_zero(c)) return;
    auto it = p.find(e);
    if (it == p.end()) {
        p.emplace(e, c);
        return;
    }
    it->second += c;
    if (is_zero(it->second)) p.erase(it);
}

template <class T>
Poly<T> truncate(Poly<T> p, int cap) {
    for (auto it = p.begin(); it != p.end();) it = deg(it->first) > cap ? p.erase(it) : std::next(it);
    return p;
}

template <class T>
Poly<T> add(const Poly<T>& a, const Poly<T>& b, const Rat& sb = 1) {
    Poly<T> out = a;
    for (const auto& [e, c] : b) accumulate(out, e, scaled(c, sb));
    return out;
}

template <class T>
Poly<T> scale(const Poly<T>& a, const Rat& r) {
    Poly<T> out;
    for (const auto& [e, c] : a) accumulate(out, e, scaled(c, r));
    return out;
}

template <class T>
Poly<T> times_scalar(const Poly<T>& a, const T& s) {
    Poly<T> out;
    for (const auto& [e, c] : a) accumulate(out, e, T(s * c));
    return out;
}

template <class T>
Poly<T> multiply(const Poly<T>& a, const Poly<T>& b, int cap) {
    Poly<T> out;
    for (const auto& [ea, ca] : a)
        for (const auto& [eb, cb] : b) {
            Exponent e{ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3]};
            if (deg(e) <= cap) accumulate(out, e, T(ca * cb));
        }
    return out;
}

// Euler operator xi^a d_a: multiplies each monomial by its degree.
template <class T>
Poly<T> euler(const Poly<T>& a) {
    Poly<T> out;
    for (const auto& [e, c] : a) accumulate(out, e, scaled(c, Rat(deg(e))));
    return out;
}

// Solves (E + c) u = f monomial by monomial.
template <class T>
Poly<T> euler_divide(const Poly<T>& f, int c) {
    Poly<T> out;
    for (const auto& [e, x] : f) accumulate(out, e, scaled(x, Rat(1, deg(e) + c)));
    return out;
}

// -d_0^2 + d_1^2 + d_2^2 + d_3^2
template <class T>
Poly<T> box(const Poly<T>& a) {
    Poly<T> out;
    for (const auto& [e, c] : a)
        for (std::size_t i = 0; i < 4; ++i) {
            if (e[i] < 2) continue;
            Exponent f = e;
            f[i] -= 2;
            const long long k = static_cast<long long>(e[i]) * (e[i] - 1);
            accumulate(out, f, scaled(c, Rat(i == 0 ? -k : k)));
        }
    return out;
}

template <class T>
struct RecursionInput {
    T m2;
    T seed;
    std::vector<Poly<T>> psi;
};

// (P X)_k = box X_k - m^2 X_k - 2 sum_{j<k} psi_j X_{k-1-j}
template <class T>
Poly<T> apply_p(const std::vector<Poly<T>>& X, int k, const RecursionInput<T>& in, int cap) {
    const auto K = static_cast<std::size_t>(k);
    Poly<T> out = truncate(box(X[K]), cap);
    out = add(out, truncate(times_scalar(X[K], in.m2), cap), Rat(-1));
    for (int j = 0; j < k; ++j)
        out = add(out, multiply(in.psi[static_cast<std::size_t>(j)], X[static_cast<std::size_t>(k - 1 - j)], cap),
                  Rat(-2));
    return out;
}

template <class T>
CoeffTable<T> run_recursion(const RecursionInput<T>& in, int N, int K, int P) {
    auto cap = [&](int n) { return P + 2 * (N - n); };
    CoeffTable<T> t;
    t.v.assign(static_cast<std::size_t>(N + 1), std::vector<Poly<T>>(static_cast<std::size_t>(K + 1)));
    t.w = t.v;
    t.v[0][0] = truncate(Poly<T>{{Exponent{0, 0, 0, 0}, scaled(in.m2, Rat(1, 2))}}, cap(0));
    t.w[0][0] = truncate(Poly<T>{{Exponent{0, 0, 0, 0}, in.seed}}, cap(0));
    for (int k = 1; k <= K; ++k)
        t.v[0][static_cast<std::size_t>(k)] = truncate(euler_divide(in.psi[static_cast<std::size_t>(k - 1)], 1), cap(0));
    for (int n = 1; n <= N; ++n) {
        const auto Nn = static_cast<std::size_t>(n);
        for (int k = 0; k <= K; ++k) {
            const Poly<T> pv = apply_p(t.v[Nn - 1], k, in, cap(n));
            t.v[Nn][static_cast<std::size_t>(k)] = truncate(euler_divide(scale(pv, Rat(-1, 2 * n)), n + 1), cap(n));
        }
        for (int k = 0; k <= K; ++k) {
            const auto Kk = static_cast<std::size_t>(k);
            const Poly<T>& vn = t.v[Nn][Kk];
            Poly<T> rhs = add(scale(euler(vn), Rat(2)), vn, Rat(4 * n + 2));
            rhs = add(rhs, apply_p(t.w[Nn - 1], k, in, cap(n)));
            t.w[Nn][Kk] = truncate(euler_divide(scale(rhs, Rat(-1, 2 * n)), n + 1), cap(n));
        }
    }
    return t;
}

void check_shape(const std::vector<PsiPolynomial>& psi, int N, int K, int P) {
    if (N < 0 || K < 0 || P < 0) fail_validation("bad_order", "orders must be nonnegative");
    if (static_cast<int>(psi.size()) < K) fail_validation("missing_order", "psi tower is missing an order");
    for (int j = 0; j < K; ++j) {
        const int kd = psi[static_cast<std::size_t>(j)].known_degree;
        if (kd >= 0 && kd < P + 2 * N)
            fail_validation("rank_closure", "psi Taylor data too short for the requested rank and sigma order");
    }
}

double tensor_value(const Poly<double>& p, const std::vector<int>& idx) {
    Exponent e{0, 0, 0, 0};
    for (int a : idx) {
        if (a < 0 || a > 3) fail_validation("bad_index", "Taylor index must be 0..3");
        ++e[static_cast<std::size_t>(a)];
    }
    const auto it = p.find(e);
    if (it == p.end()) return 0.0;
    double f = it->second;
    for (int x : e)
        for (int i = 2; i <= x; ++i) f *= i;
    return f;
}

const Poly<double>& entry(const std::vector<std::vector<Poly<double>>>& t, int n, int k) {
    if (n < 0 || k < 0 || n >= static_cast<int>(t.size()) || k >= static_cast<int>(t[0].size()))
        fail_validation("bad_order", "coefficient index outside the table");
    return t[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
}

double constant_term(const Poly<double>& p) {
    const auto it = p.find(Exponent{0, 0, 0, 0});
    return it == p.end() ? 0.0 : it->second;
}

}  // namespace

double HadamardCoeffs::v0(int n, int k) const { return constant_term(entry(numeric.v, n, k)); }
double HadamardCoeffs::w0(int n, int k) const { return constant_term(entry(numeric.w, n, k)); }
double HadamardCoeffs::v_tensor(int n, int k, const std::vector<int>& idx) const {
    return tensor_value(entry(numeric.v, n, k), idx);
}
double HadamardCoeffs::w_tensor(int n, int k, const std::vector<int>& idx) const {
    return tensor_value(entry(numeric.w, n, k), idx);
}

double HadamardCoeffs::finite_part(int k) const {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return (w0(0, k) - v0(0, k) * std::log(ell * ell)) / (8.0 * pi2);
}

CoeffTable<Symbolic> recursion_symbolic(const std::vector<PsiPolynomial>& psi, int N, int K, int P) {
    check_shape(psi, N, K, P);
    RecursionInput<Symbolic> in;
    in.m2 = Symbolic::m2_power(1);
    in.seed = Symbolic::m2_power(1, Rat(1, 2)) *
              (Symbolic::basis(3) - Symbolic::basis(2) + Symbolic::basis(1, 2) - Symbolic(Rat(1)));
    for (int j = 0; j < K; ++j) {
        const auto& p = psi[static_cast<std::size_t>(j)];
        if (!p.exact) fail_validation("not_rational", "symbolic run needs rational psi coefficients");
        Poly<Symbolic> q;
        for (const auto& [e, c] : *p.exact) accumulate(q, e, Symbolic(c));
        in.psi.push_back(std::move(q));
    }
    return run_recursion(in, N, K, P);
}

HadamardCoeffs recursion_coeffs(double m, const std::vector<PsiPolynomial>& psi, int N, int K, int P, double ell,
                                double ell_seed) {
    if (!(m > 0.0)) fail_validation("bad_mass", "mass must be positive");
    if (!(ell > 0.0) || ell_seed < 0.0) fail_validation("bad_scale", "renormalization length must be positive");
    check_shape(psi, N, K, P);
    HadamardCoeffs c;
    c.m = m;
    c.ell = ell;
    c.ell_seed = ell_seed > 0.0 ? ell_seed : ell;
    c.N = N;
    c.K = K;
    c.P = P;
    RecursionInput<double> in;
    in.m2 = m * m;
    in.seed = 0.5 * m * m *
              (std::log(m * m * c.ell_seed * c.ell_seed / 2.0) + 2.0 * euler_gamma<double>() - 1.0);
    for (int j = 0; j < K; ++j) {
        Poly<double> q;
        for (const auto& [e, x] : psi[static_cast<std::size_t>(j)].numeric) accumulate(q, e, x);
        in.psi.push_back(std::move(q));
    }
    c.numeric = run_recursion(in, N, K, P);
    bool rational = true;
    for (int j = 0; j < K; ++j) rational = rational && psi[static_cast<std::size_t>(j)].exact.has_value();
    if (rational) c.symbolic = recursion_symbolic(psi, N, K, P);
    return c;
}

double ShortDistance::eval(double sigma) const { return eval_t<double>(sigma); }

ShortDistance short_distance_expansion(double m, double ell, int order) {
    if (order < 0 || order > 1) fail_validation("order_unsupported", "expansion available for sigma orders 0 and 1");
    if (!(m > 0.0) || !(ell > 0.0)) fail_validation("bad_scale", "mass and length must be positive");
    ShortDistance s;
    s.order = order;
    s.m = m;
    s.ell = ell;
    s.prefactor = 1.0 / (8.0 * std::numbers::pi * std::numbers::pi);
    s.inv_sigma = Symbolic(Rat(1));
    const Symbolic g = Symbolic::basis(1), l2 = Symbolic::basis(2), L = Symbolic::basis(3), one(Rat(1));
    s.log0 = Symbolic::m2_power(1, Rat(1, 2));
    s.const0 = Symbolic::m2_power(1, Rat(1, 2)) * (L - l2 + g * Rat(2) - one);
    if (order >= 1) {
        s.log1 = Symbolic::m2_power(2, Rat(1, 8));
        s.const1 = Symbolic::m2_power(2, Rat(1, 16)) * (L * Rat(2) - l2 * Rat(2) + g * Rat(4) - one * Rat(5));
    }
    return s;
}

ScaleChange make_scale_change(double ell0, double ell) {
    if (!(ell0 > 0.0) || !(ell > 0.0)) fail_validation("bad_scale", "renormalization lengths must be positive");
    return {ell0, ell, std::log(ell0 / ell) / (8.0 * std::numbers::pi * std::numbers::pi)};
}

double scale_shift(double m, double lambda_psi, double R, double ell0, double ell) {
    return make_scale_change(ell0, ell).alpha * (m * m + 2.0 * lambda_psi - R / 6.0);
}

RemainderFit remainder_fit(double m, double ell, double lo, double hi, int samples) {
    using mp = boost::multiprecision::cpp_bin_float_50;
    if (!(lo > 0.0) || !(hi > lo) || samples < 2) fail_validation("bad_range", "fit range must be positive and ordered");
    const ShortDistance sd = short_distance_expansion(m, ell, 1);
    RemainderFit f;
    for (int i = 0; i < samples; ++i) {
        const double x = lo * std::pow(hi / lo, (i + 0.5) / samples);
        const mp sigma = mp(x / m) * mp(x / m);
        const mp s = sqrt(2 * sigma);
        const mp r = vacuum_kernel_t<mp>(s, mp(m)) - sd.eval_t<mp>(sigma);
        f.sigma.push_back(sigma.convert_to<double>());
        f.remainder.push_back(abs(r).convert_to<double>());
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < f.sigma.size(); ++i) {
        const double lx = std::log(f.sigma[i]), ly = std::log(f.remainder[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(f.sigma.size());
    f.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return f;
}

namespace {

nlohmann::ordered_json poly_json(const Poly<double>& p) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& [e, c] : p) arr.push_back({{"exponent", e}, {"coefficient", c}});
    return arr;
}

}  // namespace

nlohmann::ordered_json to_json(const HadamardCoeffs& c) {
    nlohmann::ordered_json j;
    j["m"] = c.m;
    j["ell"] = c.ell;
    j["ell_seed"] = c.ell_seed;
    j["N"] = c.N;
    j["K"] = c.K;
    j["P"] = c.P;
    auto table = [&](const auto& num, const auto* sym) {
        auto arr = nlohmann::ordered_json::array();
        for (int n = 0; n <= c.N; ++n)
            for (int k = 0; k <= c.K; ++k) {
                const auto& p = num[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
                nlohmann::ordered_json e{{"n", n}, {"k", k}, {"coincidence", constant_term(p)}, {"terms", poly_json(p)}};
                if (sym) {
                    const auto& sp = (*sym)[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
                    const auto it = sp.find(Exponent{0, 0, 0, 0});
                    e["coincidence_exact"] = it == sp.end() ? std::string("0") : it->second.str();
                }
                arr.push_back(std::move(e));
            }
        return arr;
    };
    j["v"] = table(c.numeric.v, c.symbolic ? &c.symbolic->v : nullptr);
    j["w"] = table(c.numeric.w, c.symbolic ? &c.symbolic->w : nullptr);
    auto fp = nlohmann::ordered_json::array();
    for (int k = 0; k <= c.K; ++k) fp.push_back(c.finite_part(k));
    j["finite_part"] = fp;
    return j;
}

nlohmann::ordered_json to_json(const ShortDistance& s) {
    nlohmann::ordered_json j;
    j["prefactor"] = s.prefactor;
    j["order"] = s.order;
    auto put = [&](const char* name, const Symbolic& v) {
        j[name] = {{"exact", v.str()}, {"value", v.eval(s.m, s.ell)}};
    };
    put("inv_sigma", s.inv_sigma);
    put("log0", s.log0);
    put("const0", s.const0);
    if (s.order >= 1) {
        put("log1", s.log1);
        put("const1", s.const1);
    }
    return j;
}

}  // namespace semicl::h4d
