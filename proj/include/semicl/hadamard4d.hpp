#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "json.hpp"

/// Flat 4D Hadamard machinery: Minkowski kernel, short-distance expansion, recursion, scale law.
namespace semicl::h4d {

using Rat = boost::rational<long long>;

/// Euler-Mascheroni constant, 30 significant digits.
inline constexpr const char* kEulerGamma = "0.577215664901532860606512090082";

template <class T>
T euler_gamma() {
    if constexpr (std::is_floating_point_v<T>)
        return static_cast<T>(0.577215664901532860606512090082L);
    else
        return T(kEulerGamma);
}

template <class T>
T boost_pi() {
    if constexpr (std::is_floating_point_v<T>)
        return static_cast<T>(3.14159265358979323846264338327950288L);
    else
        return T("3.14159265358979323846264338327950288419716939937510582097");
}

/// K1 by its small-argument series; any floating type with log.
template <class T>
T bessel_k1_series(const T& z) {
    using std::abs;
    using std::log;
    const T g = euler_gamma<T>();
    const T half = z / 2;
    const T y = half * half;
    const T lz = log(half);
    const T eps = std::numeric_limits<T>::epsilon();
    T t = half;  // (z/2)^{2k+1} / (k! (k+1)!)
    T harm_k = 0;
    T harm_k1 = 1;
    T sum_i = 0;
    T sum_p = 0;
    for (int k = 0; k < 500; ++k) {
        sum_i += t;
        const T dp = t * (harm_k + harm_k1 - 2 * g);
        sum_p += dp;
        if (k > 2 && abs(t) < eps * abs(sum_i) && abs(dp) < eps * abs(sum_p)) break;
        t *= y / T((k + 1) * (k + 2));
        harm_k = harm_k1;
        harm_k1 += T(1) / T(k + 2);
    }
    return 1 / z + lz * sum_i - sum_p / 2;
}

/// K1 by Steed's continued fraction; intended for z >= 2.
double bessel_k1_cf2(double z);

/// Series below 2, continued fraction above.
double bessel_k1(double z);

/// Trapezoid rule for the integral of exp(-z cosh t) cosh t over t >= 0.
double bessel_k1_quadrature(double z, double h = 0.01);

/// m K1(m s) / (4 pi^2 s), s = sqrt(r^2 + eps^2).
double vacuum_kernel(double r, double eps, double m);

template <class T>
T vacuum_kernel_t(const T& s, const T& m) {
    const T pi = boost_pi<T>();
    return m * bessel_k1_series(T(m * s)) / (4 * pi * pi * s);
}

/**
 * Exact value sum_p (m^2)^p [a + b gamma + c ln2 + d L] with rational a..d and
 * L = ln(m^2 ell^2). Products need one rational factor.
 */
struct Symbolic {
    std::map<int, std::array<Rat, 4>> terms;

    Symbolic() = default;
    Symbolic(Rat r);
    static Symbolic m2_power(int p, Rat c = 1);
    static Symbolic basis(int i, Rat c = 1);  ///< 0: 1, 1: gamma, 2: ln2, 3: L

    bool is_rational_in_m2() const;
    bool is_zero() const { return terms.empty(); }

    Symbolic& operator+=(const Symbolic& o);
    Symbolic& operator-=(const Symbolic& o);
    Symbolic& operator*=(const Rat& r);
    Symbolic operator-() const;

    double eval(double m, double ell) const;
    template <class T>
    T eval_t(const T& m, const T& ell) const;
    std::string str() const;

    bool operator==(const Symbolic& o) const { return terms == o.terms; }
};

Symbolic operator+(Symbolic a, const Symbolic& b);
Symbolic operator-(Symbolic a, const Symbolic& b);
Symbolic operator*(const Symbolic& a, const Symbolic& b);
Symbolic operator*(Symbolic a, const Rat& r);

using Exponent = std::array<int, 4>;
template <class T>
using Poly = std::map<Exponent, T>;

/// One psi_k as a polynomial in x - y about the base point.
struct PsiPolynomial {
    Poly<double> numeric;
    std::optional<Poly<Rat>> exact;  ///< present when every coefficient is rational
    int known_degree = -1;           ///< -1: exact polynomial; otherwise Taylor data known to this degree

    static PsiPolynomial zero() { return {{}, Poly<Rat>{}, -1}; }
    static PsiPolynomial constant(double c);
    void add_term(Exponent e, double c);
    void add_term(Exponent e, Rat c);
    int degree() const;
};

template <class T>
struct CoeffTable {
    std::vector<std::vector<Poly<T>>> v;  ///< [n][k]
    std::vector<std::vector<Poly<T>>> w;
};

struct HadamardCoeffs {
    double m = 1.0;
    double ell = 1.0;
    double ell_seed = 1.0;  ///< scale inside the w_{0,0} convention
    int N = 0, K = 0, P = 0;
    CoeffTable<double> numeric;
    std::optional<CoeffTable<Symbolic>> symbolic;

    /// Coincidence values (rank-0 coefficients).
    double v0(int n, int k) const;
    double w0(int n, int k) const;
    /// d^p / dxi^{a_1} ... dxi^{a_p} of v_{n,k} or w_{n,k} at coincidence.
    double v_tensor(int n, int k, const std::vector<int>& idx) const;
    double w_tensor(int n, int k, const std::vector<int>& idx) const;
    /// (1 / 8 pi^2) [w_{0,k} - v_{0,k} ln ell^2] at coincidence.
    double finite_part(int k) const;
};

/**
 * Flat-space recursion for P = box - m^2 - 2 lambda psi, psi = sum lambda^j psi_j,
 * truncated to sigma order N, lambda order K and Taylor rank P. Symbolic
 * coefficients are also produced when every psi is rational.
 */
HadamardCoeffs recursion_coeffs(double m, const std::vector<PsiPolynomial>& psi, int N, int K, int P, double ell,
                                double ell_seed = 0.0);

/// Symbolic run with m^2 and L kept as symbols; psi must be rational.
CoeffTable<Symbolic> recursion_symbolic(const std::vector<PsiPolynomial>& psi, int N, int K, int P);

/// Vacuum expansion coefficients, overall factor 1 / (8 pi^2) kept separate.
struct ShortDistance {
    int order = 0;
    Symbolic inv_sigma;
    Symbolic log0, const0, log1, const1;
    double m = 1.0, ell = 1.0;
    double prefactor = 0.0;

    /// prefactor * [1/sigma + (v0 + v1 sigma) ln(sigma/ell^2) + w0 + w1 sigma]
    double eval(double sigma) const;
    template <class T>
    T eval_t(const T& sigma) const;
};

ShortDistance short_distance_expansion(double m, double ell, int order);

struct ScaleChange {
    double ell0 = 1.0;
    double ell = 1.0;
    double alpha = 0.0;
};

/// alpha = ln(ell0 / ell) / (8 pi^2).
ScaleChange make_scale_change(double ell0, double ell);

/// alpha (m^2 + 2 lambda psi - R / 6).
double scale_shift(double m, double lambda_psi, double R, double ell0, double ell);

struct RemainderFit {
    double exponent = 0.0;
    std::vector<double> sigma;
    std::vector<double> remainder;
};

/// Fit of log|kernel - expansion| against log sigma over m sqrt(sigma) in (lo, hi), in 50-digit arithmetic.
RemainderFit remainder_fit(double m, double ell, double lo = 1e-4, double hi = 1e-1, int samples = 12);

nlohmann::ordered_json to_json(const HadamardCoeffs& c);
nlohmann::ordered_json to_json(const ShortDistance& s);

template <class T>
T Symbolic::eval_t(const T& m, const T& ell) const {
    using std::log;
    const T g = euler_gamma<T>();
    const T l2 = log(T(2));
    const T L = log(m * m * ell * ell);
    T acc = 0;
    for (const auto& [p, c] : terms) {
        T mp = 1;
        for (int i = 0; i < p; ++i) mp *= m * m;
        auto r = [](const Rat& x) { return T(x.numerator()) / T(x.denominator()); };
        acc += mp * (r(c[0]) + r(c[1]) * g + r(c[2]) * l2 + r(c[3]) * L);
    }
    return acc;
}

template <class T>
T ShortDistance::eval_t(const T& sigma) const {
    using std::log;
    const T M(m), E(ell);
    const T pi = boost_pi<T>();
    const T lg = log(sigma / (E * E));
    T acc = 1 / sigma + log0.eval_t(M, E) * lg + const0.eval_t(M, E);
    if (order >= 1) acc += sigma * (log1.eval_t(M, E) * lg + const1.eval_t(M, E));
    return acc / (8 * pi * pi);
}

}  // namespace semicl::h4d
