#include "semicl/kernels.hpp"

namespace semicl::kernels {

void kick_rows(std::vector<CMat>& dst, const std::vector<CMat>& src, const Vec& a,
               const std::vector<Vec>& pot, double h, double dx, Exec exec) {
    const int K = static_cast<int>(dst.size());
    const int n = static_cast<int>(src[0].rows());
    const int m = static_cast<int>(src[0].cols());
    const double inv = 1.0 / (dx * dx);
    const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(static) if (par)
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < K; ++k) {
            const cplx* s = src[static_cast<std::size_t>(k)].col(j).data();
            cplx* d = dst[static_cast<std::size_t>(k)].col(j).data();
            for (int i = 0; i < n; ++i) {
                const int ip = (i + 1 == n) ? 0 : i + 1;
                const int im = (i == 0) ? n - 1 : i - 1;
                cplx acc = (s[ip] + s[im] - 2.0 * s[i]) * inv - a[i] * s[i];
                for (int q = 1; q <= k; ++q)
                    acc -= pot[static_cast<std::size_t>(q)][i] * src[static_cast<std::size_t>(k - q)](i, j);
                d[i] += h * acc;
            }
        }
    }
}

void kick_cols(std::vector<CMat>& dst, const std::vector<CMat>& src, const Vec& a,
               const std::vector<Vec>& pot, double h, double dx, Exec exec) {
    const int K = static_cast<int>(dst.size());
    const int n = static_cast<int>(src[0].rows());
    const int m = static_cast<int>(src[0].cols());
    const double inv = 1.0 / (dx * dx);
    const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(static) if (par)
    for (int j = 0; j < m; ++j) {
        const int jp = (j + 1 == m) ? 0 : j + 1;
        const int jm = (j == 0) ? m - 1 : j - 1;
        for (int k = 0; k < K; ++k) {
            const CMat& S = src[static_cast<std::size_t>(k)];
            const cplx* s0 = S.col(j).data();
            const cplx* sp = S.col(jp).data();
            const cplx* sm = S.col(jm).data();
            cplx* d = dst[static_cast<std::size_t>(k)].col(j).data();
            for (int i = 0; i < n; ++i) {
                cplx acc = (sp[i] + sm[i] - 2.0 * s0[i]) * inv - a[j] * s0[i];
                for (int q = 1; q <= k; ++q)
                    acc -= pot[static_cast<std::size_t>(q)][j] * src[static_cast<std::size_t>(k - q)](i, j);
                d[i] += h * acc;
            }
        }
    }
}

void drift(std::vector<CMat>& dst, const std::vector<CMat>& src, double dt, Exec exec) {
    const int K = static_cast<int>(dst.size());
    const int m = static_cast<int>(src[0].cols());
    const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(static) if (par)
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < K; ++k)
            dst[static_cast<std::size_t>(k)].col(j) += dt * src[static_cast<std::size_t>(k)].col(j);
}

}  // namespace semicl::kernels

namespace semicl::reference {

Mat laplacian_matrix(int n, double dx) {
    Mat L = Mat::Zero(n, n);
    const double inv = 1.0 / (dx * dx);
    for (int i = 0; i < n; ++i) {
        L(i, i) -= 2.0 * inv;
        L(i, (i + 1) % n) += inv;
        L(i, (i + n - 1) % n) += inv;
    }
    return L;
}

void kick_rows(std::vector<CMat>& dst, const std::vector<CMat>& src, const Vec& a,
               const std::vector<Vec>& pot, double h, double dx) {
    const int n = static_cast<int>(src[0].rows());
    const CMat L = laplacian_matrix(n, dx).cast<cplx>();
    for (std::size_t k = 0; k < dst.size(); ++k) {
        CMat acc = L * src[k] - a.cast<cplx>().asDiagonal() * src[k];
        for (std::size_t q = 1; q <= k; ++q) acc -= pot[q].cast<cplx>().asDiagonal() * src[k - q];
        dst[k] += h * acc;
    }
}

void kick_cols(std::vector<CMat>& dst, const std::vector<CMat>& src, const Vec& a,
               const std::vector<Vec>& pot, double h, double dx) {
    const int m = static_cast<int>(src[0].cols());
    const CMat L = laplacian_matrix(m, dx).cast<cplx>();
    for (std::size_t k = 0; k < dst.size(); ++k) {
        CMat acc = src[k] * L - src[k] * a.cast<cplx>().asDiagonal();
        for (std::size_t q = 1; q <= k; ++q) acc -= src[k - q] * pot[q].cast<cplx>().asDiagonal();
        dst[k] += h * acc;
    }
}

}  // namespace semicl::reference
