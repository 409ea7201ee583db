#include <benchmark/benchmark.h>

#include <numbers>

#include "semicl/green.hpp"
#include "semicl/kernels.hpp"
#include "semicl/twopoint.hpp"

using namespace semicl;

namespace {

std::vector<CMat> tower(int n, int K) {
    std::vector<CMat> out;
    for (int k = 0; k <= K; ++k) out.push_back(CMat::Random(n, n));
    return out;
}

std::vector<Vec> potentials(int n, int K) {
    std::vector<Vec> pot{Vec()};
    for (int k = 1; k <= K; ++k) pot.push_back(Vec::Random(n));
    return pot;
}

LatticeSpec lattice(int n_x, int n_t) {
    const double L = 2.0 * std::numbers::pi;
    return make_lattice(n_x, L, 0.9 * L / n_x, n_t, 0.0, 0.5, 1.5);
}

void kick(benchmark::State& st, int mode) {
    const int n = static_cast<int>(st.range(0)), K = 2;
    const auto src = tower(n, K);
    auto dst = tower(n, K);
    const auto pot = potentials(n, K);
    const Vec a = Vec::Constant(n, 1.0);
    for (auto _ : st) {
        if (mode == 0)
            reference::kick_rows(dst, src, a, pot, 1e-3, 0.1);
        else
            kernels::kick_rows(dst, src, a, pot, 1e-3, 0.1, mode == 1 ? Exec::serial : Exec::parallel);
        benchmark::DoNotOptimize(dst[0].data());
    }
}

void BM_KickReference(benchmark::State& st) { kick(st, 0); }
void BM_KickSerial(benchmark::State& st) { kick(st, 1); }
void BM_KickParallel(benchmark::State& st) { kick(st, 2); }

void evolve(benchmark::State& st, Exec exec) {
    const LatticeSpec s = lattice(static_cast<int>(st.range(0)), 50);
    const CauchyData2pt d = thermal_data(s, 1.0, 0.5);
    PotentialHistory V;
    for (int n = 0; n <= s.n_t; ++n) V.slices.push_back(Vec::Constant(s.n_x, 0.1));
    for (auto _ : st) benchmark::DoNotOptimize(evolve_covariance(d, s, 1.0, V, 50, exec).blocks.size());
}

void BM_EvolveSerial(benchmark::State& st) { evolve(st, Exec::serial); }
void BM_EvolveParallel(benchmark::State& st) { evolve(st, Exec::parallel); }

void retarded(benchmark::State& st, Exec exec) {
    const LatticeSpec s = lattice(static_cast<int>(st.range(0)), 40);
    for (auto _ : st) benchmark::DoNotOptimize(build_retarded(s, 1.0, {}, slice_points(s, 0), exec).sources().size());
}

void BM_RetardedSerial(benchmark::State& st) { retarded(st, Exec::serial); }
void BM_RetardedParallel(benchmark::State& st) { retarded(st, Exec::parallel); }

}  // namespace

BENCHMARK(BM_KickReference)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_KickSerial)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_KickParallel)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_EvolveSerial)->Arg(32)->Arg(64);
BENCHMARK(BM_EvolveParallel)->Arg(32)->Arg(64);
BENCHMARK(BM_RetardedSerial)->Arg(32)->Arg(64);
BENCHMARK(BM_RetardedParallel)->Arg(32)->Arg(64);

BENCHMARK_MAIN();
