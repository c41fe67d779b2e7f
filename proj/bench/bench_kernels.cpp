// Compares the OpenMP kernels with their serial references on a synthetic
// kNN graph. Usage: bench_kernels [n_nodes] [features] [repeats]
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "fgrnn/data.hpp"
#include "fgrnn/dense.hpp"
#include "fgrnn/gconv.hpp"
#include "fgrnn/graph.hpp"
#include "fgrnn/rng.hpp"
#include "fgrnn/sparse.hpp"

namespace {

template <typename Fn>
double time_ms(int repeats, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < repeats; ++r) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / repeats;
}

fgrnn::DenseMatrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    fgrnn::SplitMix64 rng(seed);
    fgrnn::DenseMatrix m(r, c);
    for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 4096;
    const std::size_t f = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 16;
    const int repeats = argc > 3 ? std::atoi(argv[3]) : 20;

    fgrnn::SyntheticConfig cfg;
    cfg.n_nodes = n;
    cfg.n_frames = 1;
    const auto data = fgrnn::generate_synthetic(cfg);
    const auto lap = fgrnn::build_laplacians(data.graph);
    const auto x = random_matrix(n, f, 7);
    const auto w = random_matrix(f, f, 8);
    const auto big = random_matrix(512, 512, 9);

    std::printf("threads=%d nodes=%zu features=%zu nnz=%zu\n", omp_get_max_threads(), n, f, lap.scaled.nnz());

    fgrnn::DenseMatrix sink;
    const double spmm_par = time_ms(repeats, [&] { sink = fgrnn::spmm(lap.scaled, x); });
    const double spmm_ser = time_ms(repeats, [&] { sink = fgrnn::serial::spmm(lap.scaled, x); });
    std::printf("spmm         openmp %9.3f ms   serial %9.3f ms   speedup %.2fx\n", spmm_par, spmm_ser,
                spmm_ser / spmm_par);

    const double mm_par = time_ms(std::max(1, repeats / 10), [&] { sink = fgrnn::matmul(big, big); });
    const double mm_ser = time_ms(std::max(1, repeats / 10), [&] { sink = fgrnn::serial::matmul(big, big); });
    std::printf("matmul 512^2 openmp %9.3f ms   serial %9.3f ms   speedup %.2fx\n", mm_par, mm_ser, mm_ser / mm_par);

    const fgrnn::ChebFilter filt{{0.5, -0.25, 0.125, 0.0625, 0.03125}};
    const double cheb = time_ms(repeats, [&] { sink = fgrnn::cheb_conv(lap, x, filt); });
    const double fo = time_ms(repeats, [&] { sink = fgrnn::first_order_conv(lap, x, {w}); });
    std::printf("cheb_conv K=5       %9.3f ms\nfirst_order_conv    %9.3f ms\n", cheb, fo);

    const bool same = fgrnn::spmm(lap.scaled, x) == fgrnn::serial::spmm(lap.scaled, x) &&
                      fgrnn::matmul(big, big) == fgrnn::serial::matmul(big, big);
    std::printf("bitwise agreement with serial references: %s\n", same ? "yes" : "NO");
    return same ? 0 : 1;
}
