// Serial reference vs OpenMP/GEMM kernels on the two working geometries
// (11x11 DCT dictionary on a 64x64 crop, desk CSCNet bank on a 16x16 crop).
#include <benchmark/benchmark.h>

#include <vector>

#include "csc/kernels.hpp"
#include "csc/rng.hpp"

namespace k = csc::kernels;

namespace {

struct Case {
    k::Geometry g;
    std::vector<double> atoms, coeffs, image, grad;
};

Case make_case(std::size_t hw, std::size_t side, std::size_t m, std::size_t q) {
    Case c;
    c.g = {hw, hw, side, side, m, q, 0, 0};
    csc::CounterRng rng(42, csc::Stream::test);
    c.atoms.resize(c.g.signal_dim() * m);
    c.coeffs.resize(m * c.g.sites());
    c.image.resize(c.g.pixels());
    c.grad.resize(c.g.signal_dim() * m);
    for (auto& v : c.atoms) v = rng.normal();
    for (auto& v : c.coeffs) v = rng.normal();
    for (auto& v : c.image) v = rng.normal();
    return c;
}

// args: image side, filter side, atoms, stride
void geometries(benchmark::internal::Benchmark* b) {
    b->Args({64, 11, 256, 1})->Args({64, 11, 256, 8})->Args({16, 5, 16, 4})->Args({128, 11, 175, 8});
}

Case from_state(const benchmark::State& st) {
    return make_case(static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)),
                     static_cast<std::size_t>(st.range(2)), static_cast<std::size_t>(st.range(3)));
}

template <auto Fn>
void bm_synth(benchmark::State& st) {
    Case c = from_state(st);
    for (auto _ : st) {
        Fn(c.g, c.atoms, c.coeffs, c.image);
        benchmark::DoNotOptimize(c.image.data());
    }
}

template <auto Fn>
void bm_analyze(benchmark::State& st) {
    Case c = from_state(st);
    for (auto _ : st) {
        Fn(c.g, c.atoms, c.image, c.coeffs);
        benchmark::DoNotOptimize(c.coeffs.data());
    }
}

template <auto Fn>
void bm_grad(benchmark::State& st) {
    Case c = from_state(st);
    for (auto _ : st) {
        Fn(c.g, c.image, c.coeffs, c.grad);
        benchmark::DoNotOptimize(c.grad.data());
    }
}

}  // namespace

BENCHMARK(bm_synth<k::serial::synthesize>)->Name("synthesize/serial")->Apply(geometries);
BENCHMARK(bm_synth<k::parallel::synthesize>)->Name("synthesize/parallel")->Apply(geometries);
BENCHMARK(bm_analyze<k::serial::analyze>)->Name("analyze/serial")->Apply(geometries);
BENCHMARK(bm_analyze<k::parallel::analyze>)->Name("analyze/parallel")->Apply(geometries);
BENCHMARK(bm_grad<k::serial::filter_gradient>)->Name("filter_gradient/serial")->Apply(geometries);
BENCHMARK(bm_grad<k::parallel::filter_gradient>)->Name("filter_gradient/parallel")->Apply(geometries);

BENCHMARK_MAIN();
