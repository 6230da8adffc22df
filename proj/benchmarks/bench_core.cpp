#include <benchmark/benchmark.h>

#include <random>

#include "obbtable/augment.hpp"
#include "obbtable/geometry.hpp"
#include "obbtable/raster.hpp"

using namespace obbtable;
using geometry::Quad;

namespace {

std::vector<std::pair<Quad, Quad>> random_pairs(std::size_t n) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> pos(20.0, 80.0);
    std::uniform_real_distribution<double> rad(3.0, 20.0);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * 3.14159265358979323846);
    auto quad = [&] {
        const double cx = pos(rng), cy = pos(rng), rx = rad(rng), ry = rad(rng);
        double a = ang(rng);
        Quad q;
        for (int i = 0; i < 4; ++i) {
            a += 0.8 + 0.5 * (ang(rng) / 6.0);
            q.v[i] = {cx + rx * std::cos(a), cy + ry * std::sin(a)};
        }
        if (geometry::signed_area(q) < 0) std::swap(q.v[1], q.v[3]);
        return q;
    };
    std::vector<std::pair<Quad, Quad>> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(quad(), quad());
    return out;
}

void BM_RotatedIoU(benchmark::State& state) {
    const auto pairs = random_pairs(1024);
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& [a, b] = pairs[i++ & 1023];
        benchmark::DoNotOptimize(geometry::rotated_iou(a, b));
    }
}
BENCHMARK(BM_RotatedIoU);

void BM_ClipConvex(benchmark::State& state) {
    const auto pairs = random_pairs(1024);
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& [a, b] = pairs[i++ & 1023];
        std::vector<geometry::Point> subject(a.v.begin(), a.v.end());
        std::vector<geometry::Point> clip(b.v.begin(), b.v.end());
        benchmark::DoNotOptimize(geometry::clip_convex(subject, clip));
    }
}
BENCHMARK(BM_ClipConvex);

void BM_WarpAffine(benchmark::State& state) {
    raster::Raster img(640, 480, 3, 128);
    const auto bounded = augment::adapt_bounds(
        augment::rotation_matrix(augment::RotationSpec::for_image(33.0, 640, 480)), 640, 480);
    raster::WarpOptions opts;
    opts.interpolation = state.range(0) == 0 ? raster::Interpolation::Nearest
                                             : raster::Interpolation::Bilinear;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            raster::warp_affine(img, bounded.map, bounded.new_width, bounded.new_height, opts));
    }
}
BENCHMARK(BM_WarpAffine)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
