#include <benchmark/benchmark.h>

#include <filesystem>

#include "thermoscope/detection/reference_mini.hpp"
#include "thermoscope/eval/voc_eval.hpp"
#include "thermoscope/random.hpp"
#include "thermoscope/style/features.hpp"
#include "thermoscope/style/generator.hpp"

using namespace thermoscope;

namespace {

Tensor noise(std::vector<int> shape, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = uniform01(rng);
    return t;
}

void BM_Gram(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    const style::FeatureMap f{noise({c, 32, 32}, 1), 1};
    for (auto _ : state) benchmark::DoNotOptimize(style::gram(f));
}
BENCHMARK(BM_Gram)->Arg(64)->Arg(128)->Arg(256);

void BM_StyleTransferForward(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto gen = style::Generator::create(style::GeneratorArch{}, 1);
    style::StyleTargets targets;
    targets.comatch_target = gen.style_gram(noise({3, 64, 64}, 2));
    const Image content = noise({3, side, side}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(style::generator_forward(content, gen, targets));
}
BENCHMARK(BM_StyleTransferForward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_DetectorInference(benchmark::State& state) {
    auto spec = detection::paper_defaults(detection::Architecture::reference_mini, detection::Backbone::mini);
    spec.class_set = {"car", "bicycle", "person"};
    const auto model = detection::ReferenceMini::create(spec);
    const Image input = noise({3, spec.input_size, spec.input_size}, 4);
    for (auto _ : state) benchmark::DoNotOptimize(model.detect(input, "bench", 640, 512, 0.01));
}
BENCHMARK(BM_DetectorInference)->Unit(benchmark::kMillisecond);

void BM_AveragePrecision(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(5);
    std::vector<detection::Detection> dets;
    eval::GroundTruthByImage gts;
    for (int i = 0; i < n; ++i) {
        const std::string id = "im" + std::to_string(i % 50);
        const double x = 100 * uniform01(rng), y = 100 * uniform01(rng);
        dets.push_back({id, {x, y, x + 20, y + 30}, "car", uniform01(rng)});
        if (i % 3 == 0) gts[id].push_back({{x + 2, y, x + 22, y + 28}, "car", false});
    }
    for (auto _ : state) benchmark::DoNotOptimize(eval::average_precision(dets, gts));
}
BENCHMARK(BM_AveragePrecision)->Arg(1000)->Arg(10000);

}  // namespace
BENCHMARK_MAIN();
