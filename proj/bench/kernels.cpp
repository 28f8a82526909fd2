// Serial reference kernels against their OpenMP counterparts.

#include <memory>

#include <benchmark/benchmark.h>

#include "scengen/bnet.hpp"
#include "scengen/disagg.hpp"
#include "scengen/fixture.hpp"
#include "scengen/pipeline.hpp"
#include "scengen/reference.hpp"
#include "scengen/transform.hpp"
#include "scengen/validate.hpp"

using namespace scengen;

namespace {

struct Setup {
    CopulaFixture fixture;
    std::shared_ptr<const HistoricalPanel> hourly;
    MarginalMap marginals;
    NormalPanel z;
    BayesNet net;
    DisaggModel disagg;
    ScenarioSet monthly;  // generation stations only, 100 scenarios x 12 months
    Eigen::MatrixXd pooled;
};

const Setup& setup() {
    static const Setup s = [] {
        Setup s{make_copula_fixture({10, 20, 30, 1990, 3, 7}), nullptr, {}, {}, {}, {}, {}, {}};
        s.hourly = std::make_shared<const HistoricalPanel>(make_hourly_generation(s.fixture, 7));
        s.marginals = fit_marginals(s.fixture.monthly, 2048);
        s.z = forward(s.fixture.monthly, s.marginals);
        s.net = fit_regression(learn_structure(s.z, {6, 2, 7, true}), s.z);
        s.net.marginals = s.marginals;
        s.disagg = fit_disagg(s.hourly);
        std::vector<std::string> ids;
        for (const auto& st : s.hourly->stations()) ids.push_back(st.id);
        s.monthly = select(simulate(s.net, 100, month_range({2020, 1}, 12), nullptr, 7), ids);
        s.pooled = pooled_rows(simulate(s.net, 400, month_range({2020, 1}, 12), nullptr, 8));
        return s;
    }();
    return s;
}

void BM_Aggregate_Reference(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(reference::aggregate_to_monthly(*setup().hourly));
}
void BM_Aggregate_Parallel(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(aggregate_to_monthly(*setup().hourly));
}

void BM_Forward_Reference(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(reference::forward(setup().fixture.monthly, setup().marginals));
}
void BM_Forward_Parallel(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(forward(setup().fixture.monthly, setup().marginals));
}

void BM_Correlation_Reference(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(reference::correlation(setup().pooled));
}
void BM_Correlation_Parallel(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(correlation_matrix(setup().pooled, true));
}

void BM_Sample_Reference(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(reference::sample(setup().net, 1000, 12, 3));
}
void BM_Sample_Parallel(benchmark::State& st) {
    const auto horizon = month_range({2020, 1}, 12);
    for (auto _ : st) benchmark::DoNotOptimize(sample_network(setup().net, 1000, horizon, nullptr, 3, true));
}

void BM_Disaggregate_Reference(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(reference::disaggregate(setup().monthly, setup().disagg));
}
void BM_Disaggregate_Parallel(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(disaggregate(setup().monthly, setup().disagg, true));
}

}  // namespace

BENCHMARK(BM_Aggregate_Reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Aggregate_Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Forward_Reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Forward_Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Correlation_Reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Correlation_Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Sample_Reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sample_Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Disaggregate_Reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Disaggregate_Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
