#include "watson/freqtable.hpp"
#include "watson/plots.hpp"
#include "watson/seriation.hpp"
#include "watson/synth.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace watson;

namespace {

auto survey_records() -> const RecordSet& {
    static const RecordSet records = parse_csv(synth::make_survey(30000, 7).csv);
    return records;
}

auto survey_table() -> const FreqTable& {
    static const FreqTable table = [] {
        const auto data = synth::make_survey(30000, 7);
        const auto records = parse_csv(data.csv);
        return build_table(records, apply_codebook(infer_schema(records), data.codebook));
    }();
    return table;
}

auto random_matrix(std::size_t n, std::size_t m, std::uint64_t seed) -> ProportionMatrix {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ProportionMatrix pm;
    pm.bar_variable = "bar";
    pm.color_variable = "color";
    for (std::size_t i = 0; i < n; ++i) {
        pm.bar_labels.push_back("r" + std::to_string(i));
        std::vector<double> row(m);
        double sum = 0.0;
        for (auto& x : row) {
            x = u(rng);
            sum += x;
        }
        for (auto& x : row) {
            x /= sum;
        }
        pm.rows.push_back(std::move(row));
        pm.bar_totals.push_back(1);
    }
    for (std::size_t j = 0; j < m; ++j) {
        pm.color_labels.push_back("c" + std::to_string(j));
    }
    return pm;
}

void BM_ParseCsv30k(benchmark::State& state) {
    const auto csv = synth::make_survey(30000, 7).csv;
    for (auto _ : state) {
        benchmark::DoNotOptimize(parse_csv(csv));
    }
}
BENCHMARK(BM_ParseCsv30k)->Unit(benchmark::kMillisecond);

void BM_BuildTable30k(benchmark::State& state) {
    const auto& records = survey_records();
    const auto schema = infer_schema(records);
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_table(records, schema));
    }
}
BENCHMARK(BM_BuildTable30k)->Unit(benchmark::kMillisecond);

void BM_MarginalizePair(benchmark::State& state) {
    const auto& table = survey_table();
    const std::vector<std::string> keep{"department", "state"};
    for (auto _ : state) {
        benchmark::DoNotOptimize(marginalize(table, keep));
    }
}
BENCHMARK(BM_MarginalizePair);

void BM_SeriateExact(benchmark::State& state) {
    const auto m = random_matrix(static_cast<std::size_t>(state.range(0)), 5, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(seriate_exact(m));
    }
}
BENCHMARK(BM_SeriateExact)->DenseRange(6, 10, 2)->Unit(benchmark::kMicrosecond);

void BM_SeriateHeuristic(benchmark::State& state) {
    const auto m = random_matrix(static_cast<std::size_t>(state.range(0)), 5, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(seriate_heuristic(m));
    }
}
BENCHMARK(BM_SeriateHeuristic)->Arg(12)->Arg(30)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_RenderPanel2(benchmark::State& state) {
    const auto& table = survey_table();
    for (auto _ : state) {
        PlotSpec spec;
        spec.kind = PlotKind::panel2;
        spec.variables = {"department", "choice"};
        benchmark::DoNotOptimize(render_plot(table, spec));
    }
}
BENCHMARK(BM_RenderPanel2)->Unit(benchmark::kMicrosecond);

void BM_RenderMultipanel3(benchmark::State& state) {
    const auto& table = survey_table();
    for (auto _ : state) {
        PlotSpec spec;
        spec.kind = PlotKind::multipanel3;
        spec.variables = {"department", "choice", "sex"};
        benchmark::DoNotOptimize(render_plot(table, spec));
    }
}
BENCHMARK(BM_RenderMultipanel3)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
