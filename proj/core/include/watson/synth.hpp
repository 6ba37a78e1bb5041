#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace watson::synth {

/// Seeded generator with portable uniform/normal draws (the standard
/// distributions are implementation-defined, which would break byte-stable
/// output across toolchains).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    auto uniform() -> double { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    auto uniform(double lo, double hi) -> double { return lo + (hi - lo) * uniform(); }
    auto normal(double mean, double sd) -> double;
    auto pick(std::span<const double> weights) -> std::size_t;
    auto below(std::size_t n) -> std::size_t { return static_cast<std::size_t>(engine_() % n); }

private:
    std::mt19937_64 engine_;
};

struct SurveyData {
    std::string csv;
    nlohmann::json codebook;
    nlohmann::json truth;  // planted gradients and category weights
};

/// Seven-variable student survey. Choice rank (ordinal, scored 1-4) follows a
/// planted per-department gradient; home state is Zipf-distributed in an
/// order unrelated to its labels; about 1% of residence cells are blank.
[[nodiscard]] auto make_survey(std::size_t size, std::uint64_t seed) -> SurveyData;

struct CohortData {
    std::string csv;
    nlohmann::json schema;
    nlohmann::json truth;  // region rule, best-therapy map and held-out test patients
};

/// Four-therapy patient cohort (age, bmi, sex, smoker). The best therapy is
/// fixed per (age, bmi) quadrant and worth one outcome unit.
[[nodiscard]] auto make_cohort(std::size_t size, std::uint64_t seed,
                               std::size_t test_patients = 200) -> CohortData;

/// Planted best therapy for the cohort generator.
[[nodiscard]] auto planted_best_therapy(double age, double bmi) -> std::string;

}  // namespace watson::synth
