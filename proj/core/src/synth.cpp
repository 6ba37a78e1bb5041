#include "watson/synth.hpp"

#include "watson/error.hpp"
#include "watson/ingest.hpp"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

namespace watson::synth {

namespace {

constexpr std::array<std::string_view, 8> kDepartments = {
    "Agriculture", "Arts", "Business", "Education", "Engineering", "Law", "Medicine", "Science"};
// Latent position of each department along the choice-rank gradient. Not
// monotone in label order, so an alphabetical display hides the pattern.
constexpr std::array<double, 8> kDepartmentGradient = {0.95, 0.70, 0.40, 0.85,
                                                       0.10, 0.25, 0.00, 0.55};
constexpr std::array<double, 8> kDepartmentWeight = {0.6, 1.0, 1.6, 1.1, 1.8, 0.9, 1.4, 1.2};
constexpr std::array<double, 8> kDepartmentFemale = {0.35, 0.65, 0.45, 0.75,
                                                     0.25, 0.55, 0.60, 0.50};

constexpr std::array<std::string_view, 4> kChoices = {"1st choice", "2nd choice", "3rd choice",
                                                      "Higher"};
constexpr std::array<std::string_view, 4> kYears = {"Year 1", "Year 2", "Year 3", "Year 4"};
constexpr std::array<double, 4> kYearWeight = {0.32, 0.26, 0.22, 0.20};
constexpr std::array<std::string_view, 4> kAgeBands = {"17-19", "20-22", "23-25", "26+"};
constexpr std::array<std::string_view, 3> kResidence = {"Urban", "Rural", "Abroad"};
constexpr std::array<double, 3> kResidenceWeight = {0.55, 0.35, 0.10};
constexpr double kMissingResidence = 0.01;

constexpr std::array<std::string_view, 12> kStates = {
    "Blue Nile", "Gedaref",     "Gezira",     "Kassala",   "Khartoum",    "North Darfur",
    "North Kordofan", "Northern", "Red Sea", "River Nile", "Sennar", "White Nile"};
// Zipf rank of each state (1 = most common), scrambled relative to labels.
constexpr std::array<int, 12> kStateRank = {7, 9, 2, 5, 1, 11, 4, 12, 8, 3, 10, 6};

constexpr std::array<std::string_view, 4> kTherapies = {"T1", "T2", "T3", "T4"};
constexpr double kAgeSplit = 50.0;
constexpr double kBmiSplit = 30.0;
constexpr double kTherapyBenefit = 1.0;
constexpr double kOutcomeNoise = 0.25;

auto choice_probabilities(double g) -> std::array<double, 4> {
    return {0.70 - 0.50 * g, 0.20, 0.05 + 0.15 * g, 0.05 + 0.35 * g};
}

auto labels(std::span<const std::string_view> values) -> nlohmann::json {
    auto out = nlohmann::json::array();
    for (const auto v : values) {
        out.push_back(v);
    }
    return out;
}

void require_size(std::size_t size) {
    if (size < 1) {
        throw Error("InvalidArgument", "size must be at least 1", {{"size", size}});
    }
}

}  // namespace

auto Rng::normal(double mean, double sd) -> double {
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

auto Rng::pick(std::span<const double> weights) -> std::size_t {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double target = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        target -= weights[i];
        if (target < 0.0) {
            return i;
        }
    }
    return weights.size() - 1;
}

auto make_survey(std::size_t size, std::uint64_t seed) -> SurveyData {
    require_size(size);
    Rng rng(seed);
    std::array<double, 12> state_weight{};
    for (std::size_t s = 0; s < kStates.size(); ++s) {
        state_weight[s] = 1.0 / static_cast<double>(kStateRank[s]);
    }

    RecordSet records;
    records.column_names = {"department", "sex",   "year",    "choice",
                            "residence",  "state", "age_band"};
    records.rows.reserve(size);
    for (std::size_t r = 0; r < size; ++r) {
        const std::size_t dept = rng.pick(kDepartmentWeight);
        const double female = kDepartmentFemale[dept];
        const std::array<double, 2> sex_weight{female, 1.0 - female};
        const std::size_t sex = rng.pick(sex_weight);
        const std::size_t year = rng.pick(kYearWeight);
        const auto choice_weight = choice_probabilities(kDepartmentGradient[dept]);
        const std::size_t choice = rng.pick(choice_weight);
        std::string residence;
        if (rng.uniform() >= kMissingResidence) {
            residence = kResidence[rng.pick(kResidenceWeight)];
        }
        const std::size_t state = rng.pick(state_weight);
        // Age band tracks year of study with some spread.
        std::array<double, 4> age_weight{};
        for (std::size_t a = 0; a < age_weight.size(); ++a) {
            const double gap = std::abs(static_cast<double>(a) - static_cast<double>(year) * 0.8);
            age_weight[a] = std::exp(-gap * gap);
        }
        const std::size_t age = rng.pick(age_weight);
        records.rows.push_back({std::string(kDepartments[dept]), sex == 0 ? "Female" : "Male",
                                std::string(kYears[year]), std::string(kChoices[choice]),
                                std::move(residence), std::string(kStates[state]),
                                std::string(kAgeBands[age])});
    }

    SurveyData out;
    out.csv = write_csv(records);
    out.codebook = {
        {"choice", {{"order", labels(kChoices)}, {"scores", {1, 2, 3, 4}}}},
        {"year", {{"order", labels(kYears)}, {"scores", {1, 2, 3, 4}}}},
        {"age_band", {{"order", labels(kAgeBands)}}},
    };
    auto gradient = nlohmann::json::object();
    auto choice_table = nlohmann::json::object();
    for (std::size_t d = 0; d < kDepartments.size(); ++d) {
        gradient[std::string(kDepartments[d])] = kDepartmentGradient[d];
        const auto p = choice_probabilities(kDepartmentGradient[d]);
        choice_table[std::string(kDepartments[d])] = p;
    }
    auto states = nlohmann::json::object();
    for (std::size_t s = 0; s < kStates.size(); ++s) {
        states[std::string(kStates[s])] = kStateRank[s];
    }
    out.truth = {
        {"kind", "survey"},
        {"size", size},
        {"seed", seed},
        {"department_gradient", gradient},
        {"choice_probabilities", choice_table},
        {"choice_order", labels(kChoices)},
        {"state_zipf_rank", states},
        {"missing_residence_rate", kMissingResidence},
    };
    return out;
}

auto planted_best_therapy(double age, double bmi) -> std::string {
    const std::size_t quadrant = (age >= kAgeSplit ? 2U : 0U) + (bmi >= kBmiSplit ? 1U : 0U);
    return std::string(kTherapies[quadrant]);
}

auto make_cohort(std::size_t size, std::uint64_t seed, std::size_t test_patients) -> CohortData {
    require_size(size);
    Rng rng(seed);
    struct Draw {
        double age;
        double bmi;
        std::string sex;
        std::string smoker;
    };
    auto draw_patient = [&] {
        Draw d;
        d.age = std::round(rng.uniform(20.0, 80.0) * 10.0) / 10.0;
        d.bmi = std::round(rng.uniform(18.0, 42.0) * 10.0) / 10.0;
        d.sex = rng.uniform() < 0.5 ? "F" : "M";
        d.smoker = rng.uniform() < 0.3 ? "yes" : "no";
        return d;
    };
    auto baseline = [](const Draw& d) {
        return 7.5 + 0.01 * (d.age - kAgeSplit) + 0.03 * (d.bmi - kBmiSplit);
    };

    RecordSet records;
    records.column_names = {"id", "age", "bmi", "sex", "smoker", "therapy", "outcome"};
    records.rows.reserve(size);
    for (std::size_t r = 0; r < size; ++r) {
        const auto d = draw_patient();
        const std::size_t t = r % kTherapies.size();
        const bool best = planted_best_therapy(d.age, d.bmi) == kTherapies[t];
        const double outcome =
            baseline(d) - (best ? kTherapyBenefit : 0.0) + rng.normal(0.0, kOutcomeNoise);
        records.rows.push_back({fmt::format("p{:05d}", r), fmt::format("{:.1f}", d.age),
                                fmt::format("{:.1f}", d.bmi), d.sex, d.smoker,
                                std::string(kTherapies[t]), fmt::format("{:.3f}", outcome)});
    }

    auto tests = nlohmann::json::array();
    for (std::size_t i = 0; i < test_patients; ++i) {
        const auto d = draw_patient();
        tests.push_back({{"id", fmt::format("test{:03d}", i)},
                         {"features", {{"age", d.age}, {"bmi", d.bmi}, {"sex", d.sex},
                                       {"smoker", d.smoker}}},
                         {"best", planted_best_therapy(d.age, d.bmi)}});
    }

    CohortData out;
    out.csv = write_csv(records);
    out.schema = {
        {"features",
         {{{"name", "age"}, {"kind", "numeric"}, {"weight", 1.0}, {"range", {20.0, 80.0}}},
          {{"name", "bmi"}, {"kind", "numeric"}, {"weight", 1.0}, {"range", {18.0, 42.0}}},
          {{"name", "sex"}, {"kind", "categorical"}, {"weight", 0.1}},
          {{"name", "smoker"}, {"kind", "categorical"}, {"weight", 0.1}}}},
        {"direction", "lower"},
    };
    out.truth = {
        {"kind", "cohort"},
        {"size", size},
        {"seed", seed},
        {"therapies", labels(kTherapies)},
        {"rule",
         {{"age_split", kAgeSplit},
          {"bmi_split", kBmiSplit},
          {"best",
           {{"age<50,bmi<30", "T1"}, {"age<50,bmi>=30", "T2"}, {"age>=50,bmi<30", "T3"},
            {"age>=50,bmi>=30", "T4"}}},
          {"benefit", kTherapyBenefit},
          {"noise_sd", kOutcomeNoise},
          {"direction", "lower"}}},
        {"test_patients", tests},
    };
    return out;
}

}  // namespace watson::synth
