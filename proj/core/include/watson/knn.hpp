#pragma once

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace watson::knn {

enum class FeatureKind { numeric, categorical };
enum class Direction { lower, higher };
enum class Weighting { inverse_distance, uniform };

inline constexpr double kDistanceEpsilon = 1e-6;

struct Range {
    double min = 0.0;
    double max = 0.0;
};

struct Feature {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    double weight = 1.0;
    std::optional<Range> range;  // numeric only; filled from data when absent
};

struct FeatureSchema {
    std::vector<Feature> features;
    Direction direction = Direction::lower;
};

using FeatureValue = std::variant<double, std::string>;

struct PatientRecord {
    std::string id;
    std::vector<FeatureValue> features;  // one per schema feature, same order
    std::string therapy;
    double outcome = 0.0;
};

/// Immutable once loaded; every numeric feature has a range with max > min.
struct Cohort {
    FeatureSchema schema;
    std::vector<PatientRecord> patients;
    std::vector<std::string> therapies;  // sorted, unique

    [[nodiscard]] auto support(std::string_view therapy) const -> std::size_t;
};

struct Neighbor {
    std::reference_wrapper<const PatientRecord> patient;
    double distance = 0.0;
};

struct TherapyPrediction {
    double predicted_outcome = 0.0;
    std::size_t support = 0;
    std::size_t used_k = 0;
};

struct Recommendation {
    std::map<std::string, TherapyPrediction> per_therapy;  // eligible therapies only
    std::string best;
    Direction direction = Direction::lower;
};

struct RecommendParams {
    std::size_t k = 30;
    std::size_t k_min = 5;
    std::optional<Direction> direction;  // defaults to the schema's
    Weighting weighting = Weighting::inverse_distance;
};

/// `{features:[{name, kind, weight?, range?:[min,max]}], direction?}`
[[nodiscard]] auto parse_feature_schema(const nlohmann::json& j) -> FeatureSchema;

/// One row per patient: every schema feature plus `therapy` and `outcome`,
/// and optionally `id`. Ranges missing from the schema come from the data.
/// Errors: SchemaMismatch, InvalidOutcome, DegenerateRange, EmptyCohort.
[[nodiscard]] auto load_cohort(std::string_view csv, FeatureSchema schema) -> Cohort;

/// Feature values keyed by name; `id`, `therapy` and `outcome` are optional.
/// Throws Error{"SchemaMismatch"} with detail.feature naming the culprit.
[[nodiscard]] auto parse_patient(const nlohmann::json& j, const FeatureSchema& schema)
    -> PatientRecord;

/// Weighted Gower distance in [0, 1].
/// Errors: SchemaMismatch, DegenerateRange.
[[nodiscard]] auto distance(const PatientRecord& p, const PatientRecord& q,
                            const FeatureSchema& schema) -> double;

/// The min(k, support) closest recipients of `therapy`, nearest first; equal
/// distances keep cohort order. Throws Error{"UnknownTherapy"}.
[[nodiscard]] auto nearest_for_therapy(const Cohort& cohort, std::string_view therapy,
                                       const PatientRecord& patient, std::size_t k)
    -> std::vector<Neighbor>;

/// Weighted mean outcome with weights 1 / (d + epsilon), or equal weights.
/// Throws Error{"EmptyNeighborList"}.
[[nodiscard]] auto predict_outcome(std::span<const Neighbor> neighbors,
                                   Weighting weighting = Weighting::inverse_distance) -> double;

/// Errors: NoEligibleTherapy, InvalidArgument, SchemaMismatch.
[[nodiscard]] auto recommend(const Cohort& cohort, const PatientRecord& patient,
                             const RecommendParams& params = {}) -> Recommendation;

[[nodiscard]] auto to_string(Direction d) -> std::string_view;
[[nodiscard]] auto parse_direction(std::string_view s) -> Direction;
[[nodiscard]] auto parse_weighting(std::string_view s) -> Weighting;

void to_json(nlohmann::json& j, const Recommendation& r);
void to_json(nlohmann::json& j, const FeatureSchema& s);

}  // namespace watson::knn
