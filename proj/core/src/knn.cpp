#include "watson/knn.hpp"

#include "watson/error.hpp"
#include "watson/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

namespace watson::knn {

namespace {

auto parse_number(std::string_view text) -> std::optional<double> {
    while (!text.empty() && text.front() == ' ') {
        text.remove_prefix(1);
    }
    while (!text.empty() && text.back() == ' ') {
        text.remove_suffix(1);
    }
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty() ||
        !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

auto mismatch(const std::string& feature, const std::string& message) -> Error {
    return Error("SchemaMismatch", message, {{"feature", feature}});
}

auto require_range(const Feature& f) -> Range {
    if (!f.range || !(f.range->max > f.range->min)) {
        throw Error("DegenerateRange",
                    "numeric feature '" + f.name + "' needs a range with max > min",
                    {{"feature", f.name}});
    }
    return *f.range;
}

auto better(double a, double b, Direction direction) -> bool {
    return direction == Direction::lower ? a < b : a > b;
}

}  // namespace

auto Cohort::support(std::string_view therapy) const -> std::size_t {
    return static_cast<std::size_t>(std::count_if(
        patients.begin(), patients.end(), [&](const PatientRecord& p) { return p.therapy == therapy; }));
}

auto to_string(Direction d) -> std::string_view { return d == Direction::lower ? "lower" : "higher"; }

auto parse_direction(std::string_view s) -> Direction {
    if (s == "lower") {
        return Direction::lower;
    }
    if (s == "higher") {
        return Direction::higher;
    }
    throw Error("InvalidArgument", "direction must be 'lower' or 'higher'", {{"direction", s}});
}

auto parse_weighting(std::string_view s) -> Weighting {
    if (s == "inverse_distance") {
        return Weighting::inverse_distance;
    }
    if (s == "uniform") {
        return Weighting::uniform;
    }
    throw Error("InvalidArgument", "weighting must be 'inverse_distance' or 'uniform'",
                {{"weighting", s}});
}

auto parse_feature_schema(const nlohmann::json& j) -> FeatureSchema {
    FeatureSchema schema;
    try {
        std::unordered_set<std::string> names;
        for (const auto& f : j.at("features")) {
            Feature feature;
            feature.name = f.at("name").get<std::string>();
            const auto kind = f.at("kind").get<std::string>();
            if (kind == "numeric") {
                feature.kind = FeatureKind::numeric;
            } else if (kind == "categorical") {
                feature.kind = FeatureKind::categorical;
            } else {
                throw Error("InvalidSchema", "feature kind must be numeric or categorical",
                            {{"feature", feature.name}});
            }
            feature.weight = f.value("weight", 1.0);
            if (!(feature.weight > 0.0) || !std::isfinite(feature.weight)) {
                throw Error("InvalidSchema", "feature weight must be positive",
                            {{"feature", feature.name}});
            }
            if (f.contains("range") && !f.at("range").is_null()) {
                const auto r = f.at("range").get<std::vector<double>>();
                if (r.size() != 2) {
                    throw Error("InvalidSchema", "range must be [min, max]",
                                {{"feature", feature.name}});
                }
                feature.range = Range{r[0], r[1]};
                require_range(feature);
            }
            if (!names.insert(feature.name).second) {
                throw Error("InvalidSchema", "duplicate feature '" + feature.name + "'",
                            {{"feature", feature.name}});
            }
            schema.features.push_back(std::move(feature));
        }
        if (schema.features.empty()) {
            throw Error("InvalidSchema", "schema needs at least one feature");
        }
        if (j.contains("direction")) {
            schema.direction = parse_direction(j.at("direction").get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("InvalidSchema", e.what());
    }
    return schema;
}

auto load_cohort(std::string_view csv, FeatureSchema schema) -> Cohort {
    const auto records = parse_csv(csv);
    std::vector<std::size_t> columns;
    for (const auto& f : schema.features) {
        const auto col = records.column_index(f.name);
        if (!col) {
            throw mismatch(f.name, "cohort has no column '" + f.name + "'");
        }
        columns.push_back(*col);
    }
    const auto therapy_col = records.column_index("therapy");
    const auto outcome_col = records.column_index("outcome");
    if (!therapy_col || !outcome_col) {
        throw mismatch(therapy_col ? "outcome" : "therapy", "cohort needs therapy and outcome columns");
    }
    const auto id_col = records.column_index("id");
    if (records.rows.empty()) {
        throw Error("EmptyCohort", "cohort has no patients");
    }

    Cohort cohort;
    std::set<std::string> therapies;
    cohort.patients.reserve(records.rows.size());
    for (std::size_t r = 0; r < records.rows.size(); ++r) {
        const auto& row = records.rows[r];
        PatientRecord p;
        p.id = id_col ? row[*id_col] : std::to_string(r);
        p.therapy = row[*therapy_col];
        const auto outcome = parse_number(row[*outcome_col]);
        if (!outcome) {
            throw Error("InvalidOutcome", "row " + std::to_string(r) + " has a non-numeric outcome",
                        {{"row", r}});
        }
        p.outcome = *outcome;
        for (std::size_t f = 0; f < schema.features.size(); ++f) {
            const auto& cell = row[columns[f]];
            if (schema.features[f].kind == FeatureKind::numeric) {
                const auto v = parse_number(cell);
                if (!v) {
                    throw Error("SchemaMismatch",
                                "row " + std::to_string(r) + ": '" + schema.features[f].name +
                                    "' is not numeric",
                                {{"feature", schema.features[f].name}, {"row", r}});
                }
                p.features.emplace_back(*v);
            } else {
                p.features.emplace_back(cell);
            }
        }
        therapies.insert(p.therapy);
        cohort.patients.push_back(std::move(p));
    }

    for (std::size_t f = 0; f < schema.features.size(); ++f) {
        auto& feature = schema.features[f];
        if (feature.kind != FeatureKind::numeric || feature.range) {
            continue;
        }
        Range range{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        for (const auto& p : cohort.patients) {
            const double v = std::get<double>(p.features[f]);
            range.min = std::min(range.min, v);
            range.max = std::max(range.max, v);
        }
        feature.range = range;
        require_range(feature);
    }
    cohort.schema = std::move(schema);
    cohort.therapies.assign(therapies.begin(), therapies.end());
    return cohort;
}

auto parse_patient(const nlohmann::json& j, const FeatureSchema& schema) -> PatientRecord {
    if (!j.is_object()) {
        throw Error("SchemaMismatch", "patient must be a JSON object");
    }
    const nlohmann::json& values = j.contains("features") ? j.at("features") : j;
    PatientRecord p;
    p.id = j.value("id", std::string{"patient"});
    p.therapy = j.value("therapy", std::string{});
    p.outcome = j.value("outcome", 0.0);
    for (const auto& f : schema.features) {
        if (!values.contains(f.name)) {
            throw mismatch(f.name, "patient is missing feature '" + f.name + "'");
        }
        const auto& v = values.at(f.name);
        if (f.kind == FeatureKind::numeric) {
            if (!v.is_number() || !std::isfinite(v.get<double>())) {
                throw mismatch(f.name, "feature '" + f.name + "' must be a finite number");
            }
            p.features.emplace_back(v.get<double>());
        } else {
            if (v.is_string()) {
                p.features.emplace_back(v.get<std::string>());
            } else if (v.is_number() || v.is_boolean()) {
                p.features.emplace_back(v.dump());
            } else {
                throw mismatch(f.name, "feature '" + f.name + "' must be a label");
            }
        }
    }
    return p;
}

auto distance(const PatientRecord& p, const PatientRecord& q, const FeatureSchema& schema)
    -> double {
    const std::size_t k = schema.features.size();
    if (p.features.size() != k || q.features.size() != k) {
        throw Error("SchemaMismatch", "feature count differs from schema");
    }
    double weighted = 0.0;
    double weights = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
        const auto& feature = schema.features[f];
        double d = 0.0;
        if (feature.kind == FeatureKind::numeric) {
            const auto* a = std::get_if<double>(&p.features[f]);
            const auto* b = std::get_if<double>(&q.features[f]);
            if (a == nullptr || b == nullptr) {
                throw mismatch(feature.name, "feature '" + feature.name + "' must be numeric");
            }
            const auto range = require_range(feature);
            d = std::min(1.0, std::abs(*a - *b) / (range.max - range.min));
        } else {
            const auto* a = std::get_if<std::string>(&p.features[f]);
            const auto* b = std::get_if<std::string>(&q.features[f]);
            if (a == nullptr || b == nullptr) {
                throw mismatch(feature.name, "feature '" + feature.name + "' must be a label");
            }
            d = (*a == *b) ? 0.0 : 1.0;
        }
        weighted += feature.weight * d;
        weights += feature.weight;
    }
    return weights > 0.0 ? weighted / weights : 0.0;
}

auto nearest_for_therapy(const Cohort& cohort, std::string_view therapy,
                         const PatientRecord& patient, std::size_t k) -> std::vector<Neighbor> {
    if (!std::binary_search(cohort.therapies.begin(), cohort.therapies.end(), therapy)) {
        throw Error("UnknownTherapy", "unknown therapy '" + std::string(therapy) + "'",
                    {{"therapy", therapy}});
    }
    if (k < 1) {
        throw Error("InvalidArgument", "k must be at least 1");
    }
    std::vector<Neighbor> all;
    for (const auto& p : cohort.patients) {
        if (p.therapy == therapy) {
            all.push_back(Neighbor{std::cref(p), distance(patient, p, cohort.schema)});
        }
    }
    const std::size_t keep = std::min(k, all.size());
    std::stable_sort(all.begin(), all.end(),
                     [](const Neighbor& a, const Neighbor& b) { return a.distance < b.distance; });
    all.erase(all.begin() + static_cast<std::ptrdiff_t>(keep), all.end());
    return all;
}

auto predict_outcome(std::span<const Neighbor> neighbors, Weighting weighting) -> double {
    if (neighbors.empty()) {
        throw Error("EmptyNeighborList", "cannot predict from zero neighbors");
    }
    std::vector<double> w(neighbors.size());
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        w[i] = weighting == Weighting::uniform ? 1.0
                                               : 1.0 / (neighbors[i].distance + kDistanceEpsilon);
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    double lo = neighbors.front().patient.get().outcome;
    double hi = lo;
    double mean = 0.0;
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        const double outcome = neighbors[i].patient.get().outcome;
        mean += (w[i] / total) * outcome;
        lo = std::min(lo, outcome);
        hi = std::max(hi, outcome);
    }
    // Rounding can nudge a convex combination just past its extremes.
    return std::clamp(mean, lo, hi);
}

auto recommend(const Cohort& cohort, const PatientRecord& patient, const RecommendParams& params)
    -> Recommendation {
    if (params.k_min < 1 || params.k < params.k_min) {
        throw Error("InvalidArgument", "need k >= k_min >= 1",
                    {{"k", params.k}, {"k_min", params.k_min}});
    }
    Recommendation out;
    out.direction = params.direction.value_or(cohort.schema.direction);
    for (const auto& therapy : cohort.therapies) {
        const std::size_t support = cohort.support(therapy);
        if (support < params.k_min) {
            continue;
        }
        const auto neighbors = nearest_for_therapy(cohort, therapy, patient, params.k);
        out.per_therapy.emplace(
            therapy, TherapyPrediction{predict_outcome(neighbors, params.weighting), support,
                                       neighbors.size()});
    }
    if (out.per_therapy.empty()) {
        throw Error("NoEligibleTherapy",
                    "no therapy has at least " + std::to_string(params.k_min) + " recipients",
                    {{"k_min", params.k_min}});
    }
    // per_therapy iterates in therapy id order, so the first strict winner
    // already respects the id tie-break.
    const TherapyPrediction* best = nullptr;
    for (const auto& [therapy, prediction] : out.per_therapy) {
        if (best == nullptr ||
            better(prediction.predicted_outcome, best->predicted_outcome, out.direction) ||
            (prediction.predicted_outcome == best->predicted_outcome &&
             prediction.used_k > best->used_k)) {
            best = &prediction;
            out.best = therapy;
        }
    }
    return out;
}

void to_json(nlohmann::json& j, const Recommendation& r) {
    auto per = nlohmann::json::object();
    for (const auto& [therapy, p] : r.per_therapy) {
        per[therapy] = {{"predicted_outcome", p.predicted_outcome},
                        {"support", p.support},
                        {"used_k", p.used_k}};
    }
    j = nlohmann::json{{"per_therapy", per}, {"best", r.best}, {"direction", to_string(r.direction)}};
}

void to_json(nlohmann::json& j, const FeatureSchema& s) {
    auto features = nlohmann::json::array();
    for (const auto& f : s.features) {
        nlohmann::json jf{{"name", f.name},
                          {"kind", f.kind == FeatureKind::numeric ? "numeric" : "categorical"},
                          {"weight", f.weight}};
        if (f.range) {
            jf["range"] = {f.range->min, f.range->max};
        }
        features.push_back(std::move(jf));
    }
    j = nlohmann::json{{"features", features}, {"direction", to_string(s.direction)}};
}

}  // namespace watson::knn
