#include "watson/error.hpp"
#include "watson/knn.hpp"
#include "watson/synth.hpp"

#include "support/fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace watson::knn;
using fixture::error_code;
using nlohmann::json;

namespace {

auto age_sex_schema() -> FeatureSchema {
    return parse_feature_schema(json::parse(R"({
        "features": [
            {"name": "age", "kind": "numeric", "range": [20, 80]},
            {"name": "sex", "kind": "categorical"}
        ],
        "direction": "lower"
    })"));
}

auto patient(double age, const std::string& sex) -> PatientRecord {
    return PatientRecord{"", {age, sex}, "", 0.0};
}

// Independent Gower: plain loops over the schema, no shared helpers.
auto gower(const PatientRecord& p, const PatientRecord& q, const FeatureSchema& s) -> double {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t f = 0; f < s.features.size(); ++f) {
        const auto& feat = s.features[f];
        double d = 0.0;
        if (feat.kind == FeatureKind::numeric) {
            const double a = std::get<double>(p.features[f]);
            const double b = std::get<double>(q.features[f]);
            d = std::min(1.0, std::fabs(a - b) / (feat.range->max - feat.range->min));
        } else {
            d = std::get<std::string>(p.features[f]) == std::get<std::string>(q.features[f]) ? 0.0 : 1.0;
        }
        num += feat.weight * d;
        den += feat.weight;
    }
    return num / den;
}

const char* kSmallCohort =
    "id,age,sex,therapy,outcome\n"
    "p1,30,M,A,7.0\n"
    "p2,32,M,A,7.2\n"
    "p3,60,F,A,8.0\n"
    "p4,31,M,B,6.0\n"
    "p5,33,M,B,6.1\n"
    "p6,61,F,B,9.0\n"
    "p7,35,F,C,5.0\n"
    "p8,36,F,C,5.5\n";

}  // namespace

TEST_CASE("gower distance by hand") {
    const auto s = age_sex_schema();
    CHECK(distance(patient(50, "M"), patient(65, "F"), s) == doctest::Approx(0.625));
    CHECK(distance(patient(50, "M"), patient(50, "M"), s) == 0.0);
    CHECK(distance(patient(20, "M"), patient(80, "F"), s) == doctest::Approx(1.0));
    CHECK(distance(patient(0, "M"), patient(200, "F"), s) == doctest::Approx(1.0));
    CHECK(error_code([&] { (void)distance(patient(1, "M"), PatientRecord{"", {1.0}, "", 0}, s); }) ==
          "SchemaMismatch");
}

TEST_CASE("distance properties on random triples") {
    auto s = age_sex_schema();
    s.features[0].weight = 2.5;
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> age(10, 90);
    std::bernoulli_distribution coin(0.5);
    auto draw = [&] { return patient(age(rng), coin(rng) ? "M" : "F"); };
    for (int trial = 0; trial < 300; ++trial) {
        const auto a = draw();
        const auto b = draw();
        const auto c = draw();
        const double ab = distance(a, b, s);
        CHECK(ab == doctest::Approx(gower(a, b, s)));
        CHECK(ab == distance(b, a, s));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK(distance(a, a, s) == 0.0);
        CHECK(ab <= distance(a, c, s) + distance(c, b, s) + 1e-12);
    }
}

TEST_CASE("scaling a numeric feature and its range leaves distances unchanged") {
    auto s = age_sex_schema();
    auto scaled = s;
    scaled.features[0].range = Range{20 * 12.0, 80 * 12.0};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> age(20, 80);
    for (int trial = 0; trial < 50; ++trial) {
        const double a = age(rng);
        const double b = age(rng);
        CHECK(distance(patient(a, "M"), patient(b, "F"), s) ==
              doctest::Approx(distance(patient(a * 12, "M"), patient(b * 12, "F"), scaled)));
    }
}

TEST_CASE("schema parsing") {
    CHECK(error_code([] { (void)parse_feature_schema(json::parse(R"({"features": []})")); }) ==
          "InvalidSchema");
    CHECK(error_code([] {
              (void)parse_feature_schema(json::parse(
                  R"({"features": [{"name": "a", "kind": "numeric", "weight": 0}]})"));
          }) == "InvalidSchema");
    CHECK(error_code([] {
              (void)parse_feature_schema(json::parse(
                  R"({"features": [{"name": "a", "kind": "numeric", "range": [5, 5]}]})"));
          }) != "");
    const auto s = age_sex_schema();
    const json j = s;
    CHECK(j["features"][0]["name"] == "age");
    CHECK(j["direction"] == "lower");
}

TEST_CASE("cohort loading") {
    const auto c = load_cohort(kSmallCohort, age_sex_schema());
    CHECK(c.patients.size() == 8);
    CHECK(c.therapies == std::vector<std::string>{"A", "B", "C"});
    CHECK(c.support("A") == 3);
    CHECK(c.support("Z") == 0);

    auto no_range = age_sex_schema();
    no_range.features[0].range.reset();
    const auto inferred = load_cohort(kSmallCohort, no_range);
    CHECK(inferred.schema.features[0].range->min == 30.0);
    CHECK(inferred.schema.features[0].range->max == 61.0);

    CHECK(error_code([] { (void)load_cohort("id,age,therapy,outcome\np,1,A,2\n", age_sex_schema()); }) ==
          "SchemaMismatch");
    CHECK(error_code([] {
              (void)load_cohort("age,sex,therapy,outcome\n30,M,A,bad\n", age_sex_schema());
          }) == "InvalidOutcome");
    CHECK(error_code([] { (void)load_cohort("age,sex,therapy,outcome\n", age_sex_schema()); }) ==
          "EmptyCohort");
    CHECK(error_code([&] {
              (void)load_cohort("age,sex,therapy,outcome\n30,M,A,1\n30,F,B,2\n", no_range);
          }) == "DegenerateRange");
}

TEST_CASE("patient parsing") {
    const auto s = age_sex_schema();
    const auto p = parse_patient(json::parse(R"({"age": 40, "sex": "F"})"), s);
    CHECK(std::get<double>(p.features[0]) == 40.0);
    CHECK(std::get<std::string>(p.features[1]) == "F");
    const auto nested = parse_patient(json::parse(R"({"id": "x", "features": {"age": 40, "sex": "F"}})"), s);
    CHECK(nested.features == p.features);
    try {
        (void)parse_patient(json::parse(R"({"age": 40})"), s);
        FAIL("expected SchemaMismatch");
    } catch (const watson::Error& e) {
        CHECK(e.code() == "SchemaMismatch");
        CHECK(e.detail().at("feature") == "sex");
    }
}

TEST_CASE("nearest_for_therapy") {
    const auto c = load_cohort(kSmallCohort, age_sex_schema());
    const auto q = patient(31, "M");
    const auto one = nearest_for_therapy(c, "C", q, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].patient.get().id == "p7");
    CHECK(nearest_for_therapy(c, "A", q, 30).size() == 3);
    CHECK(error_code([&] { (void)nearest_for_therapy(c, "Z", q, 3); }) == "UnknownTherapy");

    // Ties keep cohort order.
    const auto tied = load_cohort("id,age,sex,therapy,outcome\nx,40,M,A,1\ny,40,M,A,2\nz,20,F,A,3\n",
                                  age_sex_schema());
    const auto t = nearest_for_therapy(tied, "A", patient(40, "M"), 2);
    CHECK(t[0].patient.get().id == "x");
    CHECK(t[1].patient.get().id == "y");
}

TEST_CASE("nearest_for_therapy matches a full sort") {
    const auto data = watson::synth::make_cohort(400, 5, 10);
    const auto c = load_cohort(data.csv, parse_feature_schema(data.schema));
    for (const auto& tp : data.truth["test_patients"]) {
        const auto q = parse_patient(tp, c.schema);
        for (const auto& therapy : c.therapies) {
            std::vector<std::pair<double, std::size_t>> all;
            for (std::size_t i = 0; i < c.patients.size(); ++i) {
                if (c.patients[i].therapy == therapy) {
                    all.emplace_back(gower(q, c.patients[i], c.schema), i);
                }
            }
            std::sort(all.begin(), all.end());
            const auto got = nearest_for_therapy(c, therapy, q, 3);
            REQUIRE(got.size() == 3);
            for (std::size_t k = 0; k < 3; ++k) {
                CHECK(got[k].distance == doctest::Approx(all[k].first).epsilon(1e-12));
                CHECK(&got[k].patient.get() == &c.patients[all[k].second]);
            }
        }
    }
}

TEST_CASE("predict_outcome") {
    const PatientRecord a{"a", {}, "T", 6.0};
    const PatientRecord b{"b", {}, "T", 8.0};
    const std::vector<Neighbor> single{{a, 0.3}};
    CHECK(predict_outcome(single) == 6.0);
    const std::vector<Neighbor> equal{{a, 0.2}, {b, 0.2}};
    CHECK(predict_outcome(equal) == doctest::Approx(7.0));
    const std::vector<Neighbor> near_far{{a, 0.0}, {b, 1.0}};
    const double w0 = 1.0 / kDistanceEpsilon;
    const double w1 = 1.0 / (1.0 + kDistanceEpsilon);
    const double expect = (w0 * 6.0 + w1 * 8.0) / (w0 + w1);
    CHECK(std::fabs(predict_outcome(near_far) - expect) <= 1e-12);
    CHECK(predict_outcome(near_far) == doctest::Approx(6.000002).epsilon(1e-7));
    CHECK(predict_outcome(near_far, Weighting::uniform) == doctest::Approx(7.0));
    CHECK(error_code([] { (void)predict_outcome(std::vector<Neighbor>{}); }) == "EmptyNeighborList");

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<PatientRecord> pool;
    for (int i = 0; i < 30; ++i) {
        pool.push_back(PatientRecord{"", {}, "T", 5 + 5 * u(rng)});
    }
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Neighbor> ns;
        double lo = 1e9;
        double hi = -1e9;
        for (int i = 0; i < 7; ++i) {
            const auto& p = pool[static_cast<std::size_t>(u(rng) * 30)];
            ns.push_back({p, u(rng)});
            lo = std::min(lo, p.outcome);
            hi = std::max(hi, p.outcome);
        }
        const double v = predict_outcome(ns);
        CHECK(v >= lo);
        CHECK(v <= hi);
    }
}

TEST_CASE("recommend picks the lowest prediction") {
    const auto c = load_cohort(kSmallCohort, age_sex_schema());
    RecommendParams params;
    params.k = 2;
    params.k_min = 2;
    // Predictions: A ~7.1, B ~6.0 (exact match p4 dominates), C ~5.25.
    const auto r = recommend(c, patient(31, "M"), params);
    CHECK(r.per_therapy.at("B").predicted_outcome == doctest::Approx(6.0).epsilon(1e-4));
    CHECK(r.best == "C");
    CHECK(r.per_therapy.size() == 3);
    CHECK(r.per_therapy.at("A").support == 3);
    CHECK(r.per_therapy.at("A").used_k == 2);

    params.direction = Direction::higher;
    CHECK(recommend(c, patient(31, "M"), params).best == "A");
}

TEST_CASE("recommend eligibility and errors") {
    const auto c = load_cohort(kSmallCohort, age_sex_schema());
    RecommendParams params;
    params.k = 30;
    params.k_min = 3;
    const auto r = recommend(c, patient(31, "M"), params);
    CHECK(r.per_therapy.count("C") == 0);
    CHECK(r.per_therapy.size() == 2);

    params.k_min = 5;
    CHECK(error_code([&] { (void)recommend(c, patient(31, "M"), params); }) == "NoEligibleTherapy");
    params.k = 2;
    params.k_min = 3;
    CHECK(error_code([&] { (void)recommend(c, patient(31, "M"), params); }) == "InvalidArgument");
    params.k_min = 0;
    CHECK(error_code([&] { (void)recommend(c, patient(31, "M"), params); }) == "InvalidArgument");
}

TEST_CASE("recommend ties fall back to larger used_k, then therapy order") {
    const auto c = load_cohort("age,sex,therapy,outcome\n30,M,B,5\n30,M,A,5\n30,M,A,5\n30,M,C,5\n",
                               age_sex_schema());
    RecommendParams params;
    params.k = 2;
    params.k_min = 1;
    CHECK(recommend(c, patient(30, "M"), params).best == "A");
    params.k = 1;
    CHECK(recommend(c, patient(30, "M"), params).best == "A");
    const auto bc = load_cohort("age,sex,therapy,outcome\n30,M,C,5\n30,M,B,5\n", age_sex_schema());
    params.k = 1;
    CHECK(recommend(bc, patient(30, "M"), params).best == "B");
}

TEST_CASE("k=1 with exact duplicates returns the duplicate outcomes") {
    const auto data = watson::synth::make_cohort(1000, 11, 5);
    auto c = load_cohort(data.csv, parse_feature_schema(data.schema));
    for (const auto& tp : data.truth["test_patients"]) {
        const auto q = parse_patient(tp, c.schema);
        std::map<std::string, double> planted;
        double outcome = 3.0;
        auto copy = c;
        for (const auto& therapy : copy.therapies) {
            PatientRecord dup = q;
            dup.therapy = therapy;
            dup.outcome = outcome;
            planted[therapy] = outcome;
            outcome += 0.5;
            copy.patients.push_back(dup);
        }
        RecommendParams params;
        params.k = 1;
        params.k_min = 1;
        const auto r = recommend(copy, q, params);
        for (const auto& [therapy, value] : planted) {
            CHECK(r.per_therapy.at(therapy).predicted_outcome == value);
        }
        CHECK(r.best == copy.therapies.front());
    }
}

TEST_CASE("recommend recovers the planted best therapy") {
    const auto data = watson::synth::make_cohort(1000, 7, 200);
    const auto c = load_cohort(data.csv, parse_feature_schema(data.schema));
    std::size_t hits = 0;
    for (const auto& tp : data.truth["test_patients"]) {
        const auto r = recommend(c, parse_patient(tp, c.schema));
        hits += r.best == tp["best"].get<std::string>() ? 1 : 0;
    }
    CHECK(hits >= 190);
}

TEST_CASE("direction and weighting parse") {
    CHECK(parse_direction("higher") == Direction::higher);
    CHECK(to_string(Direction::lower) == "lower");
    CHECK(parse_weighting("uniform") == Weighting::uniform);
    CHECK(error_code([] { (void)parse_direction("sideways"); }) != "");
}

TEST_CASE("recommendation JSON") {
    const auto c = load_cohort(kSmallCohort, age_sex_schema());
    RecommendParams params;
    params.k = 2;
    params.k_min = 2;
    const json j = recommend(c, patient(31, "M"), params);
    CHECK(j["best"] == "C");
    CHECK(j["direction"] == "lower");
    CHECK(j["per_therapy"]["A"].contains("predicted_outcome"));
    CHECK(j["per_therapy"]["A"]["used_k"] == 2);
}
