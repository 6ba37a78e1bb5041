#include "watson/error.hpp"
#include "watson/freqtable.hpp"
#include "watson/synth.hpp"

#include "support/fixtures.hpp"
#include "support/pipeline.hpp"

#include <doctest.h>

#include <numeric>

using namespace watson;
using fixture::error_code;
using fixture::one_way;
using fixture::two_way;
using fixture::var;

namespace {

auto counts_of(const FreqTable& t) -> std::vector<Count> {
    return {t.counts().begin(), t.counts().end()};
}

}  // namespace

TEST_CASE("build_table tallies records") {
    const auto rs = parse_csv("A,B\na1,b1\na1,b2\na2,b2\na2,b2\n");
    const auto t = build_table(rs, infer_schema(rs));
    CHECK(counts_of(t) == std::vector<Count>{1, 1, 0, 2});
    CHECK(t.total() == 4);
    CHECK(t.at({1, 1}) == 2);
}

TEST_CASE("build_table with zero records gives zeros") {
    RecordSet rs;
    rs.column_names = {"A", "B"};
    const Schema schema{{var("A", {"a1", "a2"}), var("B", {"b1", "b2", "b3"})}};
    const auto t = build_table(rs, schema);
    CHECK(t.total() == 0);
    CHECK(t.cell_count() == 6);
    CHECK(t == FreqTable::zeros(schema));
}

TEST_CASE("build_table errors") {
    const auto rs = parse_csv("A\nx\ny\n");
    CHECK(error_code([&] { (void)build_table(rs, Schema{{var("A", {"x"})}}); }) ==
          "UnknownCategory");
    CHECK(error_code([&] { (void)build_table(rs, Schema{{var("Z", {"x", "y"})}}); }) ==
          "UnknownVariable");
}

TEST_CASE("constructor enforces shape") {
    CHECK(error_code([] { (void)FreqTable(Schema{{var("A", {"x", "y"})}}, {1}); }) ==
          "ShapeMismatch");
    CHECK(error_code([] { (void)FreqTable(Schema{}, {}); }) == "EmptySchema");
}

TEST_CASE("synthetic survey compresses") {
    const auto data = synth::make_survey(30000, 7);
    const auto rs = parse_csv(data.csv);
    const auto t = build_table(rs, apply_codebook(infer_schema(rs), data.codebook));
    CHECK(t.total() == 30000);
    std::size_t product = 1;
    for (std::size_t a = 0; a < t.rank(); ++a) {
        product *= t.extent(a);
    }
    CHECK(t.cell_count() == product);
    CHECK(static_cast<double>(30000 * 7) / static_cast<double>(t.cell_count()) > 1.0);
}

TEST_CASE("marginalize") {
    const auto t = two_way({{1, 2}, {3, 4}});
    const std::vector<std::string> keep_a{"A"};
    CHECK(counts_of(marginalize(t, keep_a)) == std::vector<Count>{3, 7});
    const std::vector<std::string> keep_b{"B"};
    CHECK(counts_of(marginalize(t, keep_b)) == std::vector<Count>{4, 6});
    const std::vector<std::string> all{"B", "A"};
    CHECK(marginalize(t, all) == t);
    CHECK(error_code([&] { (void)marginalize(t, std::vector<std::string>{}); }) ==
          "EmptyKeepList");
    CHECK(error_code([&] { (void)marginalize(t, std::vector<std::string>{"A", "A"}); }) ==
          "DuplicateVariable");
    CHECK(error_code([&] { (void)marginalize(t, std::vector<std::string>{"Q"}); }) ==
          "UnknownVariable");
}

TEST_CASE("marginalize preserves totals on random tables") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto t = fixture::random_table(rng, {2, 3, 4, 2});
        for (const auto& keep : std::vector<std::vector<std::string>>{
                 {"A"}, {"B", "D"}, {"A", "C", "D"}}) {
            const auto m = marginalize(t, keep);
            CHECK(m.total() == t.total());
            CHECK(m.rank() == keep.size());
        }
    }
}

TEST_CASE("permute_axes") {
    const auto t = two_way({{1, 2}, {3, 4}});
    CHECK(permute_axes(t, std::vector<std::string>{"A", "B"}) == t);
    const auto swapped = permute_axes(t, std::vector<std::string>{"B", "A"});
    CHECK(counts_of(swapped) == std::vector<Count>{1, 3, 2, 4});
    CHECK(swapped.variable(0).name == "B");
    CHECK(error_code([&] { (void)permute_axes(t, std::vector<std::string>{"A"}); }) ==
          "NotAPermutation");

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto r = fixture::random_table(rng, {2, 3, 4, 5});
        const auto p = permute_axes(r, std::vector<std::string>{"C", "A", "D", "B"});
        CHECK(permute_axes(p, std::vector<std::string>{"A", "B", "C", "D"}) == r);
    }
}

TEST_CASE("merge_categories") {
    const auto t = one_way({"a", "b", "c"}, {1, 2, 3});
    const auto m = merge_categories(t, "A", std::vector<std::string>{"a", "b"}, "ab");
    CHECK(m.variable(0).categories == std::vector<std::string>{"ab", "c"});
    CHECK(counts_of(m) == std::vector<Count>{3, 3});

    const auto all = merge_categories(t, "A", std::vector<std::string>{"c", "a", "b"}, "all");
    CHECK(all.extent(0) == 1);
    CHECK(all.total() == t.total());

    CHECK(error_code([&] {
              (void)merge_categories(t, "A", std::vector<std::string>{"a"}, "x");
          }) == "InvalidArgument");
    CHECK(error_code([&] {
              (void)merge_categories(t, "A", std::vector<std::string>{"a", "q"}, "x");
          }) == "UnknownCategory");
    CHECK(error_code([&] {
              (void)merge_categories(t, "A", std::vector<std::string>{"a", "b"}, "c");
          }) == "DuplicateLabel");
}

TEST_CASE("merge_categories places the slice at the earliest member and averages scores") {
    const Schema schema{{Variable{"R", {"r1", "r2", "r3", "r4"}, std::vector<double>{1, 2, 3, 4}}}};
    const FreqTable t(schema, {5, 1, 1, 3});
    const auto m = merge_categories(t, "R", std::vector<std::string>{"r4", "r2"}, "even");
    CHECK(m.variable(0).categories == std::vector<std::string>{"r1", "even", "r3"});
    CHECK(counts_of(m) == std::vector<Count>{5, 4, 1});
    REQUIRE(m.variable(0).scores.has_value());
    CHECK((*m.variable(0).scores)[1] == doctest::Approx((1 * 2.0 + 3 * 4.0) / 4.0));
}

TEST_CASE("remove_category") {
    const auto t = one_way({"a", "b"}, {1, 2});
    const auto r = remove_category(t, "A", "a");
    CHECK(r.variable(0).categories == std::vector<std::string>{"b"});
    CHECK(r.total() == 2);
    const auto z = one_way({"a", "b", "c"}, {1, 0, 2});
    CHECK(remove_category(z, "A", "b").total() == z.total());
    CHECK(error_code([&] { (void)remove_category(r, "A", "b"); }) == "LastCategory");
    CHECK(error_code([&] { (void)remove_category(t, "A", "q"); }) == "UnknownCategory");
}

TEST_CASE("add_category") {
    const auto t = one_way({"a"}, {1});
    const auto a = add_category(t, "A", "b");
    CHECK(a.variable(0).categories == std::vector<std::string>{"a", "b"});
    CHECK(counts_of(a) == std::vector<Count>{1, 0});
    CHECK(remove_category(a, "A", "b") == t);
    CHECK(error_code([&] { (void)add_category(t, "A", "a"); }) == "DuplicateLabel");

    const FreqTable scored(Schema{{Variable{"R", {"r1", "r2"}, std::vector<double>{1, 2}}}}, {1, 1});
    CHECK(add_category(scored, "R", "r3").variable(0).scores->back() == 3.0);
    CHECK(add_category(scored, "R", "r3", 9.5).variable(0).scores->back() == 9.5);
}

TEST_CASE("proportions") {
    const auto p = proportions(two_way({{1, 1}, {0, 2}}), "A");
    CHECK(p.rows[0] == std::vector<double>{0.5, 0.5});
    CHECK(p.rows[1] == std::vector<double>{0.0, 1.0});
    CHECK(p.bar_totals == std::vector<Count>{2, 2});

    const auto z = proportions(two_way({{0, 0}, {3, 1}}), "A");
    CHECK(z.rows[0] == std::vector<double>{0.0, 0.0});

    const auto by_b = proportions(two_way({{1, 3}, {1, 1}}), "B");
    CHECK(by_b.bar_labels == std::vector<std::string>{"b0", "b1"});
    CHECK(by_b.rows[1][0] == doctest::Approx(0.75));

    CHECK(error_code([] { (void)proportions(one_way({"a"}, {1}), "A"); }) == "WrongArity");
}

TEST_CASE("proportion rows sum to one") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = proportions(fixture::random_table(rng, {6, 4}, 5), "A");
        for (std::size_t i = 0; i < p.bar_count(); ++i) {
            const double s = std::accumulate(p.rows[i].begin(), p.rows[i].end(), 0.0);
            if (p.bar_totals[i] > 0) {
                CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
            } else {
                CHECK(s == 0.0);
            }
        }
    }
}

TEST_CASE("JSON round-trip") {
    std::mt19937_64 rng(1);
    const auto t = fixture::random_table(rng, {2, 3, 2});
    const nlohmann::json j = t;
    CHECK(table_from_json(j) == t);
    CHECK(error_code([] { (void)table_from_json(nlohmann::json::object()); }) ==
          "InvalidTableJson");
}

TEST_CASE("random pipelines match raw-record re-tally") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        const auto outcome = pipeline::run(rng, 300, 5);
        INFO(outcome.log);
        CHECK(outcome.ok);
    }
}
