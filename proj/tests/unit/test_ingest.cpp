#include "watson/error.hpp"
#include "watson/ingest.hpp"
#include "watson/synth.hpp"

#include "support/fixtures.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace watson;
using fixture::error_code;

TEST_CASE("parse_csv reads a header and rows") {
    const auto rs = parse_csv("a,b\n1,x\n2,y");
    CHECK(rs.column_names == std::vector<std::string>{"a", "b"});
    REQUIRE(rs.rows.size() == 2);
    CHECK(rs.rows[0] == std::vector<std::string>{"1", "x"});
    CHECK(rs.rows[1] == std::vector<std::string>{"2", "y"});
}

TEST_CASE("parse_csv rejects empty input") {
    CHECK(error_code([] { (void)parse_csv(""); }) == "EmptyInput");
}

TEST_CASE("parse_csv without header names columns col1..colN") {
    const auto rs = parse_csv("p,q,r\ns,t,u\n", CsvConfig{',', false});
    CHECK(rs.column_names == std::vector<std::string>{"col1", "col2", "col3"});
    CHECK(rs.rows.size() == 2);
}

TEST_CASE("parse_csv handles quoting, CRLF and custom delimiters") {
    const auto rs = parse_csv("name;note\r\n\"Smith; J\";\"said \"\"hi\"\"\"\r\nx;\"multi\nline\"\r\n",
                              CsvConfig{';', true});
    REQUIRE(rs.rows.size() == 2);
    CHECK(rs.rows[0][0] == "Smith; J");
    CHECK(rs.rows[0][1] == "said \"hi\"");
    CHECK(rs.rows[1][1] == "multi\nline");
}

TEST_CASE("parse_csv keeps empty cells empty") {
    const auto rs = parse_csv("a,b\n,x\ny,\n");
    CHECK(rs.rows[0][0].empty());
    CHECK(rs.rows[1][1].empty());
    CHECK(normalize_cell(rs.rows[0][0]) == kMissingLabel);
    CHECK(normalize_cell("x") == "x");
}

TEST_CASE("parse_csv reports the ragged row") {
    try {
        (void)parse_csv("a,b\n1,2\n3,4\n5\n");
        FAIL("expected RaggedRow");
    } catch (const Error& e) {
        CHECK(e.code() == "RaggedRow");
        CHECK(e.detail().at("row") == 2);
    }
}

TEST_CASE("parse_csv rejects invalid UTF-8 and stray quotes") {
    CHECK(error_code([] { (void)parse_csv("a\n\xff\xfe\n"); }) == "EncodingError");
    CHECK(error_code([] { (void)parse_csv("a\n\xc3\n"); }) == "EncodingError");
    CHECK(error_code([] { (void)parse_csv("a,b\n\"open,x\n"); }) == "MalformedQuote");
    CHECK_NOTHROW((void)parse_csv("city\nZ\xc3\xbcrich\n"));
}

TEST_CASE("write_csv round-trips cell values") {
    std::mt19937_64 rng(11);
    const std::string alphabet = "ab,\"\n ;x";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<std::size_t> len(0, 6);
    for (int trial = 0; trial < 200; ++trial) {
        RecordSet rs;
        rs.column_names = {"c1", "c2", "c3"};
        for (int r = 0; r < 5; ++r) {
            std::vector<std::string> row;
            for (int c = 0; c < 3; ++c) {
                std::string cell;
                for (std::size_t k = len(rng); k > 0; --k) {
                    cell.push_back(alphabet[pick(rng)]);
                }
                row.push_back(cell);
            }
            rs.rows.push_back(row);
        }
        // A lone empty cell in a one-column row is indistinguishable from a
        // blank line; three columns avoid that ambiguity.
        const auto back = parse_csv(write_csv(rs));
        CHECK(back.column_names == rs.column_names);
        CHECK(back.rows == rs.rows);
    }
}

TEST_CASE("infer_schema lists distinct values in first-appearance order") {
    const auto rs = parse_csv("v\nx\ny\nx\nz\n");
    const auto schema = infer_schema(rs);
    REQUIRE(schema.variables.size() == 1);
    CHECK(schema.variables[0].categories == std::vector<std::string>{"x", "y", "z"});
    CHECK_FALSE(schema.variables[0].scores.has_value());
}

TEST_CASE("infer_schema enforces max_categories") {
    std::string csv = "v\n";
    for (int i = 0; i < 65; ++i) {
        csv += "c" + std::to_string(i) + "\n";
    }
    CHECK(error_code([&] { (void)infer_schema(parse_csv(csv), 64); }) == "TooManyCategories");
    CHECK_NOTHROW((void)infer_schema(parse_csv(csv), 65));
}

TEST_CASE("infer_schema matches a brute-force distinct count") {
    const auto rs = parse_csv(
        "sex,dept\nM,Eng\nF,Med\nM,Law\nF,Eng\nM,Med\nF,Law\nM,Eng\nM,Med\nF,Law\nF,Eng\n");
    const auto schema = infer_schema(rs);
    REQUIRE(schema.variables.size() == 2);
    for (std::size_t c = 0; c < 2; ++c) {
        std::set<std::string> distinct;
        for (const auto& row : rs.rows) {
            distinct.insert(row[c]);
        }
        CHECK(schema.variables[c].size() == distinct.size());
        CHECK(std::set<std::string>(schema.variables[c].categories.begin(),
                                    schema.variables[c].categories.end()) == distinct);
    }
    CHECK(schema.variables[0].size() == 2);
    CHECK(schema.variables[1].size() == 3);
}

TEST_CASE("infer_schema maps blanks to the missing category") {
    const auto schema = infer_schema(parse_csv("a,b\nx,\n,y\n"));
    CHECK(schema.variables[0].categories == std::vector<std::string>{"x", std::string(kMissingLabel)});
    CHECK(schema.variables[1].categories == std::vector<std::string>{std::string(kMissingLabel), "y"});
}

TEST_CASE("apply_codebook reorders, scores and extends") {
    auto schema = infer_schema(parse_csv("rank,dept\n2nd,Eng\n1st,Med\n"));
    const auto cb = nlohmann::json::parse(
        R"({"rank": {"order": ["1st", "2nd", "3rd"], "scores": [1, 2, 3]}})");
    schema = apply_codebook(schema, cb);
    const auto& rank = schema.variable("rank");
    CHECK(rank.categories == std::vector<std::string>{"1st", "2nd", "3rd"});
    REQUIRE(rank.scores.has_value());
    CHECK(*rank.scores == std::vector<double>{1, 2, 3});
    CHECK(schema.variable("dept").categories == std::vector<std::string>{"Eng", "Med"});
}

TEST_CASE("apply_codebook errors") {
    const auto schema = infer_schema(parse_csv("rank\n1st\n2nd\n"));
    CHECK(error_code([&] {
              (void)apply_codebook(schema, nlohmann::json::parse(R"({"nope": {"order": []}})"));
          }) == "UnknownVariable");
    CHECK(error_code([&] {
              (void)apply_codebook(schema,
                                   nlohmann::json::parse(R"({"rank": {"order": ["1st"]}})"));
          }) == "InvalidCodebook");
    CHECK(error_code([&] {
              (void)apply_codebook(
                  schema, nlohmann::json::parse(R"({"rank": {"order": ["1st","2nd"], "scores": [1]}})"));
          }) == "InvalidScores");
}

TEST_CASE("validate_schema enforces uniqueness") {
    CHECK(error_code([] {
              validate_schema(Schema{{fixture::var("a", {"x"}), fixture::var("a", {"y"})}});
          }) == "DuplicateVariable");
    CHECK(error_code([] { validate_schema(Schema{{fixture::var("a", {"x", "x"})}}); }) ==
          "DuplicateLabel");
}

TEST_CASE("schema JSON round-trip") {
    Schema s{{fixture::var("a", {"x", "y"}), Variable{"b", {"1", "2"}, std::vector<double>{1, 2}}}};
    const nlohmann::json j = s;
    CHECK(j.get<Schema>() == s);
}

TEST_CASE("30000 x 7 synthetic survey parses at scale") {
    const auto data = synth::make_survey(30000, 7);
    const auto rs = parse_csv(data.csv);
    CHECK(rs.rows.size() == 30000);
    CHECK(rs.column_names.size() == 7);
    const auto schema = infer_schema(rs);
    CHECK(schema.variables.size() == 7);
}
