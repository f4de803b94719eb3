#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cfxcert/common.hpp"
#include "cfxcert/dataset.hpp"

using namespace cfxcert;

namespace {

const char* kSpec = R"([
  {"name": "income", "kind": "continuous"},
  {"name": "grade", "kind": "ordinal", "k": 4},
  {"name": "region", "kind": "discrete", "categories": ["A", "B", "C"]}
])";

} // namespace

TEST_CASE("spec parsing and encoded widths") {
    FeatureSpec spec = parse_feature_spec(kSpec);
    REQUIRE(spec.columns.size() == 3);
    CHECK(spec.columns[0].kind == FeatureKind::continuous);
    CHECK(spec.columns[1].k == 4);
    CHECK(spec.columns[2].categories.size() == 3);
    CHECK(spec.encoded_width() == 1 + 4 + 3);
    CHECK(spec.offset_of(1) == 1);
    CHECK(spec.offset_of(2) == 5);
    CHECK(spec.find("grade").value() == 1);
    CHECK(!spec.find("nope").has_value());

    // Round trip through the JSON writer.
    FeatureSpec again = parse_feature_spec(feature_spec_to_json(spec));
    CHECK(again.columns.size() == 3);
    CHECK(again.columns[1].k == 4);
}

TEST_CASE("spec parse errors") {
    CHECK_THROWS_AS(parse_feature_spec("not json"), ParseError);
    CHECK_THROWS_AS(parse_feature_spec("{}"), ParseError);
    CHECK_THROWS_AS(parse_feature_spec(R"([{"name":"x","kind":"odd"}])"), ParseError);
    CHECK_THROWS_AS(parse_feature_spec(R"([{"name":"x","kind":"ordinal"}])"), ParseError);
    CHECK_THROWS_AS(parse_feature_spec(R"([{"name":"x","kind":"discrete","categories":[]}])"),
                    ParseError);
}

TEST_CASE("encoding: scaling, ordinal prefix, one-hot") {
    FeatureSpec spec = parse_feature_spec(kSpec);
    std::string csv = "income,grade,region,label\n"
                      "10,2,B,0\n"
                      "30,0,A,1\n"
                      "20,4,C,1\n";
    Dataset d = parse_dataset(csv, spec);
    REQUIRE(d.size() == 3);
    CHECK(d.rows.cols() == 8);

    // income scaled by the observed range [10,30]
    CHECK(d.rows(0, 0) == doctest::Approx(0.0));
    CHECK(d.rows(1, 0) == doctest::Approx(1.0));
    CHECK(d.rows(2, 0) == doctest::Approx(0.5));
    CHECK(d.spec.columns[0].min == 10.0);
    CHECK(d.spec.columns[0].max == 30.0);

    // grade=2 of 4 -> [1,1,0,0]
    CHECK(d.rows(0, 1) == 1.0);
    CHECK(d.rows(0, 2) == 1.0);
    CHECK(d.rows(0, 3) == 0.0);
    CHECK(d.rows(0, 4) == 0.0);
    // grade=0 -> all zeros; grade=4 -> all ones
    for (std::size_t b = 1; b <= 4; ++b) {
        CHECK(d.rows(1, b) == 0.0);
        CHECK(d.rows(2, b) == 1.0);
    }

    // region B -> [0,1,0]
    CHECK(d.rows(0, 5) == 0.0);
    CHECK(d.rows(0, 6) == 1.0);
    CHECK(d.rows(0, 7) == 0.0);

    CHECK(d.labels == std::vector<int>{0, 1, 1});
}

TEST_CASE("constant continuous column scales to zero") {
    FeatureSpec spec = parse_feature_spec(R"([{"name":"v","kind":"continuous"}])");
    Dataset d = parse_dataset("v,label\n5,0\n5,1\n5,0\n", spec);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(d.rows(i, 0) == 0.0);
}

TEST_CASE("spec-provided range wins and out-of-range values clamp") {
    FeatureSpec spec =
        parse_feature_spec(R"([{"name":"v","kind":"continuous","min":0,"max":10}])");
    Dataset d = parse_dataset("v,label\n5,0\n12,1\n-3,0\n", spec);
    CHECK(d.rows(0, 0) == doctest::Approx(0.5));
    CHECK(d.rows(1, 0) == 1.0);
    CHECK(d.rows(2, 0) == 0.0);
}

TEST_CASE("rows with missing cells are dropped") {
    FeatureSpec spec = parse_feature_spec(kSpec);
    std::string csv = "income,grade,region,label\n"
                      "10,2,B,0\n"
                      "nan,1,A,1\n"
                      "20,,C,1\n"
                      "30,3,A,\n"
                      "40,1,C,1\n";
    Dataset d = parse_dataset(csv, spec);
    CHECK(d.size() == 2);
    CHECK(d.labels == std::vector<int>{0, 1});
}

TEST_CASE("cell errors are reported") {
    FeatureSpec spec = parse_feature_spec(kSpec);
    CHECK_THROWS_AS(parse_dataset("income,grade,region,label\nabc,1,A,0\n", spec), ParseError);
    CHECK_THROWS_AS(parse_dataset("income,grade,region,label\n1,7,A,0\n", spec), ParseError);
    CHECK_THROWS_AS(parse_dataset("income,grade,region,label\n1,1,D,0\n", spec), ParseError);
    CHECK_THROWS_AS(parse_dataset("income,grade,region,label\n1,1,A,x\n", spec), ParseError);
    CHECK_THROWS_AS(parse_dataset("income,grade,label\n1,1,0\n", spec), ParseError);
    CHECK_THROWS_AS(parse_dataset("income,grade,region\n1,1,A\n", spec), ParseError);
}

TEST_CASE("split is seeded and disjoint") {
    FeatureSpec spec = parse_feature_spec(R"([{"name":"v","kind":"continuous"}])");
    std::string csv = "v,label\n";
    for (int i = 0; i < 20; ++i)
        csv += std::to_string(i) + "," + std::to_string(i % 2) + "\n";
    Dataset d = parse_dataset(csv, spec);

    auto [a, b] = split_dataset(d, 0.8, 7);
    CHECK(a.size() == 16);
    CHECK(b.size() == 4);

    auto [a2, b2] = split_dataset(d, 0.8, 7);
    CHECK(a.rows == a2.rows);
    CHECK(b.labels == b2.labels);

    // Every original row appears exactly once across the two halves.
    std::vector<double> seen;
    for (std::size_t i = 0; i < a.size(); ++i)
        seen.push_back(a.rows(i, 0));
    for (std::size_t i = 0; i < b.size(); ++i)
        seen.push_back(b.rows(i, 0));
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < seen.size(); ++i)
        CHECK(seen[i] == doctest::Approx(double(i) / 19.0));

    CHECK_THROWS_AS(split_dataset(d, 1.5, 0), ConfigError);
}
