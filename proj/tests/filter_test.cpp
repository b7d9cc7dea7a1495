#include <gtest/gtest.h>

#include <random>

#include "cohort/error.hpp"
#include "cohort/filter.hpp"
#include "cohort/json_io.hpp"
#include "cohort/synth.hpp"
#include "test_support.hpp"

namespace cohort {
namespace {

using testing::desk_catalog;
using testing::filter_of;
using testing::read_file;
using testing::test_data_dir;

constexpr std::string_view kNull = R"({"op":"and","content":[]})";

TEST(ParseFilter, CgciExampleHasFourCategoricalLeaves) {
  const auto parsed = parse_filter(read_file(test_data_dir() / "cgci_blgsp_filter.json"));
  ASSERT_EQ(parsed.filter.leaves.size(), 4u);
  for (const auto& leaf : parsed.filter.leaves) EXPECT_TRUE(std::holds_alternative<CategoricalLeaf>(leaf));
  const auto& first = std::get<CategoricalLeaf>(parsed.filter.leaves[0]);
  EXPECT_EQ(first.field, "cases.project.program.name");
  // Uppercase leaf values are folded with a warning.
  EXPECT_EQ(first.values, std::vector<std::string>{"cgci"});
  EXPECT_FALSE(parsed.warnings.empty());
}

TEST(ParseFilter, EmptyConjunction) {
  const auto parsed = parse_filter(kNull);
  EXPECT_TRUE(parsed.filter.empty());
  EXPECT_TRUE(parsed.warnings.empty());
}

TEST(ParseFilter, NumericLeaf) {
  const auto f = filter_of(
      R"({"op":"and","content":[{"op":">=","content":{"field":"cases.diagnoses.age_at_diagnosis","value":18250}}]})");
  ASSERT_EQ(f.leaves.size(), 1u);
  const auto& leaf = std::get<NumericLeaf>(f.leaves[0]);
  EXPECT_EQ(leaf.field, "cases.diagnoses.age_at_diagnosis");
  EXPECT_EQ(leaf.op, Comparator::kGreaterEqual);
  EXPECT_EQ(leaf.value, 18250.0);
}

TEST(ParseFilter, NotJsonIsSyntaxError) {
  EXPECT_THROW(parse_filter("not json"), SyntaxError);
  EXPECT_THROW(parse_filter(""), SyntaxError);
  EXPECT_THROW(parse_filter(R"({"op":"and")"), SyntaxError);
}

TEST(ParseFilter, StructureErrorsCarryPaths) {
  auto path_of = [](std::string_view text) {
    try {
      parse_filter(text);
    } catch (const StructureError& e) {
      return e.path();
    }
    return std::string("<no error>");
  };
  EXPECT_EQ(path_of(R"({"op":"or","content":[]})"), "/op");
  EXPECT_EQ(path_of(R"({"op":"and","content":{}})"), "/content");
  EXPECT_EQ(path_of(R"({"op":"and","content":[{"op":"~","content":{"field":"a","value":1}}]})"), "/content/0/op");
  EXPECT_EQ(path_of(R"({"op":"and","content":[{"op":"in","content":{"field":"a","value":[]}}]})"),
            "/content/0/content/value");
  EXPECT_EQ(path_of(R"({"op":"and","content":[{"op":"in","content":{"field":"a","value":[1]}}]})"),
            "/content/0/content/value/0");
  EXPECT_EQ(path_of(R"({"op":"and","content":[{"op":"<","content":{"field":"a","value":"x"}}]})"),
            "/content/0/content/value");
  EXPECT_EQ(path_of(R"([1,2])"), "/");
}

TEST(ParseFilter, NestedConjunctionIsRejected) {
  EXPECT_THROW(parse_filter(R"({"op":"and","content":[{"op":"and","content":[]}]})"), StructureError);
}

TEST(ParseFilter, DeepNestingIsRejectedWithoutRecursionBlowup) {
  std::string deep(100000, '[');
  EXPECT_THROW(parse_filter(deep), Error);
  std::string deep_closed = std::string(50, '[') + std::string(50, ']');
  EXPECT_THROW(parse_filter(deep_closed), StructureError);
}

TEST(ParseFilter, ArbitraryBytesOnlyRaiseStructuredErrors) {
  std::mt19937_64 gen(2024);
  const std::string alphabet = R"({}[]":,opandcontentfieldvalue<>=in 0123456789.-e)";
  std::size_t accepted = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    const auto len = gen() % 64;
    for (std::size_t k = 0; k < len; ++k) {
      s += (gen() % 2) ? static_cast<char>(gen() % 256) : alphabet[gen() % alphabet.size()];
    }
    try {
      parse_filter(s);
      ++accepted;
    } catch (const SyntaxError&) {
    } catch (const StructureError&) {
    }
  }
  EXPECT_LT(accepted, 10000u);
}

TEST(Validate, TargetExampleIsValidWithoutIssues) {
  const auto report = validate(filter_of(read_file(test_data_dir() / "target_all_filter.json")), desk_catalog());
  EXPECT_TRUE(report.valid);
  EXPECT_TRUE(report.issues.empty());
}

TEST(Validate, UnknownField) {
  const auto report =
      validate(filter_of(R"({"op":"and","content":[{"op":"in","content":{"field":"cases.bogus.name","value":["x"]}}]})"),
               desk_catalog());
  EXPECT_FALSE(report.valid);
  ASSERT_EQ(report.errors().size(), 1u);
  EXPECT_NE(report.errors()[0]->message.find("unknown field"), std::string::npos);
  EXPECT_EQ(report.errors()[0]->path, "/content/0/content/field");
}

TEST(Validate, NullFilterIsValidWithWarning) {
  const auto report = validate(filter_of(kNull), desk_catalog());
  EXPECT_TRUE(report.valid);
  ASSERT_EQ(report.issues.size(), 1u);
  EXPECT_EQ(report.issues[0].severity, Severity::kWarning);
  EXPECT_EQ(report.issues[0].message, "null filter matches all cases");
}

TEST(Validate, ValueOutsideListRangeAndDuplicates) {
  const auto report = validate(filter_of(R"({"op":"and","content":[
      {"op":"in","content":{"field":"cases.samples.tissue_type","value":["tumor","tumor","bogus"]}},
      {"op":"<","content":{"field":"cases.diagnoses.age_at_diagnosis","value":99999}},
      {"op":"in","content":{"field":"cases.samples.tissue_type","value":["normal"]}}]})"),
                               desk_catalog());
  EXPECT_FALSE(report.valid);
  EXPECT_EQ(report.errors().size(), 4u);  // duplicate value, bogus value, out of range, duplicate field
}

TEST(Validate, KindMismatch) {
  EXPECT_FALSE(validate(filter_of(R"({"op":"and","content":[
      {"op":"in","content":{"field":"cases.diagnoses.age_at_diagnosis","value":["10"]}}]})"),
                        desk_catalog())
                   .valid);
  EXPECT_FALSE(validate(filter_of(R"({"op":"and","content":[
      {"op":">","content":{"field":"cases.samples.tissue_type","value":1}}]})"),
                        desk_catalog())
                   .valid);
}

TEST(Validate, RangeBoundsAreInclusive) {
  auto leaf = [](double v) {
    return Filter{{NumericLeaf{"cases.diagnoses.age_at_diagnosis", Comparator::kLessEqual, v}}};
  };
  EXPECT_TRUE(validate(leaf(0), desk_catalog()).valid);
  EXPECT_TRUE(validate(leaf(32872), desk_catalog()).valid);
  EXPECT_FALSE(validate(leaf(-1), desk_catalog()).valid);
  EXPECT_FALSE(validate(leaf(32872.5), desk_catalog()).valid);
}

TEST(Serialize, LeafOrderDoesNotMatter) {
  const auto a = filter_of(R"({"op":"and","content":[
      {"op":"in","content":{"field":"cases.samples.tissue_type","value":["tumor","normal"]}},
      {"op":">=","content":{"field":"cases.diagnoses.age_at_diagnosis","value":18250}}]})");
  const auto b = filter_of(R"({"op":"and","content":[
      {"op":">=","content":{"field":"cases.diagnoses.age_at_diagnosis","value":18250}},
      {"op":"in","content":{"field":"cases.samples.tissue_type","value":["normal","tumor"]}}]})");
  EXPECT_EQ(serialize_canonical(a), serialize_canonical(b));
  EXPECT_EQ(serialize_canonical(a),
            R"({"op":"and","content":[{"op":">=","content":{"field":"cases.diagnoses.age_at_diagnosis","value":18250}},)"
            R"({"op":"in","content":{"field":"cases.samples.tissue_type","value":["normal","tumor"]}}]})");
}

TEST(Serialize, CgciGolden) {
  auto golden = read_file(test_data_dir() / "cgci_blgsp_filter.canonical");
  golden.pop_back();  // trailing newline of the golden file
  EXPECT_EQ(serialize_canonical(filter_of(read_file(test_data_dir() / "cgci_blgsp_filter.json"))), golden);
}

TEST(Serialize, NullFilter) { EXPECT_EQ(serialize_canonical(Filter{}), kNull); }

TEST(Serialize, NumbersAndEscapes) {
  EXPECT_EQ(format_number(18250), "18250");
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(12.25), "12.25");
  EXPECT_EQ(quote_json_string("a\"b\\c"), R"("a\"b\\c")");
}

TEST(Serialize, IdempotentOverSyntheticFilters) {
  SynthConfig config;
  config.seed = 11;
  config.target_count = 1000;
  for (const auto& f : generate_corpus(config, desk_catalog())) {
    const auto once = serialize_canonical(f);
    const auto reparsed = parse_filter(once).filter;
    EXPECT_EQ(serialize_canonical(reparsed), once);
    EXPECT_EQ(reparsed, canonicalize(f));
  }
}

TEST(Serialize, JsonValueMatchesCanonicalText) {
  const auto f = filter_of(read_file(test_data_dir() / "target_all_filter.json"));
  EXPECT_EQ(filter_to_json(f).dump(), serialize_canonical(f));
  EXPECT_EQ(parse_filter_json(nlohmann::json::parse(serialize_canonical(f))).filter, canonicalize(f));
}

TEST(LintNull, Cases) {
  EXPECT_TRUE(lint_null(filter_of(kNull)));
  EXPECT_FALSE(lint_null(Filter{{CategoricalLeaf{"cases.samples.tissue_type", {"tumor"}}}}));
  SynthConfig config;
  config.target_count = 200;
  for (const auto& f : generate_corpus(config, desk_catalog())) EXPECT_FALSE(lint_null(f));
}

TEST(Comparators, WireSpellings) {
  for (auto op : {Comparator::kLessEqual, Comparator::kLess, Comparator::kGreaterEqual, Comparator::kGreater}) {
    Comparator back{};
    ASSERT_TRUE(parse_comparator(to_string(op), back));
    EXPECT_EQ(back, op);
  }
  Comparator ignored{};
  EXPECT_FALSE(parse_comparator("≥", ignored));
  EXPECT_FALSE(parse_comparator("in", ignored));
}

}  // namespace
}  // namespace cohort
