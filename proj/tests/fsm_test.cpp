#include <gtest/gtest.h>

#include <set>

#include "cohort/error.hpp"
#include "cohort/fsm.hpp"
#include "cohort/synth.hpp"
#include "test_support.hpp"

namespace cohort {
namespace {

using testing::desk_catalog;

const SchemaFsm& desk_fsm() {
  static const SchemaFsm fsm = compile_fsm(desk_catalog());
  return fsm;
}

FieldCatalog one_value_catalog() {
  FieldSpec f;
  f.name = "cases.samples.tissue_type";
  f.values = {"tumor"};
  f.display = "tissue type";
  return FieldCatalog("one", {f});
}

constexpr std::string_view kNull = R"({"op":"and","content":[]})";

TEST(Fsm, AcceptsNullFilter) { EXPECT_TRUE(desk_fsm().accepts(kNull)); }

TEST(Fsm, RejectsUnknownField) {
  EXPECT_TRUE(desk_fsm().accepts(
      R"({"op":"and","content":[{"op":"in","content":{"field":"cases.samples.tissue_type","value":["tumor"]}}]})"));
  EXPECT_FALSE(desk_fsm().accepts(
      R"({"op":"and","content":[{"op":"in","content":{"field":"cases.bogus","value":["tumor"]}}]})"));
}

TEST(Fsm, EnforcesCatalogValuesRangesAndUniqueness) {
  auto leaf = [](std::string_view op, std::string_view field, std::string_view value) {
    return std::string(R"({"op":"and","content":[{"op":")") + std::string(op) + R"(","content":{"field":")" +
           std::string(field) + R"(","value":)" + std::string(value) + "}}]}";
  };
  const auto& fsm = desk_fsm();
  EXPECT_FALSE(fsm.accepts(leaf("in", "cases.samples.tissue_type", R"(["bogus"])")));
  EXPECT_FALSE(fsm.accepts(leaf("in", "cases.samples.tissue_type", R"(["tumor","tumor"])")));
  EXPECT_TRUE(fsm.accepts(leaf("in", "cases.samples.tissue_type", R"(["tumor","normal"])")));
  EXPECT_FALSE(fsm.accepts(leaf("in", "cases.samples.tissue_type", "[]")));
  EXPECT_FALSE(fsm.accepts(leaf(">=", "cases.samples.tissue_type", "5")));
  EXPECT_FALSE(fsm.accepts(leaf("in", "cases.diagnoses.age_at_diagnosis", R"(["5"])")));
  EXPECT_TRUE(fsm.accepts(leaf(">=", "cases.diagnoses.age_at_diagnosis", "18250")));
  EXPECT_TRUE(fsm.accepts(leaf("<", "cases.diagnoses.age_at_diagnosis", "32872")));
  EXPECT_TRUE(fsm.accepts(leaf("<", "cases.diagnoses.age_at_diagnosis", "0.25")));
  EXPECT_FALSE(fsm.accepts(leaf("<", "cases.diagnoses.age_at_diagnosis", "32873")));
  EXPECT_FALSE(fsm.accepts(leaf("<", "cases.diagnoses.age_at_diagnosis", "-1")));
  EXPECT_FALSE(fsm.accepts(leaf("<", "cases.diagnoses.year_of_diagnosis", "1899")));
  EXPECT_FALSE(fsm.accepts(leaf("=", "cases.diagnoses.age_at_diagnosis", "5")));
  // two leaves on the same field
  EXPECT_FALSE(fsm.accepts(
      R"({"op":"and","content":[{"op":"in","content":{"field":"cases.samples.tissue_type","value":["tumor"]}},)"
      R"({"op":"in","content":{"field":"cases.samples.tissue_type","value":["normal"]}}]})"));
  // whitespace is not part of the canonical grammar
  EXPECT_FALSE(fsm.accepts(R"({"op": "and","content":[]})"));
}

TEST(Fsm, AcceptsAnyLeafOrder) {
  const std::string a = R"({"op":"in","content":{"field":"cases.samples.tissue_type","value":["tumor"]}})";
  const std::string b = R"({"op":">","content":{"field":"cases.diagnoses.age_at_diagnosis","value":10}})";
  EXPECT_TRUE(desk_fsm().accepts(R"({"op":"and","content":[)" + a + "," + b + "]}"));
  EXPECT_TRUE(desk_fsm().accepts(R"({"op":"and","content":[)" + b + "," + a + "]}"));
}

TEST(Fsm, AcceptsCanonicalSerializations) {
  SynthConfig config;
  config.seed = 5;
  config.target_count = 1000;
  for (const auto& f : generate_corpus(config, desk_catalog())) {
    ASSERT_TRUE(desk_fsm().accepts(serialize_canonical(f))) << serialize_canonical(f);
  }
}

TEST(DecodeSession, ReplayEndsAccepting) {
  const auto text = serialize_canonical(Filter{{CategoricalLeaf{"cases.samples.preservation_method", {"ffpe"}},
                                                NumericLeaf{"cases.diagnoses.age_at_diagnosis", Comparator::kLess, 100}}});
  DecodeSession session(desk_fsm());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto r = session.advance(text[i]);
    ASSERT_NE(r, StepResult::kReject) << "at " << i;
    EXPECT_EQ(r == StepResult::kAccepting, i + 1 == text.size());
  }
  EXPECT_TRUE(session.accepting());
  EXPECT_EQ(session.consumed(), text);
}

TEST(DecodeSession, RejectLeavesSessionUnchanged) {
  DecodeSession session(desk_fsm());
  EXPECT_EQ(session.advance('x'), StepResult::kReject);
  EXPECT_EQ(session.consumed(), "");
  EXPECT_EQ(session.state(), desk_fsm().start());

  EXPECT_EQ(session.advance(std::string_view(R"({"op":"and")")), StepResult::kLive);
  EXPECT_FALSE(session.accepting());
  const auto before = session.state();
  EXPECT_EQ(session.advance('}'), StepResult::kReject);
  EXPECT_EQ(session.state(), before);
  EXPECT_EQ(session.consumed(), R"({"op":"and")");
}

TEST(AllowedContinuations, OpValue) {
  DecodeSession session(desk_fsm());
  session.advance(std::string_view(R"({"op":)"));
  const std::vector<std::string> vocab = {R"("and")", R"("or")"};
  EXPECT_EQ(allowed_continuations(session, vocab), (std::vector<bool>{true, false}));
}

TEST(AllowedContinuations, EndOfSequenceOnlyWhenAccepting) {
  DecodeSession session(desk_fsm());
  const std::vector<std::string> vocab = {std::string(kEndOfSequence), "{", ""};
  EXPECT_EQ(allowed_continuations(session, vocab), (std::vector<bool>{false, true, false}));
  session.advance(kNull);
  EXPECT_EQ(allowed_continuations(session, vocab), (std::vector<bool>{true, false, false}));
}

TEST(AllowedContinuations, EmptyVocabulary) {
  DecodeSession session(desk_fsm());
  EXPECT_TRUE(allowed_continuations(session, std::vector<std::string>{}).empty());
}

TEST(AllowedContinuations, SomeByteAlwaysAllowedOnLivePrefixes) {
  std::vector<std::string> bytes;
  for (int c = 1; c < 256; ++c) bytes.emplace_back(1, static_cast<char>(c));
  Rng rng(17);
  for (int walk = 0; walk < 50; ++walk) {
    const auto text = random_walk(desk_fsm(), rng, 100000);
    DecodeSession session(desk_fsm());
    for (char c : text) {
      const auto mask = allowed_continuations(session, bytes);
      ASSERT_TRUE(std::find(mask.begin(), mask.end(), true) != mask.end() || session.accepting());
      ASSERT_TRUE(mask[static_cast<unsigned char>(c) - 1]);
      ASSERT_NE(session.advance(c), StepResult::kReject);
    }
  }
}

TEST(RandomWalk, OutputsValidate) {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const auto text = random_walk(desk_fsm(), rng, 4096 * 16);
    const auto parsed = parse_filter(text);
    ASSERT_TRUE(validate(parsed.filter, desk_catalog()).valid) << text;
  }
}

TEST(RandomWalk, OneValueCatalogYieldsOnlyItsTwoFilters) {
  const auto catalog = one_value_catalog();
  const auto fsm = compile_fsm(catalog);
  Rng rng(1);
  std::set<std::string> seen;
  for (int i = 0; i < 200; ++i) seen.insert(random_walk(fsm, rng, 1000));
  const std::set<std::string> expected = {
      std::string(kNull),
      R"({"op":"and","content":[{"op":"in","content":{"field":"cases.samples.tissue_type","value":["tumor"]}}]})"};
  EXPECT_EQ(seen, expected);
}

TEST(RandomWalk, TruncationError) {
  Rng rng(1);
  EXPECT_THROW(random_walk(desk_fsm(), rng, 3), TruncationError);
}

TEST(Compile, StateBudget) {
  EXPECT_THROW(compile_fsm(desk_catalog(), 10), BudgetError);
  EXPECT_GT(desk_fsm().static_state_count(), 10u);
  EXPECT_LE(desk_fsm().static_state_count(), SchemaFsm::kDefaultStateBudget);
}

TEST(Fsm, StepIsDeterministic) {
  const auto s = desk_fsm().start();
  SchemaFsm::State a;
  SchemaFsm::State b;
  ASSERT_TRUE(desk_fsm().step(s, '{', a));
  ASSERT_TRUE(desk_fsm().step(s, '{', b));
  EXPECT_EQ(a, b);
  EXPECT_EQ(desk_fsm().outgoing(s), std::vector<char>{'{'});
}

}  // namespace
}  // namespace cohort
