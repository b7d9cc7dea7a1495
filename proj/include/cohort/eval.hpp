#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cohort/case_index.hpp"
#include "cohort/catalog.hpp"
#include "cohort/filter.hpp"
#include "cohort/synth.hpp"

namespace cohort {

struct SetMetrics {
  double tpr = 0.0;
  double iou = 0.0;
  bool exact = false;
};

struct SampleMetrics {
  double tpr = 0.0;
  double iou = 0.0;
  bool exact = false;
  double qsim = 0.0;
};

/// tpr = |P∩A|/|A|, iou = |P∩A|/|P∪A|, exact = (P == A). Both sets must be
/// sorted. Throws ContractError when `actual` is empty.
SetMetrics set_metrics(const CaseSet& predicted, const CaseSet& actual);

/// Bag-of-words F1 between two texts (lowercase, split on anything that is not
/// a letter or digit, multiset overlap). 0 when nothing overlaps.
double token_f1(std::string_view candidate, std::string_view reference);

/// Any scorer with token_f1's shape can stand in for the query similarity.
using QueryScorer = std::function<double(std::string_view candidate, std::string_view reference)>;

/// A translation system under evaluation. Throwing cohort::Error (for example
/// InvalidGenerationError) counts as producing no usable filter.
using Translator = std::function<Filter(std::string_view query)>;

/// Runs `system` on the sample's query and compares the cases it retrieves with
/// the cases the reference filter retrieves. An invalid or failed prediction
/// counts as the empty set. qsim compares the canonical verbalization of the
/// prediction with the original query.
SampleMetrics evaluate_pair(const PairedSample& sample, const Translator& system, const CaseIndex& index,
                            const FieldCatalog& catalog, const QueryScorer& scorer = token_f1);

std::vector<SampleMetrics> evaluate(const std::vector<PairedSample>& samples, const Translator& system,
                                    const CaseIndex& index, const FieldCatalog& catalog,
                                    const QueryScorer& scorer = token_f1);

struct MetricMeans {
  double tpr = 0.0;
  double iou = 0.0;
  double exact = 0.0;
  double qsim = 0.0;
};

struct SignificanceTest {
  std::string name;
  double p = 1.0;
  double p_adj = 1.0;
};

struct EvalSummary {
  std::size_t n = 0;
  MetricMeans means;
  std::vector<SignificanceTest> tests;
};

EvalSummary summarize(const std::vector<SampleMetrics>& metrics);

/// Paired comparison of two systems on the same samples: t-tests on tpr, iou
/// and qsim, McNemar on exact, Bonferroni over the four. Fills `tests` of the
/// returned summary, whose means describe `system`.
EvalSummary compare(const std::vector<SampleMetrics>& system, const std::vector<SampleMetrics>& baseline);

nlohmann::ordered_json summary_to_json(const EvalSummary& summary);

/// Keeps samples whose reference filter selects at least one case and whose
/// query plus canonical filter fit in `max_chars`, stopping at `limit`.
std::vector<PairedSample> make_eval_split(const std::vector<PairedSample>& samples, const CaseIndex& index,
                                          std::size_t limit, std::size_t max_chars = 4096);

}  // namespace cohort
