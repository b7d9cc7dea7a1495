#include "cohort/eval.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>

#include "cohort/error.hpp"
#include "cohort/stats.hpp"
#include "cohort/verbalizer.hpp"

namespace cohort {

namespace {

// Both ranges sorted ascending.
template <class T>
SetMetrics compare_sorted(const std::vector<T>& predicted, const std::vector<T>& actual) {
  if (actual.empty()) throw ContractError("actual case set must be non-empty");
  std::size_t common = 0;
  auto p = predicted.begin();
  auto a = actual.begin();
  while (p != predicted.end() && a != actual.end()) {
    if (*p < *a) {
      ++p;
    } else if (*a < *p) {
      ++a;
    } else {
      ++common;
      ++p;
      ++a;
    }
  }
  const auto uni = predicted.size() + actual.size() - common;
  SetMetrics m;
  m.tpr = static_cast<double>(common) / static_cast<double>(actual.size());
  m.iou = static_cast<double>(common) / static_cast<double>(uni);
  m.exact = common == actual.size() && common == predicted.size();
  return m;
}

}  // namespace

SetMetrics set_metrics(const CaseSet& predicted, const CaseSet& actual) { return compare_sorted(predicted, actual); }

namespace {

std::map<std::string, std::size_t> bag_of_words(std::string_view text, std::size_t& total) {
  std::map<std::string, std::size_t> bag;
  std::string word;
  total = 0;
  auto flush = [&] {
    if (!word.empty()) {
      ++bag[word];
      ++total;
      word.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      word += static_cast<char>(std::tolower(c));
    } else {
      flush();
    }
  }
  flush();
  return bag;
}

}  // namespace

double token_f1(std::string_view candidate, std::string_view reference) {
  std::size_t n_cand = 0;
  std::size_t n_ref = 0;
  const auto cand = bag_of_words(candidate, n_cand);
  const auto ref = bag_of_words(reference, n_ref);
  std::size_t overlap = 0;
  for (const auto& [word, count] : cand) {
    if (auto it = ref.find(word); it != ref.end()) overlap += std::min(count, it->second);
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(n_cand);
  const double recall = static_cast<double>(overlap) / static_cast<double>(n_ref);
  return 2.0 * precision * recall / (precision + recall);
}

SampleMetrics evaluate_pair(const PairedSample& sample, const Translator& system, const CaseIndex& index,
                            const FieldCatalog& catalog, const QueryScorer& scorer) {
  if (!validate(sample.filter, catalog).valid) throw ContractError("reference filter does not validate", sample.hash);
  // Document ids follow case-id order, so comparing them is comparing case sets.
  const auto actual = index.match(sample.filter);
  if (actual.empty()) throw ContractError("reference filter selects no cases", sample.hash);
  const std::string query = sample.query.value_or("");

  std::optional<Filter> predicted;
  try {
    Filter f = system(query);
    if (validate(f, catalog).valid) predicted = std::move(f);
  } catch (const Error&) {
    // unusable generation: scored as the empty set
  }

  SampleMetrics m;
  if (predicted) {
    const auto sm = compare_sorted(index.match(*predicted), actual);
    m.tpr = sm.tpr;
    m.iou = sm.iou;
    m.exact = sm.exact;
    m.qsim = scorer(verbalize_canonical(*predicted, catalog), query);
  } else {
    m.qsim = scorer("", query);
  }
  return m;
}

std::vector<SampleMetrics> evaluate(const std::vector<PairedSample>& samples, const Translator& system,
                                    const CaseIndex& index, const FieldCatalog& catalog, const QueryScorer& scorer) {
  std::vector<SampleMetrics> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(evaluate_pair(s, system, index, catalog, scorer));
  return out;
}

EvalSummary summarize(const std::vector<SampleMetrics>& metrics) {
  if (metrics.empty()) throw ContractError("cannot summarize zero samples");
  EvalSummary s;
  s.n = metrics.size();
  for (const auto& m : metrics) {
    s.means.tpr += m.tpr;
    s.means.iou += m.iou;
    s.means.exact += m.exact ? 1.0 : 0.0;
    s.means.qsim += m.qsim;
  }
  const auto n = static_cast<double>(s.n);
  s.means.tpr /= n;
  s.means.iou /= n;
  s.means.exact /= n;
  s.means.qsim /= n;
  return s;
}

EvalSummary compare(const std::vector<SampleMetrics>& system, const std::vector<SampleMetrics>& baseline) {
  if (system.size() != baseline.size()) throw ContractError("paired comparison needs equally long metric lists");
  EvalSummary s = summarize(system);

  auto diffs = [&](auto member) {
    std::vector<double> d;
    d.reserve(system.size());
    for (std::size_t i = 0; i < system.size(); ++i) d.push_back(system[i].*member - baseline[i].*member);
    return d;
  };
  std::size_t b = 0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < system.size(); ++i) {
    if (system[i].exact && !baseline[i].exact) ++b;
    if (!system[i].exact && baseline[i].exact) ++c;
  }

  constexpr std::size_t kComparisons = 4;
  auto add = [&](std::string name, double p) { s.tests.push_back({std::move(name), p, bonferroni(p, kComparisons)}); };
  add("tpr", paired_t_test(diffs(&SampleMetrics::tpr)));
  add("iou", paired_t_test(diffs(&SampleMetrics::iou)));
  add("exact", mcnemar(b, c).p);
  add("qsim", paired_t_test(diffs(&SampleMetrics::qsim)));
  return s;
}

nlohmann::ordered_json summary_to_json(const EvalSummary& summary) {
  nlohmann::ordered_json doc;
  doc["n"] = summary.n;
  doc["metrics"] = {{"tpr", summary.means.tpr},
                    {"iou", summary.means.iou},
                    {"exact", summary.means.exact},
                    {"qsim", summary.means.qsim}};
  doc["tests"] = nlohmann::ordered_json::array();
  for (const auto& t : summary.tests) {
    doc["tests"].push_back({{"name", t.name}, {"p", t.p}, {"p_adj", t.p_adj}});
  }
  return doc;
}

std::vector<PairedSample> make_eval_split(const std::vector<PairedSample>& samples, const CaseIndex& index,
                                          std::size_t limit, std::size_t max_chars) {
  std::vector<PairedSample> out;
  for (const auto& s : samples) {
    if (out.size() >= limit) break;
    const auto length = s.query.value_or("").size() + serialize_canonical(s.filter).size();
    if (length > max_chars) continue;
    if (!validate(s.filter, index.catalog()).valid) continue;
    if (index.match(s.filter).empty()) continue;
    out.push_back(s);
  }
  return out;
}

}  // namespace cohort
