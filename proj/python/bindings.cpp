#include <pybind11/gil_safe_call_once.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <array>

#include <json.hpp>

#include "cohort/case_index.hpp"
#include "cohort/catalog.hpp"
#include "cohort/error.hpp"
#include "cohort/eval.hpp"
#include "cohort/filter.hpp"
#include "cohort/fsm.hpp"
#include "cohort/json_io.hpp"
#include "cohort/nl_parser.hpp"
#include "cohort/stats.hpp"
#include "cohort/synth.hpp"
#include "cohort/verbalizer.hpp"

namespace py = pybind11;
using namespace cohort;

namespace {

// Filters cross the boundary as JSON text; these helpers do the conversion.
Filter to_filter(std::string_view text) { return parse_filter(text).filter; }

std::string to_text(const Filter& f) { return serialize_canonical(f); }

struct QueryParser {
  explicit QueryParser(FieldCatalog c) : catalog(std::move(c)), lexicon(catalog) {}
  FieldCatalog catalog;
  Lexicon lexicon;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cohort filter construction, execution and evaluation";

  // Python exception types, in the order the translator tries them.
  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<std::array<py::object, 5>> types;
  types.call_once_and_store_result([&m] {
    auto base = py::exception<Error>(m, "CohortError");
    return std::array<py::object, 5>{
        base,
        py::exception<SyntaxError>(m, "FilterSyntaxError", base.ptr()),
        py::exception<StructureError>(m, "FilterStructureError", base.ptr()),
        py::exception<DataError>(m, "DataError", base.ptr()),
        py::exception<ContractError>(m, "ContractError", base.ptr()),
    };
  });
  py::register_exception_translator([](std::exception_ptr p) {
    const auto& t = types.get_stored();
    try {
      if (p) std::rethrow_exception(p);
    } catch (const SyntaxError& e) {
      py::set_error(t[1], e.what());
    } catch (const StructureError& e) {
      py::set_error(t[2], e.what());
    } catch (const DataError& e) {
      py::set_error(t[3], e.what());
    } catch (const ContractError& e) {
      py::set_error(t[4], e.what());
    } catch (const Error& e) {
      py::set_error(t[0], e.what());
    }
  });

  py::class_<FieldCatalog>(m, "Catalog")
      .def_static("from_file", &load_catalog_file, py::arg("path"))
      .def_static("from_manifest", [](const std::string& text) { return load_catalog(text); }, py::arg("text"))
      .def("__len__", &FieldCatalog::size)
      .def_property_readonly("version", &FieldCatalog::version)
      .def("field_names",
           [](const FieldCatalog& c) {
             std::vector<std::string> names;
             for (const auto& f : c.fields()) names.push_back(f.name);
             return names;
           })
      .def("manifest", &FieldCatalog::to_manifest);

  m.def("canonicalize", [](const std::string& text) { return to_text(canonicalize(to_filter(text))); },
        py::arg("filter_json"), "Canonical serialization of a filter given as JSON text.");
  m.def("canonical_hash", [](const std::string& text) { return canonical_hash(to_filter(text)); },
        py::arg("filter_json"));
  m.def(
      "validate",
      [](const std::string& text, const FieldCatalog& catalog) {
        return report_to_json(validate(to_filter(text), catalog)).dump();
      },
      py::arg("filter_json"), py::arg("catalog"), "Validation report as JSON text.");

  m.def(
      "generate",
      [](const FieldCatalog& catalog, std::size_t count, std::uint64_t seed, bool with_queries) {
        SynthConfig config;
        config.seed = seed;
        config.target_count = count;
        std::vector<std::string> lines;
        for (auto& f : generate_corpus(config, catalog)) {
          std::optional<std::string> query;
          if (with_queries) query = verbalize_canonical(f, catalog);
          lines.push_back(to_jsonl(make_sample(std::move(f), Provenance::kSynthetic, std::move(query))));
        }
        return lines;
      },
      py::arg("catalog"), py::arg("count"), py::arg("seed"), py::arg("with_queries") = true,
      "Synthetic corpus as JSONL lines.");

  m.def(
      "verbalize",
      [](const std::string& text, const FieldCatalog& catalog, std::optional<std::uint64_t> seed) {
        const auto f = to_filter(text);
        return seed ? verbalize_fluent(f, catalog, *seed) : verbalize_canonical(f, catalog);
      },
      py::arg("filter_json"), py::arg("catalog"), py::arg("seed") = py::none(),
      "Canonical phrasing, or seeded fluent phrasing when a seed is given.");

  py::class_<QueryParser>(m, "QueryParser")
      .def(py::init<FieldCatalog>(), py::arg("catalog"))
      .def(
          "parse",
          [](const QueryParser& p, const std::string& text) {
            const auto r = parse_query(text, p.lexicon, p.catalog);
            return py::make_tuple(to_text(r.filter), std::string(to_string(r.diagnostics.confidence)));
          },
          py::arg("text"), "Returns (filter_json, confidence).");

  py::class_<SchemaFsm>(m, "FilterAutomaton")
      .def(py::init([](const FieldCatalog& c) { return compile_fsm(c); }), py::arg("catalog"))
      .def("accepts", &SchemaFsm::accepts, py::arg("text"));

  py::class_<CaseIndex>(m, "CaseIndex")
      .def_static("from_file", &load_cases_file, py::arg("path"), py::arg("catalog"))
      .def("__len__", &CaseIndex::size)
      .def(
          "execute", [](const CaseIndex& index, const std::string& text) { return execute(to_filter(text), index); },
          py::arg("filter_json"), "Sorted ids of the matching cases.");

  m.def(
      "set_metrics",
      [](const CaseSet& predicted, const CaseSet& actual) {
        auto sorted = [](CaseSet s) {
          std::sort(s.begin(), s.end());
          s.erase(std::unique(s.begin(), s.end()), s.end());
          return s;
        };
        const auto r = set_metrics(sorted(predicted), sorted(actual));
        return py::make_tuple(r.tpr, r.iou, r.exact);
      },
      py::arg("predicted"), py::arg("actual"), "Returns (tpr, iou, exact).");
  m.def("token_f1", &token_f1, py::arg("candidate"), py::arg("reference"));
  m.def("paired_t_test", [](const std::vector<double>& d) { return paired_t_test(d); }, py::arg("differences"));
  m.def(
      "mcnemar",
      [](std::size_t b, std::size_t c) {
        const auto r = mcnemar(b, c);
        return py::make_tuple(r.statistic, r.p);
      },
      py::arg("b"), py::arg("c"), "Returns (statistic, p).");
  m.def("bonferroni", &bonferroni, py::arg("p"), py::arg("k"));
}
