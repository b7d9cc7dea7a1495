// Command-line front end: corpus generation, verbalization, parsing,
// execution, evaluation, automaton fuzzing and the HTTP service.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cohort/case_index.hpp"
#include "cohort/catalog.hpp"
#include "cohort/error.hpp"
#include "cohort/eval.hpp"
#include "cohort/filter.hpp"
#include "cohort/fsm.hpp"
#include "cohort/json_io.hpp"
#include "cohort/llm_client.hpp"
#include "cohort/nl_parser.hpp"
#include "cohort/service.hpp"
#include "cohort/synth.hpp"
#include "cohort/verbalizer.hpp"

namespace {

using namespace cohort;

std::string read_all(std::istream& in) { return {std::istreambuf_iterator<char>(in), {}}; }

std::string read_text(const std::string& path) {
  if (path.empty() || path == "-") return read_all(std::cin);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file", path);
  return read_all(in);
}

// Writes through `fn` to `path`, or to stdout when the path is empty or "-".
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing", path);
  fn(out);
  if (!out) throw IoError("write failed", path);
}

Filter load_valid_filter(const std::string& path, const FieldCatalog& catalog) {
  auto parsed = parse_filter(read_text(path));
  for (const auto& w : parsed.warnings) std::cerr << "warning: " << w.path << ": " << w.message << '\n';
  const auto report = validate(parsed.filter, catalog);
  if (!report.valid) {
    const auto* first = report.errors().front();
    throw ValidationError(first->message, first->path);
  }
  return canonicalize(std::move(parsed.filter));
}

Translator make_system(const std::string& name, const FieldCatalog& catalog, const Lexicon& lexicon,
                       const SchemaFsm& fsm, const std::vector<PairedSample>& samples) {
  if (name == "lexicon") {
    return [&](std::string_view q) { return parse_query(q, lexicon, catalog).filter; };
  }
  if (name == "llm") {
    auto config = EndpointConfig::from_env();
    if (config.base_url.empty()) throw ContractError("system 'llm' needs COHORT_LLM_ENDPOINT");
    return [&, config](std::string_view q) { return llm_generate(q, config, catalog, fsm); };
  }
  if (name == "empty") {
    return [](std::string_view) -> Filter { throw InvalidGenerationError("no prediction", ""); };
  }
  // identity: looks the reference filter up by its query
  auto table = std::make_shared<std::unordered_map<std::string, Filter>>();
  for (const auto& s : samples) table->emplace(s.query.value_or(""), s.filter);
  return [table](std::string_view q) {
    auto it = table->find(std::string(q));
    if (it == table->end()) throw InvalidGenerationError("query not in corpus", std::string(q));
    return it->second;
  };
}

struct Options {
  std::string catalog;
  std::string cases;
  std::string out = "-";
  std::optional<std::uint64_t> seed;
};

int run(int argc, char** argv) {
  CLI::App app{"Cohort filter toolkit: synthesize, verbalize, parse, execute and evaluate cohort filters"};
  app.require_subcommand(1);
  Options opt;

  auto add_catalog = [&](CLI::App* sub) {
    sub->add_option("--catalog", opt.catalog, "Catalog manifest (JSON)")->envname("COHORT_CATALOG")->required();
  };
  auto add_cases = [&](CLI::App* sub) {
    sub->add_option("--cases", opt.cases, "Case records (JSONL)")->envname("COHORT_CASES")->required();
  };
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", opt.out, "Output file ('-' for stdout)"); };
  auto add_seed = [&](CLI::App* sub, bool required) {
    auto* o = sub->add_option("--seed", opt.seed, "Random seed");
    if (required) o->required();
  };

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic (query, filter) corpus");
  std::size_t gen_count = 0;
  std::size_t gen_df = 6;
  std::size_t gen_max_values = 5;
  std::string gen_queries = "canonical";
  std::string gen_existing;
  add_catalog(gen);
  add_seed(gen, true);
  add_out(gen);
  gen->add_option("--count", gen_count, "Number of samples")->required();
  gen->add_option("--df", gen_df, "Chi-square degrees of freedom for the field count")->capture_default_str();
  gen->add_option("--max-values", gen_max_values, "Most values per categorical leaf")->capture_default_str();
  gen->add_option("--queries", gen_queries, "Query text to attach")
      ->check(CLI::IsMember({"canonical", "fluent", "none"}))
      ->capture_default_str();
  gen->add_option("--exclude", gen_existing, "Existing corpus whose filters must not repeat");

  // gen-cases
  auto* gen_cases = app.add_subcommand("gen-cases", "Generate synthetic case records");
  std::size_t cases_count = 0;
  double missing_rate = 0.05;
  add_catalog(gen_cases);
  add_seed(gen_cases, true);
  add_out(gen_cases);
  gen_cases->add_option("--count", cases_count, "Number of cases")->required();
  gen_cases->add_option("--missing-rate", missing_rate, "Chance an attribute is absent")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  // verbalize
  auto* verbalize = app.add_subcommand("verbalize", "Render a filter as text");
  std::string filter_path = "-";
  std::string style = "canonical";
  add_catalog(verbalize);
  add_seed(verbalize, false);
  add_out(verbalize);
  verbalize->add_option("--filter", filter_path, "Filter JSON file ('-' for stdin)");
  verbalize->add_option("--style", style, "Phrasing")
      ->check(CLI::IsMember({"canonical", "fluent"}))
      ->capture_default_str();

  // parse
  auto* parse = app.add_subcommand("parse", "Translate a cohort description into a filter");
  std::optional<std::string> parse_text;
  bool with_diagnostics = false;
  add_catalog(parse);
  add_out(parse);
  parse->add_option("--text", parse_text, "Description (read from stdin when omitted)");
  parse->add_flag("--diagnostics", with_diagnostics, "Emit {filter, diagnostics} instead of the bare filter");

  // exec
  auto* exec = app.add_subcommand("exec", "Run a filter against case records and export matching ids");
  add_catalog(exec);
  add_cases(exec);
  add_out(exec);
  exec->add_option("--filter", filter_path, "Filter JSON file ('-' for stdin)");

  // eval
  auto* eval = app.add_subcommand("eval", "Score a translation system on a corpus");
  std::string corpus_path;
  std::string system_name = "lexicon";
  std::optional<std::string> baseline_name;
  std::size_t eval_limit = 2000;
  std::size_t max_chars = 4096;
  add_catalog(eval);
  add_cases(eval);
  add_out(eval);
  eval->add_option("--corpus", corpus_path, "Corpus JSONL with queries")->required();
  const auto systems = CLI::IsMember({"lexicon", "identity", "empty", "llm"});
  eval->add_option("--system", system_name, "System under test")->check(systems)->capture_default_str();
  eval->add_option("--baseline", baseline_name, "Second system for paired significance tests")->check(systems);
  eval->add_option("--limit", eval_limit, "Evaluation split size")->capture_default_str();
  eval->add_option("--max-chars", max_chars, "Length cap on query plus filter")->capture_default_str();

  // fsm-fuzz
  auto* fuzz = app.add_subcommand("fsm-fuzz", "Random walks through the filter automaton");
  std::size_t walks = 1000;
  std::size_t max_len = 100000;
  add_catalog(fuzz);
  add_seed(fuzz, true);
  add_out(fuzz);
  fuzz->add_option("--walks", walks, "Number of walks")->capture_default_str();
  fuzz->add_option("--max-len", max_len, "Length cap per walk")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  auto config = ServiceConfig::from_env();
  std::string serve_catalog = config.catalog_path.string();
  std::string serve_cases = config.cases_path.string();
  serve->add_option("--catalog", serve_catalog, "Catalog manifest (JSON)")->envname("COHORT_CATALOG")->required();
  serve->add_option("--cases", serve_cases, "Case records (JSONL)")->envname("COHORT_CASES")->required();
  serve->add_option("--host", config.host, "Bind address")->capture_default_str();
  serve->add_option("--port", config.port, "Port")->envname("COHORT_PORT")->capture_default_str();
  serve->add_option("--page-size", config.page_size, "Most case ids returned by /api/execute")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  if (style == "fluent" && verbalize->parsed() && !opt.seed) {
    std::cerr << "error: --style fluent needs --seed\n\n" << verbalize->help();
    return 1;
  }

  if (gen->parsed()) {
    const auto catalog = load_catalog_file(opt.catalog);
    SynthConfig sc;
    sc.seed = *opt.seed;
    sc.target_count = gen_count;
    sc.chi_square_df = static_cast<int>(gen_df);
    sc.max_values_per_field = gen_max_values;
    std::unordered_set<std::string> existing;
    if (!gen_existing.empty()) {
      for (const auto& s : read_corpus_file(gen_existing)) existing.insert(s.hash);
    }
    const auto filters = generate_corpus(sc, catalog, existing);
    std::vector<PairedSample> samples;
    samples.reserve(filters.size());
    for (std::size_t i = 0; i < filters.size(); ++i) {
      std::optional<std::string> query;
      if (gen_queries == "canonical") query = verbalize_canonical(filters[i], catalog);
      if (gen_queries == "fluent") query = verbalize_fluent(filters[i], catalog, sc.seed + i);
      samples.push_back(make_sample(filters[i], Provenance::kSynthetic, std::move(query)));
    }
    with_output(opt.out, [&](std::ostream& out) { write_corpus(out, samples); });
  } else if (gen_cases->parsed()) {
    const auto catalog = load_catalog_file(opt.catalog);
    const auto records = generate_cases(catalog, cases_count, *opt.seed, missing_rate);
    with_output(opt.out, [&](std::ostream& out) { write_cases(out, records); });
  } else if (verbalize->parsed()) {
    const auto catalog = load_catalog_file(opt.catalog);
    const auto filter = load_valid_filter(filter_path, catalog);
    const auto text =
        style == "fluent" ? verbalize_fluent(filter, catalog, *opt.seed) : verbalize_canonical(filter, catalog);
    with_output(opt.out, [&](std::ostream& out) { out << text << '\n'; });
  } else if (parse->parsed()) {
    const auto catalog = load_catalog_file(opt.catalog);
    const Lexicon lexicon(catalog);
    const auto text = parse_text ? *parse_text : read_all(std::cin);
    const auto result = parse_query(text, lexicon, catalog);
    nlohmann::ordered_json doc = filter_to_json(result.filter);
    if (with_diagnostics) {
      nlohmann::ordered_json unmatched = nlohmann::ordered_json::array();
      for (const auto& u : result.diagnostics.unmatched_text) unmatched.push_back(text.substr(u.start, u.end - u.start));
      doc = {{"filter", doc},
             {"diagnostics",
              {{"confidence", std::string(to_string(result.diagnostics.confidence))}, {"unmatched_text", unmatched}}}};
    }
    with_output(opt.out, [&](std::ostream& out) { out << doc.dump() << '\n'; });
  } else if (exec->parsed()) {
    const auto catalog = load_catalog_file(opt.catalog);
    const auto index = load_cases_file(opt.cases, catalog);
    const auto ids = execute(load_valid_filter(filter_path, catalog), index);
    if (opt.out.empty() || opt.out == "-") {
      std::cout << format_export(ids);
    } else {
      export_cases(ids, opt.out);
    }
  } else if (eval->parsed()) {
    const auto catalog = load_catalog_file(opt.catalog);
    const auto index = load_cases_file(opt.cases, catalog);
    const Lexicon lexicon(catalog);
    const auto fsm = compile_fsm(catalog);
    const auto split = make_eval_split(read_corpus_file(corpus_path), index, eval_limit, max_chars);
    if (split.size() < 2) throw DataError("evaluation split needs at least two usable samples", corpus_path);
    const auto system = make_system(system_name, catalog, lexicon, fsm, split);
    const auto metrics = evaluate(split, system, index, catalog);
    EvalSummary summary = summarize(metrics);
    if (baseline_name) {
      const auto baseline = make_system(*baseline_name, catalog, lexicon, fsm, split);
      summary = compare(metrics, evaluate(split, baseline, index, catalog));
    }
    with_output(opt.out, [&](std::ostream& out) { out << summary_to_json(summary).dump(2) << '\n'; });
  } else if (fuzz->parsed()) {
    const auto catalog = load_catalog_file(opt.catalog);
    const auto fsm = compile_fsm(catalog);
    Rng rng(*opt.seed);
    std::size_t invalid = 0;
    with_output(opt.out, [&](std::ostream& out) {
      for (std::size_t i = 0; i < walks; ++i) {
        const auto text = random_walk(fsm, rng, max_len);
        bool ok = false;
        try {
          ok = validate(parse_filter(text).filter, catalog).valid;
        } catch (const Error&) {
        }
        if (!ok) ++invalid;
        out << text << '\n';
      }
    });
    std::cerr << walks << " walks, " << invalid << " invalid\n";
    if (invalid != 0) return 2;
  } else if (serve->parsed()) {
    config.catalog_path = serve_catalog;
    config.cases_path = serve_cases;
    http_serve(config);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const cohort::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
