#include "cohort/synth.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <openssl/evp.h>

#include "cohort/error.hpp"
#include "cohort/json_io.hpp"

namespace cohort {

using json = nlohmann::json;

void SynthConfig::check() const {
  if (target_count < 1) throw ContractError("target_count must be >= 1");
  if (chi_square_df < 1) throw ContractError("chi_square_df must be >= 1");
  if (max_values_per_field < 1) throw ContractError("max_values_per_field must be >= 1");
}

std::string_view to_string(Provenance p) { return p == Provenance::kReal ? "real" : "synthetic"; }

std::string canonical_hash(const Filter& filter) {
  const std::string text = serialize_canonical(filter);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest.data(), &len, EVP_md5(), nullptr) != 1) {
    throw Error("MD5 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::size_t sample_field_count(Rng& rng, std::size_t max_fields, const SynthConfig& config) {
  if (max_fields < 1) throw ContractError("max_fields must be >= 1");
  for (;;) {
    // nearbyint honours the default round-to-nearest-even mode.
    const double n = std::nearbyint(rng.chi_square(config.chi_square_df));
    if (n >= 1.0 && n <= static_cast<double>(max_fields)) return static_cast<std::size_t>(n);
  }
}

Filter sample_filter(Rng& rng, const FieldCatalog& catalog, const SynthConfig& config) {
  if (catalog.empty()) throw ContractError("catalog must not be empty");
  const auto& fields = catalog.fields();
  const auto n = sample_field_count(rng, fields.size(), config);

  static constexpr std::array<Comparator, 4> kOps = {Comparator::kLessEqual, Comparator::kLess,
                                                     Comparator::kGreaterEqual, Comparator::kGreater};
  Filter filter;
  for (auto fi : rng.sample_indices(fields.size(), n)) {
    const auto& spec = fields[fi];
    if (spec.is_numeric()) {
      const auto op = kOps[rng.below(kOps.size())];
      const double lo = std::ceil(spec.range->min);
      const double hi = std::floor(spec.range->max);
      double value = 0.0;
      if (lo <= hi) {
        value = static_cast<double>(rng.between(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
      } else {
        // No whole unit inside the range; fall back to a continuous draw.
        value = spec.range->min + rng.uniform01() * (spec.range->max - spec.range->min);
      }
      filter.leaves.emplace_back(NumericLeaf{spec.name, op, value});
    } else {
      auto m = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(config.max_values_per_field)));
      m = std::min(m, spec.values.size());
      CategoricalLeaf leaf{spec.name, {}};
      for (auto vi : rng.sample_indices(spec.values.size(), m)) leaf.values.push_back(spec.values[vi]);
      filter.leaves.emplace_back(std::move(leaf));
    }
  }
  return canonicalize(std::move(filter));
}

std::vector<Filter> generate_corpus(const SynthConfig& config, const FieldCatalog& catalog,
                                    const std::unordered_set<std::string>& existing_hashes) {
  config.check();
  Rng rng(config.seed);
  std::unordered_set<std::string> seen = existing_hashes;
  std::vector<Filter> out;
  out.reserve(config.target_count);
  const std::size_t max_rejections = 100 * config.target_count;
  std::size_t rejections = 0;
  while (out.size() < config.target_count) {
    Filter f = sample_filter(rng, catalog, config);
    if (!seen.insert(canonical_hash(f)).second) {
      if (++rejections >= max_rejections) {
        throw GenerationError("gave up after " + std::to_string(rejections) + " consecutive duplicate filters with " +
                              std::to_string(out.size()) + " of " + std::to_string(config.target_count) +
                              " generated");
      }
      continue;
    }
    rejections = 0;
    out.push_back(std::move(f));
  }
  return out;
}

PairedSample make_sample(Filter filter, Provenance provenance, std::optional<std::string> query) {
  PairedSample s;
  s.hash = canonical_hash(filter);
  s.filter = canonicalize(std::move(filter));
  s.provenance = provenance;
  s.query = std::move(query);
  return s;
}

std::string to_jsonl(const PairedSample& sample) {
  std::string line = R"({"query":)";
  line += sample.query ? quote_json_string(*sample.query) : "null";
  line += R"(,"filter":)";
  line += serialize_canonical(sample.filter);
  line += R"(,"provenance":")";
  line += to_string(sample.provenance);
  line += R"(","hash":")";
  line += sample.hash;
  line += "\"}";
  return line;
}

PairedSample sample_from_jsonl(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw SyntaxError(std::string("corpus line is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("filter")) throw StructureError("corpus line needs a 'filter' object");
  PairedSample s;
  s.filter = canonicalize(parse_filter_json(doc["filter"], "/filter").filter);
  if (auto it = doc.find("query"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) throw StructureError("'query' must be a string or null", "/query");
    s.query = it->get<std::string>();
  }
  s.provenance = Provenance::kSynthetic;
  if (auto it = doc.find("provenance"); it != doc.end()) {
    if (*it == "real") {
      s.provenance = Provenance::kReal;
    } else if (*it != "synthetic") {
      throw StructureError("'provenance' must be \"real\" or \"synthetic\"", "/provenance");
    }
  }
  s.hash = canonical_hash(s.filter);
  if (auto it = doc.find("hash"); it != doc.end() && !it->is_null()) {
    if (!it->is_string() || it->get<std::string>() != s.hash) {
      throw DataError("stored hash does not match the filter's canonical digest", "/hash");
    }
  }
  return s;
}

std::vector<PairedSample> read_corpus(std::istream& in) {
  std::vector<PairedSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(sample_from_jsonl(line));
    } catch (const Error& e) {
      throw DataError(e.what(), "line " + std::to_string(lineno));
    }
  }
  return out;
}

std::vector<PairedSample> read_corpus_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus", path.string());
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<PairedSample>& samples) {
  for (const auto& s : samples) out << to_jsonl(s) << '\n';
}

}  // namespace cohort
