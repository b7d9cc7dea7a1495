#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "cohort/catalog.hpp"
#include "cohort/filter.hpp"
#include "cohort/rng.hpp"

namespace cohort {

struct SynthConfig {
  std::uint64_t seed = 42;
  std::size_t target_count = 1;
  int chi_square_df = 6;
  std::size_t max_values_per_field = 5;

  /// Throws ContractError when a bound is violated.
  void check() const;
};

enum class Provenance { kReal, kSynthetic };

std::string_view to_string(Provenance p);

/// A (query, filter) training or evaluation pair. The query stays empty until a
/// verbalizer fills it.
struct PairedSample {
  std::optional<std::string> query;
  Filter filter;
  Provenance provenance = Provenance::kSynthetic;
  std::string hash;
};

/// Lowercase hex MD5 of serialize_canonical(filter).
std::string canonical_hash(const Filter& filter);

/// Number of leaves for one synthetic filter: a chi-square draw rounded half to
/// even, redrawn until it lands in [1, max_fields].
std::size_t sample_field_count(Rng& rng, std::size_t max_fields, const SynthConfig& config);

/// One random filter: distinct fields chosen uniformly, then operator/value
/// (numeric) or 1..max_values_per_field distinct values (categorical).
Filter sample_filter(Rng& rng, const FieldCatalog& catalog, const SynthConfig& config);

/// `config.target_count` filters whose digests are distinct and disjoint from
/// `existing_hashes`. Throws GenerationError after 100 x target consecutive
/// duplicate draws.
std::vector<Filter> generate_corpus(const SynthConfig& config, const FieldCatalog& catalog,
                                    const std::unordered_set<std::string>& existing_hashes = {});

PairedSample make_sample(Filter filter, Provenance provenance, std::optional<std::string> query = std::nullopt);

/// One corpus JSONL line (no trailing newline). Key order: query, filter,
/// provenance, hash.
std::string to_jsonl(const PairedSample& sample);

/// Parses one JSONL line. Filter structure is checked; the stored hash must
/// match the recomputed one when present.
PairedSample sample_from_jsonl(std::string_view line);

std::vector<PairedSample> read_corpus(std::istream& in);
std::vector<PairedSample> read_corpus_file(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const std::vector<PairedSample>& samples);

}  // namespace cohort
