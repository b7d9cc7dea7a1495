#include "cohort/case_index.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cohort/error.hpp"
#include "cohort/rng.hpp"

namespace cohort {

using json = nlohmann::json;

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

CaseIndex::CaseIndex(FieldCatalog catalog, std::vector<CaseRecord> records)
    : catalog_(std::move(catalog)), records_(std::move(records)) {
  std::sort(records_.begin(), records_.end(),
            [](const CaseRecord& a, const CaseRecord& b) { return a.case_id < b.case_id; });
  for (std::size_t i = 1; i < records_.size(); ++i) {
    if (records_[i].case_id == records_[i - 1].case_id) {
      throw DataError("duplicate case_id '" + records_[i].case_id + "'");
    }
  }

  const auto& fields = catalog_.fields();
  inverted_.resize(fields.size());
  numeric_.resize(fields.size());
  for (std::size_t f = 0; f < fields.size(); ++f) {
    if (fields[f].is_categorical()) inverted_[f].resize(fields[f].values.size());
  }

  for (std::uint32_t doc = 0; doc < records_.size(); ++doc) {
    for (const auto& [name, attr] : records_[doc].attributes) {
      const auto f = catalog_.index_of(name);
      if (f == FieldCatalog::npos) throw DataError("unknown field '" + name + "'", records_[doc].case_id);
      const auto& spec = fields[f];
      if (const auto* values = std::get_if<std::vector<std::string>>(&attr)) {
        if (!spec.is_categorical()) throw DataError("field '" + name + "' needs a number", records_[doc].case_id);
        for (const auto& v : *values) {
          const auto vi = spec.value_index(v);
          // Values outside the core set are kept on the record but never match.
          if (vi == FieldCatalog::npos) continue;
          auto& list = inverted_[f][vi];
          if (list.empty() || list.back() != doc) list.push_back(doc);
        }
      } else {
        if (!spec.is_numeric()) throw DataError("field '" + name + "' needs a list of strings", records_[doc].case_id);
        numeric_[f].emplace_back(std::get<double>(attr), doc);
      }
    }
  }
  for (auto& column : numeric_) std::sort(column.begin(), column.end());
}

const std::vector<std::uint32_t>& CaseIndex::postings(std::string_view field, std::string_view value) const {
  static const std::vector<std::uint32_t> kEmpty;
  const auto f = catalog_.index_of(field);
  if (f == FieldCatalog::npos || !catalog_.fields()[f].is_categorical()) return kEmpty;
  const auto vi = catalog_.fields()[f].value_index(value);
  return vi == FieldCatalog::npos ? kEmpty : inverted_[f][vi];
}

void CaseIndex::mark_leaf(const Leaf& leaf, std::vector<std::uint64_t>& bits) const {
  auto set = [&bits](std::uint32_t doc) { bits[doc >> 6] |= std::uint64_t{1} << (doc & 63); };
  if (const auto* cat = std::get_if<CategoricalLeaf>(&leaf)) {
    for (const auto& v : cat->values) {
      for (auto doc : postings(cat->field, v)) set(doc);
    }
    return;
  }

  const auto& num = std::get<NumericLeaf>(leaf);
  const auto& column = numeric_[catalog_.index_of(num.field)];
  auto below = [](const std::pair<double, std::uint32_t>& e, double v) { return e.first < v; };
  auto above = [](double v, const std::pair<double, std::uint32_t>& e) { return v < e.first; };
  auto first = column.begin();
  auto last = column.end();
  switch (num.op) {
    case Comparator::kGreaterEqual:
      first = std::lower_bound(column.begin(), column.end(), num.value, below);
      break;
    case Comparator::kGreater:
      first = std::upper_bound(column.begin(), column.end(), num.value, above);
      break;
    case Comparator::kLessEqual:
      last = std::upper_bound(column.begin(), column.end(), num.value, above);
      break;
    case Comparator::kLess:
      last = std::lower_bound(column.begin(), column.end(), num.value, below);
      break;
  }
  for (auto it = first; it != last; ++it) set(it->second);
}

std::vector<std::uint32_t> CaseIndex::match(const Filter& filter) const {
  const auto n = static_cast<std::uint32_t>(records_.size());
  std::vector<std::uint32_t> out;
  if (filter.empty()) {
    out.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }

  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> acc(words, ~std::uint64_t{0});
  std::vector<std::uint64_t> bits(words);
  for (const auto& leaf : filter.leaves) {
    std::fill(bits.begin(), bits.end(), 0);
    mark_leaf(leaf, bits);
    for (std::size_t w = 0; w < words; ++w) acc[w] &= bits[w];
  }
  for (std::size_t w = 0; w < words; ++w) {
    for (auto word = acc[w]; word != 0; word &= word - 1) {
      const auto doc = static_cast<std::uint32_t>(w * 64 + static_cast<std::size_t>(__builtin_ctzll(word)));
      if (doc < n) out.push_back(doc);
    }
  }
  return out;
}

CaseSet CaseIndex::ids(const std::vector<std::uint32_t>& docs) const {
  CaseSet out;
  out.reserve(docs.size());
  for (auto d : docs) out.push_back(records_[d].case_id);
  return out;
}

CaseSet CaseIndex::all_ids() const {
  CaseSet out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.case_id);
  return out;
}

CaseSet execute(const Filter& filter, const CaseIndex& index) {
  const auto report = validate(filter, index.catalog());
  if (!report.valid) {
    const auto* first = report.errors().front();
    throw ValidationError(first->message, first->path);
  }
  return index.ids(index.match(filter));
}

CaseIndex load_cases(std::istream& in, const FieldCatalog& catalog) {
  std::vector<CaseRecord> records;
  std::set<std::string> unknown;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "line " + std::to_string(lineno);
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("malformed case record: ") + e.what(), where);
    }
    if (!doc.is_object() || !doc.contains("case_id") || !doc["case_id"].is_string()) {
      throw DataError("case record needs a string 'case_id'", where);
    }
    CaseRecord rec;
    rec.case_id = doc["case_id"].get<std::string>();
    if (rec.case_id.empty()) throw DataError("case_id must be non-empty", where);
    if (auto it = doc.find("attributes"); it != doc.end()) {
      if (!it->is_object()) throw DataError("'attributes' must be an object", where);
      for (const auto& [field, value] : it->items()) {
        const FieldSpec* spec = catalog.find(field);
        if (spec == nullptr) {
          unknown.insert(field);
          continue;
        }
        if (spec->is_numeric()) {
          if (!value.is_number()) throw DataError("attribute '" + field + "' must be a number", where);
          rec.attributes.emplace(field, value.get<double>());
        } else {
          if (!value.is_array()) throw DataError("attribute '" + field + "' must be a list of strings", where);
          std::vector<std::string> values;
          for (const auto& v : value) {
            if (!v.is_string()) throw DataError("attribute '" + field + "' must be a list of strings", where);
            values.push_back(lowercase(v.get<std::string>()));
          }
          rec.attributes.emplace(field, std::move(values));
        }
      }
    }
    records.push_back(std::move(rec));
  }
  if (!unknown.empty()) {
    std::string names;
    for (const auto& u : unknown) names += (names.empty() ? "" : ", ") + u;
    throw DataError("case file uses fields outside the catalog: " + names);
  }
  return CaseIndex(catalog, std::move(records));
}

CaseIndex load_cases_file(const std::filesystem::path& path, const FieldCatalog& catalog) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open case file", path.string());
  return load_cases(in, catalog);
}

std::string format_export(const CaseSet& ids) {
  CaseSet sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::string out;
  for (const auto& id : sorted) {
    out += id;
    out += '\n';
  }
  return out;
}

void export_cases(const CaseSet& ids, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write export file", path.string());
  out << format_export(ids);
  if (!out.flush()) throw IoError("failed writing export file", path.string());
}

CaseSet read_export(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open export file", path.string());
  CaseSet out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CaseRecord> generate_cases(const FieldCatalog& catalog, std::size_t count, std::uint64_t seed,
                                       double missing_rate) {
  Rng rng(seed);
  std::vector<CaseRecord> out;
  out.reserve(count);
  static constexpr char kHex[] = "0123456789abcdef";
  for (std::size_t i = 0; i < count; ++i) {
    CaseRecord rec;
    // UUID-shaped identifier.
    for (int group : {8, 4, 4, 4, 12}) {
      if (!rec.case_id.empty()) rec.case_id += '-';
      for (int k = 0; k < group; ++k) rec.case_id += kHex[rng.below(16)];
    }
    for (const auto& spec : catalog.fields()) {
      if (rng.coin(missing_rate)) continue;
      if (spec.is_numeric()) {
        const auto lo = static_cast<std::int64_t>(std::ceil(spec.range->min));
        const auto hi = static_cast<std::int64_t>(std::floor(spec.range->max));
        rec.attributes.emplace(spec.name, static_cast<double>(rng.between(lo, hi)));
      } else {
        const auto k = 1 + rng.below(std::min<std::size_t>(3, spec.values.size()));
        std::vector<std::string> values;
        for (auto vi : rng.sample_indices(spec.values.size(), k)) values.push_back(spec.values[vi]);
        std::sort(values.begin(), values.end());
        rec.attributes.emplace(spec.name, std::move(values));
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::string case_to_jsonl(const CaseRecord& record) {
  nlohmann::ordered_json attrs = nlohmann::ordered_json::object();
  for (const auto& [name, value] : record.attributes) {
    if (const auto* values = std::get_if<std::vector<std::string>>(&value)) {
      attrs[name] = *values;
    } else {
      const double v = std::get<double>(value);
      if (std::trunc(v) == v && std::fabs(v) < 9.0e15) {
        attrs[name] = static_cast<std::int64_t>(v);
      } else {
        attrs[name] = v;
      }
    }
  }
  nlohmann::ordered_json doc;
  doc["case_id"] = record.case_id;
  doc["attributes"] = std::move(attrs);
  return doc.dump();
}

void write_cases(std::ostream& out, const std::vector<CaseRecord>& records) {
  for (const auto& r : records) out << case_to_jsonl(r) << '\n';
}

}  // namespace cohort
