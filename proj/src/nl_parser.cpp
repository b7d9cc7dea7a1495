#include "cohort/nl_parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>
#include <set>

namespace cohort {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::vector<std::string> token_texts(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text)) out.push_back(std::move(t.text));
  return out;
}

bool is_number(const std::string& token) {
  if (token.empty() || !is_digit(token.front()) || !is_digit(token.back())) return false;
  return std::all_of(token.begin(), token.end(), [](char c) { return is_digit(c) || c == '.'; }) &&
         std::count(token.begin(), token.end(), '.') <= 1;
}

// Template filler and connective words. They never make a parse partial.
const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> kWords = {
      "a",    "all",     "an",       "and",     "any",      "are",   "as",       "belong", "belonging", "belongs",
      "by",   "case",    "cases",    "cohort",  "data",     "for",   "from",     "gdc",    "has",       "have",
      "in",   "is",      "me",       "of",      "on",       "or",    "patient",  "patients", "program", "programs",
      "project", "projects", "sample", "samples", "show", "that", "the", "their", "to", "were", "where", "which",
      "who",  "whose",   "with",     "within"};
  return kWords;
}

struct ComparatorPhrase {
  std::string_view text;
  Comparator op;
};

constexpr ComparatorPhrase kComparatorPhrases[] = {
    {"at least", Comparator::kGreaterEqual},
    {"no less than", Comparator::kGreaterEqual},
    {"greater than or equal to", Comparator::kGreaterEqual},
    {"at most", Comparator::kLessEqual},
    {"no more than", Comparator::kLessEqual},
    {"less than or equal to", Comparator::kLessEqual},
    {"up to", Comparator::kLessEqual},
    {"more than", Comparator::kGreater},
    {"greater than", Comparator::kGreater},
    {"over", Comparator::kGreater},
    {"above", Comparator::kGreater},
    {"older than", Comparator::kGreater},
    {"less than", Comparator::kLess},
    {"fewer than", Comparator::kLess},
    {"under", Comparator::kLess},
    {"below", Comparator::kLess},
    {"younger than", Comparator::kLess},
};

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t clause = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == ';') {
      ++clause;
      ++i;
      continue;
    }
    if (!is_word_byte(c)) {
      ++i;
      continue;
    }
    Token tok;
    tok.start = i;
    tok.clause = clause;
    while (i < text.size()) {
      const auto b = static_cast<unsigned char>(text[i]);
      if (is_word_byte(b)) {
        tok.text += static_cast<char>(b < 0x80 ? std::tolower(b) : b);
        ++i;
      } else if (b == '.' && i > tok.start && is_digit(text[i - 1]) && i + 1 < text.size() && is_digit(text[i + 1])) {
        tok.text += '.';
        ++i;
      } else {
        break;
      }
    }
    tok.end = i;
    out.push_back(std::move(tok));
  }
  return out;
}

Lexicon::Lexicon(const FieldCatalog& catalog) {
  const auto& fields = catalog.fields();
  for (std::size_t fi = 0; fi < fields.size(); ++fi) {
    Entry e;
    e.kind = EntryKind::kField;
    e.tokens = token_texts(fields[fi].display);
    e.field = fi;
    if (e.tokens.empty()) continue;
    field_entries_.emplace(join_tokens(e.tokens), fields[fi].name);
    add(std::move(e));
  }
  for (const auto& phrase : kComparatorPhrases) {
    Entry e;
    e.kind = EntryKind::kComparator;
    e.tokens = token_texts(phrase.text);
    e.op = phrase.op;
    numeric_patterns_.emplace(join_tokens(e.tokens), phrase.op);
    add(std::move(e));
  }
  auto add_value = [&](std::size_t fi, const std::string& surface, const std::string& value) {
    Entry e;
    e.kind = EntryKind::kValue;
    e.tokens = token_texts(surface);
    e.field = fi;
    e.value = value;
    if (e.tokens.empty()) return;
    value_entries_[join_tokens(e.tokens)].emplace_back(fields[fi].name, value);
    add(std::move(e));
  };
  for (std::size_t fi = 0; fi < fields.size(); ++fi) {
    for (const auto& v : fields[fi].values) add_value(fi, v, v);
  }
  for (std::size_t fi = 0; fi < fields.size(); ++fi) {
    for (const auto& [value, aliases] : fields[fi].aliases) {
      for (const auto& a : aliases) add_value(fi, a, value);
    }
  }
  for (auto& [_, ids] : by_first_token_) {
    std::stable_sort(ids.begin(), ids.end(), [this](std::size_t a, std::size_t b) {
      return entries_[a].tokens.size() > entries_[b].tokens.size();
    });
  }
}

void Lexicon::add(Entry entry) {
  by_first_token_[entry.tokens.front()].push_back(entries_.size());
  entries_.push_back(std::move(entry));
}

const std::vector<std::size_t>& Lexicon::starting_with(const std::string& token) const {
  static const std::vector<std::size_t> kNone;
  auto it = by_first_token_.find(token);
  return it == by_first_token_.end() ? kNone : it->second;
}

Lexicon build_lexicon(const FieldCatalog& catalog) { return Lexicon(catalog); }

std::string_view to_string(Confidence c) { return c == Confidence::kExact ? "exact" : "partial"; }

QueryParse parse_query(std::string_view text, const Lexicon& lexicon, const FieldCatalog& catalog) {
  QueryParse result;
  const auto tokens = tokenize(text);
  const auto n = tokens.size();

  {
    std::vector<std::string> words;
    for (const auto& t : tokens) words.push_back(t.text);
    const auto joined = join_tokens(words);
    if (joined == "all cases" || joined == "all cases in the gdc") {
      result.diagnostics.confidence = Confidence::kExact;
      return result;
    }
  }

  const auto& fields = catalog.fields();
  std::vector<bool> consumed(n, false);
  std::vector<std::size_t> field_order;  // first-mention order
  std::map<std::size_t, CategoricalLeaf> categorical;
  std::map<std::size_t, NumericLeaf> numeric;

  auto note_field = [&](std::size_t fi) {
    if (std::find(field_order.begin(), field_order.end(), fi) == field_order.end()) field_order.push_back(fi);
  };

  auto matches_at = [&](const Lexicon::Entry& e, std::size_t i) {
    if (i + e.tokens.size() > n) return false;
    for (std::size_t k = 0; k < e.tokens.size(); ++k) {
      const auto& t = tokens[i + k];
      if (t.text != e.tokens[k] || t.clause != tokens[i].clause) return false;
    }
    return true;
  };

  std::optional<std::size_t> context;
  // comparator phrase waiting for its number
  bool pending = false;
  Comparator pending_op = Comparator::kGreaterEqual;
  std::size_t clause = 0;
  std::size_t i = 0;
  while (i < n) {
    if (tokens[i].clause != clause) {
      clause = tokens[i].clause;
      context.reset();
      pending = false;
    }

    if (context && fields[*context].is_numeric() && pending && is_number(tokens[i].text)) {
      const auto& spec = fields[*context];
      const Comparator op = pending_op;
      double value = 0.0;
      const auto& word = tokens[i].text;
      auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
      const bool parsed = ec == std::errc() && ptr == word.data() + word.size();
      if (parsed && !numeric.count(*context) && value >= spec.range->min && value <= spec.range->max) {
        numeric[*context] = NumericLeaf{spec.name, op, value};
        note_field(*context);
        consumed[i] = true;
        result.diagnostics.matched_spans.push_back(
            {tokens[i].start, tokens[i].end, spec.name, format_number(value)});
      }
      pending = false;
      ++i;
      const auto unit = token_texts(spec.range->unit);
      if (!unit.empty() && i + unit.size() <= n) {
        bool same = true;
        for (std::size_t k = 0; k < unit.size() && same; ++k) same = tokens[i + k].text == unit[k];
        if (same) {
          for (std::size_t k = 0; k < unit.size(); ++k) consumed[i + k] = true;
          i += unit.size();
        }
      }
      continue;
    }

    const Lexicon::Entry* best = nullptr;
    const Lexicon::Entry* fallback = nullptr;
    for (auto id : lexicon.starting_with(tokens[i].text)) {
      const auto& e = lexicon.entries()[id];
      if (!matches_at(e, i)) continue;
      const bool contextual = e.kind != Lexicon::EntryKind::kValue || (context && e.field == *context);
      if (contextual) {
        best = &e;
        break;
      }
      if (fallback == nullptr) fallback = &e;
    }
    if (best == nullptr) best = fallback;
    if (best == nullptr) {
      ++i;
      continue;
    }

    const auto len = best->tokens.size();
    for (std::size_t k = 0; k < len; ++k) consumed[i + k] = true;
    switch (best->kind) {
      case Lexicon::EntryKind::kField:
        context = best->field;
        pending = false;
        break;
      case Lexicon::EntryKind::kComparator:
        pending = true;
        pending_op = best->op;
        break;
      case Lexicon::EntryKind::kValue: {
        const auto& spec = fields[best->field];
        auto& leaf = categorical[best->field];
        leaf.field = spec.name;
        if (std::find(leaf.values.begin(), leaf.values.end(), best->value) == leaf.values.end()) {
          leaf.values.push_back(best->value);
        }
        note_field(best->field);
        context = best->field;
        result.diagnostics.matched_spans.push_back({tokens[i].start, tokens[i + len - 1].end, spec.name, best->value});
        break;
      }
    }
    i += len;
  }

  for (auto fi : field_order) {
    if (auto it = categorical.find(fi); it != categorical.end()) {
      result.filter.leaves.emplace_back(std::move(it->second));
    } else if (auto nit = numeric.find(fi); nit != numeric.end()) {
      result.filter.leaves.emplace_back(nit->second);
    }
  }
  result.filter = canonicalize(std::move(result.filter));

  for (std::size_t k = 0; k < n; ++k) {
    if (consumed[k] || stopwords().count(tokens[k].text)) continue;
    auto& spans = result.diagnostics.unmatched_text;
    if (!spans.empty() && k > 0 && spans.back().end == tokens[k - 1].end && !consumed[k - 1]) {
      spans.back().end = tokens[k].end;
    } else {
      spans.push_back({tokens[k].start, tokens[k].end});
    }
  }

  result.diagnostics.confidence = (!result.filter.empty() && result.diagnostics.unmatched_text.empty())
                                      ? Confidence::kExact
                                      : Confidence::kPartial;
  return result;
}

}  // namespace cohort
