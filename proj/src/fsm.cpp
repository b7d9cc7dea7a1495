#include "cohort/fsm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>

#include "cohort/error.hpp"
#include "cohort/filter.hpp"

namespace cohort {

namespace {

enum Phase : std::uint8_t {
  kLiteral,
  kOp,
  kField,
  kValue,
  kNumber,
  kListOpen,
  kAfterValue,
  kAfterLeaf,
  kAccept,
};

enum Literal : std::uint8_t {
  kStartLit,      // {"op":"and","content":[
  kLeafLit,       // {"op":"
  kLeafSepLit,    // ,{"op":"
  kContentLit,    // ,"content":{"field":"
  kCatValueLit,   // ,"value":["
  kNumValueLit,   // ,"value":
  kNextValueLit,  // ,"
  kCloseCatLit,   // ]}}
  kCloseNumLit,   // }}
  kEndLit,        // ]}
  kLiteralCount,
};

constexpr std::array<std::string_view, kLiteralCount> kLiterals = {
    R"({"op":"and","content":[)", R"({"op":")", R"(,{"op":")", R"(,"content":{"field":")", R"(,"value":[")",
    R"(,"value":)",               R"(,")",      "]}}",          "}}",                       "]}",
};

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool test_bit(const std::vector<std::uint64_t>& bits, std::size_t i) { return (bits[i / 64] >> (i % 64)) & 1U; }
void set_bit(std::vector<std::uint64_t>& bits, std::size_t i) { bits[i / 64] |= std::uint64_t{1} << (i % 64); }

std::string json_key(std::string_view s) { return quote_json_string(s).substr(1); }  // drop opening quote

struct NumberParts {
  std::string_view integer;
  std::string_view fraction;
  bool has_dot = false;
};

// Splits a numeric prefix; false when it can never become a valid literal.
bool split_number(std::string_view text, NumberParts& parts) {
  const auto dot = text.find('.');
  parts.has_dot = dot != std::string_view::npos;
  parts.integer = text.substr(0, dot);
  parts.fraction = parts.has_dot ? text.substr(dot + 1) : std::string_view{};
  if (parts.has_dot && parts.integer.empty()) return false;
  if (parts.fraction.find('.') != std::string_view::npos) return false;
  if (!std::all_of(parts.integer.begin(), parts.integer.end(), is_digit)) return false;
  if (!std::all_of(parts.fraction.begin(), parts.fraction.end(), is_digit)) return false;
  if (parts.integer.size() > SchemaFsm::kMaxIntegerDigits) return false;
  if (parts.fraction.size() > SchemaFsm::kMaxFractionDigits) return false;
  if (parts.integer.size() > 1 && parts.integer.front() == '0') return false;
  return true;
}

long double to_long_double(std::string_view digits) {
  long double v = 0;
  for (char c : digits) v = v * 10 + (c - '0');
  return v;
}

// Is there a number on the 10^-kMaxFractionDigits grid in [a, b) ∩ [lo, hi]?
bool grid_point_in(long double a, long double b, long double lo, long double hi) {
  constexpr long double kScale = 1e6L;
  static_assert(SchemaFsm::kMaxFractionDigits == 6);
  const long double x = std::ceil(std::max(a, lo) * kScale) / kScale;
  return x < b && x <= hi;
}

}  // namespace

SchemaFsm::Trie SchemaFsm::Trie::build(const std::vector<std::pair<std::string, std::int32_t>>& keys) {
  auto sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  Trie trie;
  trie.nodes.emplace_back();
  for (std::uint32_t pos = 0; pos < sorted.size(); ++pos) {
    const auto& [key, id] = sorted[pos];
    trie.key_ids.push_back(id);
    std::uint32_t node = 0;
    auto touch = [&](std::uint32_t n) {
      if (trie.nodes[n].hi == trie.nodes[n].lo) trie.nodes[n].lo = pos;
      trie.nodes[n].hi = pos + 1;
    };
    touch(node);
    for (char c : key) {
      auto child = trie.child(node, c);
      if (child < 0) {
        const auto next = static_cast<std::uint32_t>(trie.nodes.size());
        trie.nodes.emplace_back();
        auto& kids = trie.nodes[node].children;
        kids.insert(std::upper_bound(kids.begin(), kids.end(), std::make_pair(c, std::uint32_t{0}),
                                     [](const auto& a, const auto& b) { return a.first < b.first; }),
                    {c, next});
        child = next;
      }
      node = static_cast<std::uint32_t>(child);
      touch(node);
    }
    trie.nodes[node].terminal = id;
  }
  return trie;
}

std::int64_t SchemaFsm::Trie::child(std::uint32_t node, char c) const {
  for (const auto& [sym, next] : nodes[node].children) {
    if (sym == c) return next;
  }
  return -1;
}

template <class Pred>
bool SchemaFsm::trie_live(const Trie& trie, std::uint32_t node, Pred&& usable) const {
  const auto& n = trie.nodes[node];
  for (auto pos = n.lo; pos < n.hi; ++pos) {
    if (usable(trie.key_ids[pos])) return true;
  }
  return false;
}

SchemaFsm compile_fsm(const FieldCatalog& catalog, std::size_t state_budget) {
  SchemaFsm fsm;
  fsm.catalog_ = &catalog;
  const auto& fields = catalog.fields();

  std::vector<std::pair<std::string, std::int32_t>> ops = {{"in\"", 0}};
  for (int c = 0; c < 4; ++c) {
    ops.emplace_back(std::string(to_string(static_cast<Comparator>(c))) + "\"", c + 1);
  }
  fsm.op_trie_ = SchemaFsm::Trie::build(ops);

  std::vector<std::pair<std::string, std::int32_t>> names;
  for (std::size_t i = 0; i < fields.size(); ++i) names.emplace_back(json_key(fields[i].name), static_cast<std::int32_t>(i));
  fsm.field_trie_ = SchemaFsm::Trie::build(names);

  std::size_t count = fsm.op_trie_.nodes.size() + fsm.field_trie_.nodes.size();
  for (auto lit : kLiterals) count += lit.size();

  fsm.value_tries_.resize(fields.size());
  fsm.numeric_reachable_.assign(fields.size(), false);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].is_categorical()) {
      std::vector<std::pair<std::string, std::int32_t>> values;
      for (std::size_t v = 0; v < fields[i].values.size(); ++v) {
        values.emplace_back(json_key(fields[i].values[v]), static_cast<std::int32_t>(v));
      }
      fsm.value_tries_[i] = SchemaFsm::Trie::build(values);
      count += fsm.value_tries_[i].nodes.size();
    } else {
      fsm.numeric_reachable_[i] = fsm.number_feasible("", static_cast<std::int32_t>(i));
    }
    if (count > state_budget) break;
  }
  if (count > state_budget) {
    throw BudgetError("catalog needs more than " + std::to_string(state_budget) + " automaton states");
  }
  fsm.static_states_ = count;
  fsm.words_fields_ = (fields.size() + 63) / 64;
  return fsm;
}

SchemaFsm::State SchemaFsm::start() const {
  State s;
  s.used_fields.assign(words_fields_, 0);
  enter_literal(s, kStartLit, 0);
  return s;
}

bool SchemaFsm::field_usable(const State& s, std::int32_t field, bool categorical) const {
  const auto i = static_cast<std::size_t>(field);
  if (test_bit(s.used_fields, i)) return false;
  const auto& spec = catalog_->fields()[i];
  return categorical ? spec.is_categorical() : (spec.is_numeric() && numeric_reachable_[i]);
}

bool SchemaFsm::any_field_usable(const State& s, bool categorical) const {
  for (std::size_t i = 0; i < catalog_->size(); ++i) {
    if (field_usable(s, static_cast<std::int32_t>(i), categorical)) return true;
  }
  return false;
}

bool SchemaFsm::any_field_left(const State& s) const {
  return any_field_usable(s, true) || any_field_usable(s, false);
}

bool SchemaFsm::any_value_left(const State& s) const {
  const auto n = catalog_->fields()[static_cast<std::size_t>(s.field)].values.size();
  for (std::size_t v = 0; v < n; ++v) {
    if (!test_bit(s.used_values, v)) return true;
  }
  return false;
}

bool SchemaFsm::number_feasible(const std::string& prefix, std::int32_t field) const {
  const auto& range = *catalog_->fields()[static_cast<std::size_t>(field)].range;
  const long double lo = range.min;
  const long double hi = range.max;
  if (prefix.empty()) {
    return grid_point_in(0, std::pow(10.0L, static_cast<long double>(kMaxIntegerDigits)), lo, hi);
  }
  NumberParts parts;
  if (!split_number(prefix, parts)) return false;
  const long double integer = to_long_double(parts.integer);
  if (!parts.has_dot) {
    if (parts.integer == "0") return grid_point_in(0, 1, lo, hi);
    const auto k = parts.integer.size();
    for (auto len = k; len <= kMaxIntegerDigits; ++len) {
      const long double scale = std::pow(10.0L, static_cast<long double>(len - k));
      if (grid_point_in(integer * scale, (integer + 1) * scale, lo, hi)) return true;
    }
    return false;
  }
  const auto f = parts.fraction.size();
  const long double unit = std::pow(10.0L, -static_cast<long double>(f));
  const long double base = integer + to_long_double(parts.fraction) * unit;
  if (f == kMaxFractionDigits) return base >= lo && base <= hi;
  return grid_point_in(base, base + unit, lo, hi);
}

bool SchemaFsm::number_complete(const std::string& text, std::int32_t field) const {
  NumberParts parts;
  if (text.empty() || !split_number(text, parts)) return false;
  if (parts.has_dot && parts.fraction.empty()) return false;
  const auto& range = *catalog_->fields()[static_cast<std::size_t>(field)].range;
  const double value = std::strtod(text.c_str(), nullptr);
  return value >= range.min && value <= range.max;
}

void SchemaFsm::enter_literal(State& s, std::uint8_t literal, std::uint32_t offset) const {
  s.phase = kLiteral;
  s.literal = literal;
  s.node = offset;
  if (offset == kLiterals[literal].size()) finish_literal(s);
}

bool SchemaFsm::finish_literal(State& s) const {
  s.node = 0;
  switch (s.literal) {
    case kStartLit:
      s.phase = kListOpen;
      break;
    case kLeafLit:
    case kLeafSepLit:
      s.phase = kOp;
      s.op = -1;
      s.field = -1;
      s.used_values.clear();
      break;
    case kContentLit:
      s.phase = kField;
      break;
    case kCatValueLit:
    case kNextValueLit:
      s.phase = kValue;
      break;
    case kNumValueLit:
      s.phase = kNumber;
      s.number.clear();
      break;
    case kCloseCatLit:
    case kCloseNumLit:
      s.phase = kAfterLeaf;
      break;
    case kEndLit:
      s.phase = kAccept;
      break;
    default:
      return false;
  }
  return true;
}

bool SchemaFsm::step(const State& from, char c, State& to) const {
  switch (from.phase) {
    case kLiteral: {
      const auto lit = kLiterals[from.literal];
      if (lit[from.node] != c) return false;
      to = from;
      to.node = from.node + 1;
      if (to.node == lit.size()) finish_literal(to);
      return true;
    }
    case kListOpen:
    case kAfterLeaf: {
      if (c == ']') {
        to = from;
        enter_literal(to, kEndLit, 1);
        return true;
      }
      const char opener = from.phase == kListOpen ? '{' : ',';
      if (c != opener || !any_field_left(from)) return false;
      to = from;
      enter_literal(to, from.phase == kListOpen ? kLeafLit : kLeafSepLit, 1);
      return true;
    }
    case kOp: {
      const auto child = op_trie_.child(from.node, c);
      if (child < 0) return false;
      const auto next = static_cast<std::uint32_t>(child);
      if (!trie_live(op_trie_, next, [&](std::int32_t op) { return any_field_usable(from, op == 0); })) return false;
      to = from;
      if (const auto op = op_trie_.nodes[next].terminal; op >= 0) {
        to.op = static_cast<std::int8_t>(op);
        enter_literal(to, kContentLit, 0);
      } else {
        to.node = next;
      }
      return true;
    }
    case kField: {
      const auto child = field_trie_.child(from.node, c);
      if (child < 0) return false;
      const auto next = static_cast<std::uint32_t>(child);
      const bool categorical = from.op == 0;
      if (!trie_live(field_trie_, next, [&](std::int32_t f) { return field_usable(from, f, categorical); })) {
        return false;
      }
      to = from;
      if (const auto f = field_trie_.nodes[next].terminal; f >= 0) {
        to.field = f;
        set_bit(to.used_fields, static_cast<std::size_t>(f));
        if (categorical) {
          const auto n = catalog_->fields()[static_cast<std::size_t>(f)].values.size();
          to.used_values.assign((n + 63) / 64, 0);
          enter_literal(to, kCatValueLit, 0);
        } else {
          enter_literal(to, kNumValueLit, 0);
        }
      } else {
        to.node = next;
      }
      return true;
    }
    case kValue: {
      const auto& trie = value_tries_[static_cast<std::size_t>(from.field)];
      const auto child = trie.child(from.node, c);
      if (child < 0) return false;
      const auto next = static_cast<std::uint32_t>(child);
      if (!trie_live(trie, next, [&](std::int32_t v) { return !test_bit(from.used_values, static_cast<std::size_t>(v)); })) {
        return false;
      }
      to = from;
      if (const auto v = trie.nodes[next].terminal; v >= 0) {
        set_bit(to.used_values, static_cast<std::size_t>(v));
        to.phase = kAfterValue;
        to.node = 0;
      } else {
        to.node = next;
      }
      return true;
    }
    case kAfterValue: {
      if (c == ']') {
        to = from;
        enter_literal(to, kCloseCatLit, 1);
        return true;
      }
      if (c != ',' || !any_value_left(from)) return false;
      to = from;
      enter_literal(to, kNextValueLit, 1);
      return true;
    }
    case kNumber: {
      if (c == '}') {
        if (!number_complete(from.number, from.field)) return false;
        to = from;
        to.number.clear();
        enter_literal(to, kCloseNumLit, 1);
        return true;
      }
      if (!is_digit(c) && c != '.') return false;
      std::string grown = from.number + c;
      if (!number_feasible(grown, from.field)) return false;
      to = from;
      to.number = std::move(grown);
      return true;
    }
    default:
      return false;
  }
}

bool SchemaFsm::is_accepting(const State& s) const { return s.phase == kAccept; }

std::vector<char> SchemaFsm::outgoing(const State& s) const {
  std::string candidates;
  switch (s.phase) {
    case kLiteral:
      candidates = kLiterals[s.literal][s.node];
      break;
    case kOp:
      for (const auto& [c, _] : op_trie_.nodes[s.node].children) candidates += c;
      break;
    case kField:
      for (const auto& [c, _] : field_trie_.nodes[s.node].children) candidates += c;
      break;
    case kValue:
      for (const auto& [c, _] : value_tries_[static_cast<std::size_t>(s.field)].nodes[s.node].children) candidates += c;
      break;
    case kNumber:
      candidates = "0123456789.}";
      break;
    case kListOpen:
      candidates = "{]";
      break;
    case kAfterLeaf:
    case kAfterValue:
      candidates = ",]";
      break;
    default:
      break;
  }
  std::vector<char> out;
  State scratch;
  for (char c : candidates) {
    if (step(s, c, scratch)) out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool SchemaFsm::accepts(std::string_view text) const {
  State s = start();
  State next;
  for (char c : text) {
    if (!step(s, c, next)) return false;
    std::swap(s, next);
  }
  return is_accepting(s);
}

StepResult DecodeSession::advance(char symbol) {
  SchemaFsm::State next;
  if (!fsm_->step(state_, symbol, next)) return StepResult::kReject;
  state_ = std::move(next);
  consumed_ += symbol;
  return fsm_->is_accepting(state_) ? StepResult::kAccepting : StepResult::kLive;
}

StepResult DecodeSession::advance(std::string_view text) {
  StepResult last = accepting() ? StepResult::kAccepting : StepResult::kLive;
  for (char c : text) {
    last = advance(c);
    if (last == StepResult::kReject) return last;
  }
  return last;
}

std::vector<bool> allowed_continuations(const DecodeSession& session, std::span<const std::string> vocabulary,
                                        std::string_view eos_token) {
  const auto& fsm = session.fsm();
  std::vector<bool> mask(vocabulary.size(), false);
  SchemaFsm::State a;
  SchemaFsm::State b;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    const auto& token = vocabulary[i];
    if (token.empty()) continue;
    if (token == eos_token) {
      mask[i] = fsm.is_accepting(session.state());
      continue;
    }
    a = session.state();
    bool ok = true;
    for (char c : token) {
      if (!fsm.step(a, c, b)) {
        ok = false;
        break;
      }
      std::swap(a, b);
    }
    mask[i] = ok;
  }
  return mask;
}

std::string random_walk(const SchemaFsm& fsm, Rng& rng, std::size_t max_len) {
  auto s = fsm.start();
  SchemaFsm::State next;
  std::string out;
  for (;;) {
    auto options = fsm.outgoing(s);
    if (fsm.is_accepting(s) && (options.empty() || rng.coin(0.5))) return out;
    if (out.size() >= max_len) {
      throw TruncationError("walk reached " + std::to_string(max_len) + " symbols without accepting");
    }
    const char c = options[rng.below(options.size())];
    fsm.step(s, c, next);
    std::swap(s, next);
    out += c;
  }
}

}  // namespace cohort
