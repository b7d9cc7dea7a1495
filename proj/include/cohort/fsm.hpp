#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cohort/catalog.hpp"
#include "cohort/rng.hpp"

namespace cohort {

/// Byte-level deterministic automaton over canonical filter serializations for
/// one catalog: fixed key order, no whitespace, any leaf order, catalog field
/// and value strings only, no repeated field or value, numbers inside the
/// field's range.
///
/// The tries and literal segments are compiled up front. The product with the
/// "which fields/values are already used" bookkeeping is evaluated on the fly:
/// a State is a small value and step() is a pure function of (state, byte), so
/// determinism holds without materialising 2^|fields| states. Every state
/// reachable through step() can still reach acceptance.
class SchemaFsm {
 public:
  struct State {
    std::uint8_t phase = 0;
    std::uint8_t literal = 0;
    std::uint32_t node = 0;  // literal offset or trie node
    std::int8_t op = -1;     // 0 = "in", 1.. = comparator
    std::int32_t field = -1;
    std::vector<std::uint64_t> used_fields;
    std::vector<std::uint64_t> used_values;
    std::string number;

    friend bool operator==(const State&, const State&) = default;
  };

  static constexpr std::size_t kDefaultStateBudget = 1'000'000;
  /// Integer digits allowed in a numeric literal.
  static constexpr std::size_t kMaxIntegerDigits = 10;
  /// Digits allowed after the decimal point.
  static constexpr std::size_t kMaxFractionDigits = 6;

  State start() const;
  /// Successor on `symbol`, or false when the byte is not allowed.
  bool step(const State& from, char symbol, State& to) const;
  bool is_accepting(const State& s) const;
  /// Bytes with a successor from `s`, ascending.
  std::vector<char> outgoing(const State& s) const;

  /// Whole-string membership test.
  bool accepts(std::string_view text) const;

  /// Trie nodes plus literal positions: the compiled, catalog-dependent part.
  std::size_t static_state_count() const noexcept { return static_states_; }

  const FieldCatalog& catalog() const noexcept { return *catalog_; }

 private:
  friend SchemaFsm compile_fsm(const FieldCatalog& catalog, std::size_t state_budget);

  struct Trie {
    struct Node {
      std::vector<std::pair<char, std::uint32_t>> children;  // sorted by byte
      std::int32_t terminal = -1;                            // key id when a key ends here
      std::uint32_t lo = 0, hi = 0;                          // sorted-key positions under this node
    };
    std::vector<Node> nodes;
    std::vector<std::int32_t> key_ids;  // sorted position -> key id

    static Trie build(const std::vector<std::pair<std::string, std::int32_t>>& keys);
    std::int64_t child(std::uint32_t node, char c) const;
  };

  template <class Pred>
  bool trie_live(const Trie& trie, std::uint32_t node, Pred&& usable) const;

  bool field_usable(const State& s, std::int32_t field, bool categorical) const;
  bool any_field_usable(const State& s, bool categorical) const;
  bool any_field_left(const State& s) const;
  bool any_value_left(const State& s) const;
  bool number_feasible(const std::string& prefix, std::int32_t field) const;
  bool number_complete(const std::string& text, std::int32_t field) const;
  void enter_literal(State& s, std::uint8_t literal, std::uint32_t offset) const;
  bool finish_literal(State& s) const;

  const FieldCatalog* catalog_ = nullptr;
  Trie op_trie_;
  Trie field_trie_;
  std::vector<Trie> value_tries_;  // per catalog field (empty for numeric)
  std::vector<bool> numeric_reachable_;
  std::size_t static_states_ = 0;
  std::size_t words_fields_ = 0;
};

/// Builds the automaton for `catalog`. The catalog must outlive the result.
/// Throws BudgetError when the compiled tables exceed `state_budget`.
SchemaFsm compile_fsm(const FieldCatalog& catalog, std::size_t state_budget = SchemaFsm::kDefaultStateBudget);

enum class StepResult { kReject, kLive, kAccepting };

/// One consumer stepping through the automaton symbol by symbol.
class DecodeSession {
 public:
  explicit DecodeSession(const SchemaFsm& fsm) : fsm_(&fsm), state_(fsm.start()) {}

  /// Consumes `symbol` if allowed; on rejection the session is unchanged.
  StepResult advance(char symbol);
  /// Advances through every byte of `text`; stops at and reports the first
  /// rejection, leaving the already-consumed prefix in place.
  StepResult advance(std::string_view text);

  bool accepting() const { return fsm_->is_accepting(state_); }
  const std::string& consumed() const noexcept { return consumed_; }
  const SchemaFsm::State& state() const noexcept { return state_; }
  const SchemaFsm& fsm() const noexcept { return *fsm_; }

 private:
  const SchemaFsm* fsm_;
  SchemaFsm::State state_;
  std::string consumed_;
};

inline constexpr std::string_view kEndOfSequence = "<eos>";

/// mask[i] is true iff every byte of vocabulary[i] steps successfully from the
/// session's state. `eos_token` is allowed exactly when the state accepts.
/// Empty tokens are never allowed.
std::vector<bool> allowed_continuations(const DecodeSession& session, std::span<const std::string> vocabulary,
                                        std::string_view eos_token = kEndOfSequence);

/// Random path through the automaton: each step picks uniformly among the
/// allowed bytes; at an accepting state the walk stops with probability 0.5
/// (always when nothing can follow). Throws TruncationError at `max_len`.
std::string random_walk(const SchemaFsm& fsm, Rng& rng, std::size_t max_len);

}  // namespace cohort
