#pragma once

#include "bfo/rational.hpp"

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace bfo {

/// Record that a reference has lent `amount` of its ownership to references
/// of lifetime `lft` until that lifetime ends.
struct Borrow {
  std::string lft;
  Rational amount;

  friend bool operator==(const Borrow& a, const Borrow& b) {
    return a.lft == b.lft && a.amount == b.amount;
  }
};

/// A source-language type: int, or a reference carrying a lifetime, a
/// fractional ownership in [0,1], and optionally an outstanding borrow.
/// A borrow of amount 0 is normalized away at construction.
struct OwnType {
  enum class Kind { Int, Ref };

  Kind kind = Kind::Int;
  std::string lft;           // Ref only
  Rational own;              // Ref only
  std::optional<Borrow> borrow;  // Ref only

  static OwnType make_int() { return OwnType{}; }
  static OwnType make_ref(std::string lft, Rational own,
                          std::optional<Borrow> borrow = std::nullopt) {
    if (borrow && borrow->amount.is_zero()) borrow.reset();
    OwnType t;
    t.kind = Kind::Ref;
    t.lft = std::move(lft);
    t.own = std::move(own);
    t.borrow = std::move(borrow);
    return t;
  }

  bool is_int() const { return kind == Kind::Int; }
  bool is_ref() const { return kind == Kind::Ref; }
  /// Ownership as used by the translation: int has ownership 0.
  Rational own_amount() const { return is_ref() ? own : Rational(0); }
  Rational lend_amount() const { return borrow ? borrow->amount : Rational(0); }

  /// Renders in the annotation syntax: "int", "ref<a, 1>",
  /// "ref<a, 1/2 lend b: 1/2>".
  std::string str() const;

  friend bool operator==(const OwnType& a, const OwnType& b) {
    if (a.kind != b.kind) return false;
    if (a.kind == Kind::Int) return true;
    return a.lft == b.lft && a.own == b.own && a.borrow == b.borrow;
  }
  friend bool operator!=(const OwnType& a, const OwnType& b) { return !(a == b); }
};

/// Set of live lifetime variables plus a strict partial order, stored as its
/// transitive closure. `lt(a, b)` means a is below b (a ends first).
class LifetimeEnv {
 public:
  bool contains(const std::string& a) const;
  const std::vector<std::string>& vars() const { return vars_; }

  /// Adds a lifetime unrelated to the existing ones. No-op if present.
  void add(const std::string& a);
  /// Adds a lifetime strictly below every existing one (newlft semantics:
  /// the new lifetime is the minimum).
  void push_below_all(const std::string& a);
  /// Records a < b and re-closes transitively. Returns false if that would
  /// break irreflexivity (a cycle).
  bool add_order(const std::string& a, const std::string& b);

  bool less(const std::string& a, const std::string& b) const;
  /// True iff no live lifetime is strictly below a.
  bool is_minimal(const std::string& a) const;

  /// All order pairs (a, b) with a < b, as the stored transitive closure.
  const std::set<std::pair<std::string, std::string>>& pairs() const {
    return lt_;
  }

  /// Removes a lifetime; the order restricts to the induced subposet.
  void erase(const std::string& a);

  /// True iff other's lifetimes and order pairs are all present here.
  bool entails(const LifetimeEnv& other) const;

  friend bool operator==(const LifetimeEnv& a, const LifetimeEnv& b) {
    return std::set<std::string>(a.vars_.begin(), a.vars_.end()) ==
               std::set<std::string>(b.vars_.begin(), b.vars_.end()) &&
           a.lt_ == b.lt_;
  }

  std::string str() const;

 private:
  std::vector<std::string> vars_;  // insertion order, for stable printing
  std::set<std::pair<std::string, std::string>> lt_;  // transitive closure
};

/// Finite map from variables to types, preserving insertion order so that
/// environment dumps and drop sets are stable and readable.
class TypeEnv {
 public:
  bool contains(const std::string& x) const;
  const OwnType* find(const std::string& x) const;
  OwnType* find(const std::string& x);
  /// Inserts or overwrites, keeping the original position on overwrite.
  void set(const std::string& x, OwnType t);
  void erase(const std::string& x);

  const std::vector<std::pair<std::string, OwnType>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Order-insensitive comparison (environments are maps).
  friend bool operator==(const TypeEnv& a, const TypeEnv& b);

  /// Renders "x: ref<a, 1>, y: int" in insertion order.
  std::string str() const;

 private:
  std::vector<std::pair<std::string, OwnType>> entries_;
};

/// Function type: lifetime parameters with a required order among them,
/// argument types, post-call argument types, and return types (a list: the
/// example programs return tuples of references).
struct FnType {
  std::vector<std::string> lft_params;
  LifetimeEnv order;  // over lft_params only
  std::vector<OwnType> params;
  std::vector<OwnType> posts;
  std::vector<OwnType> rets;

  std::string str() const;
};

}  // namespace bfo
