#pragma once

#include "bfo/expected.hpp"
#include "bfo/rational.hpp"
#include "bfo/types.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace bfo {

struct AddError {
  std::string reason;
};

/// Which addition rule produced a result, plus whether another rule was also
/// derivable (resolved in favor of sharing, surfaced as a diagnostic note).
enum class AddRule { Int, Share, Borrow };

struct AddOk {
  OwnType type;
  AddRule rule;
  bool ambiguous = false;
};

/// Computes the unique t with t = a + b per the addition rules, commutatively.
/// Zero-amount borrows are normalized away; the result must itself satisfy
/// own + lend <= 1 or the addition is rejected.
Expected<AddOk, AddError> add_types(const OwnType& a, const OwnType& b);

/// Inverse of addition: returns right such that add_types(left, right) == whole.
Expected<OwnType, AddError> split_type(const OwnType& whole, const OwnType& left);

/// Pointwise addition; variables present on only one side pass through.
Expected<TypeEnv, AddError> env_add(const TypeEnv& g1, const TypeEnv& g2);

/// (a) all lifetimes live, (b) own + lend <= 1, (c) a lend's target lifetime
/// sits strictly below the reference's own lifetime.
bool well_formed(const LifetimeEnv& l, const OwnType& t);
bool well_formed_env(const LifetimeEnv& l, const TypeEnv& g);

struct LftError {
  enum class Kind { NotMinimal, Unknown } kind;
  std::string lft;
};

/// Ends a minimal lifetime: drops bindings living at it, returns lent amounts
/// to their lenders, restricts the order to the survivors.
Expected<std::pair<LifetimeEnv, TypeEnv>, LftError> end_lifetime(
    const LifetimeEnv& l, const TypeEnv& g, const std::string& alpha);

/// Per-address ownership accounting over a type environment plus a register
/// map. Sums run over every binding x with regs(x) == addr.
struct OwnershipMetrics {
  Rational own_total;                          // own(a)
  std::map<std::string, Rational> own_by_lft;  // own(alpha; a)
  std::map<std::string, Rational> borrowed_by;    // BBy(alpha; a): lends targeting alpha
  std::map<std::string, Rational> borrowed_from;  // BFrm(alpha; a): lends held by alpha-refs
  std::map<std::pair<std::string, std::string>, Rational> brr;  // Brr(alpha -> beta; a)
};

OwnershipMetrics ownership_metrics(const TypeEnv& g,
                                   const std::map<std::string, long long>& regs,
                                   long long addr);

/// Borrow consistency at one address: BBy(alpha) <= own(alpha) + BFrm(alpha)
/// for every lifetime. Returns the first offending lifetime if any.
std::optional<std::string> borrow_consistency_violation(const OwnershipMetrics& m);

}  // namespace bfo
