#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfo/target.hpp"

namespace bfo {

/// Bounded exhaustive execution of translated programs.
///
/// The machine runs a term against a *set* of candidate register files
/// instead of a single one: a nondeterministic draw multiplies the set by
/// every value in the configured domain, an `assume` filters the set down to
/// the files where both operands agree, and a branch whose scrutinee is zero
/// in some files and nonzero in others explores both sides, each with the
/// matching subset.  A path whose set empties out is infeasible and is
/// pruned; `fail` is reachable only while at least one candidate file is
/// still alive.

/// A runtime value: an integer or a pair of values.
struct TValue {
  long long n = 0;
  std::shared_ptr<const std::pair<TValue, TValue>> pair;  // null for ints

  static TValue of(long long v);
  static TValue make_pair(TValue a, TValue b);

  bool is_pair() const { return pair != nullptr; }
  const TValue& fst() const { return pair->first; }
  const TValue& snd() const { return pair->second; }

  /// Total order: integers (by value) before pairs (lexicographic).
  static int cmp(const TValue& a, const TValue& b);
  bool operator==(const TValue& o) const { return cmp(*this, o) == 0; }
  bool operator<(const TValue& o) const { return cmp(*this, o) < 0; }

  std::string to_string() const;
};

/// One candidate register file: a finite map from names to values.
using TRegister = std::map<std::string, TValue>;

/// Raised when execution reaches a state a well-typed translation can never
/// produce: an unbound name, a projection of an integer, a branch on a pair,
/// or a call to an unknown function.
struct TargetError : std::runtime_error {
  explicit TargetError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Knobs for bounded exploration.
struct ExploreOptions {
  long long domain_lo = -2;  ///< smallest value a draw can take
  long long domain_hi = 2;   ///< largest value a draw can take
  int max_depth = 64;        ///< call-stack depth cap (recursion fuel)
  long long max_steps = 4'000'000;  ///< total steps across all paths
  std::size_t max_states = 262'144;  ///< cap on candidate files per path
  bool stop_on_fail = false;  ///< return as soon as one failure is found
};

/// One branch decision along an execution path, for failure witnesses.
struct BranchChoice {
  int origin = -1;          ///< source node id of the branch
  bool then_branch = false; ///< true when the zero side was taken
};

/// Outcome of an exploration.
struct ExploreResult {
  bool fail_reachable = false;
  /// True when every path within the domain was followed to its end; false
  /// when a step, depth, or state cap cut the search short (or when
  /// `stop_on_fail` ended it early).
  bool complete = true;
  long long steps = 0;
  long long paths_done = 0;        ///< paths that reached the end of main
  long long paths_infeasible = 0;  ///< paths whose candidate set emptied
  long long paths_failed = 0;      ///< paths that reached `fail`
  long long paths_clipped = 0;     ///< paths cut off by the depth cap
  int max_depth_seen = 0;
  /// Branch decisions of the first failing path, outermost first.
  std::vector<BranchChoice> witness;
  /// Sorted distinct integer results of main over all completed paths and
  /// surviving register files.
  std::vector<long long> final_values;
};

/// Runs every feasible path of `p` within the domain, depth, and step
/// bounds.  Throws TargetError on malformed programs.
ExploreResult explore(const TargetProgram& p, const ExploreOptions& opts = {});

}  // namespace bfo
