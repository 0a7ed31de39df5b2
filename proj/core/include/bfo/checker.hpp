#pragma once

#include "bfo/ast.hpp"
#include "bfo/expected.hpp"
#include "bfo/type_algebra.hpp"
#include "bfo/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bfo {

struct TypeError {
  enum class Code {
    OwnershipInsufficient,
    SplitUnderivable,
    LifetimeNotMinimal,
    LifetimeOrderViolation,
    UnknownFunction,
    ArityMismatch,
    CallOrderNotEntailed,
    ScopeEscape,
    BranchEnvMismatch,
    PostEnvMismatch,
    UnknownVariable,
    KindMismatch,
    DuplicateName,
  };

  Code code;
  std::string message;
  SourceLoc loc;

  /// The [CODE] token used in diagnostics, e.g. "ownership-insufficient".
  const char* code_str() const;
  /// "line:col: error[CODE]: message" (callers prepend the file name).
  std::string render() const;
};

/// How one tuple component of a return is produced.
enum class ReturnKind {
  IntValue,    // scalar, moved as-is
  DirectMove,  // local reference whose type equals the return type exactly
  SplitReturn, // kept parameter: the return takes a share, the parameter keeps
               // its declared post type
};

struct ReturnSlot {
  std::string name;
  ReturnKind kind;
  OwnType ret_type;       // declared/instantiated return type
  OwnType source_before;  // binding's type at the tail
  OwnType source_after;   // post type kept by the binding (SplitReturn only)
};

/// Everything later passes need to know about one tail (a SVar node).
struct TailEvidence {
  std::vector<ReturnSlot> slots;
  /// Reference bindings discarded here, in environment insertion order; each
  /// produces one prophecy-settling assume in the translation and one frozen
  /// residue in the audit.
  std::vector<std::pair<std::string, OwnType>> dropped_refs;
  /// Kept parameters whose type silently weakens to the declared post type;
  /// the residue is frozen for the audit but produces no term.
  std::vector<std::pair<std::string, OwnType>> partial_residues;
};

struct CallEvidence {
  std::vector<OwnType> params;  // instantiated parameter types
  std::vector<OwnType> posts;   // instantiated post-call types
  std::vector<OwnType> rets;    // instantiated return types
  std::vector<int> ref_args;    // indices of reference-typed parameters
};

struct SplitChoice {
  OwnType whole;   // the source variable's type before the split
  OwnType x_type;  // new binder
  OwnType y_type;  // residual kept by the source variable
};

struct AliasChoice {
  OwnType x_before, y_before;
  OwnType x_after, y_after;
  bool cross_lifetime = false;  // combined via the borrow rule
};

/// Per-node checking evidence, indexed by SourceExpr::id.
struct NodeInfo {
  SourceLoc loc;
  LifetimeEnv lft_in;
  TypeEnv env_in;

  std::optional<SplitChoice> split;          // SLetAlias
  std::optional<AliasChoice> alias;          // SAliasAssume
  std::optional<bool> deref_own_positive;    // SLetDeref
  std::optional<CallEvidence> call;          // SLetCall
  std::optional<TailEvidence> tail;          // SVar
  /// SEndLft: dropped reference bindings in environment insertion order.
  std::optional<std::vector<std::pair<std::string, OwnType>>> endlft_drops;
};

struct CheckOptions {
  /// Downgrades lifetime-order well-formedness violations to warnings so the
  /// program can still run under the dynamic ownership audit.
  bool lax = false;
};

struct TypedFn {
  std::string name;
  std::vector<std::string> ref_params;  // reference parameters, declaration order
};

/// A checked program: the AST, the signature table, per-node evidence, and
/// the per-line environment log used by --dump-env.
struct TypedProgram {
  Program program;
  std::map<std::string, FnType> fn_types;
  std::vector<NodeInfo> nodes;  // indexed by node id
  std::map<std::string, TypedFn> fns;
  std::vector<std::string> warnings;

  /// (line, environment after that line's statement), in checking order.
  std::vector<std::pair<int, TypeEnv>> env_log;

  /// Last recorded environment per line, ready to print.
  std::vector<std::pair<int, TypeEnv>> env_by_line() const;
  /// Renders env_by_line as "line: x: ref<a, 1>, ..." rows.
  std::string dump_env() const;
};

Expected<TypedProgram, TypeError> check_program(Program p,
                                                const CheckOptions& opts = {});

}  // namespace bfo
