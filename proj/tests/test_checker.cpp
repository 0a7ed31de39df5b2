#include "bfo/checker.hpp"

#include "bfo/parser.hpp"
#include "bfo/type_algebra.hpp"
#include "doctest.h"

using namespace bfo;

namespace {

OwnType ref(const std::string& lft, Rational own) {
  return OwnType::make_ref(lft, own);
}
OwnType ref(const std::string& lft, Rational own, const std::string& tgt,
            Rational amt) {
  return OwnType::make_ref(lft, own, Borrow{tgt, amt});
}

TypedProgram must_check(const std::string& src, CheckOptions opts = {}) {
  auto parsed = parse(src);
  REQUIRE_MESSAGE(parsed.ok(), parsed.error().message);
  auto checked = check_program(std::move(parsed.value()), opts);
  REQUIRE_MESSAGE(checked.ok(), checked.error().render());
  return std::move(checked.value());
}

TypeError must_fail(const std::string& src, CheckOptions opts = {}) {
  auto parsed = parse(src);
  REQUIRE_MESSAGE(parsed.ok(), parsed.error().message);
  auto checked = check_program(std::move(parsed.value()), opts);
  REQUIRE(!checked.ok());
  return checked.error();
}

/// Binding view without compiler temporaries, mirroring --dump-env.
TypeEnv visible(const TypeEnv& env) {
  TypeEnv out;
  for (const auto& [name, t] : env.entries()) {
    if (!name.empty() && name[0] == '_') continue;
    out.set(name, t);
  }
  return out;
}

TypeEnv line_env(const TypedProgram& tp, int line) {
  auto rows = tp.env_by_line();
  for (const auto& [l, env] : rows) {
    if (l == line) return visible(env);
  }
  FAIL("no environment recorded for line " << line);
  return {};
}

TypeEnv env_of(std::initializer_list<std::pair<std::string, OwnType>> xs) {
  TypeEnv g;
  for (const auto& [n, t] : xs) g.set(n, t);
  return g;
}

/// Collects the NodeInfo of every node whose variant is T, in id order.
template <class T>
std::vector<const NodeInfo*> nodes_of(const TypedProgram& tp) {
  std::vector<const NodeInfo*> out;
  auto scan = [&](const SourceExpr& e) {
    if (std::holds_alternative<T>(e.node)) {
      out.push_back(&tp.nodes[static_cast<std::size_t>(e.id)]);
    }
  };
  for (const auto& f : tp.program.fns) for_each_expr(*f.body, scan);
  for_each_expr(*tp.program.main_e, scan);
  return out;
}

const char* kConsortDemo =
    "newlft a in\n"
    "let x = mkref 0 in\n"
    "let y = x in\n"
    "y := *y + 1;\n"
    "alias(x = y);\n"
    "assert(*x + *y = 2);\n"
    "endlft a;\n"
    "0\n";

}  // namespace

TEST_CASE("straight-line mutation program: exact per-line environments") {
  TypedProgram tp = must_check(kConsortDemo);

  CHECK(line_env(tp, 1) == TypeEnv{});
  CHECK(line_env(tp, 2) == env_of({{"x", ref("a", 1)}}));
  CHECK(line_env(tp, 3) == env_of({{"x", ref("a", 0)}, {"y", ref("a", 1)}}));
  CHECK(line_env(tp, 4) == env_of({{"x", ref("a", 0)}, {"y", ref("a", 1)}}));
  CHECK(line_env(tp, 5) ==
        env_of({{"x", ref("a", {1, 2})}, {"y", ref("a", {1, 2})}}));
  CHECK(line_env(tp, 6) ==
        env_of({{"x", ref("a", {1, 2})}, {"y", ref("a", {1, 2})}}));
  CHECK(line_env(tp, 7) == TypeEnv{});

  CHECK(tp.dump_env() ==
        "1: (empty)\n"
        "2: x: ref<a, 1>\n"
        "3: x: ref<a, 0>, y: ref<a, 1>\n"
        "4: x: ref<a, 0>, y: ref<a, 1>\n"
        "5: x: ref<a, 0.5>, y: ref<a, 0.5>\n"
        "6: x: ref<a, 0.5>, y: ref<a, 0.5>\n"
        "7: (empty)\n"
        "8: (empty)\n");

  // The lifetime end drops both aliases, in environment order.
  auto ends = nodes_of<SEndLft>(tp);
  REQUIRE(ends.size() == 1);
  REQUIRE(ends[0]->endlft_drops.has_value());
  REQUIRE(ends[0]->endlft_drops->size() == 2);
  CHECK((*ends[0]->endlft_drops)[0].first == "x");
  CHECK((*ends[0]->endlft_drops)[1].first == "y");

  // The alias evidence records the even split.
  auto aliases = nodes_of<SAliasAssume>(tp);
  REQUIRE(aliases.size() == 1);
  REQUIRE(aliases[0]->alias.has_value());
  CHECK(aliases[0]->alias->x_before == ref("a", 0));
  CHECK(aliases[0]->alias->y_before == ref("a", 1));
  CHECK(aliases[0]->alias->x_after == ref("a", {1, 2}));
  CHECK(aliases[0]->alias->y_after == ref("a", {1, 2}));
  CHECK(!aliases[0]->alias->cross_lifetime);

  // Every node was visited and every snapshot is well-formed.
  for (const auto& info : tp.nodes) {
    CHECK(info.loc.line > 0);
    CHECK(well_formed_env(info.lft_in, info.env_in));
  }
  CHECK(tp.warnings.empty());
}

TEST_CASE("assignment requires full ownership") {
  TypeError err = must_fail(
      "newlft a in\n"
      "let x = mkref 0 in\n"
      "let y = x as ref<a, 0.5> in\n"
      "y := 1;\n"
      "endlft a;\n"
      "0\n");
  CHECK(err.code == TypeError::Code::OwnershipInsufficient);
  CHECK(err.loc.line == 4);
  CHECK(err.message.find("0.5") != std::string::npos);
  CHECK(std::string(err.code_str()) == "ownership-insufficient");
}

TEST_CASE("cyclic reborrow: rejected strictly, tolerated under lax checking") {
  const char* src =
      "newlft a in\n"
      "newlft b in\n"
      "let x = mkref 1 at a in\n"
      "let y = x as ref<b, 1> in\n"
      "let z = y as ref<a, 1> in\n"
      "endlft b;\n"
      "endlft a;\n"
      "0\n";

  TypeError err = must_fail(src);
  CHECK(err.code == TypeError::Code::LifetimeOrderViolation);
  CHECK(err.loc.line == 5);

  CheckOptions lax;
  lax.lax = true;
  TypedProgram tp = must_check(src, lax);
  REQUIRE(!tp.warnings.empty());
  CHECK(tp.warnings[0].find("cannot lend") != std::string::npos);
  // After ending b the two surviving aliases both claim full ownership: the
  // very state the dynamic audit exists to catch.
  CHECK(line_env(tp, 6) == env_of({{"x", ref("a", 1)}, {"z", ref("a", 1)}}));
}

TEST_CASE("ending a non-minimal lifetime is rejected") {
  TypeError err = must_fail(
      "newlft a in\n"
      "newlft b in\n"
      "endlft a;\n"
      "endlft b;\n"
      "0\n");
  CHECK(err.code == TypeError::Code::LifetimeNotMinimal);
  CHECK(err.loc.line == 3);
  CHECK(err.message.find("'b'") != std::string::npos);
}

TEST_CASE("split returns thread ownership through a function contract") {
  TypedProgram tp = must_check(
      "fn id_ref<a>(x: ref<a, 1>) -> (ref<a, 0> | ref<a, 1>) {\n"
      "  x\n"
      "}\n"
      "newlft la in\n"
      "let r = mkref 7 in\n"
      "let s = id_ref<la>(r) in\n"
      "endlft la;\n"
      "0\n");

  auto tails = nodes_of<SVar>(tp);
  REQUIRE(!tails.empty());
  REQUIRE(tails[0]->tail.has_value());
  const TailEvidence& ev = *tails[0]->tail;
  REQUIRE(ev.slots.size() == 1);
  CHECK(ev.slots[0].kind == ReturnKind::SplitReturn);
  CHECK(ev.slots[0].name == "x");
  CHECK(ev.slots[0].ret_type == ref("a", 1));
  CHECK(ev.slots[0].source_before == ref("a", 1));
  CHECK(ev.slots[0].source_after == ref("a", 0));

  auto calls = nodes_of<SLetCall>(tp);
  REQUIRE(calls.size() == 1);
  REQUIRE(calls[0]->call.has_value());
  CHECK(calls[0]->call->params == std::vector<OwnType>{ref("la", 1)});
  CHECK(calls[0]->call->posts == std::vector<OwnType>{ref("la", 0)});
  CHECK(calls[0]->call->rets == std::vector<OwnType>{ref("la", 1)});
  CHECK(calls[0]->call->ref_args == std::vector<int>{0});

  CHECK(line_env(tp, 6) ==
        env_of({{"r", ref("la", 0)}, {"s", ref("la", 1)}}));
}

TEST_CASE("call sites must entail the declared lifetime order") {
  const char* fn_src =
      "fn needs_order<a, b | b < a>(x: ref<a, 1>) -> (ref<a, 1> | int) {\n"
      "  let v = *x in\n"
      "  v\n"
      "}\n";

  // Correct orientation: lb was created below la.
  must_check(std::string(fn_src) +
             "newlft la in\n"
             "newlft lb in\n"
             "let p = mkref 3 at la in\n"
             "let v = needs_order<la, lb>(p) in\n"
             "endlft lb;\n"
             "endlft la;\n"
             "v\n");

  // Swapped: would need la to end before lb.
  TypeError err = must_fail(std::string(fn_src) +
                            "newlft la in\n"
                            "newlft lb in\n"
                            "let p = mkref 3 at lb in\n"
                            "let v = needs_order<lb, la>(p) in\n"
                            "endlft lb;\n"
                            "endlft la;\n"
                            "v\n");
  CHECK(err.code == TypeError::Code::CallOrderNotEntailed);
  CHECK(err.loc.line == 8);
}

TEST_CASE("breaking a declared post-call type is rejected") {
  TypeError err = must_fail(
      "fn breaks_post<a>(x: ref<a, 1>) -> (ref<a, 1> | int) {\n"
      "  let y = x as ref<a, 0.5> in\n"
      "  let v = *y in\n"
      "  v\n"
      "}\n"
      "0\n");
  CHECK(err.code == TypeError::Code::PostEnvMismatch);
  CHECK(err.loc.line == 4);
  CHECK(err.message.find("'x'") != std::string::npos);
}

TEST_CASE("lifetimes may not escape their scope") {
  TypeError leak = must_fail(
      "fn leaky<a>(x: ref<a, 1>) -> (ref<a, 1> | int) {\n"
      "  newlft b in\n"
      "  let v = *x in\n"
      "  v\n"
      "}\n"
      "0\n");
  CHECK(leak.code == TypeError::Code::ScopeEscape);
  CHECK(leak.message.find("'b'") != std::string::npos);

  TypeError ender = must_fail(
      "fn ender<a>(x: ref<a, 1>) -> (ref<a, 1> | int) {\n"
      "  endlft a;\n"
      "  let v = 0 in\n"
      "  v\n"
      "}\n"
      "0\n");
  CHECK(ender.code == TypeError::Code::ScopeEscape);
  CHECK(ender.loc.line == 2);
  CHECK(ender.message.find("lifetime parameter") != std::string::npos);

  TypeError sig = must_fail(
      "fn bad_sig<a | a < zz>(x: ref<a, 1>) -> (ref<a, 1> | int) {\n"
      "  let v = *x in\n"
      "  v\n"
      "}\n"
      "0\n");
  CHECK(sig.code == TypeError::Code::ScopeEscape);
  CHECK(sig.message.find("'zz'") != std::string::npos);
}

TEST_CASE("every exit of main must end the same lifetimes") {
  TypeError branch = must_fail(
      "newlft a in\n"
      "let c = _ in\n"
      "if c < 0 then (\n"
      "  endlft a;\n"
      "  0\n"
      ") else (\n"
      "  0\n"
      ")\n");
  CHECK(branch.code == TypeError::Code::BranchEnvMismatch);
  CHECK(branch.message.find("'a'") != std::string::npos);

  TypeError straight = must_fail("newlft a in\n0\n");
  CHECK(straight.code == TypeError::Code::ScopeEscape);
}

TEST_CASE("name and arity diagnostics") {
  CHECK(must_fail("let x = nosuch() in\nx\n").code ==
        TypeError::Code::UnknownFunction);

  CHECK(must_fail("fn id_ref<a>(x: ref<a, 1>) -> (ref<a, 0> | ref<a, 1>) {\n"
                  "  x\n"
                  "}\n"
                  "newlft la in\n"
                  "let r = mkref 7 in\n"
                  "let s = id_ref<la>(r, r) in\n"
                  "endlft la;\n"
                  "0\n")
            .code == TypeError::Code::ArityMismatch);

  CHECK(must_fail("let v = w + 1 in\nv\n").code ==
        TypeError::Code::UnknownVariable);

  CHECK(must_fail("let a0 = 3 in\nlet b0 = *a0 in\nb0\n").code ==
        TypeError::Code::KindMismatch);

  TypeError arith_on_ref = must_fail(
      "newlft a in\nlet x = mkref 0 in\nlet v = x + 1 in\nendlft a;\nv\n");
  CHECK(arith_on_ref.code == TypeError::Code::KindMismatch);
  CHECK(arith_on_ref.message.find("dereference") != std::string::npos);

  CHECK(must_fail("newlft a in\nnewlft a in\n0\n").code ==
        TypeError::Code::DuplicateName);

  CHECK(must_fail("fn twice<a>(x: ref<a, 1>) -> (ref<a, 1> | int) {\n"
                  "  let v = *x in v\n"
                  "}\n"
                  "fn twice<a>(x: ref<a, 1>) -> (ref<a, 1> | int) {\n"
                  "  let v = *x in v\n"
                  "}\n"
                  "0\n")
            .code == TypeError::Code::DuplicateName);

  // main returns one integer, never a reference.
  CHECK(must_fail("newlft a in\nlet x = mkref 0 in\nx\n").code ==
        TypeError::Code::KindMismatch);
}

TEST_CASE("cross-lifetime alias needs an annotation and is flagged") {
  const char* prefix =
      "newlft la in\n"
      "newlft lb in\n"
      "let p = mkref 5 at la in\n"
      "let q = p borrow lb in\n";

  TypedProgram tp = must_check(
      std::string(prefix) +
      "alias(p = q) as ref<la, 0 lend lb: 1>, ref<lb, 1>;\n"
      "endlft lb;\n"
      "endlft la;\n"
      "0\n");
  auto aliases = nodes_of<SAliasAssume>(tp);
  REQUIRE(aliases.size() == 1);
  REQUIRE(aliases[0]->alias.has_value());
  CHECK(aliases[0]->alias->cross_lifetime);
  CHECK(aliases[0]->alias->x_before == ref("la", 0, "lb", 1));
  CHECK(aliases[0]->alias->y_before == ref("lb", 1));
  CHECK(aliases[0]->alias->x_after == ref("la", 0, "lb", 1));
  CHECK(aliases[0]->alias->y_after == ref("lb", 1));
  bool flagged = false;
  for (const auto& w : tp.warnings) {
    if (w.find("across lifetimes") != std::string::npos) flagged = true;
  }
  CHECK(flagged);
  CHECK(line_env(tp, 6) == env_of({{"p", ref("la", 1)}}));

  TypeError err = must_fail(std::string(prefix) +
                            "alias(p = q);\n"
                            "endlft lb;\n"
                            "endlft la;\n"
                            "0\n");
  CHECK(err.code == TypeError::Code::SplitUnderivable);
  CHECK(err.message.find("annotation") != std::string::npos);
}

TEST_CASE("same-lifetime alias accepts an explicit redistribution") {
  TypedProgram tp = must_check(
      "newlft lb in\n"
      "let y = mkref 4 in\n"
      "let z = y as ref<lb, 1/2> in\n"
      "alias(y = z) as ref<lb, 1>, ref<lb, 0>;\n"
      "y := 9;\n"
      "endlft lb;\n"
      "0\n");
  // After the alias, y holds everything again and may assign; z holds nothing.
  CHECK(line_env(tp, 4) ==
        env_of({{"y", ref("lb", 1)}, {"z", ref("lb", 0)}}));
}

TEST_CASE("alias redistribution must preserve the combined type") {
  TypeError err = must_fail(
      "newlft lb in\n"
      "let y = mkref 4 in\n"
      "let z = y as ref<lb, 1/2> in\n"
      "alias(y = z) as ref<lb, 1>, ref<lb, 1>;\n"
      "endlft lb;\n"
      "0\n");
  CHECK(err.code == TypeError::Code::SplitUnderivable);
  CHECK(err.loc.line == 4);
}

TEST_CASE("dereference ownership polarity is recorded for the translation") {
  TypedProgram tp = must_check(
      "newlft a in\n"
      "let x = mkref 3 in\n"
      "let y = x in\n"
      "let v = *x in\n"
      "let w = *y in\n"
      "endlft a;\n"
      "v\n");
  auto derefs = nodes_of<SLetDeref>(tp);
  REQUIRE(derefs.size() == 2);
  REQUIRE(derefs[0]->deref_own_positive.has_value());
  CHECK(*derefs[0]->deref_own_positive == false);  // x after full transfer
  CHECK(*derefs[1]->deref_own_positive == true);   // y holds everything
}

TEST_CASE("two-function program with tuple returns checks end to end") {
  TypedProgram tp = must_check(
      "fn minmax<a, b | b < a>(x: ref<a, 1>, y: ref<a, 1>)\n"
      "    -> (ref<a, 0.5 lend b: 0.5>, ref<a, 0.5 lend b: 0.5>\n"
      "        | ref<b, 0.5>, ref<b, 0.5>) {\n"
      "  let vx = *x in\n"
      "  let vy = *y in\n"
      "  if vx < vy then (\n"
      "    (x, y)\n"
      "  ) else (\n"
      "    (y, x)\n"
      "  )\n"
      "}\n"
      "newlft la in\n"
      "newlft lb in\n"
      "let x = _ in\n"
      "let y = _ in\n"
      "let p = mkref x at la in\n"
      "let q = mkref y at la in\n"
      "let (r, s) = minmax<la, lb>(p, q) in\n"
      "let vr = *r in\n"
      "let vs = *s in\n"
      "endlft lb;\n"
      "endlft la;\n"
      "0\n");

  auto calls = nodes_of<SLetCall>(tp);
  REQUIRE(calls.size() == 1);
  const CallEvidence& ev = *calls[0]->call;
  CHECK(ev.params ==
        std::vector<OwnType>{ref("la", 1), ref("la", 1)});
  CHECK(ev.posts == std::vector<OwnType>{ref("la", {1, 2}, "lb", {1, 2}),
                                         ref("la", {1, 2}, "lb", {1, 2})});
  CHECK(ev.rets ==
        std::vector<OwnType>{ref("lb", {1, 2}), ref("lb", {1, 2})});
  CHECK(ev.ref_args == std::vector<int>{0, 1});

  CHECK(line_env(tp, 18) ==
        env_of({{"x", OwnType::make_int()},
                {"y", OwnType::make_int()},
                {"p", ref("la", {1, 2}, "lb", {1, 2})},
                {"q", ref("la", {1, 2}, "lb", {1, 2})},
                {"r", ref("lb", {1, 2})},
                {"s", ref("lb", {1, 2})}}));
  // Ending lb returns both lent halves.
  CHECK(line_env(tp, 21) ==
        env_of({{"x", OwnType::make_int()},
                {"y", OwnType::make_int()},
                {"p", ref("la", 1)},
                {"q", ref("la", 1)},
                {"vr", OwnType::make_int()},
                {"vs", OwnType::make_int()}}));

  // Both branch tails split-return the two parameters, in branch order.
  auto tails = nodes_of<SVar>(tp);
  int split_tails = 0;
  for (const auto* t : tails) {
    if (!t->tail || t->tail->slots.size() != 2) continue;
    if (t->tail->slots[0].kind == ReturnKind::SplitReturn) ++split_tails;
  }
  CHECK(split_tails == 2);

  for (const auto& info : tp.nodes) {
    CHECK(well_formed_env(info.lft_in, info.env_in));
  }
}

TEST_CASE("kept parameters weaken silently with a recorded residue") {
  TypedProgram tp = must_check(
      "fn pick<a, b | b < a>(x: ref<a, 1>, y: ref<a, 1>)\n"
      "    -> (ref<a, 0 lend b: 1>, ref<a, 0 lend b: 1> | ref<b, 1>) {\n"
      "  let c = _ in\n"
      "  if c < 0 then (\n"
      "    x\n"
      "  ) else (\n"
      "    y\n"
      "  )\n"
      "}\n"
      "newlft la in\n"
      "newlft lb in\n"
      "let p = mkref 1 at la in\n"
      "let q = mkref 2 at la in\n"
      "let w = pick<la, lb>(p, q) in\n"
      "let vw = *w in\n"
      "endlft lb;\n"
      "endlft la;\n"
      "0\n");

  auto tails = nodes_of<SVar>(tp);
  std::vector<const TailEvidence*> fn_tails;
  for (const auto* t : tails) {
    if (t->tail && t->tail->slots.size() == 1 &&
        t->tail->slots[0].kind == ReturnKind::SplitReturn) {
      fn_tails.push_back(&*t->tail);
    }
  }
  REQUIRE(fn_tails.size() == 2);
  // Then-branch returns x, so y weakens to its post type shedding ref<b, 1>.
  REQUIRE(fn_tails[0]->partial_residues.size() == 1);
  CHECK(fn_tails[0]->partial_residues[0].first == "y");
  CHECK(fn_tails[0]->partial_residues[0].second == ref("b", 1));
  REQUIRE(fn_tails[1]->partial_residues.size() == 1);
  CHECK(fn_tails[1]->partial_residues[0].first == "x");
  CHECK(fn_tails[1]->partial_residues[0].second == ref("b", 1));
}

TEST_CASE("recursive function with assignment checks") {
  TypedProgram tp = must_check(
      "fn countdown<a>(x: ref<a, 1>) -> (ref<a, 1> | int) {\n"
      "  let v = *x in\n"
      "  if v <= 0 then (\n"
      "    0\n"
      "  ) else (\n"
      "    x := v - 1;\n"
      "    let r = countdown<a>(x) in\n"
      "    r\n"
      "  )\n"
      "}\n"
      "newlft la in\n"
      "let c = mkref 5 in\n"
      "let r2 = countdown<la>(c) in\n"
      "endlft la;\n"
      "r2\n");
  auto calls = nodes_of<SLetCall>(tp);
  REQUIRE(calls.size() == 2);  // recursive + outer
  CHECK(calls[0]->call->params == std::vector<OwnType>{ref("a", 1)});
  CHECK(calls[1]->call->params == std::vector<OwnType>{ref("la", 1)});
}

TEST_CASE("locals may be returned outright when their type matches") {
  TypedProgram tp = must_check(
      "fn hand_over<a>(x: ref<a, 1>) -> (ref<a, 0> | ref<a, 1>) {\n"
      "  let y = x in\n"
      "  y\n"
      "}\n"
      "newlft la in\n"
      "let r = mkref 7 in\n"
      "let s = hand_over<la>(r) in\n"
      "endlft la;\n"
      "0\n");
  auto tails = nodes_of<SVar>(tp);
  REQUIRE(!tails.empty());
  REQUIRE(tails[0]->tail.has_value());
  CHECK(tails[0]->tail->slots[0].kind == ReturnKind::DirectMove);
  CHECK(tails[0]->tail->slots[0].name == "y");
  // x keeps ref<a, 0>, matching its post exactly: no residue.
  CHECK(tails[0]->tail->partial_residues.empty());
}

TEST_CASE("checking is deterministic and repeatable on a deep copy") {
  TypedProgram tp = must_check(kConsortDemo);
  Program copy = clone_program(tp.program);
  auto again = check_program(std::move(copy));
  REQUIRE(again.ok());
  REQUIRE(again->nodes.size() == tp.nodes.size());
  for (std::size_t i = 0; i < tp.nodes.size(); ++i) {
    CHECK(again->nodes[i].env_in == tp.nodes[i].env_in);
    CHECK(again->nodes[i].lft_in == tp.nodes[i].lft_in);
  }
  REQUIRE(again->env_log.size() == tp.env_log.size());
  for (std::size_t i = 0; i < tp.env_log.size(); ++i) {
    CHECK(again->env_log[i].first == tp.env_log[i].first);
    CHECK(again->env_log[i].second == tp.env_log[i].second);
  }
}
