#include "bfo/parser.hpp"

#include "bfo/pretty.hpp"

#include "doctest.h"

#include <set>

using namespace bfo;

namespace {

Program must_parse(const std::string& text) {
  auto r = parse(text);
  if (!r.ok()) {
    FAIL("parse failed at ", r.error().line, ":", r.error().col, ": ",
         r.error().message);
  }
  return std::move(r.value());
}

/// Collects every variable binder in the program; duplicates within one
/// function would break environment bookkeeping.
void check_binders_unique_per_fn(const Program& p) {
  auto collect = [](const SourceExpr& root, std::set<std::string> seed) {
    std::set<std::string> seen = std::move(seed);
    for_each_expr(root, [&](const SourceExpr& e) {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, SLetArith> ||
                          std::is_same_v<T, SLetHavoc> ||
                          std::is_same_v<T, SLetAlias> ||
                          std::is_same_v<T, SLetMkRef> ||
                          std::is_same_v<T, SLetDeref>) {
              CHECK_MESSAGE(seen.insert(n.x).second, "duplicate binder ", n.x);
            } else if constexpr (std::is_same_v<T, SLetCall>) {
              for (const auto& b : n.binders) {
                CHECK_MESSAGE(seen.insert(b).second, "duplicate binder ", b);
              }
            }
          },
          e.node);
    });
  };
  for (const auto& f : p.fns) {
    std::set<std::string> params(f.param_names.begin(), f.param_names.end());
    CHECK(params.size() == f.param_names.size());
    collect(*f.body, params);
  }
  collect(*p.main_e, {});
}

void check_round_trip(const std::string& text) {
  Program p1 = must_parse(text);
  std::string printed = pretty_program(p1);
  auto r2 = parse(printed);
  if (!r2.ok()) {
    FAIL("reparse failed at ", r2.error().line, ":", r2.error().col, ": ",
         r2.error().message, "\nprinted form:\n", printed);
  }
  CHECK_MESSAGE(alpha_equivalent(p1, r2.value()),
                "round-trip changed the program:\n", printed);
}

const char* kMutationProgram = R"(newlft a in
let x = mkref 0 in
let y = x in
y := *y + 1;
alias(x = y);
assert(*x + *y = 2);
endlft a;
0
)";

const char* kReborrowProgram = R"(newlft a in
let x = mkref 0 in
newlft b in
let y = x as ref<b, 1> in
y := 1;
endlft b;
assert(*x = 1);
endlft a;
0
)";

const char* kTwoFnProgram = R"(fn minmax<a, b | b < a>(x: ref<a, 1>, y: ref<a, 1>)
    -> (ref<a, 0.5 lend b: 0.5>, ref<a, 0.5 lend b: 0.5> | ref<b, 0.5>, ref<b, 0.5>) {
  if *x < *y then ( (x, y) ) else ( (y, x) )
}

fn rand_choose<a, b | b < a>(x: ref<a, 0.5 lend b: 0.5>, y: ref<a, 0.5 lend b: 0.5>)
    -> (ref<a, 0 lend b: 1>, ref<a, 0 lend b: 1> | ref<a, 0.5 lend b: 0.5>) {
  if _ then ( x ) else ( y )
}

newlft la in
let x = mkref _ in
let y = mkref _ in
newlft lb in
let (p, q) = minmax<la, lb>(x, y) in
let z = rand_choose<la, lb>(x, y) in
assert(*p <= *z && *z <= *q);
endlft lb;
z := 1;
assert(*z = 1);
endlft la;
0
)";

const char* kRecursiveProgram = R"(fn just_rec<a>(x: ref<a, 1>) -> (ref<a, 1> | int) {
  if _ then ( 0 ) else (
    let y = mkref _ in
    just_rec<a>(y)
  )
}

newlft la in
let x = mkref _ in
let x0 = *x in
just_rec<la>(x);
assert(x0 = *x);
endlft la;
0
)";

const char* kEverythingProgram = R"(fn shuffle<a, b | b < a>(p: ref<a, 0.5 lend b: 0.5>, q: ref<b, 0.5>)
    -> (ref<a, 0 lend b: 1>, ref<b, 1> | int) {
  alias(p = q) as ref<a, 0 lend b: 1>, ref<b, 1>;
  q := *q + 3;
  0
}

newlft a in
let u = _ in
let x = mkref u at a in
newlft b in
let y = x borrow b in
let w = x in
if u < 3 * u + 1 then (
  shuffle<a, b>(x, y);
  endlft b;
  fail
) else (
  endlft b;
  assert(*x = 4 && u <= *x);
  0
)
)";

}  // namespace

TEST_CASE("a straight-line program parses to the expected shape") {
  Program p = must_parse(kMutationProgram);
  CHECK(p.fns.empty());
  CHECK(p.node_count > 0);

  // newlft a in let x = <0> in ...
  const auto* nl = std::get_if<SNewLft>(&p.main_e->node);
  REQUIRE(nl != nullptr);
  CHECK(nl->lft == "a");
  // The mkref initializer 0 is hoisted to a fresh binding first.
  const auto* init = std::get_if<SLetArith>(&nl->body->node);
  REQUIRE(init != nullptr);
  CHECK(init->value.op == Arith::Op::Const);
  const auto* mk = std::get_if<SLetMkRef>(&init->body->node);
  REQUIRE(mk != nullptr);
  CHECK(mk->x == "x");
  CHECK(mk->y == init->x);
  CHECK(!mk->at_lft.has_value());
  const auto* al = std::get_if<SLetAlias>(&mk->body->node);
  REQUIRE(al != nullptr);
  CHECK(al->x == "y");
  CHECK(al->y == "x");
  CHECK(al->annot.kind == SplitAnnot::Kind::Default);
}

TEST_CASE("assignments hoist their right-hand arithmetic") {
  Program p = must_parse("let x = mkref 1 in x := *x + 1; 0");
  // let t0 = 1 in let x = mkref t0 in let t1 = *x in let t2 = t1 + 1 in x := t2; ...
  const auto* c1 = std::get_if<SLetArith>(&p.main_e->node);
  REQUIRE(c1 != nullptr);
  const auto* mk = std::get_if<SLetMkRef>(&c1->body->node);
  REQUIRE(mk != nullptr);
  const auto* d = std::get_if<SLetDeref>(&mk->body->node);
  REQUIRE(d != nullptr);
  CHECK(d->y == "x");
  const auto* sum = std::get_if<SLetArith>(&d->body->node);
  REQUIRE(sum != nullptr);
  CHECK(sum->value.op == Arith::Op::Add);
  const auto* asg = std::get_if<SAssign>(&sum->body->node);
  REQUIRE(asg != nullptr);
  CHECK(asg->x == "x");
  CHECK(asg->y == sum->x);
}

TEST_CASE("asserts desugar to a zero test guarding fail") {
  Program p = must_parse("let x = 1 in assert(x = 1)");
  const auto* let_x = std::get_if<SLetArith>(&p.main_e->node);
  REQUIRE(let_x != nullptr);
  const auto* test = std::get_if<SLetArith>(&let_x->body->node);
  REQUIRE(test != nullptr);
  CHECK(test->value.op == Arith::Op::Sub);
  const auto* branch = std::get_if<SIfZ>(&test->body->node);
  REQUIRE(branch != nullptr);
  CHECK(branch->x == test->x);
  CHECK(std::get_if<SFail>(&branch->else_e->node) != nullptr);
  CHECK(std::get_if<SFail>(&branch->then_e->node) == nullptr);
}

TEST_CASE("inequality asserts swap the branches") {
  Program p = must_parse("let x = 1 in assert(x != 2)");
  const auto* let_x = std::get_if<SLetArith>(&p.main_e->node);
  REQUIRE(let_x != nullptr);
  const auto* test = std::get_if<SLetArith>(&let_x->body->node);
  REQUIRE(test != nullptr);
  const auto* branch = std::get_if<SIfZ>(&test->body->node);
  REQUIRE(branch != nullptr);
  CHECK(std::get_if<SFail>(&branch->then_e->node) != nullptr);
  CHECK(std::get_if<SFail>(&branch->else_e->node) == nullptr);
}

TEST_CASE("conjunction asserts check each conjunct in order") {
  Program p = must_parse("let a = 1 in let b = 2 in assert(a <= b && b <= 3); 0");
  int fails = 0;
  for_each_expr(*p.main_e, [&](const SourceExpr& e) {
    if (std::get_if<SFail>(&e.node)) ++fails;
  });
  CHECK(fails == 2);  // one guard per conjunct
}

TEST_CASE("call binders and lifetime arguments parse") {
  Program p = must_parse(kTwoFnProgram);
  REQUIRE(p.fns.size() == 2);
  CHECK(p.fns[0].name == "minmax");
  CHECK(p.fns[0].sig.lft_params == std::vector<std::string>{"a", "b"});
  CHECK(p.fns[0].sig.order.less("b", "a"));
  CHECK(p.fns[0].sig.params.size() == 2);
  CHECK(p.fns[0].sig.posts.size() == 2);
  CHECK(p.fns[0].sig.rets.size() == 2);
  CHECK(p.fns[0].sig.rets[0] ==
        OwnType::make_ref("b", Rational(1, 2)));

  bool saw_tuple_call = false;
  for_each_expr(*p.main_e, [&](const SourceExpr& e) {
    if (const auto* c = std::get_if<SLetCall>(&e.node)) {
      if (c->fn == "minmax") {
        saw_tuple_call = true;
        CHECK(c->binders == std::vector<std::string>{"p", "q"});
        CHECK(c->lft_args == std::vector<std::string>{"la", "lb"});
        CHECK(c->args == std::vector<std::string>{"x", "y"});
      }
    }
  });
  CHECK(saw_tuple_call);
}

TEST_CASE("statement calls bind a throwaway result") {
  Program p = must_parse(kRecursiveProgram);
  bool saw_stmt_call = false;
  for_each_expr(*p.main_e, [&](const SourceExpr& e) {
    if (const auto* c = std::get_if<SLetCall>(&e.node)) {
      if (c->fn == "just_rec") {
        saw_stmt_call = true;
        CHECK(c->binders.size() == 1);
        CHECK(c->args == std::vector<std::string>{"x"});
      }
    }
  });
  CHECK(saw_stmt_call);
}

TEST_CASE("split annotations parse in all three forms") {
  Program p = must_parse(kEverythingProgram);
  int as_forms = 0, borrow_forms = 0, default_forms = 0;
  auto count = [&](const SourceExpr& root) {
    for_each_expr(root, [&](const SourceExpr& e) {
      if (const auto* a = std::get_if<SLetAlias>(&e.node)) {
        switch (a->annot.kind) {
          case SplitAnnot::Kind::As: ++as_forms; break;
          case SplitAnnot::Kind::Borrow: ++borrow_forms; break;
          case SplitAnnot::Kind::Default: ++default_forms; break;
        }
      }
    });
  };
  count(*p.main_e);
  CHECK(borrow_forms == 1);  // let y = x borrow b
  CHECK(default_forms == 1);  // let w = x

  Program p2 = must_parse(kReborrowProgram);
  count(*p2.main_e);
  CHECK(as_forms == 1);  // let y = x as ref<b, 1>

  // The annotated alias-assume form carries both replacement types.
  bool saw_annotated_alias = false;
  for (const auto& f : p.fns) {
    for_each_expr(*f.body, [&](const SourceExpr& e) {
      if (const auto* a = std::get_if<SAliasAssume>(&e.node)) {
        saw_annotated_alias = true;
        REQUIRE(a->annot.has_value());
        CHECK(a->annot->first ==
              OwnType::make_ref("a", Rational(0), Borrow{"b", Rational(1)}));
        CHECK(a->annot->second == OwnType::make_ref("b", Rational(1)));
      }
    });
  }
  CHECK(saw_annotated_alias);
}

TEST_CASE("mkref accepts a lifetime placement") {
  Program p = must_parse(kEverythingProgram);
  bool saw_at = false;
  for_each_expr(*p.main_e, [&](const SourceExpr& e) {
    if (const auto* mk = std::get_if<SLetMkRef>(&e.node)) {
      if (mk->at_lft) {
        saw_at = true;
        CHECK(*mk->at_lft == "a");
      }
    }
  });
  CHECK(saw_at);
}

TEST_CASE("binders are unique within every function after parsing") {
  check_binders_unique_per_fn(must_parse(kMutationProgram));
  check_binders_unique_per_fn(must_parse(kTwoFnProgram));
  check_binders_unique_per_fn(must_parse(kEverythingProgram));
  check_binders_unique_per_fn(
      must_parse("let x = 0 in let x = 1 in let x = 2 in x"));
}

TEST_CASE("shadowed binders rename but keep the surface name readable") {
  Program p = must_parse("let x = 0 in let x = x + 1 in x");
  const auto* outer = std::get_if<SLetArith>(&p.main_e->node);
  REQUIRE(outer != nullptr);
  CHECK(outer->x == "x");
  const auto* inner = std::get_if<SLetArith>(&outer->body->node);
  REQUIRE(inner != nullptr);
  CHECK(inner->x == "x_2");
  CHECK(inner->value.lhs->var == "x");  // the right-hand side sees the outer x
  const auto* tail = std::get_if<SVar>(&inner->body->node);
  REQUIRE(tail != nullptr);
  CHECK(tail->names == std::vector<std::string>{"x_2"});
}

TEST_CASE("function parameters share the main namespace only lexically") {
  // minmax's params are named x and y; main also binds x and y. Neither pair
  // is renamed: each function is its own namespace.
  Program p = must_parse(kTwoFnProgram);
  CHECK(p.fns[0].param_names == std::vector<std::string>{"x", "y"});
  bool main_has_plain_x = false;
  for_each_expr(*p.main_e, [&](const SourceExpr& e) {
    if (const auto* mk = std::get_if<SLetMkRef>(&e.node)) {
      if (mk->x == "x") main_has_plain_x = true;
    }
  });
  CHECK(main_has_plain_x);
}

TEST_CASE("node ids are dense and every node carries a location") {
  Program p = must_parse(kTwoFnProgram);
  std::set<int> ids;
  auto visit = [&](const SourceExpr& e) {
    CHECK(e.id >= 0);
    CHECK(e.id < p.node_count);
    CHECK(ids.insert(e.id).second);
    CHECK(e.loc.line >= 1);
    CHECK(e.loc.col >= 1);
  };
  for (const auto& f : p.fns) for_each_expr(*f.body, visit);
  for_each_expr(*p.main_e, visit);
  CHECK((int)ids.size() == p.node_count);
}

TEST_CASE("parse errors carry a position") {
  auto r = parse("let x = mkref 0 in\n  x := ;\n0");
  REQUIRE(!r.ok());
  CHECK(r.error().line == 2);

  auto r2 = parse("fn f(x: ref<a>) -> (| int) { 0 }\n0");
  REQUIRE(!r2.ok());
  CHECK(r2.error().line == 1);

  auto r3 = parse("");
  REQUIRE(!r3.ok());

  auto r4 = parse("let x = 0 in");
  REQUIRE(!r4.ok());
}

TEST_CASE("cyclic lifetime orders are rejected at parse time") {
  auto r = parse("fn f<a, b | a < b, b < a>(x: ref<a, 1>) -> (ref<a, 1> | int) { 0 }\n0");
  REQUIRE(!r.ok());
}

TEST_CASE("programs round-trip through the pretty printer") {
  check_round_trip(kMutationProgram);
  check_round_trip(kReborrowProgram);
  check_round_trip(kTwoFnProgram);
  check_round_trip(kRecursiveProgram);
  check_round_trip(kEverythingProgram);
  check_round_trip("let x = 0 in let x = x + 1 in x");
  check_round_trip("fail");
  check_round_trip("let x = 2 * (3 + 4) - 1 in ifz x then ( fail ) else ( x )");
  check_round_trip("let c = 1 < 2 in c");
  check_round_trip("let x = _ in let y = mkref x in let z = *y in (z, x)");
}

TEST_CASE("alpha equivalence tolerates renamed binders and nothing else") {
  Program a = must_parse("let u = 0 in let v = u + 1 in v");
  Program b = must_parse("let p = 0 in let q = p + 1 in q");
  CHECK(alpha_equivalent(a, b));

  Program c = must_parse("let p = 0 in let q = p + 2 in q");
  CHECK(!alpha_equivalent(a, c));

  Program d = must_parse("let p = 0 in let q = q0 + 1 in q");
  CHECK(!alpha_equivalent(a, d));  // free variable differs from bound one

  Program e1 = must_parse("newlft a in newlft b in endlft b; endlft a; 0");
  Program e2 = must_parse("newlft u in newlft v in endlft v; endlft u; 0");
  Program e3 = must_parse("newlft u in newlft v in endlft u; endlft v; 0");
  CHECK(alpha_equivalent(e1, e2));
  CHECK(!alpha_equivalent(e1, e3));
}
