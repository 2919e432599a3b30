#include <gtest/gtest.h>

#include "support/dsl_helpers.hpp"

using namespace taserial;
using namespace testing_dsl;

namespace {

UpdateSet run(const std::string& src, const State& s, std::uint64_t seed = 0) {
    SeedStream rng(seed);
    return yields(rule_of(src), s, {}, rng);
}

} // namespace

TEST(EvalTerm, LookupsAndNesting) {
    State s;
    s.set(at("lit5"), I(5));
    s.set(at("g", {2}), I(7));
    s.set(at("f", {7}), I(9));
    EXPECT_EQ(eval_term(Term::apply("lit5"), s, {}), I(5));
    EXPECT_EQ(eval_term(Term::var("x"), s, {{"x", Value::boolean(true)}}), Value::boolean(true));
    EXPECT_EQ(eval_term(term_of("f(g(2))"), s, {}), I(9));
    EXPECT_EQ(eval_term(term_of("f(g(2)) - 10"), s, {}), I(-1));
}

TEST(EvalTerm, Errors) {
    State s;
    EXPECT_THROW(eval_term(Term::var("x"), s, {}), EvalError);
    EXPECT_THROW(eval_term(term_of("undef + 1"), s, {}), EvalError);
    s.set(at("big"), I(INT64_MAX));
    try {
        eval_term(term_of("big + 1"), s, {});
        FAIL();
    } catch (const EvalError& e) {
        EXPECT_EQ(e.kind(), EvalError::Kind::overflow);
    }
}

TEST(EvalFormula, Basics) {
    State s(State::default_domain(2));
    s.set(at("lit"), I(2));
    s.set(at("P"), Value::boolean(false));
    EXPECT_TRUE(eval_formula(Formula::eq(Term::var("x"), Term::var("x")), s, {{"x", I(1)}}));
    EXPECT_TRUE(eval_formula(formula_of("forall x: x < lit"), s, {}));
    EXPECT_FALSE(eval_formula(formula_of("forall x: x < 1"), s, {}));
    EXPECT_TRUE(eval_formula(formula_of("exists x: x = 1"), s, {}));
    EXPECT_TRUE(eval_formula(formula_of("not P"), s, {}));
    EXPECT_TRUE(eval_formula(formula_of("P or lit = 2"), s, {}));
    EXPECT_FALSE(eval_formula(formula_of("P and lit = 2"), s, {}));
}

TEST(Yields, Basics) {
    State s;
    EXPECT_TRUE(run("skip", s).empty());
    EXPECT_EQ(run("f(1) := 3", s), (UpdateSet{{at("f", {1}), I(3)}}));
}

TEST(Yields, ParClashIsInconsistentNotAnError) {
    State s;
    auto u = run("par { f(1) := 3, f(1) := 4 }", s);
    EXPECT_EQ(u.size(), 2u);
    EXPECT_FALSE(u.consistent());
}

TEST(Yields, IfTakesOneBranch) {
    State s;
    s.set(at("g"), I(1));
    EXPECT_EQ(run("if g = 1 then a := 1 else b := 1", s), (UpdateSet{{at("a"), I(1)}}));
    EXPECT_EQ(run("if g = 2 then a := 1 else b := 1", s), (UpdateSet{{at("b"), I(1)}}));
}

TEST(Yields, LetIsByValue) {
    State s;
    s.set(at("g"), I(4));
    EXPECT_EQ(run("let x = g + 1 in f(x) := x", s), (UpdateSet{{at("f", {5}), I(5)}}));
}

TEST(Yields, ForallOverRange) {
    State s(State::default_domain(4));
    auto u = run("forall i with i < 2 do f(i) := i", s);
    EXPECT_EQ(u, (UpdateSet{{at("f", {0}), I(0)}, {at("f", {1}), I(1)}}));
}

TEST(Yields, ChooseEmptyRangeIsEmpty) {
    State s;
    EXPECT_TRUE(run("choose i with i < 0 do f(i) := 1", s).empty());
}

TEST(Yields, ChooseIsSeededAndInRange) {
    State s(State::default_domain(8));
    std::set<Location> seen;
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        auto a = run("choose i with 2 < i do f(i) := 1", s, seed);
        EXPECT_EQ(a, run("choose i with 2 < i do f(i) := 1", s, seed));
        ASSERT_EQ(a.size(), 1u);
        const auto l = a.begin()->loc;
        EXPECT_GT(l.args[0].as_integer(), 2);
        seen.insert(l);
    }
    EXPECT_GT(seen.size(), 1u);
}

TEST(Yields, SeqSeesFirstUpdates) {
    State s;
    s.set(at("x"), I(1));
    EXPECT_EQ(run("seq { x := x + 1, y := x }", s), (UpdateSet{{at("x"), I(2)}, {at("y"), I(2)}}));
}

TEST(Yields, SeqAfterInconsistentFirstIsFirstOnly) {
    State s;
    auto u = run("seq { par { x := 1, x := 2 }, y := 5 }", s);
    EXPECT_EQ(u, (UpdateSet{{at("x"), I(1)}, {at("x"), I(2)}}));
}

TEST(Yields, SeqLaterOverridesEarlier) {
    State s;
    EXPECT_EQ(run("seq { x := 1, x := 2 }", s), (UpdateSet{{at("x"), I(2)}}));
}

TEST(Yields, CallByReferenceSeesInnerSeqEffects) {
    // By reference the argument is re-evaluated after the first half of the seq.
    auto prog = parse_program(R"(
machine T
  rule: call Twice(x)
  rule Twice(a): seq { x := a + 1, y := a }
)");
    State s;
    s.set(at("x"), I(1));
    SeedStream rng(0);
    EXPECT_EQ(yields(prog.main, s, {}, rng, prog.rules), (UpdateSet{{at("x"), I(2)}, {at("y"), I(2)}}));
}

TEST(Yields, ParCommutes) {
    State s;
    s.set(at("x"), I(3));
    EXPECT_EQ(run("par { a := x, b := x + 1 }", s), run("par { b := x + 1, a := x }", s));
}

TEST(Apply, Laws) {
    State s;
    s.set(at("x"), I(1));
    EXPECT_EQ(apply(s, {}), s);
    auto t = apply(s, {{at("f", {1}), I(3)}});
    EXPECT_EQ(t.get(at("f", {1})), I(3));
    EXPECT_EQ(t.get(at("x")), I(1));
    UpdateSet a{{at("p"), I(1)}}, b{{at("q"), I(2)}};
    UpdateSet ab = a;
    ab.merge(b);
    EXPECT_EQ(apply(apply(s, a), b), apply(s, ab));
}
