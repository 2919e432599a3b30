#include <gtest/gtest.h>

#include "support/dsl_helpers.hpp"

using namespace taserial;
using namespace testing_dsl;

namespace {

const MachineId A{0}, B{1};

} // namespace

TEST(LockTable, GrantAndQuery) {
    LockTable t;
    t.grant(A, LockPair{{at("x")}, {at("y")}});
    EXPECT_TRUE(t.r_locked(at("x"), A));
    EXPECT_TRUE(t.w_locked(at("y"), A));
    EXPECT_FALSE(t.w_locked(at("x"), A));
    EXPECT_TRUE(t.w_locked_by_other(at("y"), B));
    EXPECT_FALSE(t.w_locked_by_other(at("y"), A));
    EXPECT_EQ(t.locked_by(A), (std::set<Location>{at("x"), at("y")}));
    EXPECT_EQ(t.held_by(A), (LockPair{{at("x")}, {at("y")}}));
}

TEST(LockTable, SharedReadersAreSafe) {
    LockTable t;
    t.grant(A, LockPair{{at("x")}, {}});
    t.grant(B, LockPair{{at("x")}, {}});
    EXPECT_FALSE(t.safety_violation());
    t.grant(B, LockPair{{}, {at("x")}});
    EXPECT_TRUE(t.safety_violation());
}

TEST(LockTable, OwnReadUnderOwnWriteIsSafe) {
    LockTable t;
    t.grant(A, LockPair{{at("x")}, {at("x")}});
    EXPECT_FALSE(t.safety_violation());
    t.grant(B, LockPair{{}, {at("x")}});
    EXPECT_TRUE(t.safety_violation());
}

TEST(LockTable, ReleaseIsPerKind) {
    LockTable t;
    t.grant(A, LockPair{{at("x")}, {}});
    t.grant(A, LockPair{{}, {at("x")}});
    t.release(A, LockPair{{}, {at("x")}});
    EXPECT_TRUE(t.r_locked(at("x"), A));
    EXPECT_FALSE(t.w_locked(at("x"), A));
    t.release_all(A);
    EXPECT_TRUE(t.empty());
}

TEST(LockTable, UnlockDropsBothKinds) {
    LockTable t;
    t.grant(A, LockPair{{at("x")}, {at("x")}});
    t.unlock(at("x"), A);
    EXPECT_TRUE(t.empty());
}

TEST(NewLocks, Intersections) {
    auto prog = parse_program(R"(
machine M
  shared s/0
  monitored m/0
  output o/0
  rule: par { s := m, o := 1, p := p }
)");
    State st;
    LockTable t;
    auto need = new_locks(prog, A, st, t, SeedStream(0));
    EXPECT_EQ(need.reads, (std::set<Location>{at("s"), at("m")}));
    EXPECT_EQ(need.writes, (std::set<Location>{at("s"), at("o")}));
    EXPECT_TRUE(new_locks_needed(prog, A, st, t, SeedStream(0)));

    t.grant(A, need);
    EXPECT_FALSE(new_locks_needed(prog, A, st, t, SeedStream(0)));
}

TEST(NewLocks, PrivateOnlyNeedsNothing) {
    auto prog = parse_program("machine M\n rule: p := p + 1\n");
    State st;
    st.set(at("p"), I(0));
    EXPECT_TRUE(new_locks(prog, A, st, LockTable{}, SeedStream(0)).empty());
}

TEST(NewLocks, HeldReadLockNotRequestedAgain) {
    auto prog = parse_program("machine M\n shared g/0\n rule: p := g\n");
    LockTable t;
    t.grant(A, LockPair{{at("g")}, {}});
    EXPECT_TRUE(new_locks(prog, A, State{}, t, SeedStream(0)).empty());
}

TEST(NewLocks, UpgradeNeedsWriteLock) {
    auto prog = parse_program("machine M\n shared g/0\n rule: g := g + 1\n");
    State st;
    st.set(at("g"), I(0));
    LockTable t;
    t.grant(A, LockPair{{at("g")}, {}});
    auto need = new_locks(prog, A, st, t, SeedStream(0));
    EXPECT_TRUE(need.reads.empty());
    EXPECT_EQ(need.writes, std::set<Location>{at("g")});
}

TEST(OverwrittenValues, SnapshotsSharedAndOutputOnly) {
    auto prog = parse_program(R"(
machine M
  shared f/1
  output o/0
  rule: par { f(1) := 5, f(2) := 5, o := 1, p := 1 }
)");
    State st;
    st.set(at("f", {1}), I(3));
    auto v = overwritten_values(prog, st, SeedStream(0));
    EXPECT_EQ(v, (UpdateSet{{at("f", {1}), I(3)}, {at("f", {2}), Value::undef()}, {at("o"), Value::undef()}}));
    auto none = parse_program("machine M\n rule: p := 1\n");
    EXPECT_TRUE(overwritten_values(none, st, SeedStream(0)).empty());
}
