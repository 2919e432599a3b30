#include <gtest/gtest.h>

#include "support/dsl_helpers.hpp"
#include "support/oracles.hpp"

using namespace taserial;
using namespace testing_dsl;

namespace {

const MachineId A{0}, B{1}, C{2}, D{3};

ControllerState with_transact(std::initializer_list<MachineId> ms) {
    ControllerState cs;
    cs.transact = ms;
    return cs;
}

WaitGraph graph(std::initializer_list<std::pair<std::uint32_t, std::uint32_t>> es) {
    WaitGraph g;
    for (auto [a, b] : es) g.edges.insert({MachineId{a}, MachineId{b}});
    return g;
}

} // namespace

TEST(CannotBeGranted, Cases) {
    auto cs = with_transact({A, B});
    EXPECT_FALSE(cannot_be_granted(A, LockPair{}, cs));
    cs.locks.grant(B, LockPair{{}, {at("l")}});
    EXPECT_TRUE(cannot_be_granted(A, LockPair{{at("l")}, {}}, cs));

    auto rs = with_transact({A, B});
    rs.locks.grant(B, LockPair{{at("l")}, {}});
    EXPECT_TRUE(cannot_be_granted(A, LockPair{{}, {at("l")}}, rs));
    EXPECT_FALSE(cannot_be_granted(A, LockPair{{at("l")}, {}}, rs));
    EXPECT_FALSE(cannot_be_granted(B, LockPair{{}, {at("l")}}, rs));
}

TEST(CannotBeGranted, IgnoresCommittedHolders) {
    auto cs = with_transact({A});
    cs.locks.grant(B, LockPair{{}, {at("l")}});
    EXPECT_FALSE(cannot_be_granted(A, LockPair{{at("l")}, {}}, cs));
}

TEST(LockHandler, EmptyQueueNoChange) {
    auto cs = with_transact({A});
    SeedStream rng(0);
    auto r = lock_handler_step(cs, SelectionPolicy::random, rng);
    EXPECT_FALSE(r.decision);
    EXPECT_EQ(r.state, cs);
}

TEST(LockHandler, GrantsOneRequest) {
    auto cs = with_transact({A});
    cs.insert_lock_request(A, LockPair{{at("f", {1})}, {}});
    SeedStream rng(0);
    auto r = lock_handler_step(cs, SelectionPolicy::random, rng);
    ASSERT_TRUE(r.decision);
    EXPECT_TRUE(r.decision->granted);
    EXPECT_TRUE(r.state.locks.r_locked(at("f", {1}), A));
    EXPECT_TRUE(r.state.lock_requests.empty());
}

TEST(LockHandler, ConflictingRequestsOnePerStep) {
    auto cs = with_transact({A, B});
    cs.insert_lock_request(A, LockPair{{}, {at("x")}});
    cs.insert_lock_request(B, LockPair{{}, {at("x")}});
    SeedStream rng(0);
    auto first = lock_handler_step(cs, SelectionPolicy::fifo, rng);
    ASSERT_TRUE(first.decision);
    EXPECT_EQ(first.decision->machine, A);
    EXPECT_TRUE(first.decision->granted);
    EXPECT_EQ(first.state.lock_requests.size(), 1u);
    auto second = lock_handler_step(first.state, SelectionPolicy::fifo, rng);
    ASSERT_TRUE(second.decision);
    EXPECT_EQ(second.decision->machine, B);
    EXPECT_FALSE(second.decision->granted);
    EXPECT_TRUE(second.state.lock_requests.empty());
    EXPECT_FALSE(second.state.locks.w_locked(at("x"), B));
}

TEST(LockHandler, SuspendModeSkipsBlockedAndVictims) {
    auto cs = with_transact({A, B, C});
    cs.locks.grant(C, LockPair{{}, {at("x")}});
    cs.insert_lock_request(A, LockPair{{}, {at("x")}});
    cs.insert_lock_request(B, LockPair{{at("y")}, {}});
    SeedStream rng(0);
    auto r = lock_handler_step(cs, SelectionPolicy::fifo, rng, WaitMode::suspend);
    ASSERT_TRUE(r.decision);
    EXPECT_EQ(r.decision->machine, B);
    cs.victims.insert(B);
    EXPECT_FALSE(lock_handler_step(cs, SelectionPolicy::fifo, rng, WaitMode::suspend).decision);
}

TEST(LockHandler, LowestIdPolicy) {
    auto cs = with_transact({A, B, C});
    cs.insert_lock_request(C, LockPair{{at("c")}, {}});
    cs.insert_lock_request(B, LockPair{{at("b")}, {}});
    SeedStream rng(0);
    EXPECT_EQ(lock_handler_step(cs, SelectionPolicy::lowest_id, rng).decision->machine, B);
}

TEST(Commit, ReleasesEverything) {
    auto cs = with_transact({A, B});
    cs.locks.grant(A, LockPair{{at("f", {1})}, {at("g", {2})}});
    cs.insert_commit_request(A);
    SeedStream rng(0);
    auto r = commit_step(cs, SelectionPolicy::random, rng);
    EXPECT_EQ(r.committed, A);
    EXPECT_TRUE(r.state.locks.empty());
    EXPECT_FALSE(r.state.transact.count(A));
    EXPECT_TRUE(r.state.commit_requests.empty());
    EXPECT_FALSE(commit_step(r.state, SelectionPolicy::random, rng).committed);
}

TEST(Commit, OnePerStep) {
    auto cs = with_transact({A, B});
    cs.insert_commit_request(B);
    cs.insert_commit_request(A);
    SeedStream rng(0);
    auto r = commit_step(cs, SelectionPolicy::fifo, rng);
    EXPECT_EQ(r.committed, B);
    EXPECT_EQ(r.state.commit_requests.size(), 1u);
}

TEST(WaitRelation, Edges) {
    auto cs = with_transact({A, B});
    EXPECT_TRUE(wait_relation(cs, {}).edges.empty());
    cs.locks.grant(B, LockPair{{at("l")}, {}});
    EXPECT_TRUE(wait_relation(cs, {{A, LockPair{{}, {at("l")}}}}).has_edge(A, B));
    EXPECT_FALSE(wait_relation(cs, {{A, LockPair{{at("l")}, {}}}}).has_edge(A, B));
    cs.locks.grant(B, LockPair{{}, {at("w")}});
    EXPECT_TRUE(wait_relation(cs, {{A, LockPair{{at("w")}, {}}}}).has_edge(A, B));
}

TEST(Deadlocked, HandCases) {
    EXPECT_TRUE(deadlocked(graph({{0, 1}, {1, 2}})).empty());
    EXPECT_EQ(deadlocked(graph({{0, 1}, {1, 0}})), (std::set<MachineId>{A, B}));
    EXPECT_EQ(deadlocked(graph({{0, 1}, {1, 2}, {2, 0}, {3, 0}, {4, 3}})), (std::set<MachineId>{A, B, C}));
}

TEST(Deadlocked, MatchesDfsOracleOnRandomGraphs) {
    SeedStream rng(99);
    for (int trial = 0; trial < 500; ++trial) {
        WaitGraph g;
        const std::size_t n = 2 + rng.pick(7);
        const std::size_t m = rng.pick(n * 2);
        for (std::size_t e = 0; e < m; ++e) {
            const auto a = static_cast<std::uint32_t>(rng.pick(n));
            const auto b = static_cast<std::uint32_t>(rng.pick(n));
            if (a != b) g.edges.insert({MachineId{a}, MachineId{b}});
        }
        EXPECT_EQ(deadlocked(g), oracle::deadlocked_dfs(g)) << "trial " << trial;
    }
}

TEST(WaitGraph, WithoutDropsTouchingEdges) {
    auto g = graph({{0, 1}, {1, 2}, {2, 0}});
    auto h = g.without({B});
    EXPECT_EQ(h, graph({{2, 0}}));
    EXPECT_TRUE(deadlocked(h).empty());
}

TEST(Victims, Policies) {
    ControllerState cs;
    const std::set<MachineId> dead{A, B, C};
    const std::map<MachineId, std::size_t> hist{{A, 3}, {B, 1}, {C, 5}};
    SeedStream rng(0);
    EXPECT_EQ(choose_victims(dead, cs, hist, VictimPolicy::shortest_history, rng), std::set<MachineId>{B});
    EXPECT_EQ(choose_victims(dead, cs, hist, VictimPolicy::longest_history, rng), std::set<MachineId>{C});
    EXPECT_EQ(choose_victims(dead, cs, hist, VictimPolicy::lowest_id, rng), std::set<MachineId>{A});
    auto r = choose_victims(dead, cs, hist, VictimPolicy::random, rng);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_TRUE(dead.count(*r.begin()));
}

TEST(Victims, TiesGoToLowestId) {
    ControllerState cs;
    SeedStream rng(0);
    EXPECT_EQ(choose_victims({B, C}, cs, {{B, 2}, {C, 2}}, VictimPolicy::shortest_history, rng),
              std::set<MachineId>{B});
}

TEST(DeadlockHandler, SkipsExistingVictims) {
    ControllerState cs;
    SeedStream rng(0);
    EXPECT_TRUE(deadlock_handler_step(cs, {}, {}, VictimPolicy::shortest_history, rng).new_victims.empty());
    auto r = deadlock_handler_step(cs, {A, B}, {{A, 2}, {B, 1}}, VictimPolicy::shortest_history, rng);
    EXPECT_EQ(r.new_victims, std::set<MachineId>{B});
    EXPECT_TRUE(r.state.victims.count(B));
    cs.victims = {A, B};
    EXPECT_TRUE(deadlock_handler_step(cs, {A, B}, {}, VictimPolicy::shortest_history, rng).new_victims.empty());
}

TEST(Undo, RestoresAndReleasesYoungest) {
    auto cs = with_transact({A});
    TxControlBlock tcb;
    tcb.id = A;
    HistoryEntry older;
    older.lock_set = LockPair{{at("g")}, {}};
    HistoryEntry younger;
    younger.val_set = UpdateSet{{at("f", {1}), I(3)}};
    younger.lock_set = LockPair{{}, {at("f", {1})}};
    tcb.history = {older, younger};
    cs.locks.grant(A, older.lock_set);
    cs.locks.grant(A, younger.lock_set);
    auto r = undo(tcb, cs);
    EXPECT_EQ(r.restore, (UpdateSet{{at("f", {1}), I(3)}}));
    EXPECT_EQ(r.remaining, 1u);
    EXPECT_FALSE(cs.locks.w_locked(at("f", {1}), A));
    EXPECT_TRUE(cs.locks.r_locked(at("g"), A));
    auto r2 = undo(tcb, cs);
    EXPECT_TRUE(r2.restore.empty());
    EXPECT_TRUE(cs.locks.empty());
    EXPECT_THROW(undo(tcb, cs), EmptyHistory);
}

TEST(Undo, RestoresPrivateValuesToo) {
    ControllerState cs;
    TxControlBlock tcb;
    tcb.id = A;
    HistoryEntry e;
    e.private_vals = UpdateSet{{at("pc"), I(0)}};
    tcb.history = {e};
    EXPECT_EQ(undo(tcb, cs).restore, (UpdateSet{{at("pc"), I(0)}}));
}

TEST(Recovery, UnvictimizesOrUndoes) {
    auto cs = with_transact({A, B});
    cs.victims = {A};
    std::map<MachineId, TxControlBlock> tcbs;
    tcbs[A].id = A;
    tcbs[A].ctl_state = CtlState::wait_for_recovery;
    tcbs[A].history.push_back(HistoryEntry{});
    tcbs[B].id = B;
    SeedStream rng(0);

    auto undo_r = recovery_step(cs, tcbs, {A, B}, SelectionPolicy::random, rng);
    ASSERT_TRUE(undo_r.choice);
    EXPECT_EQ(undo_r.choice->kind, RecoveryKind::undo);
    EXPECT_TRUE(undo_r.undone);
    EXPECT_TRUE(tcbs[A].history.empty());
    EXPECT_TRUE(undo_r.state.victims.count(A));

    auto free_r = recovery_step(cs, tcbs, {}, SelectionPolicy::random, rng);
    ASSERT_TRUE(free_r.choice);
    EXPECT_EQ(free_r.choice->kind, RecoveryKind::unvictimize);
    EXPECT_FALSE(free_r.state.victims.count(A));
}

TEST(Recovery, OnlyVictimsAlreadyWaiting) {
    auto cs = with_transact({A});
    cs.victims = {A};
    std::map<MachineId, TxControlBlock> tcbs;
    tcbs[A].id = A;
    tcbs[A].ctl_state = CtlState::wait_for_locks;
    SeedStream rng(0);
    EXPECT_FALSE(recovery_step(cs, tcbs, {A}, SelectionPolicy::random, rng).choice);
    cs.victims.clear();
    tcbs[A].ctl_state = CtlState::wait_for_recovery;
    EXPECT_FALSE(recovery_step(cs, tcbs, {A}, SelectionPolicy::random, rng).choice);
}

TEST(ControllerState, Invariants) {
    auto cs = with_transact({A, B});
    EXPECT_NO_THROW(cs.check_invariants());
    cs.insert_commit_request(A);
    cs.insert_lock_request(A, LockPair{});
    EXPECT_THROW(cs.check_invariants(), InvariantViolation);
    cs.delete_lock_request(A);
    cs.victims.insert(A);
    EXPECT_THROW(cs.check_invariants(), InvariantViolation);
    cs.victims.clear();
    cs.locks.grant(A, LockPair{{}, {at("x")}});
    cs.locks.grant(B, LockPair{{at("x")}, {}});
    EXPECT_THROW(cs.check_invariants(), InvariantViolation);
}
