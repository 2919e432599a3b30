#include <gtest/gtest.h>

#include "support/dsl_helpers.hpp"

using namespace taserial;
using namespace testing_dsl;

namespace {

bool has_kind(const Trace& t, StepKind k) {
    for (const auto& st : t.steps)
        for (const auto& [_, ms] : st.machines)
            if (ms.kind == k) return true;
    return false;
}

Trace bracket_trace() {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto t = run(workloads::opposite_order(seed));
        if (has_kind(t, StepKind::recovery_exit) && t.count_events(EventKind::undo_applied) > 0) return t;
    }
    throw std::runtime_error("no bracket trace found");
}

} // namespace

TEST(Checker, ForgedLostUpdateIsRejected) {
    auto t = workloads::forged_lost_update_trace();
    EXPECT_EQ(t.final_state.get(at("x")), I(1));
    auto v = check_serializable(t);
    EXPECT_FALSE(v.serializable);
    EXPECT_FALSE(v.reason.empty());
    auto b = brute_force_serializable(t);
    EXPECT_FALSE(b.serializable);
}

TEST(Checker, RealRunsAreSerializable) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto t = run(workloads::lost_update(seed));
        EXPECT_TRUE(check_serializable(t).serializable) << seed;
        EXPECT_EQ(t.final_state.get(at("x")), I(2));
    }
}

TEST(Checker, IndependentMachinesAnyOrder) {
    RunConfig cfg;
    cfg.programs = parse_programs(R"(
machine A
  shared a/0
  init: par { a := 0, pa := 0 }
  terminated: pa = 1
  rule: par { a := 1, pa := 1 }
machine B
  shared b/0
  init: par { b := 0, pb := 0 }
  terminated: pb = 1
  rule: par { b := 1, pb := 1 }
)");
    auto t = run(cfg);
    auto order = t.commit_order();
    std::reverse(order.begin(), order.end());
    auto reversed = build_serial_run(t, order);
    EXPECT_FALSE(reversed.diverged);
    EXPECT_EQ(reversed.final_state, t.final_state);
    EXPECT_TRUE(brute_force_serializable(t).serializable);
}

TEST(Checker, SingleMachineOneOrder) {
    RunConfig cfg;
    cfg.programs = parse_programs("machine A terminated: n = 2 rule: n := n + 1 init: n := 0");
    auto t = run(cfg);
    auto b = brute_force_serializable(t);
    EXPECT_TRUE(b.serializable);
    EXPECT_EQ(b.order, std::vector<std::string>{"A"});
}

TEST(Checker, TooManyMachines) {
    FuzzOptions opt;
    opt.machines = 5;
    opt.locations = 8;
    for (std::size_t i = 0; i < 20; ++i) {
        auto t = run(generate_config(fuzz_seed(3, i), opt));
        if (t.commit_order().size() < 5) continue;
        EXPECT_THROW(brute_force_serializable(t), TooManyMachines);
        return;
    }
    FAIL() << "no fully committed 5-machine run";
}

TEST(Checker, TruncatedRunComparesCommittedOnly) {
    auto cfg = workloads::opposite_order(0);
    auto full = run(cfg);
    std::size_t first_commit = 0;
    for (const auto& st : full.steps)
        for (const auto& e : st.events)
            if (e.kind == EventKind::commit && !first_commit) first_commit = st.step;
    ASSERT_GT(first_commit, 0u);
    cfg.max_steps = first_commit + 1;
    auto t = run(cfg);
    ASSERT_EQ(t.outcome, Outcome::budget_exhausted);
    auto v = check_serializable(t);
    EXPECT_TRUE(v.serializable) << v.reason;
    EXPECT_TRUE(v.truncated);
    EXPECT_EQ(v.uncommitted.size(), 1u);
}

TEST(Cleanse, RemovesRefusalsAndBrackets) {
    auto t = bracket_trace();
    auto c = cleanse(t);
    EXPECT_FALSE(has_kind(c, StepKind::refused));
    EXPECT_FALSE(has_kind(c, StepKind::recovery_entry));
    EXPECT_FALSE(has_kind(c, StepKind::recovery_exit));
    EXPECT_FALSE(has_kind(c, StepKind::idle));
    EXPECT_EQ(c.count_events(EventKind::undo_applied), 0u);
    EXPECT_EQ(c.count_events(EventKind::lock_refuse), 0u);
    EXPECT_EQ(c.count_events(EventKind::victimize), 0u);
    EXPECT_TRUE(cleanse_ops(c).empty());
}

TEST(Cleanse, IdentityWithoutRecoveryOrRefusal) {
    RunConfig cfg;
    cfg.programs = parse_programs("machine A rule: skip terminated: true");
    auto t = run(cfg);
    EXPECT_EQ(cleanse(t), t);
}

TEST(Cleanse, IdempotentAndConfluent) {
    auto t = bracket_trace();
    auto once = cleanse(t);
    EXPECT_EQ(cleanse(once), once);
    for (std::uint64_t seed = 0; seed < 10; ++seed) EXPECT_EQ(cleanse_confluent(t, seed), once) << seed;
}

TEST(Cleanse, ResidueMatchesSoloRuns) {
    auto t = bracket_trace();
    auto residue = proper_steps(cleanse(t));
    auto serial = build_serial_run(t, t.commit_order());
    EXPECT_EQ(residue, serial.steps);
}

TEST(Cleanse, ExitWithoutEntryIsMalformed) {
    auto t = bracket_trace();
    for (auto& st : t.steps)
        for (auto& [m, ms] : st.machines)
            if (ms.kind == StepKind::recovery_entry || ms.kind == StepKind::withdraw) ms.kind = StepKind::idle;
    EXPECT_THROW(cleanse_ops(t), MalformedTrace);
}

TEST(Cleanse, UndoOutsideBracketIsMalformed) {
    auto t = run(workloads::lost_update());
    auto ev = make_event(EventKind::undo_applied, "A");
    ev.origin_step = 1;
    t.steps.back().events.push_back(ev);
    EXPECT_THROW(cleanse_ops(t), MalformedTrace);
}

TEST(Verdict, JsonShape) {
    auto v = check_serializable(run(workloads::lost_update()));
    auto j = v.to_json();
    EXPECT_EQ(j["verdict"], "serializable");
    EXPECT_EQ(j["method"], "commit-order");
    EXPECT_FALSE(j.contains("reason"));
}
