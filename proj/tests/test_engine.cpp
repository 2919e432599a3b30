#include <gtest/gtest.h>

#include "support/dsl_helpers.hpp"
#include "support/oracles.hpp"

using namespace taserial;
using namespace testing_dsl;

namespace {

RunConfig config_of(const std::string& src, std::uint64_t seed = 0, std::size_t max_steps = 200) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.max_steps = max_steps;
    cfg.programs = parse_programs(src);
    return cfg;
}

} // namespace

TEST(Engine, SoloSkipMachineCommits) {
    auto t = run(config_of("machine A rule: skip terminated: true"));
    EXPECT_EQ(t.outcome, Outcome::completed);
    EXPECT_EQ(t.commit_order(), std::vector<std::string>{"A"});
    ASSERT_FALSE(t.steps.empty());
    EXPECT_EQ(t.steps[0].machines.at("A").kind, StepKind::registration);
}

TEST(Engine, CounterRunsToCompletion) {
    auto t = run(config_of(R"(
machine C
  shared x/0
  init: par { x := 0, pc := 0 }
  terminated: pc = 3
  rule: if pc < 3 then par { x := x + 1, pc := pc + 1 } else skip
)"));
    EXPECT_EQ(t.outcome, Outcome::completed);
    EXPECT_EQ(t.final_state.get(at("x")), I(3));
    EXPECT_EQ(t.count_events(EventKind::lock_grant), 1u);
    EXPECT_EQ(t.count_events(EventKind::commit), 1u);
}

TEST(Engine, DeadlockWorkloadResolves) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto t = run(workloads::opposite_order(seed));
        EXPECT_EQ(t.outcome, Outcome::completed) << seed;
        EXPECT_GE(t.count_events(EventKind::victimize), 1u) << seed;
        EXPECT_EQ(t.commit_order().size(), 2u) << seed;
        EXPECT_EQ(t.final_state.get(at("x")), I(11)) << seed;
        EXPECT_EQ(t.final_state.get(at("y")), I(11)) << seed;
    }
}

TEST(Engine, SuspendModeResolvesDeadlockToo) {
    auto cfg = workloads::opposite_order(3);
    cfg.wait_mode = WaitMode::suspend;
    auto t = run(cfg);
    EXPECT_EQ(t.outcome, Outcome::completed);
    EXPECT_EQ(t.count_events(EventKind::lock_refuse), 0u);
    EXPECT_GE(t.count_events(EventKind::victimize), 1u);
}

TEST(Engine, UndoRestoresOverwrittenValues) {
    auto t = run(workloads::undo_chain(0));
    ASSERT_EQ(t.outcome, Outcome::completed);
    EXPECT_GE(t.count_events(EventKind::undo_applied), 1u);
    bool saw_full_undo = false;
    State s = t.initial;
    for (const auto& st : t.steps) {
        s = apply(s, step_delta(st));
        for (const auto& e : st.events)
            if (e.kind == EventKind::undo_applied && e.machine == "M" && e.remaining == 0u) {
                saw_full_undo = true;
                EXPECT_EQ(s.get(at("x")), I(7));
                EXPECT_EQ(s.get(at("y")), I(8));
                EXPECT_EQ(s.get(at("w")), I(6));
            }
    }
    EXPECT_TRUE(saw_full_undo);
}

TEST(Engine, StaggeredRegistration) {
    auto cfg = config_of("machine A rule: skip terminated: true\nmachine B rule: skip terminated: true");
    cfg.registration["B"] = 4;
    auto t = run(cfg);
    EXPECT_EQ(t.outcome, Outcome::completed);
    std::size_t registered_at = 0;
    for (const auto& st : t.steps)
        if (auto it = st.machines.find("B"); it != st.machines.end() && it->second.kind == StepKind::registration)
            registered_at = st.step;
    EXPECT_EQ(registered_at, 4u);
}

TEST(Engine, BudgetExhausted) {
    auto t = run(config_of("machine Loop terminated: false rule: n := n", 0, 5));
    EXPECT_EQ(t.outcome, Outcome::budget_exhausted);
    EXPECT_EQ(t.steps.size(), 5u);
}

TEST(Engine, InconsistentMachineUpdateThrows) {
    Engine e(config_of("machine Bad terminated: false rule: par { x := 1, x := 2 }"));
    EXPECT_THROW(e.run(), InconsistentUpdateSet);
}

TEST(Engine, InterleavingFiresOneAgentPerStep) {
    auto cfg = workloads::opposite_order(5);
    cfg.composition = Composition::interleaving;
    cfg.max_steps = 2000;
    auto t = run(cfg);
    EXPECT_EQ(t.outcome, Outcome::completed);
    for (const auto& st : t.steps) {
        std::size_t actors = st.machines.size();
        for (const auto& e : st.events)
            if (e.kind != EventKind::lock_grant && e.kind != EventKind::lock_refuse) ++actors;
        EXPECT_LE(actors, 1u) << "step " << st.step;
    }
    EXPECT_TRUE(check_serializable(t).serializable);
}

TEST(Engine, DeterministicUnderSeed) {
    auto cfg = generate_config(fuzz_seed(5, 1), FuzzOptions{});
    EXPECT_EQ(run(cfg), run(cfg));
}

TEST(Engine, LockingDisciplineHoldsOnFuzzedRuns) {
    for (std::size_t i = 0; i < 40; ++i) {
        FuzzOptions opt;
        opt.machines = 3;
        opt.locations = 2 + i % 5;
        opt.vary_policies = true;
        auto t = run(generate_config(fuzz_seed(17, i), opt));
        oracle::LockReplay replay(t);
        EXPECT_TRUE(replay.violations.empty()) << i << ": " << (replay.violations.empty() ? "" : replay.violations[0]);
    }
}

TEST(Engine, CommittedMachinesHoldNoLocks) {
    Engine e(workloads::lost_update(2));
    e.run();
    EXPECT_TRUE(e.completed());
    EXPECT_TRUE(e.controller().locks.empty());
    EXPECT_TRUE(e.controller().transact.empty());
    EXPECT_EQ(e.state().get(at("x")), I(2));
}

TEST(Engine, UnknownMachineLookup) {
    Engine e(workloads::lost_update());
    EXPECT_EQ(e.id_of("B"), MachineId{1});
    EXPECT_THROW((void)e.id_of("Z"), UnknownMachine);
}

TEST(Engine, ConfigValidation) {
    RunConfig empty;
    EXPECT_THROW(Engine{empty}, ConfigError);
    auto dup = config_of("machine A rule: skip\nmachine A rule: skip");
    EXPECT_THROW(Engine{dup}, ConfigError);
    auto reg = config_of("machine A rule: skip");
    reg.registration["Z"] = 1;
    EXPECT_THROW(Engine{reg}, ConfigError);
}

TEST(InitialState, InitsRunInDeclarationOrder) {
    auto cfg = config_of(R"(
machine A
  shared x/0
  init: x := 1
machine B
  shared x/0
  init: y := x + 1
)");
    EXPECT_EQ(initial_state(cfg).get(at("y")), I(2));
}

TEST(RunSolo, ProperStepsUntilTermination) {
    auto prog = parse_program("machine C terminated: n = 3 rule: n := n + 1");
    State s;
    s.set(at("n"), I(0));
    auto steps = run_solo(prog, s, 0, 10);
    ASSERT_TRUE(steps);
    EXPECT_EQ(steps->size(), 3u);
    EXPECT_EQ(s.get(at("n")), I(3));
    State t;
    t.set(at("n"), I(0));
    EXPECT_FALSE(run_solo(prog, t, 0, 2));
}
