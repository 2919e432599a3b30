#include <gtest/gtest.h>

#include "support/dsl_helpers.hpp"

using namespace taserial;
using namespace testing_dsl;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

std::string join(const std::vector<std::string>& ls) {
    std::string out;
    for (const auto& l : ls) out += l + "\n";
    return out;
}

} // namespace

TEST(TraceIo, RoundTrip) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto t = run(workloads::undo_chain(seed));
        auto back = trace_from_string(trace_to_string(t));
        EXPECT_EQ(back, t);
        EXPECT_EQ(trace_to_string(back), trace_to_string(t));
    }
}

TEST(TraceIo, RoundTripWithSymbolsAndBooleans) {
    RunConfig cfg;
    cfg.domain = {Value::symbol("a"), Value::symbol("b"), Value::integer(0)};
    cfg.programs = parse_programs(R"(
machine S
  shared owner/1
  init: par { owner('a) := 'nobody, flag := false }
  terminated: flag
  rule: par { owner('a) := 'S, flag := true }
)");
    auto t = run(cfg);
    auto back = trace_from_string(trace_to_string(t));
    EXPECT_EQ(back, t);
    EXPECT_EQ(back.final_state.get(Location{"owner", {Value::symbol("a")}}), Value::symbol("S"));
}

TEST(TraceIo, LayoutHeaderStepsFooter) {
    auto t = run(workloads::lost_update());
    auto ls = lines_of(trace_to_string(t));
    ASSERT_EQ(ls.size(), t.steps.size() + 2);
    auto header = io::json::parse(ls.front());
    EXPECT_EQ(header["format"], "taserial-trace");
    EXPECT_EQ(header["config_digest"], config_digest(t.config));
    auto footer = io::json::parse(ls.back());
    EXPECT_EQ(footer["outcome"], "completed");
    EXPECT_EQ(footer["steps"], t.steps.size());
}

TEST(TraceIo, TruncatedIsMalformed) {
    auto ls = lines_of(trace_to_string(run(workloads::lost_update())));
    auto cut = ls;
    cut.pop_back();
    EXPECT_THROW(trace_from_string(join(cut)), MalformedTrace);
    EXPECT_THROW(trace_from_string(ls.front()), MalformedTrace);
    EXPECT_THROW(trace_from_string(""), MalformedTrace);
    auto half = join(ls);
    EXPECT_THROW(trace_from_string(half.substr(0, half.size() / 2)), MalformedTrace);
}

TEST(TraceIo, TamperedStepIsMalformed) {
    auto ls = lines_of(trace_to_string(run(workloads::lost_update())));
    auto j = io::json::parse(ls[2]);
    j["state_hash"] = "0000000000000001";
    ls[2] = j.dump();
    EXPECT_THROW(trace_from_string(join(ls)), MalformedTrace);
}

TEST(TraceIo, DroppedStepIsMalformed) {
    auto ls = lines_of(trace_to_string(run(workloads::lost_update())));
    ls.erase(ls.begin() + 2);
    EXPECT_THROW(trace_from_string(join(ls)), MalformedTrace);
}

TEST(TraceIo, DigestMismatchIsConfigMismatch) {
    auto ls = lines_of(trace_to_string(run(workloads::lost_update())));
    auto h = io::json::parse(ls[0]);
    h["config_digest"] = "ffffffffffffffff";
    ls[0] = h.dump();
    EXPECT_THROW(trace_from_string(join(ls)), ConfigMismatch);
}

TEST(TraceIo, EditedConfigIsConfigMismatch) {
    auto ls = lines_of(trace_to_string(run(workloads::lost_update())));
    auto h = io::json::parse(ls[0]);
    h["config"]["max_steps"] = 99;
    ls[0] = h.dump();
    EXPECT_THROW(trace_from_string(join(ls)), ConfigMismatch);
}

TEST(TraceIo, WrongFormatIsMalformed) {
    auto ls = lines_of(trace_to_string(run(workloads::lost_update())));
    auto h = io::json::parse(ls[0]);
    h["format"] = "something-else";
    ls[0] = h.dump();
    EXPECT_THROW(trace_from_string(join(ls)), MalformedTrace);
}

TEST(ConfigDigest, IgnoresSeedOnly) {
    auto a = workloads::lost_update(1), b = workloads::lost_update(2);
    EXPECT_EQ(config_digest(a), config_digest(b));
    b.max_steps += 1;
    EXPECT_NE(config_digest(a), config_digest(b));
}

TEST(ConfigJson, RoundTrip) {
    auto cfg = workloads::undo_chain(9);
    cfg.registration["N"] = 2;
    cfg.policies.victims = VictimPolicy::random;
    cfg.composition = Composition::interleaving;
    EXPECT_EQ(config_from_json(config_to_json(cfg)), cfg);
}

TEST(Schedule, Projection) {
    Trace empty;
    EXPECT_TRUE(project_schedule(empty).empty());
    auto t = run(workloads::lost_update());
    auto sched = project_schedule(t);
    ASSERT_EQ(sched.size(), t.steps.size());
    EXPECT_EQ(sched[0], (std::vector<std::string>{"A", "B"}));
}

TEST(Schedule, ProperEntriesCarryUpdatesAndReads) {
    auto t = run(workloads::lost_update());
    std::size_t proper = 0;
    for (const auto& st : t.steps)
        for (const auto& [m, ms] : st.machines)
            if (ms.kind == StepKind::proper) {
                ++proper;
                EXPECT_FALSE(ms.updates.empty());
                EXPECT_FALSE(ms.reads.empty());
            } else {
                EXPECT_TRUE(ms.updates.empty());
            }
    EXPECT_GE(proper, 4u);
    for (const auto& [m, steps] : proper_steps(cleanse(t)))
        EXPECT_EQ(steps.size(), 2u) << m;
}
