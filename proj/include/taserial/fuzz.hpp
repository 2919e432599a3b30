#pragma once

// Random machine configurations and a few fixed workloads.

#include <functional>
#include <string>
#include <vector>

#include "taserial/checker.hpp"
#include "taserial/config.hpp"
#include "taserial/dsl.hpp"
#include "taserial/engine.hpp"

namespace taserial {

struct FuzzOptions {
    std::size_t machines = 3;
    std::size_t locations = 6;  // shared locations, at most 8
    std::size_t domain = 4;
    std::size_t max_steps = 200;
    enum class Wait { retry, suspend, mixed } wait = Wait::mixed;
    bool vary_policies = false;  // draw selection/victim policies and the composition from the seed
};

namespace detail {

class ProgramGen {
public:
    ProgramGen(SeedStream& rng, const FuzzOptions& opt) : rng_(rng), opt_(opt) {
        const std::size_t n = std::min<std::size_t>(std::max<std::size_t>(opt.locations, 1), 8);
        const std::size_t arr = n >= 4 ? 2 : 0;
        for (std::size_t i = 0; i + arr < n; ++i) scalars_.push_back("v" + std::to_string(i));
        has_arr_ = arr > 0;
        if (has_arr_) {
            cells_.push_back("arr(0)");
            cells_.push_back("arr(1)");
        }
    }

    std::string machine(std::size_t index) {
        const std::string me = "m" + std::to_string(index);
        pc_ = me + "_pc";
        tmp_ = me + "_t";
        std::string src = "machine M" + std::to_string(index) + "\n  shared ";
        for (std::size_t i = 0; i < scalars_.size(); ++i) src += (i ? ", " : "") + scalars_[i];
        if (has_arr_) src += ", arr/1";
        src += "\n  init: par { " + pc_ + " := 0, " + tmp_ + " := 0";
        if (index == 0) {
            for (const auto& l : scalars_) src += ", " + l + " := 0";
            for (const auto& l : cells_) src += ", " + l + " := 0";
        }
        src += " }\n";
        const std::size_t steps = 1 + rng_.pick(4);
        src += "  terminated: " + pc_ + " = " + std::to_string(steps) + "\n  rule: ";
        for (std::size_t k = 0; k < steps; ++k)
            src += "if " + pc_ + " = " + std::to_string(k) + " then par { " + body(2) + ", " + pc_ + " := " +
                   std::to_string(k + 1) + " } else ";
        src += "skip\n";
        return src;
    }

private:
    std::string pick(const std::vector<std::string>& v) { return v[rng_.pick(v.size())]; }

    std::string location() {
        if (has_arr_ && rng_.pick(3) == 0) return pick(cells_);
        return pick(scalars_);
    }

    std::string constant() { return std::to_string(rng_.pick(opt_.domain)); }

    std::string expr() {
        switch (rng_.pick(5)) {
            case 0: return constant();
            case 1: return location();
            case 2: return location() + " + " + constant();
            case 3: return tmp_;
            default: return tmp_ + " + " + location();
        }
    }

    std::string condition() {
        switch (rng_.pick(3)) {
            case 0: return location() + " = " + constant();
            case 1: return location() + " < " + constant();
            default: return location() + " < " + location();
        }
    }

    std::string body(int depth) {
        const std::size_t choice = rng_.pick(depth > 0 ? 8 : 3);
        switch (choice) {
            case 0:
            case 1: return location() + " := " + expr();
            case 2: return tmp_ + " := " + location();
            case 3: return "if " + condition() + " then " + body(depth - 1) + " else " + body(depth - 1);
            case 4: return "seq { " + body(depth - 1) + ", " + body(depth - 1) + " }";
            case 5: return "let x = " + location() + " in " + location() + " := x + " + constant();
            case 6:
                if (has_arr_) return "forall d with d < 2 do arr(d) := arr(d) + " + constant();
                return location() + " := " + expr();
            default:
                if (has_arr_) return "choose d with d < 2 do arr(d) := " + expr();
                return tmp_ + " := " + location();
        }
    }

    SeedStream& rng_;
    const FuzzOptions& opt_;
    std::vector<std::string> scalars_;
    std::vector<std::string> cells_;
    bool has_arr_ = false;
    std::string pc_;
    std::string tmp_;
};

} // namespace detail

/// A random closed system: every machine shares every location, runs one to
/// four steps, and each step is a random body guarded by a private program
/// counter.
inline RunConfig generate_config(std::uint64_t seed, const FuzzOptions& opt) {
    SeedStream rng(derive_seed(seed, "fuzz-config"));
    detail::ProgramGen gen(rng, opt);
    RunConfig cfg;
    cfg.seed = seed;
    cfg.max_steps = opt.max_steps;
    cfg.domain = State::default_domain(static_cast<std::int64_t>(std::max<std::size_t>(opt.domain, 1)));
    for (std::size_t i = 0; i < opt.machines; ++i) cfg.programs.push_back(parse_program(gen.machine(i)));
    switch (opt.wait) {
        case FuzzOptions::Wait::retry: cfg.wait_mode = WaitMode::retry; break;
        case FuzzOptions::Wait::suspend: cfg.wait_mode = WaitMode::suspend; break;
        case FuzzOptions::Wait::mixed: cfg.wait_mode = rng.pick(2) ? WaitMode::suspend : WaitMode::retry; break;
    }
    if (!opt.vary_policies) return cfg;
    const SelectionPolicy sel[] = {SelectionPolicy::random, SelectionPolicy::fifo, SelectionPolicy::lowest_id};
    const VictimPolicy vic[] = {VictimPolicy::shortest_history, VictimPolicy::longest_history,
                                VictimPolicy::lowest_id, VictimPolicy::random};
    cfg.policies.lock_requests = sel[rng.pick(3)];
    cfg.policies.commits = sel[rng.pick(3)];
    cfg.policies.recovery = sel[rng.pick(3)];
    cfg.policies.victims = vic[rng.pick(4)];
    cfg.composition = rng.pick(5) == 0 ? Composition::interleaving : Composition::synchronous;
    return cfg;
}

// ---------------------------------------------------------------------------
// Fixed workloads
// ---------------------------------------------------------------------------

namespace workloads {

inline constexpr const char* lost_update_source = R"(
machine A
  shared x/0
  init: par { x := 0, a_pc := 0, a_t := 0 }
  terminated: a_pc = 2
  rule: if a_pc = 0 then par { a_t := x, a_pc := 1 }
        else if a_pc = 1 then par { x := a_t + 1, a_pc := 2 } else skip

machine B
  shared x/0
  init: par { b_pc := 0, b_t := 0 }
  terminated: b_pc = 2
  rule: if b_pc = 0 then par { b_t := x, b_pc := 1 }
        else if b_pc = 1 then par { x := b_t + 1, b_pc := 2 } else skip
)";

inline constexpr const char* opposite_order_source = R"(
machine M
  shared x/0, y/0
  init: par { x := 0, y := 0, m_pc := 0 }
  terminated: m_pc = 2
  rule: if m_pc = 0 then par { x := x + 1, m_pc := 1 }
        else if m_pc = 1 then par { y := y + 1, m_pc := 2 } else skip

machine N
  shared x/0, y/0
  init: n_pc := 0
  terminated: n_pc = 2
  rule: if n_pc = 0 then par { y := y + 10, n_pc := 1 }
        else if n_pc = 1 then par { x := x + 10, n_pc := 2 } else skip
)";

inline constexpr const char* undo_source = R"(
machine M
  shared x/0, y/0, z/0
  output w/0
  init: par { x := 7, y := 8, z := 9, w := 6, m_pc := 0 }
  terminated: m_pc = 4
  rule: if m_pc = 0 then par { x := 1, m_pc := 1 }
        else if m_pc = 1 then par { y := x + 1, m_pc := 2 }
        else if m_pc = 2 then par { w := y + 1, m_pc := 3 }
        else if m_pc = 3 then par { z := z + w, m_pc := 4 } else skip

machine N
  shared z/0, q/0, x/0
  monitored w/0
  init: par { q := 0, n_pc := 0 }
  terminated: n_pc = 7
  rule: if n_pc = 0 then par { z := 5, n_pc := 1 }
        else if n_pc < 6 then par { q := q + 1, n_pc := n_pc + 1 }
        else if n_pc = 6 then par { x := x + w, n_pc := 7 } else skip
)";

inline RunConfig from_source(const char* source, std::uint64_t seed, std::size_t max_steps) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.max_steps = max_steps;
    cfg.programs = parse_programs(source);
    cfg.validate();
    return cfg;
}

/// Two machines that each read x and write x + 1, in two steps.
inline RunConfig lost_update(std::uint64_t seed = 0) { return from_source(lost_update_source, seed, 100); }

/// Two machines taking x and y in opposite order: a guaranteed deadlock.
inline RunConfig opposite_order(std::uint64_t seed = 0) { return from_source(opposite_order_source, seed, 500); }

/// M writes x, y and its output w, then needs z; N takes z, counts q up five
/// times and then needs x and w. M, having the shorter history, is undone.
inline RunConfig undo_chain(std::uint64_t seed = 0) { return from_source(undo_source, seed, 500); }

/// A trace no scheduler may produce: both machines read x = 0 before either
/// writes, so one increment is lost. Built by hand without any locking.
inline Trace forged_lost_update_trace(std::uint64_t seed = 0) {
    Trace t;
    t.config = lost_update(seed);
    t.initial = initial_state(t.config);
    State s = t.initial;
    auto proper = [&](const std::string& m, const State& at) {
        const auto& prog = t.config.program(m);
        auto res = analyze_machine(prog, at, SeedStream(0));
        MachineStep ms;
        ms.kind = StepKind::proper;
        for (const auto& l : res.rw.reads) ms.reads.insert(Update{l, at.get(l)});
        ms.updates = std::move(res.updates);
        return ms;
    };
    auto push = [&](StepRecord rec) {
        rec.step = t.steps.size();
        s = apply(s, step_delta(rec));
        rec.state_hash = s.digest();
        t.steps.push_back(std::move(rec));
    };
    StepRecord reg;
    for (const auto* m : {"A", "B"})
        reg.machines[m] = MachineStep{StepKind::registration, CtlState::not_registered, CtlState::ta_ctl, {}, {}};
    push(reg);
    for (int k = 0; k < 2; ++k) {
        StepRecord rec;
        const State at = s;
        rec.machines["A"] = proper("A", at);
        rec.machines["B"] = proper("B", at);
        push(rec);
    }
    StepRecord calls;
    for (const auto* m : {"A", "B"})
        calls.machines[m] = MachineStep{StepKind::commit_call, CtlState::ta_ctl, CtlState::done, {}, {}};
    push(calls);
    StepRecord commits;
    commits.events.push_back(make_event(EventKind::commit, "A"));
    commits.events.push_back(make_event(EventKind::commit, "B"));
    push(commits);
    t.final_state = s;
    t.outcome = Outcome::completed;
    return t;
}

} // namespace workloads

// ---------------------------------------------------------------------------
// Fuzz campaigns
// ---------------------------------------------------------------------------

struct FuzzRun {
    std::uint64_t seed = 0;
    RunConfig config;
    Trace trace;
    Verdict verdict;
    std::optional<Verdict> brute;  // present in self-test mode
    std::string error;             // set when the run itself failed

    [[nodiscard]] bool ok() const {
        return error.empty() && verdict.serializable && (!brute || brute->serializable == verdict.serializable);
    }
};

struct FuzzStats {
    std::size_t runs = 0;
    std::size_t failures = 0;
    std::size_t completed = 0;
    std::size_t commits = 0;
    std::size_t victimizations = 0;
    std::size_t undos = 0;
    std::size_t refusals = 0;
    std::size_t steps = 0;

    void add(const FuzzRun& r) {
        ++runs;
        failures += r.ok() ? 0 : 1;
        if (!r.error.empty()) return;
        completed += r.trace.outcome == Outcome::completed ? 1 : 0;
        commits += r.trace.count_events(EventKind::commit);
        victimizations += r.trace.count_events(EventKind::victimize);
        undos += r.trace.count_events(EventKind::undo_applied);
        refusals += r.trace.count_events(EventKind::lock_refuse);
        steps += r.trace.steps.size();
    }
};

/// Generates, runs and checks one configuration.
inline FuzzRun fuzz_once(std::uint64_t seed, const FuzzOptions& opt, bool self_test = false) {
    FuzzRun r;
    r.seed = seed;
    try {
        r.config = generate_config(seed, opt);
        r.trace = run(r.config);
        r.verdict = check_serializable(r.trace);
        if (self_test) r.brute = brute_force_serializable(r.trace);
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    return r;
}

/// Seed of the i-th run of a campaign.
inline std::uint64_t fuzz_seed(std::uint64_t master, std::size_t i) { return derive_seed(master, "fuzz-run", i); }

} // namespace taserial
