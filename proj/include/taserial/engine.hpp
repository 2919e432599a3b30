#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "taserial/config.hpp"
#include "taserial/controller.hpp"
#include "taserial/trace.hpp"
#include "taserial/wrapper.hpp"

namespace taserial {

/// Runs TaCtl(M1, ..., Mn) under a RunConfig and records the trace.
///
/// In the synchronous composition every agent (each registered wrapped
/// machine, LockHandler, CommitHandler, DeadlockHandler, Recovery) fires in
/// every step against the same snapshot of state, lock table and controller
/// sets; the resulting update sets are united and applied at once. In the
/// interleaving composition one enabled agent, picked from the seed, fires
/// per step.
class Engine {
public:
    explicit Engine(RunConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        trace_.config = cfg_;
        trace_.initial = initial_state(cfg_);
        state_ = trace_.initial;
        for (std::size_t i = 0; i < cfg_.programs.size(); ++i) {
            TxControlBlock tcb;
            tcb.id = MachineId{static_cast<std::uint32_t>(i)};
            tcbs_.emplace(tcb.id, std::move(tcb));
        }
    }

    [[nodiscard]] const State& state() const noexcept { return state_; }
    [[nodiscard]] const ControllerState& controller() const noexcept { return ctl_; }
    [[nodiscard]] const std::map<MachineId, TxControlBlock>& control_blocks() const noexcept { return tcbs_; }
    [[nodiscard]] const RunConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] std::size_t steps_taken() const noexcept { return trace_.steps.size(); }

    [[nodiscard]] MachineId id_of(const std::string& name) const {
        auto idx = cfg_.index_of(name);
        if (!idx) throw UnknownMachine("no machine named '" + name + "'");
        return MachineId{static_cast<std::uint32_t>(*idx)};
    }

    [[nodiscard]] const std::string& name_of(MachineId id) const { return cfg_.programs.at(id.value).name; }

    /// Every machine has registered, reached Done and been committed.
    [[nodiscard]] bool completed() const {
        for (const auto& [_, tcb] : tcbs_)
            if (tcb.ctl_state != CtlState::done) return false;
        return ctl_.transact.empty();
    }

    /// Performs one global step. Returns false, without recording anything,
    /// when no agent can act.
    bool step();

    /// Steps until completion, a stall or the step budget, and returns the
    /// finished trace.
    Trace run() {
        while (!completed() && trace_.steps.size() < cfg_.max_steps)
            if (!step()) break;
        return finish();
    }

    Trace finish() {
        trace_.outcome = completed() ? Outcome::completed : Outcome::budget_exhausted;
        trace_.final_state = state_;
        return trace_;
    }

private:
    /// The locks a machine is waiting for: its last lock request, unless
    /// that request has been granted.
    [[nodiscard]] static std::optional<LockPair> needs(const TxControlBlock& tcb) {
        switch (tcb.ctl_state) {
            case CtlState::ta_ctl:
            case CtlState::wait_for_locks:
            case CtlState::wait_for_recovery:
                if (tcb.granted) return std::nullopt;
                return tcb.last_request;
            default:
                return std::nullopt;
        }
    }

    void check_proper_step(MachineId id, const WrapperOutput& out) const {
        const auto& prog = cfg_.programs[id.value];
        for (const auto& r : out.reads)
            if (prog.classes.lock_on_read(r.loc.func) && !ctl_.locks.r_locked(r.loc, id) &&
                !ctl_.locks.w_locked(r.loc, id))
                throw InvariantViolation(prog.name + " read " + r.loc.to_string() + " without a lock");
        for (const auto& u : out.updates)
            if (prog.classes.lock_on_write(u.loc.func) && !ctl_.locks.w_locked(u.loc, id))
                throw InvariantViolation(prog.name + " wrote " + u.loc.to_string() + " without a write lock");
    }

    /// The locks a transaction holds are exactly those recorded in its
    /// history plus a grant it has not consumed yet.
    void check_lock_accounting() const {
        for (const auto& [id, tcb] : tcbs_) {
            std::set<Location> expected;
            if (ctl_.transact.count(id)) {
                for (const auto& h : tcb.history) {
                    const auto all = h.lock_set.all();
                    expected.insert(all.begin(), all.end());
                }
                if (tcb.granted) {
                    const auto all = tcb.granted->all();
                    expected.insert(all.begin(), all.end());
                }
            }
            if (ctl_.locks.locked_by(id) != expected)
                throw InvariantViolation("lock table and history of " + name_of(id) + " disagree");
        }
    }

    RunConfig cfg_;
    Trace trace_;
    State state_;
    ControllerState ctl_;
    std::map<MachineId, TxControlBlock> tcbs_;
};

inline bool Engine::step() {
    const std::size_t r = trace_.steps.size();
    const WrapperContext ctx{cfg_.seed, r, cfg_.wait_mode};

    // Everything below is computed against the snapshot (state_, ctl_, tcbs_).
    std::vector<MachineId> registering;
    bool future_registration = false;
    std::map<MachineId, WrapperOutput> wrapper_out;
    for (const auto& [id, tcb] : tcbs_) {
        const auto& prog = cfg_.programs[id.value];
        if (tcb.ctl_state == CtlState::not_registered) {
            if (cfg_.registration_step(prog.name) <= r)
                registering.push_back(id);
            else
                future_registration = true;
            continue;
        }
        if (tcb.ctl_state == CtlState::done) continue;
        auto out = wrapper_step(tcb, prog, state_, ControllerView{ctl_.locks, ctl_.victims.count(id) > 0}, ctx);
        if (out.kind != StepKind::idle) wrapper_out.emplace(id, std::move(out));
    }

    SeedStream lock_rng(derive_seed(cfg_.seed, "lock-handler", r));
    const auto decision = decide_lock_request(ctl_, cfg_.policies.lock_requests, lock_rng, cfg_.wait_mode);

    SeedStream commit_rng(derive_seed(cfg_.seed, "commit-handler", r));
    const auto committed = choose_commit(ctl_, cfg_.policies.commits, commit_rng);

    std::map<MachineId, LockPair> need_map;
    std::map<MachineId, std::size_t> history_length;
    std::map<MachineId, CtlState> ctl_states;
    for (const auto& [id, tcb] : tcbs_) {
        ctl_states[id] = tcb.ctl_state;
        history_length[id] = tcb.history.size();
        if (!ctl_.transact.count(id)) continue;
        if (auto n = needs(tcb)) need_map[id] = std::move(*n);
    }
    const auto graph = wait_relation(ctl_, need_map);
    const auto dead = deadlocked(graph);
    SeedStream victim_rng(derive_seed(cfg_.seed, "deadlock-handler", r));
    const auto new_victims = choose_victims(deadlocked(graph.without(ctl_.victims)), ctl_, history_length,
                                            cfg_.policies.victims, victim_rng);

    SeedStream recovery_rng(derive_seed(cfg_.seed, "recovery", r));
    const auto recovery = choose_recovery(ctl_, ctl_states, dead, cfg_.policies.recovery, recovery_rng);

    // Agents able to act in this step.
    std::vector<std::string> agents;
    for (const auto& id : registering) agents.push_back("register/" + name_of(id));
    for (const auto& [id, _] : wrapper_out) agents.push_back("machine/" + name_of(id));
    if (decision) agents.push_back("lock-handler");
    if (committed) agents.push_back("commit-handler");
    if (!new_victims.empty()) agents.push_back("deadlock-handler");
    if (recovery) agents.push_back("recovery");
    if (agents.empty() && !future_registration) return false;

    std::set<std::string> firing(agents.begin(), agents.end());
    if (cfg_.composition == Composition::interleaving && !agents.empty()) {
        SeedStream agent_rng(derive_seed(cfg_.seed, "agent", r));
        firing = {agents[agent_rng.pick(agents.size())]};
    }
    auto fires = [&](const std::string& agent) { return firing.count(agent) > 0; };

    StepRecord rec;
    rec.step = r;
    UpdateSet delta;
    ControllerState next = ctl_;
    auto tcbs = tcbs_;

    for (const auto& id : registering) {
        if (!fires("register/" + name_of(id))) continue;
        tcbs.at(id).ctl_state = CtlState::ta_ctl;
        next.transact.insert(id);
        MachineStep ms;
        ms.kind = StepKind::registration;
        ms.from = CtlState::not_registered;
        ms.to = CtlState::ta_ctl;
        rec.machines[name_of(id)] = std::move(ms);
    }

    for (auto& [id, out] : wrapper_out) {
        if (!fires("machine/" + name_of(id))) continue;
        auto& tcb = tcbs.at(id);
        MachineStep ms;
        ms.kind = out.kind;
        ms.from = tcb.ctl_state;
        ms.to = out.next;
        if (out.kind == StepKind::proper) {
            if (!out.updates.consistent())
                throw InconsistentUpdateSet(name_of(id) + ": inconsistent update set", describe_clashes(out.updates));
            check_proper_step(id, out);
        }
        if (out.lock_request) {
            next.insert_lock_request(id, *out.lock_request);
            tcb.request_step = r;
            tcb.last_request = *out.lock_request;
        }
        if (out.commit_request) next.insert_commit_request(id);
        if (out.withdraw_request) {
            next.delete_lock_request(id);
            tcb.request_step.reset();
        }
        if (out.consume_flags) {
            if (tcb.granted) tcb.last_request.reset();
            tcb.granted.reset();
            tcb.refused.reset();
            tcb.request_step.reset();
            tcb.grant_step.reset();
        }
        if (out.kind == StepKind::recovery_exit) tcb.last_request.reset();
        if (out.record) tcb.history.push_back(std::move(*out.record));
        tcb.ctl_state = out.next;
        delta.merge(out.updates);
        ms.updates = std::move(out.updates);
        ms.reads = std::move(out.reads);
        rec.machines[name_of(id)] = std::move(ms);
    }

    if (decision && fires("lock-handler")) {
        auto handled = make_event(EventKind::handle_lock_request, name_of(decision->machine), decision->locks);
        rec.events.push_back(handled);
        apply_lock_decision(next, *decision);
        auto& tcb = tcbs.at(decision->machine);
        ControllerEvent outcome = handled;
        if (decision->granted) {
            outcome.kind = EventKind::lock_grant;
            tcb.granted = decision->locks;
            tcb.grant_step = r;
        } else {
            outcome.kind = EventKind::lock_refuse;
            tcb.refused = decision->locks;
        }
        outcome.request_step = tcbs_.at(decision->machine).request_step;
        rec.events.push_back(std::move(outcome));
    }

    if (committed && fires("commit-handler")) {
        apply_commit(next, *committed);
        rec.events.push_back(make_event(EventKind::commit, name_of(*committed)));
    }

    if (!new_victims.empty() && fires("deadlock-handler")) {
        for (const auto& v : new_victims) {
            next.victims.insert(v);
            rec.events.push_back(make_event(EventKind::victimize, name_of(v)));
        }
    }

    if (recovery && fires("recovery")) {
        ControllerEvent e;
        e.machine = name_of(recovery->machine);
        if (recovery->kind == RecoveryKind::unvictimize) {
            next.victims.erase(recovery->machine);
            e.kind = EventKind::unvictimize;
        } else {
            auto undone = undo(tcbs.at(recovery->machine), next);
            e.kind = EventKind::undo_applied;
            e.locks = undone.entry.lock_set;
            e.updates = undone.restore;
            e.origin_step = undone.entry.origin_step;
            e.request_step = undone.entry.request_step;
            e.grant_step = undone.entry.grant_step;
            e.remaining = undone.remaining;
            delta.merge(undone.restore);
        }
        rec.events.push_back(std::move(e));
    }

    if (!delta.consistent()) {
        throw InconsistentGlobalUpdate(describe_clashes(delta));
    }
    state_ = apply(state_, delta);
    ctl_ = std::move(next);
    tcbs_ = std::move(tcbs);
    ctl_.check_invariants();
    check_lock_accounting();
    rec.state_hash = state_.digest();
    trace_.steps.push_back(std::move(rec));
    return true;
}

inline Trace run(const RunConfig& cfg) { return Engine(cfg).run(); }

// ---------------------------------------------------------------------------
// Solo runs
// ---------------------------------------------------------------------------

/// One proper step of a machine running alone.
struct SoloStep {
    UpdateSet updates;
    std::set<Update> reads;

    friend bool operator==(const SoloStep&, const SoloStep&) = default;
};

/// Runs `prog` alone from `s` until its termination criterion holds,
/// updating `s` in place. With no other machine around every lock request
/// is granted at once, so the run is the machine's sequence of proper steps.
/// Returns nullopt when the budget runs out first.
inline std::optional<std::vector<SoloStep>> run_solo(const MachineProgram& prog, State& s, std::uint64_t seed,
                                                     std::size_t budget) {
    std::vector<SoloStep> out;
    while (!eval_formula(prog.terminated, s, {})) {
        if (out.size() >= budget) return std::nullopt;
        auto res = analyze_machine(prog, s, choice_stream(seed, prog.name, out.size()));
        if (!res.updates.consistent())
            throw InconsistentUpdateSet(prog.name + ": inconsistent update set", describe_clashes(res.updates));
        SoloStep st;
        for (const auto& l : res.rw.reads) st.reads.insert(Update{l, s.get(l)});
        s = apply(s, res.updates);
        st.updates = std::move(res.updates);
        out.push_back(std::move(st));
    }
    return out;
}

} // namespace taserial
