#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taserial/errors.hpp"
#include "taserial/interp.hpp"
#include "taserial/locks.hpp"
#include "taserial/machine.hpp"
#include "taserial/rwloc.hpp"

namespace taserial {

enum class CtlState { not_registered, ta_ctl, wait_for_locks, wait_for_recovery, done };

inline std::string_view to_string(CtlState s) {
    switch (s) {
        case CtlState::not_registered: return "NotRegistered";
        case CtlState::ta_ctl: return "TA-ctl";
        case CtlState::wait_for_locks: return "waitForLocks";
        case CtlState::wait_for_recovery: return "waitForRecovery";
        case CtlState::done: return "Done";
    }
    return "?";
}

inline std::optional<CtlState> parse_ctl_state(std::string_view s) {
    for (auto c : {CtlState::not_registered, CtlState::ta_ctl, CtlState::wait_for_locks, CtlState::wait_for_recovery,
                   CtlState::done})
        if (to_string(c) == s) return c;
    return std::nullopt;
}

enum class WaitMode { retry, suspend };

/// One undo record: the values a step overwrote and the locks it obtained.
struct HistoryEntry {
    UpdateSet val_set;        // shared/output locations, pre-step values
    UpdateSet private_vals;   // controlled locations, pre-step values
    LockPair lock_set;
    std::size_t origin_step = 0;
    std::optional<std::size_t> request_step;  // CallLockHandler step, if locks were needed
    std::optional<std::size_t> grant_step;    // HandleLockRequest step that granted them
    bool proper = true;                       // false: locks were granted but the step was not taken

    friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

/// Per-machine transactional bookkeeping. `history.back()` is the youngest
/// entry.
struct TxControlBlock {
    MachineId id;
    CtlState ctl_state = CtlState::not_registered;
    std::vector<HistoryEntry> history;
    std::optional<LockPair> refused;
    std::optional<LockPair> granted;
    std::optional<std::size_t> request_step;
    std::optional<std::size_t> grant_step;
    std::optional<LockPair> last_request;  // kept while refused or in recovery

    /// Number of recorded (not undone) proper steps.
    [[nodiscard]] std::size_t proper_depth() const {
        std::size_t n = 0;
        for (const auto& h : history) n += h.proper ? 1 : 0;
        return n;
    }

    friend bool operator==(const TxControlBlock&, const TxControlBlock&) = default;
};

/// Choice stream for a machine's next proper step. Keyed by the number of
/// surviving proper steps, so a step redone after an undo, or replayed in a
/// solo run, draws the same choose witnesses.
inline SeedStream choice_stream(std::uint64_t seed, const std::string& machine, std::size_t depth) {
    return SeedStream(derive_seed(seed, "choose/" + machine, depth));
}

/// Read/write locations and update set of a machine's rule in `s`.
inline detail::StepResult analyze_machine(const MachineProgram& m, const State& s, SeedStream rng) {
    return analyze_step(m.main, s, {}, rng, m.rules);
}

/// newLocks restricted from an already computed read/write analysis.
inline LockPair new_locks_from(const MachineProgram& m, MachineId id, const RwSet& rw, const LockTable& locks) {
    LockPair out;
    for (const auto& l : rw.reads)
        if (m.classes.lock_on_read(l.func) && !locks.r_locked(l, id) && !locks.w_locked(l, id)) out.reads.insert(l);
    for (const auto& l : rw.writes)
        if (m.classes.lock_on_write(l.func) && !locks.w_locked(l, id)) out.writes.insert(l);
    return out;
}

/// (R-Loc, W-Loc): shared/monitored reads not yet locked by the machine, and
/// shared/output writes not yet W-locked by it.
inline LockPair new_locks(const MachineProgram& m, MachineId id, const State& s, const LockTable& locks,
                          SeedStream rng) {
    return new_locks_from(m, id, analyze_machine(m, s, rng).rw, locks);
}

inline bool new_locks_needed(const MachineProgram& m, MachineId id, const State& s, const LockTable& locks,
                             SeedStream rng) {
    return !new_locks(m, id, s, locks, rng).empty();
}

/// {((f,args), current value)} for every shared/output location written.
inline UpdateSet overwritten_values(const MachineProgram& m, const std::set<Location>& writes, const State& s) {
    UpdateSet out;
    for (const auto& l : writes)
        if (m.classes.lock_on_write(l.func)) out.insert(l, s.get(l));
    return out;
}

inline UpdateSet overwritten_values(const MachineProgram& m, const State& s, SeedStream rng) {
    return overwritten_values(m, analyze_machine(m, s, rng).rw.writes, s);
}

/// Current values of the controlled (private) locations a step writes.
inline UpdateSet overwritten_private_values(const MachineProgram& m, const std::set<Location>& writes,
                                            const State& s) {
    UpdateSet out;
    for (const auto& l : writes)
        if (m.classes.kind_of(l.func) == LocationKind::controlled) out.insert(l, s.get(l));
    return out;
}

enum class StepKind {
    idle,
    registration,
    lock_request,
    refused,
    proper,
    lock_only,
    recovery_entry,
    recovery_exit,
    commit_call,
    withdraw,
};

inline std::string_view to_string(StepKind k) {
    switch (k) {
        case StepKind::idle: return "idle";
        case StepKind::registration: return "registration";
        case StepKind::lock_request: return "lock-request";
        case StepKind::refused: return "refused";
        case StepKind::proper: return "proper";
        case StepKind::lock_only: return "lock-only";
        case StepKind::recovery_entry: return "recovery-entry";
        case StepKind::recovery_exit: return "recovery-exit";
        case StepKind::commit_call: return "commit-call";
        case StepKind::withdraw: return "withdraw";
    }
    return "?";
}

inline std::optional<StepKind> parse_step_kind(std::string_view s) {
    for (auto k : {StepKind::idle, StepKind::registration, StepKind::lock_request, StepKind::refused, StepKind::proper,
                   StepKind::lock_only, StepKind::recovery_entry, StepKind::recovery_exit, StepKind::commit_call,
                   StepKind::withdraw})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

/// What the wrapped machine contributes to one global step.
struct WrapperOutput {
    StepKind kind = StepKind::idle;
    CtlState next = CtlState::ta_ctl;
    UpdateSet updates;          // proper M-updates
    std::set<Update> reads;     // read locations with their pre-step values
    std::optional<HistoryEntry> record;
    std::optional<LockPair> lock_request;
    bool commit_request = false;
    bool consume_flags = false;
    bool withdraw_request = false;
};

/// The controller state a wrapper may observe.
struct ControllerView {
    const LockTable& locks;
    bool victim = false;
};

struct WrapperContext {
    std::uint64_t seed = 0;
    std::size_t step = 0;
    WaitMode wait_mode = WaitMode::retry;
};

namespace detail {

inline void fill_proper(WrapperOutput& out, const MachineProgram& m, const State& s, StepResult&& res,
                        HistoryEntry entry) {
    out.kind = StepKind::proper;
    for (const auto& l : res.rw.reads) out.reads.insert(Update{l, s.get(l)});
    entry.val_set = overwritten_values(m, res.rw.writes, s);
    entry.private_vals = overwritten_private_values(m, res.rw.writes, s);
    entry.proper = true;
    out.record = std::move(entry);
    out.updates = std::move(res.updates);
}

} // namespace detail

/// One transition of the control-state machine TA(M, TaCtl).
///
/// TA-ctl: a victim enters waitForRecovery; a terminated machine calls
/// commit; a machine needing new locks calls the lock handler; otherwise it
/// records its overwritten values and performs its step.
///
/// waitForLocks: on a grant the step is performed with the granted locks
/// recorded. If the machine meanwhile needs further locks (its read set moved
/// while the request was pending) only the grant is recorded and it returns
/// to TA-ctl to ask again. On a refusal it returns to TA-ctl and retries.
/// In suspend mode nothing is refused; a victimized waiter withdraws its
/// request and enters waitForRecovery.
///
/// waitForRecovery: leaves once the machine is no longer a victim.
inline WrapperOutput wrapper_step(const TxControlBlock& tcb, const MachineProgram& m, const State& s,
                                  const ControllerView& ctl, const WrapperContext& ctx) {
    WrapperOutput out;
    switch (tcb.ctl_state) {
        case CtlState::ta_ctl: {
            if (ctl.victim) {
                out.kind = StepKind::recovery_entry;
                out.next = CtlState::wait_for_recovery;
                return out;
            }
            if (eval_formula(m.terminated, s, {})) {
                out.kind = StepKind::commit_call;
                out.commit_request = true;
                out.next = CtlState::done;
                return out;
            }
            auto res = analyze_machine(m, s, choice_stream(ctx.seed, m.name, tcb.proper_depth()));
            auto needed = new_locks_from(m, tcb.id, res.rw, ctl.locks);
            if (!needed.empty()) {
                out.kind = StepKind::lock_request;
                out.lock_request = std::move(needed);
                out.next = CtlState::wait_for_locks;
                return out;
            }
            HistoryEntry entry;
            entry.origin_step = ctx.step;
            detail::fill_proper(out, m, s, std::move(res), std::move(entry));
            out.next = CtlState::ta_ctl;
            return out;
        }
        case CtlState::wait_for_locks: {
            if (tcb.granted) {
                out.consume_flags = true;
                out.next = CtlState::ta_ctl;
                HistoryEntry entry;
                entry.origin_step = ctx.step;
                entry.lock_set = *tcb.granted;
                entry.request_step = tcb.request_step;
                entry.grant_step = tcb.grant_step;
                auto res = analyze_machine(m, s, choice_stream(ctx.seed, m.name, tcb.proper_depth()));
                if (new_locks_from(m, tcb.id, res.rw, ctl.locks).empty()) {
                    detail::fill_proper(out, m, s, std::move(res), std::move(entry));
                } else {
                    out.kind = StepKind::lock_only;
                    entry.proper = false;
                    out.record = std::move(entry);
                }
                return out;
            }
            if (tcb.refused) {
                out.kind = StepKind::refused;
                out.consume_flags = true;
                out.next = CtlState::ta_ctl;
                return out;
            }
            if (ctx.wait_mode == WaitMode::suspend && ctl.victim) {
                out.kind = StepKind::withdraw;
                out.withdraw_request = true;
                out.next = CtlState::wait_for_recovery;
                return out;
            }
            out.next = CtlState::wait_for_locks;
            return out;
        }
        case CtlState::wait_for_recovery: {
            if (!ctl.victim) {
                out.kind = StepKind::recovery_exit;
                out.next = CtlState::ta_ctl;
            } else {
                out.next = CtlState::wait_for_recovery;
            }
            return out;
        }
        case CtlState::not_registered:
        case CtlState::done:
            break;
    }
    throw IllegalControlState("machine '" + m.name + "' cannot step in control state " +
                              std::string(to_string(tcb.ctl_state)));
}

} // namespace taserial
