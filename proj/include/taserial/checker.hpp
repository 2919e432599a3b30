#pragma once

// Serializability of recorded runs.
//
// A trace is first cleansed: refused lock attempts and every recovery
// bracket (the steps a victim spent in waitForRecovery together with the
// steps it undid) are removed. What remains, the residue, is compared with
// the serial run that executes the committed machines alone, one after
// another, in commit order.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "taserial/engine.hpp"
#include "taserial/trace.hpp"

namespace taserial {

// ---------------------------------------------------------------------------
// Cleansing
// ---------------------------------------------------------------------------

struct EntryRef {
    std::size_t step;
    std::string machine;
    auto operator<=>(const EntryRef&) const = default;
};

struct EventRef {
    std::size_t step;
    std::size_t index;
    auto operator<=>(const EventRef&) const = default;
};

/// One application of a cleansing operation: the entries and events it
/// deletes.
struct CleanseOp {
    enum class Kind { idle, refused_segment, recovery_bracket } kind = Kind::idle;
    std::string machine;
    std::set<EntryRef> entries;
    std::set<EventRef> events;
};

namespace detail {

inline const MachineStep* entry_at(const Trace& t, std::size_t step, const std::string& m) {
    if (step >= t.steps.size()) return nullptr;
    auto it = t.steps[step].machines.find(m);
    return it == t.steps[step].machines.end() ? nullptr : &it->second;
}

/// Latest step < `before` where `m` has an entry of kind `kind`.
inline std::optional<std::size_t> last_entry_before(const Trace& t, const std::string& m, StepKind kind,
                                                    std::size_t before) {
    for (std::size_t i = before; i-- > 0;)
        if (const auto* e = entry_at(t, i, m); e && e->kind == kind) return i;
    return std::nullopt;
}

inline void add_events(const Trace& t, std::size_t step, const std::string& m, std::initializer_list<EventKind> kinds,
                       std::set<EventRef>& out) {
    if (step >= t.steps.size()) return;
    const auto& evs = t.steps[step].events;
    for (std::size_t i = 0; i < evs.size(); ++i)
        if (evs[i].machine == m && std::find(kinds.begin(), kinds.end(), evs[i].kind) != kinds.end())
            out.insert(EventRef{step, i});
}

inline CleanseOp refused_segment(const Trace& t, std::size_t k, const std::string& m) {
    CleanseOp op;
    op.kind = CleanseOp::Kind::refused_segment;
    op.machine = m;
    op.entries.insert(EntryRef{k, m});
    auto i = last_entry_before(t, m, StepKind::lock_request, k);
    if (!i) throw MalformedTrace("refusal of " + m + " at step " + std::to_string(k) + " without a lock request");
    op.entries.insert(EntryRef{*i, m});
    bool found = false;
    for (std::size_t j = *i; j < k; ++j) {
        const auto before = op.events.size();
        add_events(t, j, m, {EventKind::handle_lock_request, EventKind::lock_refuse}, op.events);
        found = found || op.events.size() > before;
    }
    if (!found) throw MalformedTrace("refusal of " + m + " at step " + std::to_string(k) + " was never decided");
    return op;
}

inline CleanseOp recovery_bracket(const Trace& t, std::size_t j, std::size_t j_exit, const std::string& m) {
    CleanseOp op;
    op.kind = CleanseOp::Kind::recovery_bracket;
    op.machine = m;
    op.entries.insert(EntryRef{j, m});
    op.entries.insert(EntryRef{j_exit, m});
    if (entry_at(t, j, m)->kind == StepKind::withdraw) {
        auto req = last_entry_before(t, m, StepKind::lock_request, j);
        if (!req) throw MalformedTrace("withdrawal of " + m + " at step " + std::to_string(j) + " without a request");
        op.entries.insert(EntryRef{*req, m});
    }
    for (std::size_t v = j + 1; v-- > 0;) {
        std::set<EventRef> found;
        add_events(t, v, m, {EventKind::victimize}, found);
        if (!found.empty()) {
            op.events.insert(found.begin(), found.end());
            break;
        }
    }
    for (std::size_t s = j; s <= j_exit && s < t.steps.size(); ++s) {
        const auto& evs = t.steps[s].events;
        for (std::size_t i = 0; i < evs.size(); ++i) {
            const auto& e = evs[i];
            if (e.machine != m) continue;
            if (e.kind == EventKind::unvictimize) op.events.insert(EventRef{s, i});
            if (e.kind != EventKind::undo_applied) continue;
            op.events.insert(EventRef{s, i});
            if (!e.origin_step || !entry_at(t, *e.origin_step, m))
                throw MalformedTrace("undo of " + m + " at step " + std::to_string(s) + " has no origin step");
            op.entries.insert(EntryRef{*e.origin_step, m});
            if (e.request_step) {
                if (const auto* req = entry_at(t, *e.request_step, m); req && req->kind == StepKind::lock_request)
                    op.entries.insert(EntryRef{*e.request_step, m});
            }
            if (e.grant_step)
                add_events(t, *e.grant_step, m, {EventKind::handle_lock_request, EventKind::lock_grant}, op.events);
        }
    }
    return op;
}

} // namespace detail

/// All cleansing operations applicable to `t`. A recovery exit without a
/// matching entry is malformed; a bracket still open at the end of the
/// trace is left alone.
inline std::vector<CleanseOp> cleanse_ops(const Trace& t) {
    std::vector<CleanseOp> out;
    std::map<std::string, std::optional<std::size_t>> open;
    for (std::size_t s = 0; s < t.steps.size(); ++s) {
        for (const auto& [m, e] : t.steps[s].machines) {
            switch (e.kind) {
                case StepKind::idle: {
                    CleanseOp op;
                    op.machine = m;
                    op.entries.insert(EntryRef{s, m});
                    out.push_back(std::move(op));
                    break;
                }
                case StepKind::refused:
                    out.push_back(detail::refused_segment(t, s, m));
                    break;
                case StepKind::recovery_entry:
                case StepKind::withdraw:
                    if (open[m]) throw MalformedTrace(m + " enters recovery twice (step " + std::to_string(s) + ")");
                    open[m] = s;
                    break;
                case StepKind::recovery_exit:
                    if (!open[m])
                        throw MalformedTrace(m + " leaves recovery at step " + std::to_string(s) +
                                             " without entering it");
                    out.push_back(detail::recovery_bracket(t, *open[m], s, m));
                    open[m].reset();
                    break;
                default:
                    break;
            }
        }
        for (const auto& e : t.steps[s].events)
            if (e.kind == EventKind::undo_applied && !open[e.machine])
                throw MalformedTrace("undo of " + e.machine + " at step " + std::to_string(s) +
                                     " outside a recovery bracket");
    }
    return out;
}

inline void apply_cleanse_op(Trace& t, const CleanseOp& op) {
    for (const auto& e : op.entries)
        if (e.step < t.steps.size()) t.steps[e.step].machines.erase(e.machine);
    for (auto it = op.events.rbegin(); it != op.events.rend(); ++it) {
        auto& evs = t.steps[it->step].events;
        if (it->index < evs.size()) evs.erase(evs.begin() + static_cast<std::ptrdiff_t>(it->index));
    }
}

/// Applies cleansing operations until none is left, always taking the first
/// one found.
inline Trace cleanse(Trace t) {
    for (;;) {
        auto ops = cleanse_ops(t);
        if (ops.empty()) return t;
        apply_cleanse_op(t, ops.front());
    }
}

/// Same as cleanse, but picks the next operation at random from `seed`.
inline Trace cleanse_confluent(Trace t, std::uint64_t seed) {
    SeedStream rng(derive_seed(seed, "cleanse-order"));
    for (;;) {
        auto ops = cleanse_ops(t);
        if (ops.empty()) return t;
        apply_cleanse_op(t, ops[rng.pick(ops.size())]);
    }
}

/// The proper steps each machine performed in a (cleansed) trace, in order.
inline std::map<std::string, std::vector<SoloStep>> proper_steps(const Trace& t) {
    std::map<std::string, std::vector<SoloStep>> out;
    for (const auto& st : t.steps)
        for (const auto& [m, e] : st.machines)
            if (e.kind == StepKind::proper) out[m].push_back(SoloStep{e.updates, e.reads});
    return out;
}

// ---------------------------------------------------------------------------
// Serial comparison
// ---------------------------------------------------------------------------

struct SerialRun {
    std::vector<std::string> order;
    std::map<std::string, std::vector<SoloStep>> steps;
    State final_state;
    std::optional<std::string> diverged;  // a machine that did not terminate within the budget
};

/// Runs the named machines alone, one after another, from the trace's
/// initial state.
inline SerialRun build_serial_run(const Trace& t, const std::vector<std::string>& order) {
    SerialRun out;
    out.order = order;
    out.final_state = t.initial;
    const std::size_t budget = t.config.max_steps + 1;
    for (const auto& m : order) {
        auto steps = run_solo(t.config.program(m), out.final_state, t.config.seed, budget);
        if (!steps) {
            out.diverged = m;
            break;
        }
        out.steps[m] = std::move(*steps);
    }
    return out;
}

struct Verdict {
    bool serializable = false;
    std::string method;
    std::vector<std::string> order;       // the witnessing (or tested) serial order
    std::vector<std::string> uncommitted;
    bool truncated = false;               // the run did not complete; uncommitted machines ignored
    std::string reason;

    [[nodiscard]] io::json to_json() const {
        io::json j{{"verdict", serializable ? "serializable" : "not-serializable"},
                   {"method", method},
                   {"order", order},
                   {"truncated", truncated},
                   {"uncommitted", uncommitted}};
        if (!reason.empty()) j["reason"] = reason;
        return j;
    }
};

namespace detail {

inline std::string describe(const SoloStep& s) {
    std::string out = "updates {";
    for (const auto& u : s.updates) out += " " + u.to_string();
    out += " } reads {";
    for (const auto& r : s.reads) out += " " + r.to_string();
    return out + " }";
}

/// Empty when the residue matches the serial run, else a reason.
inline std::string compare(const Trace& t, const std::map<std::string, std::vector<SoloStep>>& residue,
                           const SerialRun& serial, bool compare_final) {
    if (serial.diverged) return "serial run of " + *serial.diverged + " does not terminate";
    static const std::vector<SoloStep> none;
    for (const auto& m : serial.order) {
        auto it = residue.find(m);
        const auto& got = it == residue.end() ? none : it->second;
        const auto& want = serial.steps.at(m);
        for (std::size_t i = 0; i < std::max(got.size(), want.size()); ++i) {
            if (i >= got.size())
                return m + " performed " + std::to_string(got.size()) + " steps, serially " +
                       std::to_string(want.size());
            if (i >= want.size())
                return m + " performed " + std::to_string(got.size()) + " steps, serially " +
                       std::to_string(want.size());
            if (!(got[i] == want[i]))
                return m + " step " + std::to_string(i) + " differs: run " + describe(got[i]) + ", serial " +
                       describe(want[i]);
        }
    }
    if (compare_final && !(serial.final_state == t.final_state)) return "final states differ";
    return {};
}

inline std::vector<std::string> uncommitted(const Trace& t, const std::vector<std::string>& committed) {
    std::vector<std::string> out;
    for (const auto& p : t.config.programs)
        if (std::find(committed.begin(), committed.end(), p.name) == committed.end()) out.push_back(p.name);
    return out;
}

} // namespace detail

/// Compares the cleansed trace with the serial run in commit order. If the
/// run stopped before every machine committed, only committed machines are
/// compared and the final states are not.
inline Verdict check_serializable(const Trace& t) {
    verify_trace(t);
    Verdict v;
    v.method = "commit-order";
    v.order = t.commit_order();
    v.uncommitted = detail::uncommitted(t, v.order);
    v.truncated = !v.uncommitted.empty();
    const auto residue = proper_steps(cleanse(t));
    v.reason = detail::compare(t, residue, build_serial_run(t, v.order), !v.truncated);
    v.serializable = v.reason.empty();
    return v;
}

/// Tries every order of the committed machines. Refuses more than four.
inline Verdict brute_force_serializable(const Trace& t, std::size_t max_machines = 4) {
    verify_trace(t);
    Verdict v;
    v.method = "brute-force";
    auto order = t.commit_order();
    if (order.size() > max_machines)
        throw TooManyMachines("brute force is limited to " + std::to_string(max_machines) + " machines, trace has " +
                              std::to_string(order.size()));
    v.uncommitted = detail::uncommitted(t, order);
    v.truncated = !v.uncommitted.empty();
    const auto residue = proper_steps(cleanse(t));
    std::sort(order.begin(), order.end());
    std::string first_reason;
    do {
        auto reason = detail::compare(t, residue, build_serial_run(t, order), !v.truncated);
        if (reason.empty()) {
            v.serializable = true;
            v.order = order;
            return v;
        }
        if (first_reason.empty()) first_reason = reason;
    } while (std::next_permutation(order.begin(), order.end()));
    v.reason = "no serial order matches (first order: " + first_reason + ")";
    return v;
}

} // namespace taserial
