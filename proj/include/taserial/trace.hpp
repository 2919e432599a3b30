#pragma once

// Run traces and their JSON-lines encoding.
//
// line 1: header {format, version, config_digest, seed, config, initial_state}
// line 2..n+1: one object per global step
// last line: footer {end, outcome, steps, final_state, final_state_hash}

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "taserial/config.hpp"
#include "taserial/json_io.hpp"
#include "taserial/wrapper.hpp"

namespace taserial {

enum class EventKind { handle_lock_request, lock_grant, lock_refuse, victimize, undo_applied, unvictimize, commit };

inline std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::handle_lock_request: return "HandleLockRequest";
        case EventKind::lock_grant: return "LockGrant";
        case EventKind::lock_refuse: return "LockRefuse";
        case EventKind::victimize: return "Victimize";
        case EventKind::undo_applied: return "UndoApplied";
        case EventKind::unvictimize: return "Unvictimize";
        case EventKind::commit: return "Commit";
    }
    return "?";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
    for (auto k : {EventKind::handle_lock_request, EventKind::lock_grant, EventKind::lock_refuse,
                   EventKind::victimize, EventKind::undo_applied, EventKind::unvictimize, EventKind::commit})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

/// What one machine did in one global step. Idle machines are not recorded.
struct MachineStep {
    StepKind kind = StepKind::idle;
    CtlState from = CtlState::ta_ctl;
    CtlState to = CtlState::ta_ctl;
    UpdateSet updates;
    std::set<Update> reads;

    friend bool operator==(const MachineStep&, const MachineStep&) = default;
};

/// An action of a controller component. For UndoApplied, `updates` is the
/// restoring update set, `locks` the released locks, and the step fields
/// point at the undone step, its lock request and the grant.
struct ControllerEvent {
    EventKind kind = EventKind::commit;
    std::string machine;
    LockPair locks;
    UpdateSet updates;
    std::optional<std::size_t> origin_step;
    std::optional<std::size_t> request_step;
    std::optional<std::size_t> grant_step;
    std::optional<std::size_t> remaining;

    friend bool operator==(const ControllerEvent&, const ControllerEvent&) = default;
};

inline ControllerEvent make_event(EventKind kind, std::string machine, LockPair locks = {}) {
    ControllerEvent e;
    e.kind = kind;
    e.machine = std::move(machine);
    e.locks = std::move(locks);
    return e;
}

struct StepRecord {
    std::size_t step = 0;
    std::map<std::string, MachineStep> machines;
    std::vector<ControllerEvent> events;
    std::uint64_t state_hash = 0;

    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

enum class Outcome { completed, budget_exhausted };

inline std::string_view to_string(Outcome o) { return o == Outcome::completed ? "completed" : "budget-exhausted"; }

struct Trace {
    RunConfig config;
    State initial;
    std::vector<StepRecord> steps;
    Outcome outcome = Outcome::completed;
    State final_state;

    /// Machines in the order their Commit events occur.
    [[nodiscard]] std::vector<std::string> commit_order() const {
        std::vector<std::string> out;
        for (const auto& st : steps)
            for (const auto& e : st.events)
                if (e.kind == EventKind::commit) out.push_back(e.machine);
        return out;
    }

    [[nodiscard]] std::size_t count_events(EventKind k) const {
        std::size_t n = 0;
        for (const auto& st : steps)
            for (const auto& e : st.events) n += e.kind == k ? 1 : 0;
        return n;
    }

    friend bool operator==(const Trace&, const Trace&) = default;
};

/// The per-step machine projection of a trace: who acted in which step.
using Schedule = std::vector<std::vector<std::string>>;

inline Schedule project_schedule(const Trace& t) {
    Schedule out;
    for (const auto& st : t.steps) {
        std::vector<std::string> acting;
        for (const auto& [m, ms] : st.machines)
            if (ms.kind != StepKind::idle) acting.push_back(m);
        out.push_back(std::move(acting));
    }
    return out;
}

/// All updates a step applies to the global state: proper machine updates
/// plus restoring updates of undos.
inline UpdateSet step_delta(const StepRecord& st) {
    UpdateSet delta;
    for (const auto& [_, ms] : st.machines) delta.merge(ms.updates);
    for (const auto& e : st.events)
        if (e.kind == EventKind::undo_applied) delta.merge(e.updates);
    return delta;
}

// ---------------------------------------------------------------------------
// JSON lines
// ---------------------------------------------------------------------------

namespace io {

inline json to_json(const MachineStep& ms) {
    return {{"kind", std::string(to_string(ms.kind))},
            {"from", std::string(to_string(ms.from))},
            {"to", std::string(to_string(ms.to))},
            {"updates", updates_to_json(ms.updates)},
            {"reads", updates_to_json(ms.reads)}};
}

inline json to_json(const ControllerEvent& e) {
    json j{{"kind", std::string(to_string(e.kind))}, {"machine", e.machine}};
    if (!e.locks.empty()) {
        j["r_locs"] = to_json(e.locks.reads);
        j["w_locs"] = to_json(e.locks.writes);
    }
    if (e.kind == EventKind::undo_applied) j["updates"] = updates_to_json(e.updates);
    if (e.origin_step) j["origin_step"] = *e.origin_step;
    if (e.request_step) j["request_step"] = *e.request_step;
    if (e.grant_step) j["grant_step"] = *e.grant_step;
    if (e.remaining) j["remaining"] = *e.remaining;
    return j;
}

inline json to_json(const StepRecord& st) {
    json machines = json::object();
    for (const auto& [m, ms] : st.machines) machines[m] = to_json(ms);
    json events = json::array();
    for (const auto& e : st.events) events.push_back(to_json(e));
    return {{"step", st.step}, {"machines", std::move(machines)}, {"events", std::move(events)},
            {"state_hash", hex64(st.state_hash)}};
}

inline std::uint64_t parse_hex64(const json& j) {
    if (!j.is_string()) throw MalformedTrace("expected a hex digest");
    const auto s = j.get<std::string>();
    if (s.empty() || s.size() > 16 || s.find_first_not_of("0123456789abcdef") != std::string::npos)
        throw MalformedTrace("bad hex digest '" + s + "'");
    return std::stoull(s, nullptr, 16);
}

inline std::optional<std::size_t> opt_step(const json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    return j.at(key).get<std::size_t>();
}

inline MachineStep machine_step_from_json(const json& j) {
    MachineStep ms;
    auto kind = parse_step_kind(j.at("kind").get<std::string>());
    auto from = parse_ctl_state(j.at("from").get<std::string>());
    auto to = parse_ctl_state(j.at("to").get<std::string>());
    if (!kind || !from || !to) throw MalformedTrace("bad machine step: " + j.dump());
    ms.kind = *kind;
    ms.from = *from;
    ms.to = *to;
    ms.updates = update_set_from_json(j.at("updates"));
    ms.reads = update_list_from_json(j.at("reads"));
    return ms;
}

inline ControllerEvent event_from_json(const json& j) {
    ControllerEvent e;
    auto kind = parse_event_kind(j.at("kind").get<std::string>());
    if (!kind) throw MalformedTrace("unknown event kind: " + j.dump());
    e.kind = *kind;
    e.machine = j.at("machine").get<std::string>();
    if (j.contains("r_locs")) e.locks.reads = locations_from_json(j.at("r_locs"));
    if (j.contains("w_locs")) e.locks.writes = locations_from_json(j.at("w_locs"));
    if (j.contains("updates")) e.updates = update_set_from_json(j.at("updates"));
    e.origin_step = opt_step(j, "origin_step");
    e.request_step = opt_step(j, "request_step");
    e.grant_step = opt_step(j, "grant_step");
    e.remaining = opt_step(j, "remaining");
    return e;
}

inline StepRecord step_from_json(const json& j) {
    StepRecord st;
    st.step = j.at("step").get<std::size_t>();
    for (const auto& [m, ms] : j.at("machines").items()) st.machines[m] = machine_step_from_json(ms);
    for (const auto& e : j.at("events")) st.events.push_back(event_from_json(e));
    st.state_hash = parse_hex64(j.at("state_hash"));
    return st;
}

inline json header_json(const Trace& t) {
    return {{"format", "taserial-trace"},
            {"version", 1},
            {"config_digest", config_digest(t.config)},
            {"seed", t.config.seed},
            {"config", config_to_json(t.config)},
            {"initial_state", state_to_json(t.initial)}};
}

inline json footer_json(const Trace& t) {
    return {{"end", true},
            {"outcome", std::string(to_string(t.outcome))},
            {"steps", t.steps.size()},
            {"final_state", state_to_json(t.final_state)},
            {"final_state_hash", hex64(t.final_state.digest())}};
}

} // namespace io

inline void write_trace(std::ostream& os, const Trace& t) {
    os << io::header_json(t).dump() << '\n';
    for (const auto& st : t.steps) os << io::to_json(st).dump() << '\n';
    os << io::footer_json(t).dump() << '\n';
}

inline std::string trace_to_string(const Trace& t) {
    std::ostringstream os;
    write_trace(os, t);
    return os.str();
}

/// Replays the recorded updates from the initial state and checks step
/// numbering, machine names, every state hash and the final state. Throws
/// MalformedTrace on the first discrepancy.
inline void verify_trace(const Trace& t) {
    State s = t.initial;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const auto& st = t.steps[i];
        if (st.step != i) throw MalformedTrace("step " + std::to_string(i) + " is numbered " + std::to_string(st.step));
        for (const auto& [m, _] : st.machines)
            if (!t.config.index_of(m)) throw MalformedTrace("unknown machine '" + m + "' in step " + std::to_string(i));
        const auto delta = step_delta(st);
        if (!delta.consistent()) throw MalformedTrace("inconsistent updates in step " + std::to_string(i));
        s = apply(s, delta);
        if (s.digest() != st.state_hash) throw MalformedTrace("state hash mismatch at step " + std::to_string(i));
    }
    if (!(s == t.final_state)) throw MalformedTrace("replayed final state differs from the footer");
}

/// Parses a trace and checks its internal consistency: the header digest
/// matches the embedded configuration (ConfigMismatch otherwise), step
/// numbers are consecutive, and replaying the recorded updates from the
/// initial state reproduces every state hash and the final state
/// (MalformedTrace otherwise).
inline Trace read_trace(std::istream& is) {
    std::vector<io::json> lines;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            lines.push_back(io::json::parse(line));
        } catch (const io::json::exception& e) {
            throw MalformedTrace("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (lines.size() < 2) throw MalformedTrace("trace needs a header and a footer");
    Trace t;
    try {
        const auto& h = lines.front();
        if (h.value("format", "") != "taserial-trace" || h.value("version", 0) != 1)
            throw MalformedTrace("not a taserial trace (format/version)");
        t.config = config_from_json(h.at("config"));
        if (h.at("seed").get<std::uint64_t>() != t.config.seed) throw ConfigMismatch("header seed differs from config");
        if (h.at("config_digest").get<std::string>() != config_digest(t.config))
            throw ConfigMismatch("config digest does not match the embedded configuration");
        t.initial = io::state_from_json(h.at("initial_state"), t.config.domain);
        const auto& f = lines.back();
        if (!f.value("end", false)) throw MalformedTrace("missing footer");
        const auto outcome = f.at("outcome").get<std::string>();
        if (outcome == "completed")
            t.outcome = Outcome::completed;
        else if (outcome == "budget-exhausted")
            t.outcome = Outcome::budget_exhausted;
        else
            throw MalformedTrace("unknown outcome '" + outcome + "'");
        t.final_state = io::state_from_json(f.at("final_state"), t.config.domain);
        for (std::size_t i = 1; i + 1 < lines.size(); ++i) t.steps.push_back(io::step_from_json(lines[i]));
        if (f.at("steps").get<std::size_t>() != t.steps.size()) throw MalformedTrace("footer step count mismatch");
    } catch (const io::json::exception& e) {
        throw MalformedTrace(std::string("malformed trace: ") + e.what());
    } catch (const ParseError& e) {
        throw MalformedTrace(std::string("embedded program does not parse: ") + e.what());
    }
    verify_trace(t);
    return t;
}

inline Trace trace_from_string(const std::string& text) {
    std::istringstream is(text);
    return read_trace(is);
}

} // namespace taserial
