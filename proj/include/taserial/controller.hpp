#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "taserial/errors.hpp"
#include "taserial/locks.hpp"
#include "taserial/seed.hpp"
#include "taserial/wrapper.hpp"

namespace taserial {

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

/// How the lock handler, commit and recovery components resolve `choose`.
enum class SelectionPolicy { random, fifo, lowest_id };

/// Which deadlocked machine becomes the victim.
enum class VictimPolicy { shortest_history, longest_history, lowest_id, random };

struct Policies {
    SelectionPolicy lock_requests = SelectionPolicy::random;
    SelectionPolicy commits = SelectionPolicy::random;
    SelectionPolicy recovery = SelectionPolicy::random;
    VictimPolicy victims = VictimPolicy::shortest_history;

    friend bool operator==(const Policies&, const Policies&) = default;
};

inline std::string_view to_string(SelectionPolicy p) {
    switch (p) {
        case SelectionPolicy::random: return "random";
        case SelectionPolicy::fifo: return "fifo";
        case SelectionPolicy::lowest_id: return "lowest-id";
    }
    return "?";
}

inline std::string_view to_string(VictimPolicy p) {
    switch (p) {
        case VictimPolicy::shortest_history: return "shortest-history";
        case VictimPolicy::longest_history: return "longest-history";
        case VictimPolicy::lowest_id: return "lowest-id";
        case VictimPolicy::random: return "random";
    }
    return "?";
}

inline std::optional<SelectionPolicy> parse_selection_policy(std::string_view s) {
    for (auto p : {SelectionPolicy::random, SelectionPolicy::fifo, SelectionPolicy::lowest_id})
        if (to_string(p) == s) return p;
    return std::nullopt;
}

inline std::optional<VictimPolicy> parse_victim_policy(std::string_view s) {
    for (auto p : {VictimPolicy::shortest_history, VictimPolicy::longest_history, VictimPolicy::lowest_id,
                   VictimPolicy::random})
        if (to_string(p) == s) return p;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Controller state
// ---------------------------------------------------------------------------

struct PendingRequest {
    MachineId machine;
    LockPair locks;
    std::uint64_t seq = 0;

    friend bool operator==(const PendingRequest&, const PendingRequest&) = default;
};

struct PendingCommit {
    MachineId machine;
    std::uint64_t seq = 0;

    friend bool operator==(const PendingCommit&, const PendingCommit&) = default;
};

struct ControllerState {
    std::set<MachineId> transact;
    std::vector<PendingRequest> lock_requests;  // insertion order
    std::vector<PendingCommit> commit_requests;
    std::set<MachineId> victims;
    LockTable locks;
    std::uint64_t next_seq = 0;

    void insert_lock_request(MachineId m, LockPair locks_wanted) {
        lock_requests.push_back(PendingRequest{m, std::move(locks_wanted), next_seq++});
    }
    void insert_commit_request(MachineId m) { commit_requests.push_back(PendingCommit{m, next_seq++}); }

    void delete_lock_request(MachineId m) {
        std::erase_if(lock_requests, [&](const PendingRequest& r) { return r.machine == m; });
    }

    [[nodiscard]] bool has_lock_request(MachineId m) const {
        return std::any_of(lock_requests.begin(), lock_requests.end(),
                           [&](const PendingRequest& r) { return r.machine == m; });
    }
    [[nodiscard]] bool has_commit_request(MachineId m) const {
        return std::any_of(commit_requests.begin(), commit_requests.end(),
                           [&](const PendingCommit& c) { return c.machine == m; });
    }

    /// Throws InvariantViolation when 2PL safety or request-set disjointness
    /// fails.
    void check_invariants() const {
        if (auto v = locks.safety_violation()) throw InvariantViolation("2PL safety: " + *v);
        for (const auto& c : commit_requests) {
            if (has_lock_request(c.machine))
                throw InvariantViolation("machine " + std::to_string(c.machine.value) +
                                         " has both a commit and a lock request");
            if (victims.count(c.machine))
                throw InvariantViolation("machine " + std::to_string(c.machine.value) +
                                         " is a victim with a pending commit");
        }
    }

    friend bool operator==(const ControllerState&, const ControllerState&) = default;
};

// ---------------------------------------------------------------------------
// Lock handler
// ---------------------------------------------------------------------------

/// Some requested location is W-locked by another transaction, or some
/// requested write location is R-locked by another transaction.
inline bool cannot_be_granted(MachineId m, const LockPair& wanted, const ControllerState& cs) {
    auto conflicts = [&](const Location& l, bool for_write) {
        for (const auto& n : cs.locks.w_holders(l))
            if (n != m && cs.transact.count(n)) return true;
        if (!for_write) return false;
        for (const auto& n : cs.locks.r_holders(l))
            if (n != m && cs.transact.count(n)) return true;
        return false;
    };
    for (const auto& l : wanted.reads)
        if (conflicts(l, wanted.writes.count(l) > 0)) return true;
    for (const auto& l : wanted.writes)
        if (conflicts(l, true)) return true;
    return false;
}

namespace detail {

template <class Item>
std::size_t select_index(const std::vector<Item>& items, SelectionPolicy policy, SeedStream& rng) {
    switch (policy) {
        case SelectionPolicy::fifo:
            return static_cast<std::size_t>(
                std::min_element(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.seq < b.seq; }) -
                items.begin());
        case SelectionPolicy::lowest_id:
            return static_cast<std::size_t>(std::min_element(items.begin(), items.end(),
                                                             [](const Item& a, const Item& b) {
                                                                 return a.machine < b.machine;
                                                             }) -
                                            items.begin());
        case SelectionPolicy::random:
            break;
    }
    return rng.pick(items.size());
}

} // namespace detail

struct LockDecision {
    MachineId machine;
    LockPair locks;
    bool granted = false;

    friend bool operator==(const LockDecision&, const LockDecision&) = default;
};

/// choose (M, L) ∈ LockRequest and decide it. In suspend mode only
/// grantable requests of non-victims are eligible, and nothing is refused.
inline std::optional<LockDecision> decide_lock_request(const ControllerState& cs, SelectionPolicy policy,
                                                       SeedStream& rng, WaitMode mode = WaitMode::retry) {
    std::vector<PendingRequest> eligible;
    for (const auto& r : cs.lock_requests) {
        if (mode == WaitMode::suspend && (cs.victims.count(r.machine) || cannot_be_granted(r.machine, r.locks, cs)))
            continue;
        eligible.push_back(r);
    }
    if (eligible.empty()) return std::nullopt;
    const auto& chosen = eligible[detail::select_index(eligible, policy, rng)];
    return LockDecision{chosen.machine, chosen.locks, !cannot_be_granted(chosen.machine, chosen.locks, cs)};
}

/// GrantRequestedLocks when granted; the request is deleted either way.
/// The Granted/Refused flags live in the machine's control block.
inline void apply_lock_decision(ControllerState& cs, const LockDecision& d) {
    if (d.granted) cs.locks.grant(d.machine, d.locks);
    cs.delete_lock_request(d.machine);
}

struct LockHandlerResult {
    ControllerState state;
    std::optional<LockDecision> decision;
};

inline LockHandlerResult lock_handler_step(const ControllerState& cs, SelectionPolicy policy, SeedStream& rng,
                                           WaitMode mode = WaitMode::retry) {
    LockHandlerResult out{cs, decide_lock_request(cs, policy, rng, mode)};
    if (out.decision) apply_lock_decision(out.state, *out.decision);
    return out;
}

// ---------------------------------------------------------------------------
// Commit
// ---------------------------------------------------------------------------

inline std::optional<MachineId> choose_commit(const ControllerState& cs, SelectionPolicy policy, SeedStream& rng) {
    if (cs.commit_requests.empty()) return std::nullopt;
    return cs.commit_requests[detail::select_index(cs.commit_requests, policy, rng)].machine;
}

/// Unlock everything M holds and drop it from CommitRequest and TransAct.
inline void apply_commit(ControllerState& cs, MachineId m) {
    cs.locks.release_all(m);
    std::erase_if(cs.commit_requests, [&](const PendingCommit& c) { return c.machine == m; });
    cs.transact.erase(m);
}

struct CommitResult {
    ControllerState state;
    std::optional<MachineId> committed;
};

inline CommitResult commit_step(const ControllerState& cs, SelectionPolicy policy, SeedStream& rng) {
    CommitResult out{cs, choose_commit(cs, policy, rng)};
    if (out.committed) apply_commit(out.state, *out.committed);
    return out;
}

// ---------------------------------------------------------------------------
// Deadlock detection
// ---------------------------------------------------------------------------

struct WaitGraph {
    std::set<std::pair<MachineId, MachineId>> edges;

    [[nodiscard]] bool has_edge(MachineId a, MachineId b) const { return edges.count({a, b}) > 0; }

    [[nodiscard]] std::set<MachineId> nodes() const {
        std::set<MachineId> out;
        for (const auto& [a, b] : edges) {
            out.insert(a);
            out.insert(b);
        }
        return out;
    }

    /// The graph with every edge touching `drop` removed.
    [[nodiscard]] WaitGraph without(const std::set<MachineId>& drop) const {
        WaitGraph out;
        for (const auto& e : edges)
            if (!drop.count(e.first) && !drop.count(e.second)) out.edges.insert(e);
        return out;
    }

    friend bool operator==(const WaitGraph&, const WaitGraph&) = default;
};

/// Wait(M, N) iff some l in newLocks(M) is W-locked by N ∈ TransAct \ {M},
/// or l is wanted for writing and R-locked by N. `needs` maps each machine
/// to its current newLocks pair.
inline WaitGraph wait_relation(const ControllerState& cs, const std::map<MachineId, LockPair>& needs) {
    WaitGraph g;
    for (const auto& [m, wanted] : needs) {
        if (!cs.transact.count(m)) continue;
        for (const auto& l : wanted.all()) {
            for (const auto& n : cs.locks.w_holders(l))
                if (n != m && cs.transact.count(n)) g.edges.insert({m, n});
            if (!wanted.writes.count(l)) continue;
            for (const auto& n : cs.locks.r_holders(l))
                if (n != m && cs.transact.count(n)) g.edges.insert({m, n});
        }
    }
    return g;
}

/// {M | (M, M) ∈ Wait*} with Wait* the transitive (non-reflexive) closure,
/// computed by Warshall's algorithm.
inline std::set<MachineId> deadlocked(const WaitGraph& g) {
    const auto nodes_set = g.nodes();
    const std::vector<MachineId> nodes(nodes_set.begin(), nodes_set.end());
    const std::size_t n = nodes.size();
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) reach[i][j] = g.has_edge(nodes[i], nodes[j]) ? 1 : 0;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (reach[i][k])
                for (std::size_t j = 0; j < n; ++j)
                    if (reach[k][j]) reach[i][j] = 1;
    std::set<MachineId> out;
    for (std::size_t i = 0; i < n; ++i)
        if (reach[i][i]) out.insert(nodes[i]);
    return out;
}

/// Picks a nonempty victim subset of Deadlocked \ Victim (a single machine
/// under every built-in policy). Empty when there is nothing to resolve.
inline std::set<MachineId> choose_victims(const std::set<MachineId>& dead, const ControllerState& cs,
                                          const std::map<MachineId, std::size_t>& history_length, VictimPolicy policy,
                                          SeedStream& rng) {
    std::vector<MachineId> candidates;
    for (const auto& m : dead)
        if (!cs.victims.count(m)) candidates.push_back(m);
    if (candidates.empty()) return {};
    auto len = [&](MachineId m) {
        auto it = history_length.find(m);
        return it == history_length.end() ? std::size_t{0} : it->second;
    };
    MachineId chosen = candidates.front();
    switch (policy) {
        case VictimPolicy::shortest_history:
            chosen = *std::min_element(candidates.begin(), candidates.end(), [&](MachineId a, MachineId b) {
                return std::pair(len(a), a) < std::pair(len(b), b);
            });
            break;
        case VictimPolicy::longest_history:
            chosen = *std::min_element(candidates.begin(), candidates.end(), [&](MachineId a, MachineId b) {
                return len(a) != len(b) ? len(a) > len(b) : a < b;
            });
            break;
        case VictimPolicy::lowest_id:
            break;
        case VictimPolicy::random:
            chosen = candidates[rng.pick(candidates.size())];
            break;
    }
    return {chosen};
}

struct DeadlockResult {
    ControllerState state;
    std::set<MachineId> new_victims;
};

inline DeadlockResult deadlock_handler_step(const ControllerState& cs, const std::set<MachineId>& dead,
                                            const std::map<MachineId, std::size_t>& history_length,
                                            VictimPolicy policy, SeedStream& rng) {
    DeadlockResult out{cs, choose_victims(dead, cs, history_length, policy, rng)};
    out.state.victims.insert(out.new_victims.begin(), out.new_victims.end());
    return out;
}

// ---------------------------------------------------------------------------
// Recovery
// ---------------------------------------------------------------------------

struct UndoResult {
    UpdateSet restore;  // Restore(ValSet), plus the step's private values
    HistoryEntry entry;
    std::size_t remaining = 0;
};

/// Pops the youngest history entry of `tcb`, releases its locks in `cs` and
/// returns the restoring updates.
inline UndoResult undo(TxControlBlock& tcb, ControllerState& cs) {
    if (tcb.history.empty())
        throw EmptyHistory("undo requested for machine " + std::to_string(tcb.id.value) + " with empty history");
    UndoResult out;
    out.entry = std::move(tcb.history.back());
    tcb.history.pop_back();
    out.restore = out.entry.val_set;
    out.restore.merge(out.entry.private_vals);
    cs.locks.release(tcb.id, out.entry.lock_set);
    out.remaining = tcb.history.size();
    return out;
}

enum class RecoveryKind { unvictimize, undo };

struct RecoveryChoice {
    MachineId machine;
    RecoveryKind kind = RecoveryKind::unvictimize;

    friend bool operator==(const RecoveryChoice&, const RecoveryChoice&) = default;
};

/// choose M ∈ Victim, TryToRecover(M): un-victimize it when it is no longer
/// deadlocked, otherwise undo its youngest step. Only victims that have
/// already entered waitForRecovery are eligible.
inline std::optional<RecoveryChoice> choose_recovery(const ControllerState& cs,
                                                     const std::map<MachineId, CtlState>& ctl_states,
                                                     const std::set<MachineId>& dead, SelectionPolicy policy,
                                                     SeedStream& rng) {
    struct Candidate {
        MachineId machine;
        std::uint64_t seq;
    };
    std::vector<Candidate> eligible;
    for (const auto& v : cs.victims) {
        auto it = ctl_states.find(v);
        if (it != ctl_states.end() && it->second == CtlState::wait_for_recovery)
            eligible.push_back(Candidate{v, v.value});
    }
    if (eligible.empty()) return std::nullopt;
    const MachineId m = eligible[detail::select_index(eligible, policy, rng)].machine;
    return RecoveryChoice{m, dead.count(m) ? RecoveryKind::undo : RecoveryKind::unvictimize};
}

struct RecoveryResult {
    ControllerState state;
    std::optional<RecoveryChoice> choice;
    std::optional<UndoResult> undone;
};

inline RecoveryResult recovery_step(const ControllerState& cs, std::map<MachineId, TxControlBlock>& tcbs,
                                    const std::set<MachineId>& dead, SelectionPolicy policy, SeedStream& rng) {
    std::map<MachineId, CtlState> states;
    for (const auto& [id, tcb] : tcbs) states[id] = tcb.ctl_state;
    RecoveryResult out{cs, choose_recovery(cs, states, dead, policy, rng), std::nullopt};
    if (!out.choice) return out;
    if (out.choice->kind == RecoveryKind::unvictimize)
        out.state.victims.erase(out.choice->machine);
    else
        out.undone = undo(tcbs.at(out.choice->machine), out.state);
    return out;
}

} // namespace taserial
