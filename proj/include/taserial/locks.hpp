#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "taserial/value.hpp"

namespace taserial {

/// Index of a component machine within its run configuration.
struct MachineId {
    std::uint32_t value = 0;
    friend auto operator<=>(const MachineId&, const MachineId&) = default;
};

/// A (R-Loc, W-Loc) pair of lock requests or held locks.
struct LockPair {
    std::set<Location> reads;
    std::set<Location> writes;

    [[nodiscard]] bool empty() const noexcept { return reads.empty() && writes.empty(); }

    [[nodiscard]] std::set<Location> all() const {
        std::set<Location> out = reads;
        out.insert(writes.begin(), writes.end());
        return out;
    }

    friend bool operator==(const LockPair&, const LockPair&) = default;
};

/// R- and W-lock ownership per location.
class LockTable {
public:
    [[nodiscard]] bool r_locked(const Location& l, MachineId m) const { return holds(readers_, l, m); }
    [[nodiscard]] bool w_locked(const Location& l, MachineId m) const { return holds(writers_, l, m); }

    /// Some machine other than `m` holds a W-lock on `l`.
    [[nodiscard]] bool w_locked_by_other(const Location& l, MachineId m) const { return held_by_other(writers_, l, m); }
    [[nodiscard]] bool r_locked_by_other(const Location& l, MachineId m) const { return held_by_other(readers_, l, m); }

    [[nodiscard]] std::set<MachineId> w_holders(const Location& l) const { return holders(writers_, l); }
    [[nodiscard]] std::set<MachineId> r_holders(const Location& l) const { return holders(readers_, l); }

    /// LockedBy(M): every location M holds an R- or W-lock on.
    [[nodiscard]] std::set<Location> locked_by(MachineId m) const {
        std::set<Location> out = w_locked_by(m);
        for (const auto& [l, ms] : readers_)
            if (ms.count(m)) out.insert(l);
        return out;
    }

    [[nodiscard]] std::set<Location> w_locked_by(MachineId m) const {
        std::set<Location> out;
        for (const auto& [l, ms] : writers_)
            if (ms.count(m)) out.insert(l);
        return out;
    }

    [[nodiscard]] LockPair held_by(MachineId m) const {
        LockPair out;
        for (const auto& [l, ms] : readers_)
            if (ms.count(m)) out.reads.insert(l);
        out.writes = w_locked_by(m);
        return out;
    }

    void grant(MachineId m, const LockPair& locks) {
        for (const auto& l : locks.reads) readers_[l].insert(m);
        for (const auto& l : locks.writes) writers_[l].insert(m);
    }

    void unlock(const Location& l, MachineId m) {
        drop(readers_, l, m);
        drop(writers_, l, m);
    }

    /// Drops exactly the given locks. An R-lock obtained earlier on a
    /// location whose W-lock is released here survives.
    void release(MachineId m, const LockPair& locks) {
        for (const auto& l : locks.reads) drop(readers_, l, m);
        for (const auto& l : locks.writes) drop(writers_, l, m);
    }

    void release_all(MachineId m) {
        for (const auto& l : locked_by(m)) unlock(l, m);
    }

    /// First violation of: at most one W-lock per location, and a W-lock by
    /// one machine excludes R-locks of every other machine.
    [[nodiscard]] std::optional<std::string> safety_violation() const {
        for (const auto& [l, ws] : writers_) {
            if (ws.size() > 1) return "location " + l.to_string() + " W-locked by several machines";
            const MachineId owner = *ws.begin();
            auto it = readers_.find(l);
            if (it == readers_.end()) continue;
            for (const auto& r : it->second)
                if (r != owner)
                    return "location " + l.to_string() + " W-locked by machine " + std::to_string(owner.value) +
                           " and R-locked by machine " + std::to_string(r.value);
        }
        return std::nullopt;
    }

    [[nodiscard]] bool empty() const noexcept { return readers_.empty() && writers_.empty(); }

    friend bool operator==(const LockTable&, const LockTable&) = default;

private:
    using Index = std::map<Location, std::set<MachineId>>;

    static bool holds(const Index& idx, const Location& l, MachineId m) {
        auto it = idx.find(l);
        return it != idx.end() && it->second.count(m) > 0;
    }
    static bool held_by_other(const Index& idx, const Location& l, MachineId m) {
        auto it = idx.find(l);
        if (it == idx.end()) return false;
        for (const auto& h : it->second)
            if (h != m) return true;
        return false;
    }
    static std::set<MachineId> holders(const Index& idx, const Location& l) {
        auto it = idx.find(l);
        return it == idx.end() ? std::set<MachineId>{} : it->second;
    }
    static void drop(Index& idx, const Location& l, MachineId m) {
        auto it = idx.find(l);
        if (it == idx.end()) return;
        it->second.erase(m);
        if (it->second.empty()) idx.erase(it);
    }

    Index readers_;
    Index writers_;
};

} // namespace taserial
