#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "taserial/errors.hpp"
#include "taserial/value.hpp"

namespace taserial {

/// Variable bindings threaded through evaluation.
using Interpretation = std::map<std::string, Value>;

struct Update {
    Location loc;
    Value value;

    [[nodiscard]] std::string to_string() const { return "(" + loc.to_string() + " := " + value.to_string() + ")"; }

    friend bool operator==(const Update&, const Update&) = default;
    friend auto operator<=>(const Update&, const Update&) = default;
};

/// A set of (location, value) pairs. Consistent iff no location occurs with
/// two distinct values.
class UpdateSet {
public:
    using const_iterator = std::set<Update>::const_iterator;

    UpdateSet() = default;
    UpdateSet(std::initializer_list<Update> init) : updates_(init) {}

    void insert(Update u) { updates_.insert(std::move(u)); }
    void insert(Location loc, Value v) { updates_.insert(Update{std::move(loc), std::move(v)}); }
    void merge(const UpdateSet& other) { updates_.insert(other.updates_.begin(), other.updates_.end()); }

    [[nodiscard]] bool consistent() const {
        const Location* prev = nullptr;
        for (const auto& u : updates_) {
            if (prev && *prev == u.loc) return false;
            prev = &u.loc;
        }
        return true;
    }

    /// Locations that receive more than one value.
    [[nodiscard]] std::vector<Location> clashes() const {
        std::vector<Location> out;
        const Location* prev = nullptr;
        for (const auto& u : updates_) {
            if (prev && *prev == u.loc && (out.empty() || out.back() != u.loc)) out.push_back(u.loc);
            prev = &u.loc;
        }
        return out;
    }

    [[nodiscard]] std::set<Location> locations() const {
        std::set<Location> out;
        for (const auto& u : updates_) out.insert(u.loc);
        return out;
    }

    /// `*this ⊕ later`: every update of `later`, plus ours on locations that
    /// `later` leaves alone.
    [[nodiscard]] UpdateSet overridden_by(const UpdateSet& later) const {
        UpdateSet out = later;
        auto overridden = later.locations();
        for (const auto& u : updates_)
            if (!overridden.count(u.loc)) out.insert(u);
        return out;
    }

    [[nodiscard]] bool empty() const noexcept { return updates_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return updates_.size(); }
    [[nodiscard]] const_iterator begin() const noexcept { return updates_.begin(); }
    [[nodiscard]] const_iterator end() const noexcept { return updates_.end(); }
    [[nodiscard]] const std::set<Update>& updates() const noexcept { return updates_; }

    friend bool operator==(const UpdateSet&, const UpdateSet&) = default;

private:
    std::set<Update> updates_;
};

inline std::vector<std::string> describe_clashes(const UpdateSet& u) {
    std::vector<std::string> out;
    for (const auto& loc : u.clashes()) out.push_back(loc.to_string());
    return out;
}

/// Finite map from locations to values plus the finite quantifier domain.
/// Unmapped locations read as `undef`; writing `undef` removes the entry so
/// equal states have equal representations.
class State {
public:
    State() : domain_(default_domain()) {}
    explicit State(std::vector<Value> domain) : domain_(std::move(domain)) {
        if (domain_.empty()) throw ConfigError("state domain must be nonempty");
        std::set<Value> seen(domain_.begin(), domain_.end());
        if (seen.size() != domain_.size()) throw ConfigError("state domain has duplicate elements");
    }

    static std::vector<Value> default_domain(std::int64_t size = 8) {
        std::vector<Value> out;
        for (std::int64_t i = 0; i < size; ++i) out.push_back(Value::integer(i));
        return out;
    }

    [[nodiscard]] Value get(const Location& loc) const {
        auto it = values_.find(loc);
        return it == values_.end() ? Value::undef() : it->second;
    }

    void set(const Location& loc, const Value& v) {
        if (v.is_undef())
            values_.erase(loc);
        else
            values_[loc] = v;
    }

    [[nodiscard]] const std::vector<Value>& domain() const noexcept { return domain_; }
    [[nodiscard]] const std::map<Location, Value>& values() const noexcept { return values_; }

    /// Canonical 64-bit digest (sorted location order) for replay checks.
    [[nodiscard]] std::uint64_t digest() const {
        Fnv1a h;
        for (const auto& [loc, v] : values_) {
            h.add(loc.to_string());
            h.add("=");
            h.add(v.to_string());
            h.add(";");
        }
        return h.digest();
    }

    friend bool operator==(const State&, const State&) = default;

private:
    std::map<Location, Value> values_;
    std::vector<Value> domain_;
};

/// S + U. Throws InconsistentUpdateSet when `u` is not consistent.
inline State apply(const State& s, const UpdateSet& u) {
    if (!u.consistent()) throw InconsistentUpdateSet(describe_clashes(u));
    State out = s;
    for (const auto& up : u) out.set(up.loc, up.value);
    return out;
}

} // namespace taserial
