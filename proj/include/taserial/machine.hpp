#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "taserial/syntax.hpp"

namespace taserial {

enum class LocationKind { controlled, shared, monitored, output };

/// Per-machine classification of function names. Anything not declared
/// shared, monitored or output is controlled (private) by the machine.
struct LocationClass {
    std::map<std::string, std::size_t> shared;
    std::map<std::string, std::size_t> monitored;
    std::map<std::string, std::size_t> output;

    [[nodiscard]] LocationKind kind_of(const std::string& func) const {
        if (shared.count(func)) return LocationKind::shared;
        if (monitored.count(func)) return LocationKind::monitored;
        if (output.count(func)) return LocationKind::output;
        return LocationKind::controlled;
    }

    /// Shared ∪ Monitored: reads here need a lock.
    [[nodiscard]] bool lock_on_read(const std::string& func) const {
        return shared.count(func) > 0 || monitored.count(func) > 0;
    }

    /// Shared ∪ Output: writes here need a write lock.
    [[nodiscard]] bool lock_on_write(const std::string& func) const {
        return shared.count(func) > 0 || output.count(func) > 0;
    }

    [[nodiscard]] std::optional<std::size_t> declared_arity(const std::string& func) const {
        for (const auto* m : {&shared, &monitored, &output}) {
            auto it = m->find(func);
            if (it != m->end()) return it->second;
        }
        return std::nullopt;
    }

    /// Throws ConfigError unless the three declared classes are disjoint.
    void check_disjoint() const {
        for (const auto& [f, _] : shared)
            if (monitored.count(f) || output.count(f))
                throw ConfigError("function '" + f + "' declared in more than one location class");
        for (const auto& [f, _] : monitored)
            if (output.count(f)) throw ConfigError("function '" + f + "' declared in more than one location class");
    }

    friend bool operator==(const LocationClass&, const LocationClass&) = default;
};

/// One component machine: its location classes, initial assignments,
/// termination criterion, main rule and named auxiliary rules.
struct MachineProgram {
    std::string name;
    LocationClass classes;
    Rule init = Rule::skip();
    Formula terminated = Formula::truth(false);
    Rule main = Rule::skip();
    RuleTable rules;

    void validate() const {
        classes.check_disjoint();
        taserial::validate(main, rules);
        taserial::validate(init, rules);
    }

    friend bool operator==(const MachineProgram&, const MachineProgram&) = default;
};

} // namespace taserial
