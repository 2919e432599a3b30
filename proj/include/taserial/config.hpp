#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "taserial/controller.hpp"
#include "taserial/dsl.hpp"
#include "taserial/interp.hpp"
#include "taserial/json_io.hpp"
#include "taserial/machine.hpp"
#include "taserial/wrapper.hpp"

namespace taserial {

enum class Composition { synchronous, interleaving };

inline std::string_view to_string(Composition c) {
    return c == Composition::synchronous ? "synchronous" : "interleaving";
}

inline std::optional<Composition> parse_composition(std::string_view s) {
    if (s == "synchronous") return Composition::synchronous;
    if (s == "interleaving") return Composition::interleaving;
    return std::nullopt;
}

inline std::string_view to_string(WaitMode m) { return m == WaitMode::retry ? "retry" : "suspend"; }

inline std::optional<WaitMode> parse_wait_mode(std::string_view s) {
    if (s == "retry") return WaitMode::retry;
    if (s == "suspend") return WaitMode::suspend;
    return std::nullopt;
}

/// Everything that determines a run.
struct RunConfig {
    std::uint64_t seed = 0;
    std::size_t max_steps = 1000;
    std::vector<Value> domain = State::default_domain();
    WaitMode wait_mode = WaitMode::retry;
    Policies policies;
    Composition composition = Composition::synchronous;
    std::vector<MachineProgram> programs;
    std::map<std::string, std::size_t> registration;  // step at which a machine joins; default 0

    [[nodiscard]] std::size_t registration_step(const std::string& machine) const {
        auto it = registration.find(machine);
        return it == registration.end() ? 0 : it->second;
    }

    [[nodiscard]] const MachineProgram& program(const std::string& name) const {
        for (const auto& p : programs)
            if (p.name == name) return p;
        throw UnknownMachine("no machine named '" + name + "'");
    }

    [[nodiscard]] std::optional<std::size_t> index_of(const std::string& name) const {
        for (std::size_t i = 0; i < programs.size(); ++i)
            if (programs[i].name == name) return i;
        return std::nullopt;
    }

    /// Throws ConfigError on duplicate machine names, registrations for
    /// unknown machines, an empty machine list or a zero step budget.
    void validate() const {
        if (programs.empty()) throw ConfigError("no machines configured");
        if (max_steps == 0) throw ConfigError("max_steps must be positive");
        std::set<std::string> names;
        for (const auto& p : programs) {
            if (!names.insert(p.name).second) throw ConfigError("duplicate machine name '" + p.name + "'");
            p.validate();
        }
        for (const auto& [m, _] : registration)
            if (!names.count(m)) throw ConfigError("registration for unknown machine '" + m + "'");
        State probe(domain);
        (void)probe;
    }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Closed-system check: every shared or monitored function of a machine is
/// written (shared, output or controlled) by some other machine, and every
/// output function is read (shared or monitored) by some other machine.
/// Each entry is a warning; none of them stops a run.
inline std::vector<std::string> closed_system_warnings(const std::vector<MachineProgram>& programs) {
    std::map<std::string, std::set<std::string>> writers, readers, controllers;
    for (const auto& p : programs) {
        for (const auto& [f, _] : p.classes.shared) {
            readers[f].insert(p.name);
            writers[f].insert(p.name);
        }
        for (const auto& [f, _] : p.classes.monitored) readers[f].insert(p.name);
        for (const auto& [f, _] : p.classes.output) writers[f].insert(p.name);
        std::set<std::string> assigned = detail::assigned_functions(p.init, p.rules);
        for (const auto& f : detail::assigned_functions(p.main, p.rules)) assigned.insert(f);
        for (const auto& f : assigned)
            if (p.classes.kind_of(f) == LocationKind::controlled) controllers[f].insert(p.name);
    }
    auto other = [](const std::map<std::string, std::set<std::string>>& idx, const std::string& f,
                    const std::string& me) {
        auto it = idx.find(f);
        if (it == idx.end()) return false;
        return it->second.size() > 1 || (it->second.size() == 1 && !it->second.count(me));
    };
    std::vector<std::string> out;
    for (const auto& p : programs) {
        for (const auto* cls : {&p.classes.shared, &p.classes.monitored})
            for (const auto& [f, _] : *cls)
                if (!other(writers, f, p.name) && !other(controllers, f, p.name))
                    out.push_back(p.name + ": '" + f + "' is read here but written by no other machine");
        for (const auto& [f, _] : p.classes.output)
            if (!other(readers, f, p.name))
                out.push_back(p.name + ": output '" + f + "' is read by no other machine");
    }
    for (const auto& [f, who] : controllers)
        if (who.size() > 1)
            out.push_back("private function '" + f + "' is controlled by more than one machine (" + *who.begin() +
                          ", " + *std::next(who.begin()) + ")");
    return out;
}

/// S0: the init rules applied one machine after another in declaration
/// order, each evaluated in the state produced by its predecessors.
inline State initial_state(const RunConfig& cfg) {
    State s(cfg.domain);
    for (const auto& p : cfg.programs) {
        SeedStream rng(derive_seed(cfg.seed, "init/" + p.name));
        auto u = yields(p.init, s, {}, rng, p.rules);
        s = apply(s, u);
    }
    return s;
}

inline io::json config_to_json(const RunConfig& cfg, bool with_seed = true) {
    io::json j;
    if (with_seed) j["seed"] = cfg.seed;
    j["max_steps"] = cfg.max_steps;
    j["domain"] = io::domain_to_json(cfg.domain);
    j["wait_mode"] = std::string(to_string(cfg.wait_mode));
    j["lock_policy"] = std::string(to_string(cfg.policies.lock_requests));
    j["commit_policy"] = std::string(to_string(cfg.policies.commits));
    j["recovery_policy"] = std::string(to_string(cfg.policies.recovery));
    j["victim_policy"] = std::string(to_string(cfg.policies.victims));
    j["composition"] = std::string(to_string(cfg.composition));
    io::json progs = io::json::array();
    for (const auto& p : cfg.programs)
        progs.push_back({{"name", p.name}, {"register", cfg.registration_step(p.name)}, {"source", print_program(p)}});
    j["programs"] = std::move(progs);
    return j;
}

/// Digest of the canonical configuration, seed excluded.
inline std::string config_digest(const RunConfig& cfg) {
    Fnv1a h;
    h.add(config_to_json(cfg, false).dump());
    return hex64(h.digest());
}

inline RunConfig config_from_json(const io::json& j) {
    try {
        RunConfig cfg;
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.max_steps = j.at("max_steps").get<std::size_t>();
        cfg.domain = io::domain_from_json(j.at("domain"));
        auto need = [](auto opt, const std::string& what) {
            if (!opt) throw ConfigError("bad " + what);
            return *opt;
        };
        cfg.wait_mode = need(parse_wait_mode(j.at("wait_mode").get<std::string>()), "wait_mode");
        cfg.policies.lock_requests =
            need(parse_selection_policy(j.at("lock_policy").get<std::string>()), "lock_policy");
        cfg.policies.commits = need(parse_selection_policy(j.at("commit_policy").get<std::string>()), "commit_policy");
        cfg.policies.recovery =
            need(parse_selection_policy(j.at("recovery_policy").get<std::string>()), "recovery_policy");
        cfg.policies.victims = need(parse_victim_policy(j.at("victim_policy").get<std::string>()), "victim_policy");
        cfg.composition = need(parse_composition(j.at("composition").get<std::string>()), "composition");
        for (const auto& p : j.at("programs")) {
            auto prog = parse_program(p.at("source").get<std::string>());
            if (prog.name != p.at("name").get<std::string>()) throw ConfigError("program name mismatch");
            const auto reg = p.value("register", std::size_t{0});
            if (reg != 0) cfg.registration[prog.name] = reg;
            cfg.programs.push_back(std::move(prog));
        }
        cfg.validate();
        return cfg;
    } catch (const io::json::exception& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what());
    }
}

} // namespace taserial
