#pragma once

// Run manifests:
//
//   # comment
//   seed = 7
//   max_steps = 500
//   domain = 0..7              (or a list: 0, 1, 'red, true)
//   wait_mode = retry          (retry | suspend)
//   lock_policy = random       (random | fifo | lowest-id), likewise
//   commit_policy, recovery_policy
//   victim_policy = shortest-history
//   composition = synchronous  (synchronous | interleaving)
//   program = bank.asm         (repeatable; paths relative to the manifest)
//   register = Auditor@5
//
// A program file given directly is a manifest with defaults for everything.

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "taserial/config.hpp"
#include "taserial/dsl.hpp"

namespace taserial {

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// TASERIAL_SEED when set and numeric, else 0.
inline std::uint64_t default_seed() {
    if (const char* s = std::getenv("TASERIAL_SEED")) {
        std::size_t used = 0;
        std::uint64_t v = 0;
        try {
            if (std::isdigit(static_cast<unsigned char>(s[0]))) v = std::stoull(s, &used);
        } catch (const std::exception&) {
        }
        if (used == 0 || s[used] != '\0') throw ConfigError(std::string("TASERIAL_SEED is not a number: ") + s);
        return v;
    }
    return 0;
}

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline Value parse_domain_value(const std::string& text) {
    if (text == "true") return Value::boolean(true);
    if (text == "false") return Value::boolean(false);
    if (!text.empty() && text[0] == '\'') return Value::symbol(text.substr(1));
    try {
        std::size_t used = 0;
        const auto v = std::stoll(text, &used);
        if (used == text.size()) return Value::integer(v);
    } catch (const std::exception&) {
    }
    throw ConfigError("bad domain element '" + text + "'");
}

inline std::vector<Value> parse_domain(const std::string& text) {
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const auto lo = parse_domain_value(trim(text.substr(0, dots)));
        const auto hi = parse_domain_value(trim(text.substr(dots + 2)));
        if (!lo.is_integer() || !hi.is_integer() || hi.as_integer() < lo.as_integer() ||
            hi.as_integer() - lo.as_integer() > 100000)
            throw ConfigError("bad domain range '" + text + "'");
        std::vector<Value> out;
        for (auto i = lo.as_integer(); i <= hi.as_integer(); ++i) out.push_back(Value::integer(i));
        return out;
    }
    std::vector<Value> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_domain_value(trim(item)));
    return out;
}

template <class T>
T need(std::optional<T> v, const std::string& key, const std::string& text) {
    if (!v) throw ConfigError("bad value '" + text + "' for " + key);
    return *v;
}

inline std::size_t parse_count(const std::string& key, const std::string& text) {
    if (text.empty() || !std::isdigit(static_cast<unsigned char>(text[0])))
        throw ConfigError("bad value '" + text + "' for " + key);
    try {
        std::size_t used = 0;
        const auto v = std::stoull(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("bad value '" + text + "' for " + key);
}

} // namespace detail

/// Parses manifest text. Program paths are resolved against `base`.
inline RunConfig parse_manifest(const std::string& text, const std::filesystem::path& base = ".") {
    RunConfig cfg;
    cfg.seed = default_seed();
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const auto key = detail::trim(line.substr(0, eq));
        const auto val = detail::trim(line.substr(eq + 1));
        if (key == "seed") {
            cfg.seed = detail::parse_count(key, val);
        } else if (key == "max_steps") {
            cfg.max_steps = detail::parse_count(key, val);
        } else if (key == "domain") {
            cfg.domain = detail::parse_domain(val);
        } else if (key == "wait_mode") {
            cfg.wait_mode = detail::need(parse_wait_mode(val), key, val);
        } else if (key == "lock_policy") {
            cfg.policies.lock_requests = detail::need(parse_selection_policy(val), key, val);
        } else if (key == "commit_policy") {
            cfg.policies.commits = detail::need(parse_selection_policy(val), key, val);
        } else if (key == "recovery_policy") {
            cfg.policies.recovery = detail::need(parse_selection_policy(val), key, val);
        } else if (key == "victim_policy") {
            cfg.policies.victims = detail::need(parse_victim_policy(val), key, val);
        } else if (key == "composition") {
            cfg.composition = detail::need(parse_composition(val), key, val);
        } else if (key == "program") {
            const auto path = base / val;
            for (auto& p : parse_programs(read_file(path))) cfg.programs.push_back(std::move(p));
        } else if (key == "register") {
            const auto at = val.find('@');
            if (at == std::string::npos) throw ConfigError("register expects NAME@STEP, got '" + val + "'");
            cfg.registration[detail::trim(val.substr(0, at))] =
                detail::parse_count(key, detail::trim(val.substr(at + 1)));
        } else {
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

/// Loads a manifest, or a program file (extension .asm) as a one-file
/// configuration with default settings.
inline RunConfig load_config(const std::filesystem::path& path) {
    const auto text = read_file(path);
    if (path.extension() == ".asm") {
        RunConfig cfg;
        cfg.seed = default_seed();
        cfg.programs = parse_programs(text);
        cfg.validate();
        return cfg;
    }
    return parse_manifest(text, path.parent_path());
}

} // namespace taserial
