#pragma once

// JSON encodings shared by traces and verdicts.
//   value:    number | bool | null (undef) | string (symbol)
//   location: ["f", [args...]]
//   update:   [location, value]

#include <json.hpp>
#include <set>
#include <string>

#include "taserial/errors.hpp"
#include "taserial/locks.hpp"
#include "taserial/state.hpp"
#include "taserial/value.hpp"

namespace taserial::io {

using json = nlohmann::json;

inline json to_json(const Value& v) {
    if (v.is_integer()) return v.as_integer();
    if (v.is_boolean()) return v.as_boolean();
    if (v.is_symbol()) return v.as_symbol();
    return nullptr;
}

inline Value value_from_json(const json& j) {
    if (j.is_null()) return Value::undef();
    if (j.is_boolean()) return Value::boolean(j.get<bool>());
    if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
    if (j.is_string()) return Value::symbol(j.get<std::string>());
    throw MalformedTrace("not a value: " + j.dump());
}

inline json to_json(const Location& l) {
    json args = json::array();
    for (const auto& a : l.args) args.push_back(to_json(a));
    return json::array({l.func, std::move(args)});
}

inline Location location_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_string() || !j[1].is_array())
        throw MalformedTrace("not a location: " + j.dump());
    Location l;
    l.func = j[0].get<std::string>();
    for (const auto& a : j[1]) l.args.push_back(value_from_json(a));
    return l;
}

inline json to_json(const Update& u) { return json::array({to_json(u.loc), to_json(u.value)}); }

inline Update update_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) throw MalformedTrace("not an update: " + j.dump());
    return Update{location_from_json(j[0]), value_from_json(j[1])};
}

template <class Range>
json updates_to_json(const Range& r) {
    json out = json::array();
    for (const auto& u : r) out.push_back(to_json(u));
    return out;
}

inline UpdateSet update_set_from_json(const json& j) {
    if (!j.is_array()) throw MalformedTrace("not an update list: " + j.dump());
    UpdateSet out;
    for (const auto& u : j) out.insert(update_from_json(u));
    return out;
}

inline std::set<Update> update_list_from_json(const json& j) {
    if (!j.is_array()) throw MalformedTrace("not an update list: " + j.dump());
    std::set<Update> out;
    for (const auto& u : j) out.insert(update_from_json(u));
    return out;
}

inline json to_json(const std::set<Location>& ls) {
    json out = json::array();
    for (const auto& l : ls) out.push_back(to_json(l));
    return out;
}

inline std::set<Location> locations_from_json(const json& j) {
    if (!j.is_array()) throw MalformedTrace("not a location list: " + j.dump());
    std::set<Location> out;
    for (const auto& l : j) out.insert(location_from_json(l));
    return out;
}

inline json state_to_json(const State& s) {
    json out = json::array();
    for (const auto& [l, v] : s.values()) out.push_back(json::array({to_json(l), to_json(v)}));
    return out;
}

inline json domain_to_json(const std::vector<Value>& d) {
    json out = json::array();
    for (const auto& v : d) out.push_back(to_json(v));
    return out;
}

inline std::vector<Value> domain_from_json(const json& j) {
    if (!j.is_array()) throw MalformedTrace("not a domain: " + j.dump());
    std::vector<Value> out;
    for (const auto& v : j) out.push_back(value_from_json(v));
    return out;
}

inline State state_from_json(const json& j, std::vector<Value> domain) {
    State s(std::move(domain));
    for (const auto& u : update_set_from_json(j)) s.set(u.loc, u.value);
    return s;
}

} // namespace taserial::io
