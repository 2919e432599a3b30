#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace taserial {

struct Undef {
    auto operator<=>(const Undef&) const = default;
};

struct Symbol {
    std::string name;
    auto operator<=>(const Symbol&) const = default;
};

/// An element of the superuniverse: integer, boolean, symbol or `undef`.
/// Ordering is total (first by alternative, then by payload) so values can
/// key ordered containers and serialize canonically.
class Value {
public:
    using Storage = std::variant<Undef, std::int64_t, bool, Symbol>;

    Value() = default;

    static Value undef() { return Value{}; }
    static Value integer(std::int64_t v) { return Value{Storage{v}}; }
    static Value boolean(bool v) { return Value{Storage{v}}; }
    static Value symbol(std::string name) { return Value{Storage{Symbol{std::move(name)}}}; }

    [[nodiscard]] bool is_undef() const noexcept { return std::holds_alternative<Undef>(v_); }
    [[nodiscard]] bool is_integer() const noexcept { return std::holds_alternative<std::int64_t>(v_); }
    [[nodiscard]] bool is_boolean() const noexcept { return std::holds_alternative<bool>(v_); }
    [[nodiscard]] bool is_symbol() const noexcept { return std::holds_alternative<Symbol>(v_); }

    [[nodiscard]] std::int64_t as_integer() const { return std::get<std::int64_t>(v_); }
    [[nodiscard]] bool as_boolean() const { return std::get<bool>(v_); }
    [[nodiscard]] const std::string& as_symbol() const { return std::get<Symbol>(v_).name; }

    [[nodiscard]] bool is_true() const noexcept { return is_boolean() && std::get<bool>(v_); }

    [[nodiscard]] const Storage& storage() const noexcept { return v_; }

    [[nodiscard]] std::string to_string() const {
        struct Printer {
            std::string operator()(Undef) const { return "undef"; }
            std::string operator()(std::int64_t v) const { return std::to_string(v); }
            std::string operator()(bool v) const { return v ? "true" : "false"; }
            std::string operator()(const Symbol& s) const { return "'" + s.name; }
        };
        return std::visit(Printer{}, v_);
    }

    friend bool operator==(const Value&, const Value&) = default;
    friend auto operator<=>(const Value& a, const Value& b) { return a.v_ <=> b.v_; }

private:
    explicit Value(Storage v) : v_(std::move(v)) {}

    Storage v_;
};

/// A state location: a function name applied to an argument tuple.
struct Location {
    std::string func;
    std::vector<Value> args;

    [[nodiscard]] std::string to_string() const {
        if (args.empty()) return func;
        std::string out = func + "(";
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (i) out += ",";
            out += args[i].to_string();
        }
        return out + ")";
    }

    friend bool operator==(const Location&, const Location&) = default;
    friend auto operator<=>(const Location&, const Location&) = default;
};

/// Stable 64-bit FNV-1a; used for digests that must agree across platforms.
class Fnv1a {
public:
    void add(std::string_view bytes) noexcept {
        for (unsigned char c : bytes) {
            h_ ^= c;
            h_ *= 0x100000001b3ULL;
        }
    }
    void add_u64(std::uint64_t v) noexcept {
        for (int i = 0; i < 8; ++i) {
            h_ ^= static_cast<unsigned char>(v >> (8 * i));
            h_ *= 0x100000001b3ULL;
        }
    }
    [[nodiscard]] std::uint64_t digest() const noexcept { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

} // namespace taserial
