#pragma once

#include <string>
#include <variant>

#include "taserial/errors.hpp"
#include "taserial/state.hpp"
#include "taserial/syntax.hpp"

namespace taserial {

namespace detail {

inline std::int64_t require_integer(const Value& v, const char* op) {
    if (!v.is_integer())
        throw EvalError(EvalError::Kind::type_mismatch,
                        std::string("operator '") + op + "' expects integers, got " + v.to_string());
    return v.as_integer();
}

inline Value apply_static(const std::string& func, const std::vector<Value>& args) {
    if (args.size() != 2)
        throw EvalError(EvalError::Kind::arity_mismatch,
                        "static function '" + func + "' takes 2 arguments, got " + std::to_string(args.size()));
    const std::int64_t a = require_integer(args[0], func.c_str());
    const std::int64_t b = require_integer(args[1], func.c_str());
    std::int64_t r = 0;
    const bool overflow = func == "+" ? __builtin_add_overflow(a, b, &r) : __builtin_sub_overflow(a, b, &r);
    if (overflow) throw EvalError(EvalError::Kind::overflow, "integer overflow in '" + func + "'");
    return Value::integer(r);
}

} // namespace detail

inline Value eval_term(const Term& t, const State& s, const Interpretation& env);

/// Evaluated argument tuple of an application.
inline std::vector<Value> eval_args(const std::vector<Term>& args, const State& s, const Interpretation& env) {
    std::vector<Value> out;
    out.reserve(args.size());
    for (const auto& a : args) out.push_back(eval_term(a, s, env));
    return out;
}

/// Value of `t` in `s` under `env`. Dynamic functions are looked up in the
/// state; `+` and `-` are evaluated directly.
inline Value eval_term(const Term& t, const State& s, const Interpretation& env) {
    if (const auto* v = std::get_if<VarTerm>(&t.node)) {
        auto it = env.find(v->name);
        if (it == env.end()) throw EvalError(EvalError::Kind::unbound_variable, "unbound variable '" + v->name + "'");
        return it->second;
    }
    if (const auto* c = std::get_if<ConstTerm>(&t.node)) return c->value;
    const auto& app = std::get<ApplyTerm>(t.node);
    auto args = eval_args(app.args, s, env);
    if (is_static_function(app.func)) return detail::apply_static(app.func, args);
    return s.get(Location{app.func, std::move(args)});
}

inline bool eval_formula(const Formula& f, const State& s, const Interpretation& env) {
    return std::visit(
        [&](const auto& n) -> bool {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, fml::Truth>) {
                return n.value;
            } else if constexpr (std::is_same_v<N, fml::Atom>) {
                return s.get(Location{n.pred, eval_args(n.args, s, env)}).is_true();
            } else if constexpr (std::is_same_v<N, fml::Not>) {
                return !eval_formula(*n.sub, s, env);
            } else if constexpr (std::is_same_v<N, fml::And>) {
                // Both sides are evaluated so that evaluation errors do not
                // depend on short-circuiting.
                const bool a = eval_formula(*n.lhs, s, env);
                const bool b = eval_formula(*n.rhs, s, env);
                return a && b;
            } else if constexpr (std::is_same_v<N, fml::Or>) {
                const bool a = eval_formula(*n.lhs, s, env);
                const bool b = eval_formula(*n.rhs, s, env);
                return a || b;
            } else if constexpr (std::is_same_v<N, fml::Forall> || std::is_same_v<N, fml::Exists>) {
                constexpr bool universal = std::is_same_v<N, fml::Forall>;
                Interpretation inner = env;
                bool result = universal;
                for (const auto& d : s.domain()) {
                    inner[n.var] = d;
                    const bool holds = eval_formula(*n.body, s, inner);
                    if constexpr (universal)
                        result = result && holds;
                    else
                        result = result || holds;
                }
                return result;
            } else if constexpr (std::is_same_v<N, fml::Equal>) {
                return eval_term(n.lhs, s, env) == eval_term(n.rhs, s, env);
            } else {
                const auto a = eval_term(n.lhs, s, env);
                const auto b = eval_term(n.rhs, s, env);
                return detail::require_integer(a, "<") < detail::require_integer(b, "<");
            }
        },
        f.node);
}

/// {d ∈ domain(S) | guard holds with var ↦ d}, in domain order.
inline std::vector<Value> guard_range(const std::string& var, const Formula& guard, const State& s,
                                      const Interpretation& env) {
    std::vector<Value> out;
    Interpretation inner = env;
    for (const auto& d : s.domain()) {
        inner[var] = d;
        if (eval_formula(guard, s, inner)) out.push_back(d);
    }
    return out;
}

} // namespace taserial
