#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "taserial/errors.hpp"
#include "taserial/value.hpp"

namespace taserial {

/// Immutable, shareable owning pointer with value equality. AST nodes are
/// never mutated after construction, so copies share structure.
template <class T>
class Box {
public:
    Box(T value) : p_(std::make_shared<const T>(std::move(value))) {}  // NOLINT(google-explicit-constructor)

    const T& operator*() const noexcept { return *p_; }
    const T* operator->() const noexcept { return p_.get(); }
    const T& get() const noexcept { return *p_; }

    friend bool operator==(const Box& a, const Box& b) { return a.p_ == b.p_ || *a.p_ == *b.p_; }

private:
    std::shared_ptr<const T> p_;
};

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

struct Term;

struct VarTerm {
    std::string name;
    friend bool operator==(const VarTerm&, const VarTerm&) = default;
};

struct ConstTerm {
    Value value;
    friend bool operator==(const ConstTerm&, const ConstTerm&) = default;
};

struct ApplyTerm {
    std::string func;
    std::vector<Term> args;
    friend bool operator==(const ApplyTerm&, const ApplyTerm&);
};

struct Term {
    std::variant<VarTerm, ConstTerm, ApplyTerm> node;

    static Term var(std::string name) { return Term{VarTerm{std::move(name)}}; }
    static Term constant(Value v) { return Term{ConstTerm{std::move(v)}}; }
    static Term integer(std::int64_t v) { return constant(Value::integer(v)); }
    static Term apply(std::string func, std::vector<Term> args = {}) {
        return Term{ApplyTerm{std::move(func), std::move(args)}};
    }

    [[nodiscard]] bool is_var() const noexcept { return std::holds_alternative<VarTerm>(node); }
    [[nodiscard]] bool is_apply() const noexcept { return std::holds_alternative<ApplyTerm>(node); }

    friend bool operator==(const Term&, const Term&) = default;
};

inline bool operator==(const ApplyTerm& a, const ApplyTerm& b) { return a.func == b.func && a.args == b.args; }

/// Built-in static functions. Every other function symbol is dynamic and
/// denotes locations of the state.
inline bool is_static_function(const std::string& name) { return name == "+" || name == "-"; }

// ---------------------------------------------------------------------------
// Formulae
// ---------------------------------------------------------------------------

struct Formula;

namespace fml {
struct Truth {
    bool value;
    friend bool operator==(const Truth&, const Truth&) = default;
};
struct Atom {
    std::string pred;
    std::vector<Term> args;
    friend bool operator==(const Atom&, const Atom&) = default;
};
struct Not {
    Box<Formula> sub;
    friend bool operator==(const Not&, const Not&) = default;
};
struct And {
    Box<Formula> lhs, rhs;
    friend bool operator==(const And&, const And&) = default;
};
struct Or {
    Box<Formula> lhs, rhs;
    friend bool operator==(const Or&, const Or&) = default;
};
struct Forall {
    std::string var;
    Box<Formula> body;
    friend bool operator==(const Forall&, const Forall&) = default;
};
struct Exists {
    std::string var;
    Box<Formula> body;
    friend bool operator==(const Exists&, const Exists&) = default;
};
struct Equal {
    Term lhs, rhs;
    friend bool operator==(const Equal&, const Equal&) = default;
};
struct Less {
    Term lhs, rhs;
    friend bool operator==(const Less&, const Less&) = default;
};
} // namespace fml

struct Formula {
    std::variant<fml::Truth, fml::Atom, fml::Not, fml::And, fml::Or, fml::Forall, fml::Exists, fml::Equal, fml::Less>
        node;

    static Formula truth(bool v) { return Formula{fml::Truth{v}}; }
    static Formula atom(std::string pred, std::vector<Term> args = {}) {
        return Formula{fml::Atom{std::move(pred), std::move(args)}};
    }
    static Formula negate(Formula f) { return Formula{fml::Not{std::move(f)}}; }
    static Formula conj(Formula a, Formula b) { return Formula{fml::And{std::move(a), std::move(b)}}; }
    static Formula disj(Formula a, Formula b) { return Formula{fml::Or{std::move(a), std::move(b)}}; }
    static Formula forall(std::string var, Formula body) { return Formula{fml::Forall{std::move(var), std::move(body)}}; }
    static Formula exists(std::string var, Formula body) { return Formula{fml::Exists{std::move(var), std::move(body)}}; }
    static Formula eq(Term a, Term b) { return Formula{fml::Equal{std::move(a), std::move(b)}}; }
    static Formula lt(Term a, Term b) { return Formula{fml::Less{std::move(a), std::move(b)}}; }

    friend bool operator==(const Formula&, const Formula&) = default;
};

// ---------------------------------------------------------------------------
// Rules
// ---------------------------------------------------------------------------

struct Rule;

namespace rl {
struct Skip {
    friend bool operator==(const Skip&, const Skip&) = default;
};
struct Assign {
    Term lhs, rhs;
    friend bool operator==(const Assign&, const Assign&) = default;
};
struct If {
    Formula guard;
    Box<Rule> then_rule, else_rule;
    friend bool operator==(const If&, const If&) = default;
};
struct Let {
    std::string var;
    Term bound;
    Box<Rule> body;
    friend bool operator==(const Let&, const Let&) = default;
};
struct Forall {
    std::string var;
    Formula guard;
    Box<Rule> body;
    friend bool operator==(const Forall&, const Forall&) = default;
};
struct Choose {
    std::string var;
    Formula guard;
    Box<Rule> body;
    friend bool operator==(const Choose&, const Choose&) = default;
};
struct Par {
    Box<Rule> lhs, rhs;
    friend bool operator==(const Par&, const Par&) = default;
};
struct Seq {
    Box<Rule> lhs, rhs;
    friend bool operator==(const Seq&, const Seq&) = default;
};
struct Call {
    std::string name;
    std::vector<Term> args;
    friend bool operator==(const Call&, const Call&) = default;
};
} // namespace rl

struct Rule {
    std::variant<rl::Skip, rl::Assign, rl::If, rl::Let, rl::Forall, rl::Choose, rl::Par, rl::Seq, rl::Call> node;

    static Rule skip() { return Rule{rl::Skip{}}; }
    static Rule assign(Term lhs, Term rhs) { return Rule{rl::Assign{std::move(lhs), std::move(rhs)}}; }
    static Rule if_then(Formula g, Rule t, Rule e = skip()) {
        return Rule{rl::If{std::move(g), std::move(t), std::move(e)}};
    }
    static Rule let(std::string var, Term t, Rule body) {
        return Rule{rl::Let{std::move(var), std::move(t), std::move(body)}};
    }
    static Rule forall(std::string var, Formula g, Rule body) {
        return Rule{rl::Forall{std::move(var), std::move(g), std::move(body)}};
    }
    static Rule choose(std::string var, Formula g, Rule body) {
        return Rule{rl::Choose{std::move(var), std::move(g), std::move(body)}};
    }
    static Rule par(Rule a, Rule b) { return Rule{rl::Par{std::move(a), std::move(b)}}; }
    static Rule seq(Rule a, Rule b) { return Rule{rl::Seq{std::move(a), std::move(b)}}; }
    static Rule call(std::string name, std::vector<Term> args = {}) {
        return Rule{rl::Call{std::move(name), std::move(args)}};
    }

    friend bool operator==(const Rule&, const Rule&) = default;
};

/// A named rule `name(params) = body`, expanded by reference at call sites.
struct RuleDef {
    std::string name;
    std::vector<std::string> params;
    Rule body;

    friend bool operator==(const RuleDef&, const RuleDef&) = default;
};

using RuleTable = std::map<std::string, RuleDef>;

// ---------------------------------------------------------------------------
// Free variables and capture-avoiding substitution
// ---------------------------------------------------------------------------

namespace detail {

inline void free_vars(const Term& t, const std::set<std::string>& bound, std::set<std::string>& out) {
    if (const auto* v = std::get_if<VarTerm>(&t.node)) {
        if (!bound.count(v->name)) out.insert(v->name);
    } else if (const auto* a = std::get_if<ApplyTerm>(&t.node)) {
        for (const auto& arg : a->args) free_vars(arg, bound, out);
    }
}

inline std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
    for (std::size_t n = 1;; ++n) {
        std::string candidate = base + "#" + std::to_string(n);
        if (!avoid.count(candidate)) return candidate;
    }
}

using Substitution = std::map<std::string, Term>;

inline Term substitute(const Term& t, const Substitution& sub) {
    if (const auto* v = std::get_if<VarTerm>(&t.node)) {
        auto it = sub.find(v->name);
        return it == sub.end() ? t : it->second;
    }
    if (const auto* a = std::get_if<ApplyTerm>(&t.node)) {
        std::vector<Term> args;
        args.reserve(a->args.size());
        for (const auto& arg : a->args) args.push_back(substitute(arg, sub));
        return Term::apply(a->func, std::move(args));
    }
    return t;
}

inline std::set<std::string> range_vars(const Substitution& sub) {
    std::set<std::string> out;
    for (const auto& [name, term] : sub) free_vars(term, {}, out);
    return out;
}

// Enter a binder: drop the bound name from the substitution and rename the
// binder when it would capture a free variable of a substituted term.
inline std::pair<std::string, Substitution> enter_binder(const std::string& var, const Substitution& sub) {
    Substitution inner = sub;
    inner.erase(var);
    auto captured = range_vars(inner);
    if (!captured.count(var)) return {var, inner};
    captured.insert(var);
    for (const auto& [name, _] : inner) captured.insert(name);
    std::string renamed = fresh_name(var, captured);
    inner[var] = Term::var(renamed);
    return {renamed, inner};
}

inline Formula substitute(const Formula& f, const Substitution& sub);

struct FormulaSubstituter {
    const Substitution& sub;

    Formula operator()(const fml::Truth& t) const { return Formula{t}; }
    Formula operator()(const fml::Atom& a) const {
        std::vector<Term> args;
        for (const auto& arg : a.args) args.push_back(substitute(arg, sub));
        return Formula::atom(a.pred, std::move(args));
    }
    Formula operator()(const fml::Not& n) const { return Formula::negate(substitute(*n.sub, sub)); }
    Formula operator()(const fml::And& n) const { return Formula::conj(substitute(*n.lhs, sub), substitute(*n.rhs, sub)); }
    Formula operator()(const fml::Or& n) const { return Formula::disj(substitute(*n.lhs, sub), substitute(*n.rhs, sub)); }
    Formula operator()(const fml::Forall& q) const {
        auto [var, inner] = enter_binder(q.var, sub);
        return Formula::forall(var, substitute(*q.body, inner));
    }
    Formula operator()(const fml::Exists& q) const {
        auto [var, inner] = enter_binder(q.var, sub);
        return Formula::exists(var, substitute(*q.body, inner));
    }
    Formula operator()(const fml::Equal& e) const { return Formula::eq(substitute(e.lhs, sub), substitute(e.rhs, sub)); }
    Formula operator()(const fml::Less& e) const { return Formula::lt(substitute(e.lhs, sub), substitute(e.rhs, sub)); }
};

inline Formula substitute(const Formula& f, const Substitution& sub) {
    if (sub.empty()) return f;
    return std::visit(FormulaSubstituter{sub}, f.node);
}

inline Rule substitute(const Rule& r, const Substitution& sub);

struct RuleSubstituter {
    const Substitution& sub;

    Rule operator()(const rl::Skip&) const { return Rule::skip(); }
    Rule operator()(const rl::Assign& a) const { return Rule::assign(substitute(a.lhs, sub), substitute(a.rhs, sub)); }
    Rule operator()(const rl::If& i) const {
        return Rule::if_then(substitute(i.guard, sub), substitute(*i.then_rule, sub), substitute(*i.else_rule, sub));
    }
    Rule operator()(const rl::Let& l) const {
        auto bound = substitute(l.bound, sub);
        auto [var, inner] = enter_binder(l.var, sub);
        return Rule::let(var, std::move(bound), substitute(*l.body, inner));
    }
    Rule operator()(const rl::Forall& q) const {
        auto [var, inner] = enter_binder(q.var, sub);
        return Rule::forall(var, substitute(q.guard, inner), substitute(*q.body, inner));
    }
    Rule operator()(const rl::Choose& q) const {
        auto [var, inner] = enter_binder(q.var, sub);
        return Rule::choose(var, substitute(q.guard, inner), substitute(*q.body, inner));
    }
    Rule operator()(const rl::Par& p) const { return Rule::par(substitute(*p.lhs, sub), substitute(*p.rhs, sub)); }
    Rule operator()(const rl::Seq& s) const { return Rule::seq(substitute(*s.lhs, sub), substitute(*s.rhs, sub)); }
    Rule operator()(const rl::Call& c) const {
        std::vector<Term> args;
        for (const auto& arg : c.args) args.push_back(substitute(arg, sub));
        return Rule::call(c.name, std::move(args));
    }
};

inline Rule substitute(const Rule& r, const Substitution& sub) {
    if (sub.empty()) return r;
    return std::visit(RuleSubstituter{sub}, r.node);
}

} // namespace detail

/// Expands `name(args)` by reference: the body with each parameter replaced
/// by the corresponding argument term.
inline Rule expand_call(const rl::Call& call, const RuleTable& rules) {
    auto it = rules.find(call.name);
    if (it == rules.end()) throw EvalError(EvalError::Kind::unknown_rule, "unknown rule '" + call.name + "'");
    const RuleDef& def = it->second;
    if (def.params.size() != call.args.size()) {
        throw EvalError(EvalError::Kind::arity_mismatch,
                        "rule '" + call.name + "' expects " + std::to_string(def.params.size()) + " arguments, got " +
                            std::to_string(call.args.size()));
    }
    detail::Substitution sub;
    for (std::size_t i = 0; i < def.params.size(); ++i) sub.emplace(def.params[i], call.args[i]);
    return detail::substitute(def.body, sub);
}

// ---------------------------------------------------------------------------
// Well-formedness
// ---------------------------------------------------------------------------

namespace detail {

inline void collect_calls(const Rule& r, std::set<std::string>& out) {
    std::visit(
        [&](const auto& n) {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, rl::If>) {
                collect_calls(*n.then_rule, out);
                collect_calls(*n.else_rule, out);
            } else if constexpr (std::is_same_v<N, rl::Let> || std::is_same_v<N, rl::Forall> ||
                                 std::is_same_v<N, rl::Choose>) {
                collect_calls(*n.body, out);
            } else if constexpr (std::is_same_v<N, rl::Par> || std::is_same_v<N, rl::Seq>) {
                collect_calls(*n.lhs, out);
                collect_calls(*n.rhs, out);
            } else if constexpr (std::is_same_v<N, rl::Call>) {
                out.insert(n.name);
            }
        },
        r.node);
}

inline void collect_assigned(const Rule& r, std::set<std::string>& out) {
    std::visit(
        [&](const auto& n) {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, rl::Assign>) {
                if (const auto* lhs = std::get_if<ApplyTerm>(&n.lhs.node)) out.insert(lhs->func);
            } else if constexpr (std::is_same_v<N, rl::If>) {
                collect_assigned(*n.then_rule, out);
                collect_assigned(*n.else_rule, out);
            } else if constexpr (std::is_same_v<N, rl::Let> || std::is_same_v<N, rl::Forall> ||
                                 std::is_same_v<N, rl::Choose>) {
                collect_assigned(*n.body, out);
            } else if constexpr (std::is_same_v<N, rl::Par> || std::is_same_v<N, rl::Seq>) {
                collect_assigned(*n.lhs, out);
                collect_assigned(*n.rhs, out);
            }
        },
        r.node);
}

/// Function names assigned by `r` or by any rule it (transitively) calls.
inline std::set<std::string> assigned_functions(const Rule& r, const RuleTable& rules) {
    std::set<std::string> out, seen, calls;
    collect_assigned(r, out);
    collect_calls(r, calls);
    while (!calls.empty()) {
        auto name = *calls.begin();
        calls.erase(calls.begin());
        if (!seen.insert(name).second) continue;
        auto it = rules.find(name);
        if (it == rules.end()) continue;
        collect_assigned(it->second.body, out);
        collect_calls(it->second.body, calls);
    }
    return out;
}

inline void check_rule_shape(const Rule& r, const RuleTable& rules) {
    std::visit(
        [&](const auto& n) {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, rl::Assign>) {
                const auto* lhs = std::get_if<ApplyTerm>(&n.lhs.node);
                if (!lhs || is_static_function(lhs->func))
                    throw ConfigError("assignment target must be a dynamic function application");
            } else if constexpr (std::is_same_v<N, rl::If>) {
                check_rule_shape(*n.then_rule, rules);
                check_rule_shape(*n.else_rule, rules);
            } else if constexpr (std::is_same_v<N, rl::Let> || std::is_same_v<N, rl::Forall> ||
                                 std::is_same_v<N, rl::Choose>) {
                check_rule_shape(*n.body, rules);
            } else if constexpr (std::is_same_v<N, rl::Par> || std::is_same_v<N, rl::Seq>) {
                check_rule_shape(*n.lhs, rules);
                check_rule_shape(*n.rhs, rules);
            } else if constexpr (std::is_same_v<N, rl::Call>) {
                auto it = rules.find(n.name);
                if (it == rules.end()) throw ConfigError("call to undeclared rule '" + n.name + "'");
                if (it->second.params.size() != n.args.size())
                    throw ConfigError("call to '" + n.name + "' has wrong arity");
            }
        },
        r.node);
}

} // namespace detail

/// Checks assignment targets, call arities and that the call graph is acyclic.
inline void validate(const Rule& main, const RuleTable& rules) {
    detail::check_rule_shape(main, rules);
    for (const auto& [name, def] : rules) detail::check_rule_shape(def.body, rules);

    std::map<std::string, int> colour;  // 0 white, 1 on stack, 2 done
    std::function<void(const std::string&)> visit = [&](const std::string& name) {
        int& c = colour[name];
        if (c == 1) throw ConfigError("recursive rule call through '" + name + "'");
        if (c == 2) return;
        c = 1;
        std::set<std::string> callees;
        detail::collect_calls(rules.at(name).body, callees);
        for (const auto& callee : callees) visit(callee);
        colour[name] = 2;
    };
    for (const auto& [name, _] : rules) visit(name);
}

} // namespace taserial
