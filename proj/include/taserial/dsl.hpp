#pragma once

// Text syntax for machine programs.
//
//   machine Counter
//     shared x/0
//     init: pc := 0
//     terminated: pc = 2
//     rule: if pc < 2 then par { x := x + 1, pc := pc + 1 } else skip
//     rule Bump(n): x := x + n
//
// Identifiers bound by let/forall/choose/quantifiers or rule parameters are
// variables; every other identifier is a dynamic function.

#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "taserial/errors.hpp"
#include "taserial/machine.hpp"
#include "taserial/syntax.hpp"

namespace taserial {

namespace dsl {

enum class Tok { ident, integer, symbol, punct, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;
    std::size_t line = 1;
    std::size_t column = 1;
};

inline std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0, line = 1, col = 1;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    auto ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; };
    while (i < src.size()) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        if (c == '#' || (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.column = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && ident_char(src[j])) ++j;
            t.kind = Tok::ident;
            t.text = std::string(src.substr(i, j - i));
            advance(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            t.kind = Tok::integer;
            t.text = std::string(src.substr(i, j - i));
            advance(j - i);
        } else if (c == '\'') {
            std::size_t j = i + 1;
            while (j < src.size() && ident_char(src[j])) ++j;
            if (j == i + 1) throw ParseError("empty symbol literal", line, col);
            t.kind = Tok::symbol;
            t.text = std::string(src.substr(i + 1, j - i - 1));
            advance(j - i);
        } else if (c == ':' && i + 1 < src.size() && src[i + 1] == '=') {
            t.kind = Tok::punct;
            t.text = ":=";
            advance(2);
        } else if (std::string_view("(){},:=<+-/").find(c) != std::string_view::npos) {
            t.kind = Tok::punct;
            t.text = std::string(1, c);
            advance(1);
        } else {
            throw ParseError(std::string("unexpected character '") + c + "'", line, col);
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.line = line;
    end.column = col;
    out.push_back(end);
    return out;
}

inline const std::set<std::string>& keywords() {
    static const std::set<std::string> k{"machine", "shared", "monitored", "output", "init",  "terminated", "rule",
                                         "skip",    "if",     "then",      "else",   "let",   "in",         "forall",
                                         "choose",  "with",   "do",        "par",    "seq",   "call",       "not",
                                         "and",     "or",     "exists",    "true",   "false", "undef"};
    return k;
}

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(tokenize(src)) {}

    std::vector<MachineProgram> machines() {
        std::vector<MachineProgram> out;
        while (!at_end()) out.push_back(machine());
        if (out.empty()) fail("expected 'machine'");
        return out;
    }

private:
    struct PendingCall {
        std::string name;
        std::size_t arity;
        Token at;
    };

    // -- token helpers ------------------------------------------------------

    [[nodiscard]] const Token& peek(std::size_t ahead = 0) const {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }
    [[nodiscard]] bool at_end() const { return peek().kind == Tok::end; }
    [[nodiscard]] bool is(std::string_view text, std::size_t ahead = 0) const {
        const auto& t = peek(ahead);
        return (t.kind == Tok::punct || t.kind == Tok::ident) && t.text == text;
    }
    bool accept(std::string_view text) {
        if (!is(text)) return false;
        ++pos_;
        return true;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        const auto& t = peek();
        std::string near = t.kind == Tok::end ? "end of input" : "'" + t.text + "'";
        throw ParseError(msg + " near " + near, t.line, t.column);
    }
    void expect(std::string_view text) {
        if (!accept(text)) fail("expected '" + std::string(text) + "'");
    }
    std::string identifier(const char* what) {
        const auto& t = peek();
        if (t.kind != Tok::ident || keywords().count(t.text)) fail(std::string("expected ") + what);
        ++pos_;
        return t.text;
    }

    // -- arity bookkeeping --------------------------------------------------

    void use_function(const std::string& f, std::size_t arity, const Token& at) {
        auto [it, inserted] = arity_.emplace(f, arity);
        if (!inserted && it->second != arity)
            throw ArityError("function '" + f + "' used with " + std::to_string(arity) + " arguments, expected " +
                                 std::to_string(it->second),
                             at.line, at.column);
    }

    [[nodiscard]] bool bound(const std::string& name) const {
        for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
            if (*it == name) return true;
        return false;
    }

    struct ScopeGuard {
        std::vector<std::string>& scope;
        std::size_t n;
        ~ScopeGuard() { scope.resize(n); }
    };
    ScopeGuard bind(std::vector<std::string> names) {
        ScopeGuard g{scope_, scope_.size()};
        for (auto& n : names) scope_.push_back(std::move(n));
        return g;
    }

    // -- machine ------------------------------------------------------------

    MachineProgram machine() {
        expect("machine");
        MachineProgram m;
        m.name = identifier("machine name");
        arity_.clear();
        calls_.clear();
        bool have_main = false;
        while (!at_end() && !is("machine")) {
            if (accept("shared")) {
                declarations(m.classes.shared);
            } else if (accept("monitored")) {
                declarations(m.classes.monitored);
            } else if (accept("output")) {
                declarations(m.classes.output);
            } else if (accept("init")) {
                expect(":");
                m.init = rule();
            } else if (accept("terminated")) {
                expect(":");
                m.terminated = formula();
            } else if (accept("rule")) {
                if (accept(":")) {
                    if (have_main) fail("duplicate main rule");
                    m.main = rule();
                    have_main = true;
                } else {
                    const Token at = peek();
                    RuleDef def;
                    def.name = identifier("rule name");
                    if (accept("(")) {
                        if (!is(")")) {
                            do def.params.push_back(identifier("parameter name"));
                            while (accept(","));
                        }
                        expect(")");
                    }
                    expect(":");
                    auto guard = bind(def.params);
                    def.body = rule();
                    if (m.rules.count(def.name))
                        throw ParseError("duplicate rule '" + def.name + "'", at.line, at.column);
                    m.rules.emplace(def.name, std::move(def));
                }
            } else {
                fail("expected a machine section");
            }
        }
        for (const auto& c : calls_) {
            auto it = m.rules.find(c.name);
            if (it == m.rules.end())
                throw UnknownIdentifier("unknown rule '" + c.name + "'", c.at.line, c.at.column);
            if (it->second.params.size() != c.arity)
                throw ArityError("rule '" + c.name + "' called with " + std::to_string(c.arity) + " arguments",
                                 c.at.line, c.at.column);
        }
        m.validate();
        return m;
    }

    void declarations(std::map<std::string, std::size_t>& into) {
        do {
            const Token at = peek();
            std::string name = identifier("function name");
            std::size_t arity = 0;
            if (accept("/")) {
                const auto& t = peek();
                if (t.kind != Tok::integer) fail("expected arity");
                arity = std::stoul(t.text);
                ++pos_;
            }
            use_function(name, arity, at);
            into[name] = arity;
        } while (accept(","));
    }

    // -- rules --------------------------------------------------------------

    Rule block(bool parallel) {
        expect("{");
        Rule acc = rule();
        while (accept(",")) acc = parallel ? Rule::par(std::move(acc), rule()) : Rule::seq(std::move(acc), rule());
        expect("}");
        return acc;
    }

    Rule rule() {
        if (accept("skip")) return Rule::skip();
        if (accept("if")) {
            Formula g = formula();
            expect("then");
            Rule t = rule();
            Rule e = accept("else") ? rule() : Rule::skip();
            return Rule::if_then(std::move(g), std::move(t), std::move(e));
        }
        if (accept("let")) {
            std::string var = identifier("variable");
            expect("=");
            Term bound_term = term();
            expect("in");
            auto guard = bind({var});
            return Rule::let(var, std::move(bound_term), rule());
        }
        if (is("forall") || is("choose")) {
            const bool all = accept("forall");
            if (!all) expect("choose");
            std::string var = identifier("variable");
            expect("with");
            auto guard = bind({var});
            Formula g = formula();
            expect("do");
            Rule body = rule();
            return all ? Rule::forall(var, std::move(g), std::move(body))
                       : Rule::choose(var, std::move(g), std::move(body));
        }
        if (accept("par")) return block(true);
        if (accept("seq")) return block(false);
        if (accept("call")) {
            const Token at = peek();
            std::string name = identifier("rule name");
            std::vector<Term> args;
            if (accept("(")) args = term_list();
            calls_.push_back(PendingCall{name, args.size(), at});
            return Rule::call(std::move(name), std::move(args));
        }
        const Token at = peek();
        Term lhs = term();
        if (!accept(":=")) fail("expected a rule");
        const auto* app = std::get_if<ApplyTerm>(&lhs.node);
        if (!app || is_static_function(app->func))
            throw ParseError("assignment target must be a function application", at.line, at.column);
        return Rule::assign(std::move(lhs), term());
    }

    // -- terms --------------------------------------------------------------

    std::vector<Term> term_list() {
        std::vector<Term> args;
        if (!is(")")) {
            do args.push_back(term());
            while (accept(","));
        }
        expect(")");
        return args;
    }

    Term term() {
        Term acc = primary();
        while (is("+") || is("-")) {
            std::string op = peek().text;
            ++pos_;
            acc = Term::apply(op, {std::move(acc), primary()});
        }
        return acc;
    }

    Term integer_literal(bool negative) {
        const auto& t = peek();
        if (t.kind != Tok::integer) fail("expected integer");
        std::uint64_t magnitude = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), magnitude);
        const std::uint64_t limit = negative ? 9223372036854775808ULL : 9223372036854775807ULL;
        if (ec != std::errc{} || magnitude > limit) fail("integer literal out of range");
        ++pos_;
        const auto value = negative ? static_cast<std::int64_t>(0 - magnitude) : static_cast<std::int64_t>(magnitude);
        return Term::integer(value);
    }

    Term primary() {
        const Token t = peek();
        if (t.kind == Tok::integer) return integer_literal(false);
        if (is("-")) {
            ++pos_;
            return integer_literal(true);
        }
        if (t.kind == Tok::symbol) {
            ++pos_;
            return Term::constant(Value::symbol(t.text));
        }
        if (accept("true")) return Term::constant(Value::boolean(true));
        if (accept("false")) return Term::constant(Value::boolean(false));
        if (accept("undef")) return Term::constant(Value::undef());
        if (accept("(")) {
            Term inner = term();
            expect(")");
            return inner;
        }
        std::string name = identifier("term");
        if (bound(name) && !is("(")) return Term::var(std::move(name));
        std::vector<Term> args;
        if (accept("(")) args = term_list();
        use_function(name, args.size(), t);
        return Term::apply(std::move(name), std::move(args));
    }

    // -- formulae -----------------------------------------------------------

    Formula formula() {
        Formula acc = conjunction();
        while (accept("or")) acc = Formula::disj(std::move(acc), conjunction());
        return acc;
    }

    Formula conjunction() {
        Formula acc = unary();
        while (accept("and")) acc = Formula::conj(std::move(acc), unary());
        return acc;
    }

    Formula unary() {
        if (accept("not")) return Formula::negate(unary());
        if (is("forall") || is("exists")) {
            const bool all = accept("forall");
            if (!all) expect("exists");
            std::string var = identifier("variable");
            expect(":");
            auto guard = bind({var});
            Formula body = formula();
            return all ? Formula::forall(var, std::move(body)) : Formula::exists(var, std::move(body));
        }
        return atomic();
    }

    [[nodiscard]] bool comparator_next() const { return is("=") || is("<"); }

    Formula atomic() {
        if (is("(")) {
            const std::size_t save = pos_;
            const auto arity_save = arity_;
            try {
                ++pos_;
                Formula inner = formula();
                expect(")");
                if (!comparator_next() && !is("+") && !is("-")) return inner;
            } catch (const ParseError&) {
            }
            pos_ = save;
            arity_ = arity_save;
        }
        const Token at = peek();
        Term lhs = term();
        if (accept("=")) return Formula::eq(std::move(lhs), term());
        if (accept("<")) return Formula::lt(std::move(lhs), term());
        if (const auto* c = std::get_if<ConstTerm>(&lhs.node); c && c->value.is_boolean())
            return Formula::truth(c->value.as_boolean());
        if (auto* app = std::get_if<ApplyTerm>(&lhs.node); app && !is_static_function(app->func))
            return Formula::atom(std::move(app->func), std::move(app->args));
        throw ParseError("expected a formula", at.line, at.column);
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::vector<std::string> scope_;
    std::map<std::string, std::size_t> arity_;
    std::vector<PendingCall> calls_;
};

// -- printing ---------------------------------------------------------------

inline std::string print(const Term& t) {
    if (const auto* v = std::get_if<VarTerm>(&t.node)) return v->name;
    if (const auto* c = std::get_if<ConstTerm>(&t.node)) return c->value.to_string();
    const auto& app = std::get<ApplyTerm>(t.node);
    if (is_static_function(app.func) && app.args.size() == 2)
        return "(" + print(app.args[0]) + " " + app.func + " " + print(app.args[1]) + ")";
    if (app.args.empty()) return app.func;
    std::string out = app.func + "(";
    for (std::size_t i = 0; i < app.args.size(); ++i) out += (i ? ", " : "") + print(app.args[i]);
    return out + ")";
}

inline std::string print(const Formula& f) {
    return std::visit(
        [](const auto& n) -> std::string {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, fml::Truth>) {
                return n.value ? "true" : "false";
            } else if constexpr (std::is_same_v<N, fml::Atom>) {
                return print(Term::apply(n.pred, n.args));
            } else if constexpr (std::is_same_v<N, fml::Not>) {
                return "not " + print(*n.sub);
            } else if constexpr (std::is_same_v<N, fml::And>) {
                return "(" + print(*n.lhs) + " and " + print(*n.rhs) + ")";
            } else if constexpr (std::is_same_v<N, fml::Or>) {
                return "(" + print(*n.lhs) + " or " + print(*n.rhs) + ")";
            } else if constexpr (std::is_same_v<N, fml::Forall>) {
                return "(forall " + n.var + " : " + print(*n.body) + ")";
            } else if constexpr (std::is_same_v<N, fml::Exists>) {
                return "(exists " + n.var + " : " + print(*n.body) + ")";
            } else if constexpr (std::is_same_v<N, fml::Equal>) {
                return print(n.lhs) + " = " + print(n.rhs);
            } else {
                return print(n.lhs) + " < " + print(n.rhs);
            }
        },
        f.node);
}

inline std::string print(const Rule& r) {
    return std::visit(
        [](const auto& n) -> std::string {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, rl::Skip>) {
                return "skip";
            } else if constexpr (std::is_same_v<N, rl::Assign>) {
                return print(n.lhs) + " := " + print(n.rhs);
            } else if constexpr (std::is_same_v<N, rl::If>) {
                return "if " + print(n.guard) + " then " + print(*n.then_rule) + " else " + print(*n.else_rule);
            } else if constexpr (std::is_same_v<N, rl::Let>) {
                return "let " + n.var + " = " + print(n.bound) + " in " + print(*n.body);
            } else if constexpr (std::is_same_v<N, rl::Forall>) {
                return "forall " + n.var + " with " + print(n.guard) + " do " + print(*n.body);
            } else if constexpr (std::is_same_v<N, rl::Choose>) {
                return "choose " + n.var + " with " + print(n.guard) + " do " + print(*n.body);
            } else if constexpr (std::is_same_v<N, rl::Par>) {
                return "par { " + print(*n.lhs) + ", " + print(*n.rhs) + " }";
            } else if constexpr (std::is_same_v<N, rl::Seq>) {
                return "seq { " + print(*n.lhs) + ", " + print(*n.rhs) + " }";
            } else {
                if (n.args.empty()) return "call " + n.name;
                std::string out = "call " + n.name + "(";
                for (std::size_t i = 0; i < n.args.size(); ++i) out += (i ? ", " : "") + print(n.args[i]);
                return out + ")";
            }
        },
        r.node);
}

inline void print_decls(std::ostringstream& os, const char* kw, const std::map<std::string, std::size_t>& decls) {
    if (decls.empty()) return;
    os << "  " << kw << " ";
    bool first = true;
    for (const auto& [f, arity] : decls) {
        os << (first ? "" : ", ") << f << "/" << arity;
        first = false;
    }
    os << "\n";
}

} // namespace dsl

/// Parses exactly one machine.
inline MachineProgram parse_program(std::string_view text) {
    auto ms = dsl::Parser(text).machines();
    if (ms.size() != 1) throw ParseError("expected exactly one machine, found " + std::to_string(ms.size()), 1, 1);
    return std::move(ms.front());
}

/// Parses one or more machines from a single source.
inline std::vector<MachineProgram> parse_programs(std::string_view text) { return dsl::Parser(text).machines(); }

inline std::string print_program(const MachineProgram& m) {
    std::ostringstream os;
    os << "machine " << m.name << "\n";
    dsl::print_decls(os, "shared", m.classes.shared);
    dsl::print_decls(os, "monitored", m.classes.monitored);
    dsl::print_decls(os, "output", m.classes.output);
    os << "  init: " << dsl::print(m.init) << "\n";
    os << "  terminated: " << dsl::print(m.terminated) << "\n";
    os << "  rule: " << dsl::print(m.main) << "\n";
    for (const auto& [name, def] : m.rules) {
        os << "  rule " << name;
        if (!def.params.empty()) {
            os << "(";
            for (std::size_t i = 0; i < def.params.size(); ++i) os << (i ? ", " : "") << def.params[i];
            os << ")";
        }
        os << ": " << dsl::print(def.body) << "\n";
    }
    return os.str();
}

} // namespace taserial
