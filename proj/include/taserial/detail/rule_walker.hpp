#pragma once

#include <set>

#include "taserial/eval.hpp"
#include "taserial/seed.hpp"
#include "taserial/state.hpp"
#include "taserial/syntax.hpp"

namespace taserial {

/// Read and write locations of a construct in a given state.
struct RwSet {
    std::set<Location> reads;
    std::set<Location> writes;

    void merge(const RwSet& o) {
        reads.insert(o.reads.begin(), o.reads.end());
        writes.insert(o.writes.begin(), o.writes.end());
    }

    friend bool operator==(const RwSet&, const RwSet&) = default;
};

namespace detail {

inline void term_reads(const Term& t, const State& s, const Interpretation& env, std::set<Location>& out) {
    const auto* app = std::get_if<ApplyTerm>(&t.node);
    if (!app) return;
    for (const auto& a : app->args) term_reads(a, s, env, out);
    if (!is_static_function(app->func)) out.insert(Location{app->func, eval_args(app->args, s, env)});
}

inline void formula_reads(const Formula& f, const State& s, const Interpretation& env, std::set<Location>& out) {
    std::visit(
        [&](const auto& n) {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, fml::Atom>) {
                for (const auto& a : n.args) term_reads(a, s, env, out);
                out.insert(Location{n.pred, eval_args(n.args, s, env)});
            } else if constexpr (std::is_same_v<N, fml::Not>) {
                formula_reads(*n.sub, s, env, out);
            } else if constexpr (std::is_same_v<N, fml::And> || std::is_same_v<N, fml::Or>) {
                formula_reads(*n.lhs, s, env, out);
                formula_reads(*n.rhs, s, env, out);
            } else if constexpr (std::is_same_v<N, fml::Forall> || std::is_same_v<N, fml::Exists>) {
                Interpretation inner = env;
                for (const auto& d : s.domain()) {
                    inner[n.var] = d;
                    formula_reads(*n.body, s, inner, out);
                }
            } else if constexpr (std::is_same_v<N, fml::Equal> || std::is_same_v<N, fml::Less>) {
                term_reads(n.lhs, s, env, out);
                term_reads(n.rhs, s, env, out);
            }
        },
        f.node);
}

struct StepResult {
    UpdateSet updates;
    RwSet rw;
};

/// Computes the update set of a rule and, on request, its read/write
/// locations in one traversal. Because both come out of the same walk, a
/// choose rule's witness is drawn once and shared by the analysis and the
/// execution.
class RuleWalker {
public:
    RuleWalker(const RuleTable& rules, SeedStream& rng, bool track_rw) : rules_(rules), rng_(rng), track_(track_rw) {}

    StepResult walk(const Rule& r, const State& s, const Interpretation& env) {
        return std::visit([&](const auto& n) { return step(n, s, env); }, r.node);
    }

private:
    StepResult step(const rl::Skip&, const State&, const Interpretation&) { return {}; }

    StepResult step(const rl::Assign& a, const State& s, const Interpretation& env) {
        const auto& lhs = std::get<ApplyTerm>(a.lhs.node);
        Location loc{lhs.func, eval_args(lhs.args, s, env)};
        StepResult out;
        out.updates.insert(loc, eval_term(a.rhs, s, env));
        if (track_) {
            term_reads(a.lhs, s, env, out.rw.reads);
            term_reads(a.rhs, s, env, out.rw.reads);
            out.rw.writes.insert(std::move(loc));
        }
        return out;
    }

    StepResult step(const rl::If& i, const State& s, const Interpretation& env) {
        const bool taken = eval_formula(i.guard, s, env);
        StepResult out = walk(taken ? *i.then_rule : *i.else_rule, s, env);
        if (track_) formula_reads(i.guard, s, env, out.rw.reads);
        return out;
    }

    StepResult step(const rl::Let& l, const State& s, const Interpretation& env) {
        Interpretation inner = env;
        inner[l.var] = eval_term(l.bound, s, env);
        StepResult out = walk(*l.body, s, inner);
        if (track_) term_reads(l.bound, s, env, out.rw.reads);
        return out;
    }

    StepResult step(const rl::Forall& q, const State& s, const Interpretation& env) {
        StepResult out;
        Interpretation inner = env;
        for (const auto& a : guard_range(q.var, q.guard, s, env)) {
            inner[q.var] = a;
            auto part = walk(*q.body, s, inner);
            out.updates.merge(part.updates);
            if (track_) out.rw.merge(part.rw);
        }
        if (track_) formula_reads(Formula::forall(q.var, q.guard), s, env, out.rw.reads);
        return out;
    }

    StepResult step(const rl::Choose& q, const State& s, const Interpretation& env) {
        StepResult out;
        auto range = guard_range(q.var, q.guard, s, env);
        if (!range.empty()) {
            Interpretation inner = env;
            inner[q.var] = range[rng_.pick(range.size())];
            out = walk(*q.body, s, inner);
        }
        if (track_) formula_reads(Formula::exists(q.var, q.guard), s, env, out.rw.reads);
        return out;
    }

    StepResult step(const rl::Par& p, const State& s, const Interpretation& env) {
        StepResult out = walk(*p.lhs, s, env);
        auto rhs = walk(*p.rhs, s, env);
        out.updates.merge(rhs.updates);
        if (track_) out.rw.merge(rhs.rw);
        return out;
    }

    StepResult step(const rl::Seq& q, const State& s, const Interpretation& env) {
        StepResult first = walk(*q.lhs, s, env);
        if (!first.updates.consistent()) return first;
        StepResult second = walk(*q.rhs, apply(s, first.updates), env);
        StepResult out;
        out.updates = first.updates.overridden_by(second.updates);
        if (track_) {
            out.rw = std::move(first.rw);
            out.rw.merge(second.rw);
        }
        return out;
    }

    StepResult step(const rl::Call& c, const State& s, const Interpretation& env) {
        return walk(expand_call(c, rules_), s, env);
    }

    const RuleTable& rules_;
    SeedStream& rng_;
    bool track_;
};

inline const RuleTable& empty_rule_table() {
    static const RuleTable table;
    return table;
}

} // namespace detail
} // namespace taserial
