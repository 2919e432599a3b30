#pragma once

#include "taserial/detail/rule_walker.hpp"

namespace taserial {

/// Locations of a term: every dynamic application contributes its evaluated
/// location as a read; the head application is the write location.
/// Variables and constants touch nothing.
inline RwSet rw_term(const Term& t, const State& s, const Interpretation& env) {
    RwSet out;
    detail::term_reads(t, s, env, out.reads);
    if (const auto* app = std::get_if<ApplyTerm>(&t.node); app && !is_static_function(app->func))
        out.writes.insert(Location{app->func, eval_args(app->args, s, env)});
    return out;
}

/// Formulae are never written; quantifiers read their body under every
/// domain element.
inline RwSet rw_formula(const Formula& f, const State& s, const Interpretation& env) {
    RwSet out;
    detail::formula_reads(f, s, env, out.reads);
    return out;
}

/// ReadLoc/WriteLoc of a rule by structural induction. Consumes `rng`
/// exactly as `yields` does, so passing two copies of the same stream to
/// both yields matching choose witnesses.
inline RwSet rw_rule(const Rule& r, const State& s, const Interpretation& env, SeedStream& rng,
                     const RuleTable& rules = detail::empty_rule_table()) {
    detail::RuleWalker walker(rules, rng, true);
    return walker.walk(r, s, env).rw;
}

/// Update set and locations from a single walk.
inline detail::StepResult analyze_step(const Rule& r, const State& s, const Interpretation& env, SeedStream& rng,
                                       const RuleTable& rules = detail::empty_rule_table()) {
    detail::RuleWalker walker(rules, rng, true);
    return walker.walk(r, s, env);
}

} // namespace taserial
