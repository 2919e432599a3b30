#pragma once

#include "taserial/detail/rule_walker.hpp"

namespace taserial {

/// The update set produced by `r` in `s` under `env`. Choose witnesses are
/// drawn from `rng`; the result may be inconsistent (e.g. a par of two
/// clashing assignments), which callers check with UpdateSet::consistent.
inline UpdateSet yields(const Rule& r, const State& s, const Interpretation& env, SeedStream& rng,
                        const RuleTable& rules = detail::empty_rule_table()) {
    detail::RuleWalker walker(rules, rng, false);
    return walker.walk(r, s, env).updates;
}

} // namespace taserial
