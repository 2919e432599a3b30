// taserial: run, check and fuzz transactional machine compositions.
//
//   taserial run CONFIG [--seed N] [--max-steps N] [--trace OUT] [--wait-mode retry|suspend] ...
//   taserial check TRACE [--brute-force]
//   taserial fuzz --runs N --machines K --seed S --locations L [...]

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "taserial.hpp"

namespace fs = std::filesystem;
using namespace taserial;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_budget = 2;
constexpr int exit_not_serializable = 3;

struct RunFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> max_steps;
    std::string trace_out;
    std::string wait_mode;
    std::string lock_policy;
    std::string commit_policy;
    std::string recovery_policy;
    std::string victim_policy;
    bool interleaving = false;
    bool quiet = false;
};

template <class T>
T parse_or_throw(std::optional<T> v, const std::string& what, const std::string& text) {
    if (!v) throw ConfigError("unknown " + what + " '" + text + "'");
    return *v;
}

void write_trace_file(const fs::path& path, const Trace& t) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    write_trace(out, t);
}

int cmd_run(const RunFlags& f) {
    RunConfig cfg = load_config(f.config);
    if (f.seed) cfg.seed = *f.seed;
    if (f.max_steps) cfg.max_steps = *f.max_steps;
    if (!f.wait_mode.empty()) cfg.wait_mode = parse_or_throw(parse_wait_mode(f.wait_mode), "wait mode", f.wait_mode);
    if (!f.lock_policy.empty())
        cfg.policies.lock_requests =
            parse_or_throw(parse_selection_policy(f.lock_policy), "lock policy", f.lock_policy);
    if (!f.commit_policy.empty())
        cfg.policies.commits = parse_or_throw(parse_selection_policy(f.commit_policy), "commit policy", f.commit_policy);
    if (!f.recovery_policy.empty())
        cfg.policies.recovery =
            parse_or_throw(parse_selection_policy(f.recovery_policy), "recovery policy", f.recovery_policy);
    if (!f.victim_policy.empty())
        cfg.policies.victims = parse_or_throw(parse_victim_policy(f.victim_policy), "victim policy", f.victim_policy);
    if (f.interleaving) cfg.composition = Composition::interleaving;
    cfg.validate();
    for (const auto& w : closed_system_warnings(cfg.programs)) std::cerr << "warning: " << w << "\n";

    const Trace t = run(cfg);
    if (!f.trace_out.empty()) write_trace_file(f.trace_out, t);
    if (!f.quiet) {
        io::json summary{{"outcome", std::string(to_string(t.outcome))},
                         {"steps", t.steps.size()},
                         {"seed", cfg.seed},
                         {"commit_order", t.commit_order()},
                         {"victimizations", t.count_events(EventKind::victimize)},
                         {"undos", t.count_events(EventKind::undo_applied)},
                         {"refusals", t.count_events(EventKind::lock_refuse)},
                         {"final_state_hash", hex64(t.final_state.digest())}};
        std::cout << summary.dump() << "\n";
    }
    return t.outcome == Outcome::completed ? exit_ok : exit_budget;
}

int cmd_check(const std::string& path, bool brute) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedTrace("cannot read '" + path + "'");
    const Trace t = read_trace(in);
    const Verdict v = check_serializable(t);
    io::json out = v.to_json();
    bool ok = v.serializable;
    if (brute) {
        const Verdict b = brute_force_serializable(t);
        out["brute_force"] = b.to_json();
        out["agree"] = b.serializable == v.serializable;
        ok = ok && b.serializable;
    }
    std::cout << out.dump() << "\n";
    return ok ? exit_ok : exit_not_serializable;
}

struct FuzzFlags {
    std::size_t runs = 100;
    std::size_t machines = 3;
    std::uint64_t seed = 0;
    std::size_t locations = 6;
    std::size_t domain = 4;
    std::size_t max_steps = 200;
    std::string wait_mode = "mixed";
    bool self_test = false;
    bool vary_policies = false;
    bool quiet = false;
    std::string dump_dir = ".";
};

FuzzOptions fuzz_options(const FuzzFlags& f) {
    FuzzOptions opt;
    opt.machines = f.machines;
    opt.locations = f.locations;
    opt.domain = f.domain;
    opt.max_steps = f.max_steps;
    opt.vary_policies = f.vary_policies;
    if (f.wait_mode == "retry")
        opt.wait = FuzzOptions::Wait::retry;
    else if (f.wait_mode == "suspend")
        opt.wait = FuzzOptions::Wait::suspend;
    else if (f.wait_mode == "mixed")
        opt.wait = FuzzOptions::Wait::mixed;
    else
        throw ConfigError("unknown wait mode '" + f.wait_mode + "'");
    if (opt.machines == 0 || opt.locations == 0 || opt.locations > 8 || opt.domain == 0)
        throw ConfigError("need at least one machine, 1..8 locations and a nonempty domain");
    return opt;
}

/// Reruns one configuration seed, as printed for a failing run.
int cmd_fuzz_exact(const FuzzFlags& f, std::uint64_t seed) {
    const auto r = fuzz_once(seed, fuzz_options(f), f.machines <= 4);
    if (!r.error.empty()) {
        std::cout << "error: " << r.error << "\n";
        return exit_error;
    }
    const fs::path dump = fs::path(f.dump_dir) / ("fuzz-" + std::to_string(seed) + ".trace.jsonl");
    write_trace_file(dump, r.trace);
    std::cout << r.verdict.to_json().dump() << "\ntrace: " << dump.string() << "\n";
    return r.ok() ? exit_ok : exit_not_serializable;
}

int cmd_fuzz(const FuzzFlags& f) {
    const FuzzOptions opt = fuzz_options(f);

    bool all_ok = true;
    if (f.self_test) {
        const auto forged = workloads::forged_lost_update_trace(f.seed);
        const bool rejected =
            !check_serializable(forged).serializable && !brute_force_serializable(forged).serializable;
        std::cout << "self-test lost-update fixture: " << (rejected ? "rejected (ok)" : "ACCEPTED (checker broken)")
                  << "\n";
        all_ok = rejected;
    }

    FuzzStats stats;
    for (std::size_t i = 0; i < f.runs; ++i) {
        const auto seed = fuzz_seed(f.seed, i);
        const FuzzRun r = fuzz_once(seed, opt, f.self_test && opt.machines <= 4);
        stats.add(r);
        if (!f.quiet || !r.ok()) {
            std::cout << "run " << i << " seed=" << seed;
            if (r.error.empty()) {
                std::cout << " wait=" << to_string(r.config.wait_mode) << " outcome=" << to_string(r.trace.outcome)
                          << " steps=" << r.trace.steps.size() << " commits=" << r.trace.count_events(EventKind::commit)
                          << " victims=" << r.trace.count_events(EventKind::victimize)
                          << " undos=" << r.trace.count_events(EventKind::undo_applied)
                          << " refusals=" << r.trace.count_events(EventKind::lock_refuse)
                          << " verdict=" << (r.verdict.serializable ? "serializable" : "NOT-SERIALIZABLE");
                if (r.brute) std::cout << " brute=" << (r.brute->serializable ? "serializable" : "NOT-SERIALIZABLE");
            } else {
                std::cout << " error: " << r.error;
            }
            std::cout << "\n";
        }
        if (!r.ok()) {
            all_ok = false;
            if (r.error.empty()) {
                const fs::path dump = fs::path(f.dump_dir) / ("fuzz-" + std::to_string(seed) + ".trace.jsonl");
                write_trace_file(dump, r.trace);
                std::cout << "  reason: " << r.verdict.reason << "\n  trace: " << dump.string() << "\n";
            }
            std::cout << "  repro: taserial fuzz --seed-exact " << seed << " --machines " << f.machines
                      << " --locations " << f.locations << " --domain " << f.domain << " --max-steps " << f.max_steps
                      << " --wait-mode " << f.wait_mode << (f.vary_policies ? " --vary-policies" : "") << "\n";
        }
    }
    std::cout << "runs=" << stats.runs << " serializable=" << (stats.runs - stats.failures)
              << " failures=" << stats.failures << " completed=" << stats.completed << " commits=" << stats.commits
              << " victimizations=" << stats.victimizations << " undos=" << stats.undos
              << " refusals=" << stats.refusals << " steps=" << stats.steps << "\n";
    return all_ok ? exit_ok : exit_not_serializable;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Run, check and fuzz transactional compositions of abstract state machines"};
    app.require_subcommand(1);

    RunFlags rf;
    auto* run_cmd = app.add_subcommand("run", "run a configuration and optionally record its trace");
    run_cmd->add_option("config", rf.config, "manifest or .asm program file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", rf.seed, "master seed (default: manifest, then TASERIAL_SEED, then 0)");
    run_cmd->add_option("--max-steps", rf.max_steps, "step budget");
    run_cmd->add_option("--trace", rf.trace_out, "write the trace (JSON lines) here");
    run_cmd->add_option("--wait-mode", rf.wait_mode, "retry | suspend");
    run_cmd->add_option("--lock-policy", rf.lock_policy, "random | fifo | lowest-id");
    run_cmd->add_option("--commit-policy", rf.commit_policy, "random | fifo | lowest-id");
    run_cmd->add_option("--recovery-policy", rf.recovery_policy, "random | fifo | lowest-id");
    run_cmd->add_option("--victim-policy", rf.victim_policy,
                        "shortest-history | longest-history | lowest-id | random");
    run_cmd->add_flag("--interleaving", rf.interleaving, "one agent per step instead of synchronous steps");
    run_cmd->add_flag("--quiet", rf.quiet, "no summary on stdout");

    std::string trace_path;
    bool brute = false;
    auto* check_cmd = app.add_subcommand("check", "decide serializability of a recorded trace");
    check_cmd->add_option("trace", trace_path, "trace file")->required();
    check_cmd->add_flag("--brute-force", brute, "also try every serial order (at most 4 machines)");

    FuzzFlags ff;
    std::optional<std::uint64_t> exact;
    auto* fuzz_cmd = app.add_subcommand("fuzz", "generate, run and check random configurations");
    fuzz_cmd->add_option("--runs", ff.runs, "number of configurations");
    fuzz_cmd->add_option("--machines", ff.machines, "machines per configuration");
    fuzz_cmd->add_option("--seed", ff.seed, "campaign seed");
    fuzz_cmd->add_option("--seed-exact", exact, "run exactly this configuration seed (repro)");
    fuzz_cmd->add_option("--locations", ff.locations, "shared locations (1..8)");
    fuzz_cmd->add_option("--domain", ff.domain, "domain size");
    fuzz_cmd->add_option("--max-steps", ff.max_steps, "step budget per run");
    fuzz_cmd->add_option("--wait-mode", ff.wait_mode, "retry | suspend | mixed");
    fuzz_cmd->add_option("--dump-dir", ff.dump_dir, "where failing and --seed-exact traces are written");
    fuzz_cmd->add_flag("--self-test", ff.self_test, "check the forged anomaly fixture and cross-check by brute force");
    fuzz_cmd->add_flag("--vary-policies", ff.vary_policies, "draw policies and composition per run");
    fuzz_cmd->add_flag("--quiet", ff.quiet, "print failing runs and the totals only");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(rf);
        if (*check_cmd) return cmd_check(trace_path, brute);
        if (*fuzz_cmd) {
            if (exact) return cmd_fuzz_exact(ff, *exact);
            return cmd_fuzz(ff);
        }
    } catch (const MalformedTrace& e) {
        std::cerr << "malformed trace: " << e.what() << "\n";
        return exit_error;
    } catch (const ConfigMismatch& e) {
        std::cerr << "config mismatch: " << e.what() << "\n";
        return exit_error;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return exit_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_error;
    }
    return exit_error;
}
