// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include "fixtures.hpp"

#include <cli.hpp>
#include <paramsynth/ccp.hpp>
#include <paramsynth/encode.hpp>
#include <paramsynth/mc.hpp>
#include <paramsynth/pso.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace paramsynth;
using namespace paramsynth::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Verdict {
    bool pass = false;
    std::string detail;
};

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<double> random_point(std::mt19937_64& rng, std::size_t n, double scale = 2.0) {
    std::vector<double> x(n);
    for (auto& v : x)
        v = scale * (unit(rng) - 0.5);
    return x;
}

/// Best value PSO finds in the direction that helps the specification.
double pso_optimum(const Pmdp& m, const Specification& spec, std::uint64_t seed, int particles, int iterations) {
    PsoConfig cfg;
    cfg.optimize_only = true;
    cfg.particles = particles;
    cfg.max_iterations = iterations;
    cfg.seed = seed;
    return *synthesize_pso(m, spec, cfg).best_value;
}

/// Threshold with 10% slack beyond `optimum` on the satisfiable side.
std::string slack_spec(const char* kind, bool at_most, double optimum) {
    double lambda = at_most ? 1.1 * optimum : optimum / 1.1;
    if (kind[0] == 'P')
        lambda = std::min(lambda, 1.0);
    return fmt::format("{}{}{}", kind, at_most ? "<=" : ">=", format_decimal(lambda));
}

Verdict certified_verdicts() {
    int instances = 0, feasible = 0, false_positive = 0, skipped = 0;
    for (std::uint64_t seed = 0; instances < 200; ++seed) {
        RandomModelOptions o;
        o.states = 4 + seed % 27;
        o.max_actions = 1 + seed % 3;
        o.parameters = 1 + seed % 6;
        o.costs = seed % 3 == 0;
        auto m = random_model(o, 1000 + seed);
        const bool at_most = seed % 2 == 0;
        const char* kind = o.costs ? "E" : "P";
        try {
            auto probe = parse_spec(fmt::format("{}{}0", kind, at_most ? "<=" : ">="));
            auto spec = parse_spec(slack_spec(kind, at_most, pso_optimum(m, probe, seed, 20, 40)));
            CcpConfig cfg;
            cfg.seed = seed;
            auto r = synthesize(m, spec, cfg);
            ++instances;
            if (r.status != SynthesisStatus::feasible)
                continue;
            ++feasible;
            auto wd = check_well_defined(m, *r.instantiation, cfg.eps_graph);
            auto c = check(m, *r.instantiation, spec, kCertificationSlack);
            if (!wd.ok || !c.holds) {
                ++false_positive;
                std::cout << fmt::format("  false positive: seed {} spec {} value {}\n", seed, spec.to_string(), c.value);
            }
        } catch (const InfeasibleCost&) {
            ++skipped;
        }
    }
    return {false_positive == 0 && instances == 200,
            fmt::format("{} instances, {} feasible, {} false positives, {} skipped for infinite cost", instances,
                        feasible, false_positive, skipped)};
}

Verdict majorization() {
    const auto start = Clock::now();
    std::mt19937_64 rng(2024);
    double worst_major = 0, worst_touch = 0;
    int samples = 0;
    for (auto method : {SplitMethod::bilinear, SplitMethod::eigen}) {
        int done = 0;
        for (std::uint64_t seed = 0; done < 1000; ++seed) {
            RandomModelOptions o;
            o.states = 6 + seed % 20;
            o.max_actions = 1 + seed % 3;
            o.parameters = 1 + seed % 6;
            o.costs = seed % 2;
            auto m = random_model(o, 500 + seed);
            auto spec = parse_spec(o.costs ? "E<=10" : "P<=0.5");
            QcqpProblem q;
            try {
                q = nlp_to_qcqp(build_nlp(m, spec, analyze(m, spec), Rational(1, 100000)), m);
            } catch (const InfeasibleCost&) {
                continue;
            }
            auto dc = dc_split(q, method);
            const auto n = q.program.num_variables();
            for (std::size_t i = 0; i < dc.constraints.size() && done < 1000; ++i) {
                if (q.program.constraints[i].is_affine())
                    continue;
                auto anchor = random_point(rng, n);
                auto x = random_point(rng, n);
                auto prog = convexify(dc, anchor, 1.0);
                std::vector<double> at(prog.program.num_variables(), 0.0), xs = at;
                std::copy(anchor.begin(), anchor.end(), at.begin());
                std::copy(x.begin(), x.end(), xs.begin());
                const auto& c = prog.program.constraints[i];
                worst_touch = std::max(worst_touch, std::abs(c.value(at) - dc.original_value(i, anchor)));
                worst_major = std::max(worst_major, dc.original_value(i, x) - c.value(xs));
                ++done;
                ++samples;
            }
        }
    }
    const double secs = seconds_since(start);
    return {worst_major <= 1e-9 && worst_touch <= 1e-12 && secs < 10,
            fmt::format("{} samples over both splits, max shortfall {:.3g}, max anchor gap {:.3g}, {:.2f} s", samples,
                        worst_major, worst_touch, secs)};
}

Verdict witness() {
    auto m = leaky_chain();
    auto spec = parse_spec("P<=0.3");
    auto q = nlp_to_qcqp(build_nlp(m, spec, analyze(m, spec), Rational(1, 100000)), m);
    const auto s0 = *m.find_state("s0");
    const QuadConstraint* row = nullptr;
    for (std::size_t i = 0; i < q.origins.size(); ++i)
        if (q.origins[i].kind == RowKind::bellman && q.origins[i].state == s0)
            row = &q.program.constraints[i];
    if (!row || row->quad.size() != 2)
        return {false, "s0 row is not a single bilinear term"};
    const auto a = row->quad[0].row, b = row->quad[0].col;
    const double off = row->quad[0].value;
    // d = e_a - e_b
    const double curvature = -2 * off;
    const double t = gershgorin_bound(*row);
    std::mt19937_64 rng(3);
    double worst = HUGE_VAL;
    for (int k = 0; k < 10000; ++k) {
        double da = unit(rng) * 2 - 1, db = unit(rng) * 2 - 1;
        worst = std::min(worst, 2 * off * da * db + t * (da * da + db * db));
    }
    const bool pass = a != b && off == 0.5 && curvature < 0 && t == 0.5 && worst >= -1e-9;
    return {pass, fmt::format("P = [[0,{0}],[{0},0]], d'Pd = {1} along (1,-1), Gershgorin t = {2}, min d'(P+tI)d = {3:.3g}",
                              off, curvature, t, worst)};
}

Verdict oracle_equivalence() {
    const auto start = Clock::now();
    double worst = 0;
    int compared = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const bool cost = seed % 2 == 1;
        StateSet targets;
        auto mdp = random_concrete(3 + seed % 6, 2, cost, 7000 + seed, &targets);
        for (const char* text : {"P<=0.5", "P>=0.5", "E<=1", "E>=1"}) {
            auto spec = parse_spec(text);
            if (spec.is_reachability() == cost)
                continue;
            auto exact = brute_force_oracle(mdp, targets, spec);
            McResult fast;
            try {
                fast = spec.is_reachability() ? extremal_reach(mdp, targets, adversary(spec))
                                              : extremal_cost(mdp, targets, adversary(spec));
            } catch (const InfeasibleCost&) {
                continue;
            }
            for (StateId s = 0; s < mdp.num_states(); ++s) {
                if (!exact[s]) {
                    if (std::isfinite(fast.values[s]))
                        worst = HUGE_VAL;
                    continue;
                }
                worst = std::max(worst, std::abs(fast.values[s] - to_double(*exact[s])));
                ++compared;
            }
        }
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-6 && secs < 30 && compared > 0,
            fmt::format("{} state values, max deviation {:.3g}, {:.2f} s", compared, worst, secs)};
}

struct CliRun {
    int code;
    std::string out;
    double seconds;
};

CliRun cli_run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    auto t0 = Clock::now();
    int code = cli::run(args, out, err);
    return {code, out.str(), seconds_since(t0)};
}

int stat_of(const std::string& out, const std::string& key) {
    auto at = out.find(key + ": ");
    return at == std::string::npos ? -1 : std::stoi(out.substr(at + key.size() + 2));
}

Verdict leaky_chain_end_to_end(const fs::path& dir) {
    auto model = (dir / "leaky.pmdp").string();
    std::ofstream(model) << kLeakyChain;
    auto feasible = cli_run({"synth", "ccp", "--model", model, "--spec", "P<=0.3", "--out", (dir / "u.txt").string()});
    auto exhausted = cli_run({"synth", "ccp", "--model", model, "--spec", "P>=0.2"});
    const int iters = stat_of(feasible.out, "iterations");
    bool certified = false;
    if (feasible.code == 0) {
        std::ifstream in(dir / "u.txt");
        std::stringstream s;
        s << in.rdbuf();
        auto m = leaky_chain();
        auto u = parse_instantiation(m, s.str());
        const double v = u.to_doubles(1)[0];
        certified = check(m, u, parse_spec("P<=0.3")).holds && leaky_chain_value(v) <= 0.3;
    }
    const bool pass = feasible.code == 0 && certified && iters >= 1 && iters <= 20 && feasible.seconds < 1 &&
                      exhausted.code == 2;
    return {pass, fmt::format("P<=0.3 exit {} in {} iterations, {:.3f} s; P>=0.2 exit {}", feasible.code, iters,
                              feasible.seconds, exhausted.code)};
}

Verdict many_parameters() {
    auto m = maze_model({32, 0, true});
    auto probe = parse_spec("E<=0");
    auto t0 = Clock::now();
    const double estimate = pso_optimum(m, probe, 0, 40, 50);
    const double estimate_seconds = seconds_since(t0);
    auto spec = parse_spec(slack_spec("E", true, estimate));
    CcpConfig cfg;
    auto r = synthesize(m, spec, cfg);
    bool certified = r.status == SynthesisStatus::feasible && check(m, *r.instantiation, spec).holds;
    PsoConfig pcfg;
    pcfg.time_budget = 300;
    auto p = synthesize_pso(m, spec, pcfg);
    return {certified && r.total_seconds < 300,
            fmt::format("{} states, {} parameters, PSO estimate {:.4f} ({:.1f} s), threshold {:.4f}: CCP {} in {} iterations "
                        "{:.2f} s; PSO {} in {:.2f} s",
                        m.num_states(), m.num_parameters(), estimate, estimate_seconds, to_double(spec.threshold),
                        to_string(r.status), r.iterations, r.total_seconds, to_string(p.status), p.total_seconds)};
}

Verdict incremental_refresh() {
    auto m = maze_model({23, 0, true});
    ParametricChecker ck(m, parse_spec("E<=1"));
    ck.set_valuation(std::vector<double>(m.num_parameters(), 0.5));
    auto spec = parse_spec("E<=" + format_decimal(0.5 * ck.initial_value(ck.solve())));
    double cost[2];
    int iters[2];
    for (int inc = 0; inc < 2; ++inc) {
        CcpConfig cfg;
        cfg.mc_feedback = false;
        cfg.max_iterations = 30;
        cfg.restarts = 0;
        cfg.incremental = inc == 1;
        auto r = synthesize(m, spec, cfg);
        cost[inc] = r.encode_seconds + r.solver_seconds;
        iters[inc] = r.iterations;
    }
    const double ratio = cost[1] / cost[0];
    return {iters[0] == 30 && iters[1] == 30 && ratio <= 0.6,
            fmt::format("{} states, 30 iterations: refresh+warm {:.3f} s, rebuild+cold {:.3f} s, ratio {:.2f}",
                        m.num_states(), cost[1], cost[0], ratio)};
}

double median(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Verdict feedback_value() {
    std::vector<int> with, without;
    int feasible_with = 0, feasible_without = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto m = maze_model({10, seed, false});
        ParametricChecker ck(m, parse_spec("E<=1"));
        ck.set_valuation(std::vector<double>(m.num_parameters(), 0.5));
        auto spec = parse_spec("E<=" + format_decimal(0.85 * ck.initial_value(ck.solve())));
        for (bool fb : {true, false}) {
            CcpConfig cfg;
            cfg.mc_feedback = fb;
            cfg.seed = seed;
            auto r = synthesize(m, spec, cfg);
            (fb ? with : without).push_back(r.iterations);
            if (r.status == SynthesisStatus::feasible)
                ++(fb ? feasible_with : feasible_without);
        }
    }
    const double a = median(with), b = median(without);
    const double saving = 1 - a / b;
    return {saving >= 0.2, fmt::format("20 mazes: median iterations {} with feedback ({} feasible), {} without ({} "
                                       "feasible), saving {:.0f}%",
                                       a, feasible_with, b, feasible_without, 100 * saving)};
}

Verdict determinism(const fs::path& dir) {
    auto model = (dir / "maze.pmdp").string();
    if (cli_run({"gen", "maze", "--size", "6", "--seed", "3", "--out", model}).code != 0)
        return {false, "could not generate the model"};
    std::string detail;
    bool pass = true;
    for (const char* method : {"ccp", "pso"}) {
        std::string files[2];
        int codes[2];
        for (int k = 0; k < 2; ++k) {
            auto path = (dir / fmt::format("{}{}.txt", method, k)).string();
            codes[k] = cli_run({"synth", method, "--model", model, "--spec", "E<=30", "--seed", "5", "--out", path}).code;
            std::ifstream in(path);
            std::stringstream s;
            s << in.rdbuf();
            files[k] = s.str();
        }
        const bool same = codes[0] == 0 && codes[1] == 0 && !files[0].empty() && files[0] == files[1];
        pass = pass && same;
        detail += fmt::format("{}{}: {}", detail.empty() ? "" : ", ", method, same ? "identical" : "differs");
    }
    return {pass, detail};
}

} // namespace

int main() {
    const auto dir = fs::temp_directory_path() / "paramsynth_acceptance";
    fs::create_directories(dir);
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"certified verdicts on random models", certified_verdicts},
        {"majorization and touching", majorization},
        {"nonconvexity witness", witness},
        {"model checker against brute force", oracle_equivalence},
        {"leaky chain end to end", [&] { return leaky_chain_end_to_end(dir); }},
        {"many-parameter maze", many_parameters},
        {"incremental refresh", incremental_refresh},
        {"model-checking feedback", feedback_value},
        {"determinism", [&] { return determinism(dir); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, fmt::format("exception: {}", e.what())};
        }
        failed += !v.pass;
        std::cout << fmt::format("{} {} {}: {}", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail)
                  << std::endl;
    }
    fs::remove_all(dir);
    return failed == 0 ? 0 : 1;
}
