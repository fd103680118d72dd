#include "cli.hpp"

#include <paramsynth/ccp.hpp>
#include <paramsynth/encode.hpp>
#include <paramsynth/generators.hpp>
#include <paramsynth/graph.hpp>
#include <paramsynth/mc.hpp>
#include <paramsynth/parser.hpp>
#include <paramsynth/pso.hpp>
#include <paramsynth/quadratic.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace paramsynth::cli {

namespace {

/// Input problems that map to exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError(fmt::format("cannot read {}", path));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text))
        throw InputError(fmt::format("cannot write {}", path));
}

struct Options {
    std::string model, spec, out_file, progress_file, valuation, dump_qcqp;
    std::string eps_graph = "1/100000";
    std::uint64_t seed = 0;
    double mc_tol = kDefaultMcTolerance;
    std::optional<int> max_iters;

    // ccp
    std::optional<double> tau0, tau_max;
    SplitMethod split = SplitMethod::bilinear;
    TauSchedule schedule = TauSchedule::additive;
    bool no_feedback = false, rebuild = false;
    int restarts = 3;

    // pso
    int particles = 40, jobs = 1;
    std::optional<double> time_budget;
    bool optimize = false;

    // gen
    std::size_t size = 4, params = 1;
    bool pmc = false;
};

Rational eps_of(const Options& o) {
    auto r = parse_rational(o.eps_graph);
    if (!r || *r <= 0)
        throw InputError(fmt::format("invalid eps-graph '{}'", o.eps_graph));
    return *r;
}

Pmdp load_model(const Options& o) { return parse_model(read_file(o.model)); }

void print_stats(std::ostream& out, const SynthesisResult& r) {
    fmt::print(out, "iterations: {}\n", r.iterations);
    fmt::print(out, "restarts: {}\n", r.restarts);
    fmt::print(out, "solver-fraction: {:.3f}\n", r.solver_fraction());
    fmt::print(out, "total-seconds: {:.6f}\n", r.total_seconds);
}

int report(const Pmdp& m, const SynthesisResult& r, const Options& o, std::ostream& out, std::ostream& err) {
    fmt::print(out, "result: {}\n", to_string(r.status));
    if (r.status == SynthesisStatus::feasible) {
        auto text = format_instantiation(m, *r.instantiation);
        out << text;
        fmt::print(out, "certified-value: {}\n", format_decimal(*r.certified_value));
        if (!o.out_file.empty())
            write_file(o.out_file, text);
    } else if (r.best_value) {
        fmt::print(out, "best-value: {}\n", format_decimal(*r.best_value));
    }
    print_stats(out, r);
    if (!r.note.empty())
        fmt::print(err, "note: {}\n", r.note);
    return r.status == SynthesisStatus::feasible ? ok : negative;
}

int synth_ccp(const Options& o, std::ostream& out, std::ostream& err) {
    auto m = load_model(o);
    auto spec = parse_spec(o.spec);
    CcpConfig cfg;
    cfg.tau0 = o.tau0;
    if (o.tau_max)
        cfg.tau_max = *o.tau_max;
    cfg.schedule = o.schedule;
    cfg.eps_graph = eps_of(o);
    if (o.max_iters)
        cfg.max_iterations = *o.max_iters;
    cfg.restarts = o.restarts;
    cfg.split = o.split;
    cfg.mc_tol = o.mc_tol;
    cfg.mc_feedback = !o.no_feedback;
    cfg.incremental = !o.rebuild;
    cfg.seed = o.seed;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    if (!o.dump_qcqp.empty()) {
        auto q = nlp_to_qcqp(build_nlp(m, spec, analyze(m, spec), cfg.eps_graph), m);
        std::ostringstream listing;
        write_listing(listing, q.program);
        write_file(o.dump_qcqp, listing.str());
    }
    std::ofstream progress;
    if (!o.progress_file.empty()) {
        progress.open(o.progress_file);
        if (!progress)
            throw InputError(fmt::format("cannot write {}", o.progress_file));
        cfg.progress = &progress;
    }
    return report(m, synthesize(m, spec, cfg), o, out, err);
}

int synth_pso(const Options& o, std::ostream& out, std::ostream& err) {
    auto m = load_model(o);
    auto spec = parse_spec(o.spec);
    PsoConfig cfg;
    cfg.particles = o.particles;
    if (o.max_iters)
        cfg.max_iterations = *o.max_iters;
    cfg.seed = o.seed;
    cfg.jobs = o.jobs;
    cfg.optimize_only = o.optimize;
    cfg.time_budget = o.time_budget;
    cfg.eps_graph = eps_of(o);
    cfg.mc_tol = o.mc_tol;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    std::ofstream progress;
    if (!o.progress_file.empty()) {
        progress.open(o.progress_file);
        if (!progress)
            throw InputError(fmt::format("cannot write {}", o.progress_file));
        cfg.progress = &progress;
    }
    return report(m, synthesize_pso(m, spec, cfg), o, out, err);
}

int check_command(const Options& o, std::ostream& out, std::ostream& err) {
    auto m = load_model(o);
    auto spec = parse_spec(o.spec);
    auto u = parse_instantiation(m, read_file(o.valuation));
    auto wd = check_well_defined(m, u, eps_of(o));
    if (!wd.ok) {
        fmt::print(err, "error: valuation is not well-defined\n");
        for (const auto& v : wd.violations)
            fmt::print(err, "  {}\n", describe(m, v));
        return usage_error;
    }
    auto r = check(m, u, spec);
    fmt::print(out, "value: {}\n", format_decimal(r.value));
    fmt::print(out, "holds: {}\n", r.holds ? "yes" : "no");
    return r.holds ? ok : negative;
}

int encode_command(const Options& o, std::ostream& out) {
    auto m = load_model(o);
    auto spec = parse_spec(o.spec);
    auto q = nlp_to_qcqp(build_nlp(m, spec, analyze(m, spec), eps_of(o)), m);
    std::ostringstream listing;
    write_listing(listing, q.program);
    if (o.dump_qcqp.empty() || o.dump_qcqp == "-")
        out << listing.str();
    else
        write_file(o.dump_qcqp, listing.str());
    return ok;
}

int emit_model(const Pmdp& m, const Options& o, std::ostream& out) {
    auto text = serialize_model(m);
    if (o.out_file.empty())
        out << text;
    else
        write_file(o.out_file, text);
    return ok;
}

void common_synth_flags(CLI::App* app, Options& o) {
    app->add_option("--model", o.model, "model file")->required();
    app->add_option("--spec", o.spec, "specification, e.g. P<=0.3 or E>=12")->required();
    app->add_option("--out", o.out_file, "write the instantiation here on success");
    app->add_option("--progress", o.progress_file, "write one line per iteration here");
    app->add_option("--eps-graph", o.eps_graph, "lower bound for every transition probability")->capture_default_str();
    app->add_option("--seed", o.seed, "random seed")->capture_default_str();
    app->add_option("--mc-tol", o.mc_tol, "value-iteration tolerance")->capture_default_str();
    app->add_option("--max-iters", o.max_iters, "iteration cap");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Parameter synthesis for parametric Markov decision processes", "paramsynth"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "find parameter values satisfying a specification");
    synth->require_subcommand(1);
    auto* ccp = synth->add_subcommand("ccp", "penalty convex-concave procedure");
    common_synth_flags(ccp, o);
    ccp->add_option("--tau0", o.tau0, "initial penalty weight (0.05 reach, 5 cost)");
    ccp->add_option("--tau-max", o.tau_max, "penalty weight cap")->default_str("10000");
    ccp->add_option("--restarts", o.restarts, "perturbed restarts")->capture_default_str();
    const std::map<std::string, SplitMethod> splits{{"bilinear", SplitMethod::bilinear}, {"eigen", SplitMethod::eigen}};
    ccp->add_option("--split", o.split, "difference-of-convex split")
        ->transform(CLI::CheckedTransformer(splits, CLI::ignore_case))
        ->default_str("bilinear");
    const std::map<std::string, TauSchedule> schedules{{"additive", TauSchedule::additive},
                                                       {"multiplicative", TauSchedule::multiplicative}};
    ccp->add_option("--tau-schedule", o.schedule, "penalty weight growth")
        ->transform(CLI::CheckedTransformer(schedules, CLI::ignore_case))
        ->default_str("additive");
    ccp->add_flag("--no-mc-feedback", o.no_feedback, "do not use model-checking results inside the loop");
    ccp->add_flag("--rebuild", o.rebuild, "rebuild the convex program and cold start every iteration");
    ccp->add_option("--dump-qcqp", o.dump_qcqp, "write the nonconvex program listing here");

    auto* pso = synth->add_subcommand("pso", "particle swarm over the parameter box");
    common_synth_flags(pso, o);
    pso->add_option("--particles", o.particles, "swarm size")->capture_default_str();
    pso->add_option("--jobs", o.jobs, "fitness evaluation threads")->capture_default_str();
    pso->add_option("--time-budget", o.time_budget, "wall-clock limit in seconds");
    pso->add_flag("--optimize", o.optimize, "ignore the threshold and report the best value");

    auto* chk = app.add_subcommand("check", "model check one valuation");
    chk->add_option("--model", o.model, "model file")->required();
    chk->add_option("--spec", o.spec, "specification")->required();
    chk->add_option("--valuation", o.valuation, "file with 'name = value' lines")->required();
    chk->add_option("--eps-graph", o.eps_graph, "lower bound for every transition probability")->capture_default_str();

    auto* enc = app.add_subcommand("encode", "print the nonconvex program as a listing");
    enc->add_option("--model", o.model, "model file")->required();
    enc->add_option("--spec", o.spec, "specification")->required();
    enc->add_option("--eps-graph", o.eps_graph, "lower bound for every transition probability")->capture_default_str();
    enc->add_option("--dump-qcqp", o.dump_qcqp, "output file, '-' for stdout")->default_str("-");

    auto* gen = app.add_subcommand("gen", "generate a benchmark model");
    gen->require_subcommand(1);
    auto* grid = gen->add_subcommand("grid", "grid walk with traps");
    grid->add_option("--size", o.size, "side length")->check(CLI::PositiveNumber)->capture_default_str();
    grid->add_option("--params", o.params, "parameter count")->check(CLI::PositiveNumber)->capture_default_str();
    grid->add_option("--seed", o.seed, "random seed")->capture_default_str();
    auto* maze = gen->add_subcommand("maze", "maze with slips and optional slow moves");
    maze->add_option("--size", o.size, "side length")->check(CLI::Range(2, 1 << 12))->capture_default_str();
    maze->add_option("--seed", o.seed, "random seed")->capture_default_str();
    maze->add_flag("--pmc", o.pmc, "one action per cell");
    auto* chain = gen->add_subcommand("chain", "product-of-parameters chain");
    chain->add_option("--size", o.size, "steps")->check(CLI::PositiveNumber)->capture_default_str();
    chain->add_option("--params", o.params, "parameter count")->check(CLI::PositiveNumber)->capture_default_str();
    for (auto* g : {grid, maze, chain})
        g->add_option("--out", o.out_file, "output file (stdout if omitted)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? ok : usage_error;
    }

    try {
        if (*ccp)
            return synth_ccp(o, out, err);
        if (*pso)
            return synth_pso(o, out, err);
        if (*chk)
            return check_command(o, out, err);
        if (*enc)
            return encode_command(o, out);
        if (*grid)
            return emit_model(grid_model(o.size, o.params, o.seed), o, out);
        if (*maze)
            return emit_model(maze_model({o.size, o.seed, o.pmc}), o, out);
        if (*chain)
            return emit_model(chain_model(o.size, o.params), o, out);
    } catch (const NotSupported& e) {
        fmt::print(err, "not supported: {}\n", e.what());
        return not_supported;
    } catch (const ParseError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return usage_error;
    } catch (const ModelError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return usage_error;
    } catch (const InfeasibleCost& e) {
        fmt::print(err, "error: {}\n", e.what());
        return usage_error;
    } catch (const InputError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return usage_error;
    } catch (const std::invalid_argument& e) {
        fmt::print(err, "error: {}\n", e.what());
        return usage_error;
    }
    return usage_error;
}

} // namespace paramsynth::cli
