#include "paramsynth/ccp.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

namespace paramsynth {

void CcpConfig::validate() const {
    if (tau0 && !(*tau0 > 0))
        throw std::invalid_argument("tau0 must be positive");
    if (!(tau_max > 0) || (tau0 && tau_max < *tau0))
        throw std::invalid_argument("tau-max must be at least tau0");
    if (!(eps_graph > 0))
        throw std::invalid_argument("eps-graph must be positive");
    if (max_iterations < 1)
        throw std::invalid_argument("max-iters must be at least 1");
    if (restarts < 0)
        throw std::invalid_argument("restarts must be nonnegative");
    if (!(penalty_tol >= 0) || !(mc_tol > 0))
        throw std::invalid_argument("tolerances must be positive");
    if (schedule == TauSchedule::multiplicative && !(tau_factor > 1))
        throw std::invalid_argument("tau factor must exceed 1");
}

double CcpConfig::initial_tau(const Specification& spec) const {
    if (tau0)
        return *tau0;
    return spec.is_reachability() ? 0.05 : 5.0;
}

std::string to_string(SynthesisStatus status) {
    switch (status) {
    case SynthesisStatus::feasible:
        return "feasible";
    case SynthesisStatus::exhausted:
        return "exhausted";
    case SynthesisStatus::infeasible_instance:
        return "infeasible-instance";
    }
    return "unknown";
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

double midpoint(double lo, double hi) {
    if (std::isfinite(lo) && std::isfinite(hi))
        return 0.5 * (lo + hi);
    if (std::isfinite(lo))
        return lo + 1;
    if (std::isfinite(hi))
        return hi - 1;
    return 0;
}

double width(double lo, double hi) { return std::isfinite(hi - lo) ? hi - lo : 1.0; }

/// Instantiation that prints and re-parses to `v`, preferring short decimals.
std::optional<Instantiation> to_instantiation(const Pmdp& m, std::span<const double> v, const Rational& eps) {
    Instantiation u;
    for (ParamId i = 0; i < v.size(); ++i)
        u.set(i, decimal_rational(v[i]));
    if (check_well_defined(m, u, eps).ok)
        return u;
    Instantiation exact;
    for (ParamId i = 0; i < v.size(); ++i)
        exact.set(i, from_double(v[i]));
    if (check_well_defined(m, exact, eps).ok)
        return exact;
    return std::nullopt;
}

bool closer(const Specification& spec, double candidate, double best) {
    return spec.upper_bound() ? candidate < best : candidate > best;
}

class Driver {
public:
    Driver(const Pmdp& m, const Specification& spec, const CcpConfig& cfg)
        : m_(m), spec_(spec), cfg_(cfg), checker_(m, spec), rng_(cfg.seed) {}

    SynthesisResult run();

private:
    bool accept(std::span<const double> v, const McResult& fast);
    void record(const IterationRecord& r);
    void reanchor(std::vector<double>& anchor, std::span<const double> x, std::span<const double> v,
                  const McResult& fast) const;
    std::vector<double> parameters_of(std::span<const double> x) const;
    void perturb(std::vector<double>& anchor);
    double mu(std::span<const double> anchor) const;

    const Pmdp& m_;
    const Specification& spec_;
    const CcpConfig& cfg_;
    ParametricChecker checker_;
    std::mt19937_64 rng_;
    QcqpProblem qcqp_;
    SynthesisResult result_;
    Clock::time_point start_ = Clock::now();
};

std::vector<double> Driver::parameters_of(std::span<const double> x) const {
    const auto& vs = qcqp_.vars;
    std::vector<double> v(m_.num_parameters());
    for (ParamId i = 0; i < v.size(); ++i) {
        auto j = vs.parameter_variable(i);
        v[i] = std::clamp(x[j], qcqp_.program.lower[j], qcqp_.program.upper[j]);
    }
    return v;
}

bool Driver::accept(std::span<const double> v, const McResult& fast) {
    auto u = to_instantiation(m_, v, cfg_.eps_graph);
    if (!u)
        return false;
    checker_.set_valuation(u->to_doubles(m_.num_parameters()));
    auto exact = checker_.certify(&fast);
    double value = checker_.initial_value(exact);
    if (!checker_.holds(value))
        return false;
    result_.status = SynthesisStatus::feasible;
    result_.instantiation = std::move(u);
    result_.certified_value = value;
    return true;
}

void Driver::record(const IterationRecord& r) {
    result_.trace.push_back(r);
    if (cfg_.progress)
        fmt::print(*cfg_.progress, "iter={} restart={} tau={} penalty={} value={} solver={} solver_iters={}\n",
                   r.iteration, r.restart, format_decimal(r.tau), format_decimal(r.penalty), format_decimal(r.value),
                   to_string(r.solve), r.solver_iterations);
}

void Driver::reanchor(std::vector<double>& anchor, std::span<const double> x, std::span<const double> v,
                      const McResult& fast) const {
    const auto& vs = qcqp_.vars;
    const auto& p = qcqp_.program;
    for (std::size_t j = 0; j < vs.parameter_offset; ++j) {
        double value = cfg_.mc_feedback ? fast.values[vs.vars[j].source] : x[j];
        anchor[j] = std::clamp(value, p.lower[j], p.upper[j]);
    }
    for (ParamId i = 0; i < v.size(); ++i)
        anchor[vs.parameter_variable(i)] = v[i];
}

void Driver::perturb(std::vector<double>& anchor) {
    const auto& vs = qcqp_.vars;
    const auto& p = qcqp_.program;
    for (std::size_t j = vs.parameter_offset; j < vs.size(); ++j) {
        double unit = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        double radius = 0.25 * width(p.lower[j], p.upper[j]);
        anchor[j] = std::clamp(anchor[j] + (2 * unit - 1) * radius, p.lower[j], p.upper[j]);
    }
    if (cfg_.mc_feedback) {
        checker_.set_valuation(parameters_of(anchor));
        auto fast = checker_.solve(cfg_.mc_tol);
        for (std::size_t j = 0; j < vs.parameter_offset; ++j)
            anchor[j] = std::clamp(fast.values[vs.vars[j].source], p.lower[j], p.upper[j]);
    } else {
        auto fresh = initial_anchor(qcqp_, spec_);
        std::copy(fresh.begin(), fresh.begin() + vs.parameter_offset, anchor.begin());
    }
}

double Driver::mu(std::span<const double> anchor) const {
    double out = 0;
    for (std::size_t j = 0; j < qcqp_.vars.parameter_offset; ++j)
        out = std::max(out, anchor[j]);
    return out;
}

SynthesisResult Driver::run() {
    for (const auto& cs : m_.choices)
        for (const auto& c : cs)
            for (const auto& t : c.transitions)
                if (t.probability.is_constant() && t.probability.constant() < cfg_.eps_graph) {
                    result_.status = SynthesisStatus::infeasible_instance;
                    result_.note = "constant transition probability below eps-graph";
                    result_.total_seconds = seconds_since(start_);
                    return std::move(result_);
                }

    auto analysis = analyze(m_, spec_);
    auto nlp = build_nlp(m_, spec_, analysis, cfg_.eps_graph);
    qcqp_ = nlp_to_qcqp(nlp, m_);
    const auto& vs = qcqp_.vars;
    for (std::size_t j = vs.parameter_offset; j < vs.size(); ++j)
        if (qcqp_.program.lower[j] > qcqp_.program.upper[j]) {
            result_.status = SynthesisStatus::infeasible_instance;
            result_.note = fmt::format("no well-defined value for parameter {}", m_.parameters[vs.vars[j].source].name);
            result_.total_seconds = seconds_since(start_);
            return std::move(result_);
        }
    bool parametric = false;
    for (const auto& cs : m_.choices)
        for (const auto& c : cs)
            for (const auto& t : c.transitions)
                parametric = parametric || !t.probability.is_constant();
    if (!parametric) {
        // one model check decides
        auto v = parameters_of(initial_anchor(qcqp_, spec_));
        checker_.set_valuation(v);
        if (!accept(v, checker_.solve(cfg_.mc_tol))) {
            result_.status = SynthesisStatus::infeasible_instance;
            result_.note = "no transition depends on a parameter and the specification fails";
        }
        result_.total_seconds = seconds_since(start_);
        return std::move(result_);
    }
    if (!nlp.initial_variable && !satisfies(spec_, to_double(nlp.initial_value), 0.0)) {
        result_.status = SynthesisStatus::infeasible_instance;
        result_.note = fmt::format("initial value is {} for every instantiation", to_string(nlp.initial_value));
        result_.total_seconds = seconds_since(start_);
        return std::move(result_);
    }

    const auto dc = dc_split(qcqp_, cfg_.split);
    const double tau0 = cfg_.initial_tau(spec_);
    auto anchor = initial_anchor(qcqp_, spec_);
    std::optional<InteriorPointSolver> solver;
    double best = spec_.upper_bound() ? HUGE_VAL : -HUGE_VAL;

    for (int restart = 0; restart <= cfg_.restarts; ++restart) {
        if (restart > 0) {
            perturb(anchor);
            ++result_.restarts;
        }
        double tau = tau0;
        std::optional<SolveReport> previous;
        std::optional<ConvexifiedProgram> prog;
        int still = 0;
        for (int it = 1; it <= cfg_.max_iterations; ++it) {
            ++result_.iterations;
            auto t0 = Clock::now();
            if (cfg_.incremental && prog) {
                refresh(*prog, anchor, tau);
            } else {
                prog = convexify(dc, anchor, tau);
            }
            result_.encode_seconds += seconds_since(t0);
            if (!cfg_.incremental || !solver)
                solver.emplace(cfg_.solver);

            t0 = Clock::now();
            auto report = solver->solve(prog->program, cfg_.incremental && previous ? &*previous : nullptr);
            result_.solver_seconds += seconds_since(t0);

            IterationRecord rec{restart, it, tau, 0.0, 0.0, report.status, report.iterations};
            const bool usable = report.status == SolveStatus::optimal ||
                                (report.status == SolveStatus::max_iter &&
                                 std::all_of(report.x.begin(), report.x.end(), [](double x) { return std::isfinite(x); }));
            if (!usable) {
                rec.penalty = rec.value = std::nan("");
                record(rec);
                break;
            }
            auto v = parameters_of(report.x);
            const double penalty = prog->penalty_sum(report.x);
            checker_.set_valuation(v);
            auto fast = checker_.solve(cfg_.mc_tol);
            const double value = checker_.initial_value(fast);
            rec.penalty = penalty;
            rec.value = value;
            record(rec);

            if (closer(spec_, value, best)) {
                best = value;
                result_.best_value = value;
                result_.best_instantiation = to_instantiation(m_, v, cfg_.eps_graph);
            }
            const bool candidate = (cfg_.mc_feedback && checker_.holds(value)) || penalty <= cfg_.penalty_tol;
            if (candidate) {
                if (accept(v, fast)) {
                    result_.total_seconds = seconds_since(start_);
                    return std::move(result_);
                }
                if (penalty <= cfg_.penalty_tol)
                    result_.note = fmt::format("spurious zero-penalty point at iteration {}", result_.iterations);
            }

            auto next = anchor;
            reanchor(next, report.x, v, fast);
            double moved = 0;
            for (std::size_t j = 0; j < next.size(); ++j)
                moved = std::max(moved, std::abs(next[j] - anchor[j]));
            anchor = std::move(next);
            still = moved < 1e-9 ? still + 1 : 0;
            if (still >= 3)
                break; // stationary with a positive penalty

            if (cfg_.schedule == TauSchedule::additive) {
                double step = mu(anchor);
                tau = std::min(tau + (step > 0 ? step : tau0), cfg_.tau_max);
            } else {
                tau = std::min(tau * cfg_.tau_factor, cfg_.tau_max);
            }
            if (report.status == SolveStatus::optimal)
                previous = std::move(report);
            else
                previous.reset();
        }
    }
    result_.status = SynthesisStatus::exhausted;
    result_.total_seconds = seconds_since(start_);
    return std::move(result_);
}

} // namespace

std::vector<double> initial_anchor(const QcqpProblem& qcqp, const Specification& spec) {
    const auto& vs = qcqp.vars;
    const auto& p = qcqp.program;
    std::vector<double> anchor(vs.size());
    const double threshold = to_double(spec.threshold);
    for (std::size_t j = 0; j < vs.parameter_offset; ++j)
        anchor[j] = std::clamp(threshold, p.lower[j], p.upper[j]);
    for (std::size_t j = vs.parameter_offset; j < vs.size(); ++j)
        anchor[j] = midpoint(p.lower[j], p.upper[j]);
    return anchor;
}

SynthesisResult synthesize(const Pmdp& m, const Specification& spec, const CcpConfig& config) {
    config.validate();
    Driver driver(m, spec, config);
    return driver.run();
}

} // namespace paramsynth
