#include "paramsynth/pso.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

namespace paramsynth {

void PsoConfig::validate() const {
    if (particles < 2)
        throw std::invalid_argument("need at least two particles");
    if (!(inertia > 0) || !(cognitive > 0) || !(social > 0))
        throw std::invalid_argument("swarm coefficients must be positive");
    if (max_iterations < 1)
        throw std::invalid_argument("max-iters must be at least 1");
    if (jobs < 1)
        throw std::invalid_argument("jobs must be at least 1");
    if (time_budget && !(*time_budget > 0))
        throw std::invalid_argument("time budget must be positive");
    if (!(eps_graph > 0))
        throw std::invalid_argument("eps-graph must be positive");
    if (!(mc_tol > 0))
        throw std::invalid_argument("tolerances must be positive");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

class Swarm {
public:
    Swarm(const Pmdp& m, const Specification& spec, const PsoConfig& cfg)
        : m_(m), spec_(spec), cfg_(cfg), rng_(cfg.seed), dim_(m.num_parameters()) {
        for (const auto& p : m.parameters) {
            if (!p.bounds.lo || !p.bounds.hi)
                throw NotSupported(fmt::format("parameter {} has an unbounded range", p.name));
            lo_.push_back(to_double(*p.bounds.lo));
            hi_.push_back(to_double(*p.bounds.hi));
        }
        if (!well_definedness_is_universal(m, cfg.eps_graph))
            throw NotSupported("well-defined parameter region is not the full box");
        const auto workers = static_cast<std::size_t>(std::min(cfg.jobs, cfg.particles));
        for (std::size_t w = 0; w < workers; ++w)
            checkers_.emplace_back(m, spec);
    }

    SynthesisResult run();

private:
    double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    bool better(double a, double b) const { return spec_.upper_bound() ? a < b : a > b; }
    void evaluate(const std::vector<std::vector<double>>& x, std::vector<double>& fitness);
    std::optional<Instantiation> certified(const std::vector<double>& x, double& value);

    const Pmdp& m_;
    const Specification& spec_;
    const PsoConfig& cfg_;
    std::mt19937_64 rng_;
    std::size_t dim_;
    std::vector<double> lo_, hi_;
    std::vector<ParametricChecker> checkers_;
    SynthesisResult result_;
};

void Swarm::evaluate(const std::vector<std::vector<double>>& x, std::vector<double>& fitness) {
    auto slice = [&](std::size_t w) {
        auto& ck = checkers_[w];
        for (std::size_t i = w; i < x.size(); i += checkers_.size()) {
            ck.set_valuation(x[i]);
            fitness[i] = ck.initial_value(ck.solve(cfg_.mc_tol));
        }
    };
    if (checkers_.size() == 1) {
        slice(0);
        return;
    }
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < checkers_.size(); ++w)
        pool.emplace_back(slice, w);
    slice(0);
}

std::optional<Instantiation> Swarm::certified(const std::vector<double>& x, double& value) {
    Instantiation u;
    for (ParamId i = 0; i < dim_; ++i) {
        auto r = decimal_rational(x[i]);
        if (r < *m_.parameters[i].bounds.lo || r > *m_.parameters[i].bounds.hi)
            r = from_double(x[i]);
        u.set(i, std::move(r));
    }
    auto& ck = checkers_.front();
    ck.set_valuation(u.to_doubles(dim_));
    auto fast = ck.solve(cfg_.mc_tol);
    auto exact = ck.certify(&fast);
    value = ck.initial_value(exact);
    if (!ck.holds(value))
        return std::nullopt;
    return u;
}

SynthesisResult Swarm::run() {
    const auto start = Clock::now();
    const auto n = static_cast<std::size_t>(cfg_.particles);
    std::vector<std::vector<double>> x(n, std::vector<double>(dim_)), v = x;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim_; ++d) {
            x[i][d] = lo_[d] + unit() * (hi_[d] - lo_[d]);
            double other = lo_[d] + unit() * (hi_[d] - lo_[d]);
            v[i][d] = 0.5 * (other - x[i][d]);
        }
    auto best_x = x;
    std::vector<double> fitness(n), best_f(n);
    std::size_t leader = 0;
    double mc_seconds = 0;

    for (int it = 1; it <= cfg_.max_iterations; ++it) {
        if (cfg_.time_budget && seconds_since(start) > *cfg_.time_budget) {
            result_.note = "time budget exhausted";
            break;
        }
        ++result_.iterations;
        auto t0 = Clock::now();
        evaluate(x, fitness);
        mc_seconds += seconds_since(t0);

        for (std::size_t i = 0; i < n; ++i) {
            if (it == 1 || better(fitness[i], best_f[i])) {
                best_f[i] = fitness[i];
                best_x[i] = x[i];
            }
            if (better(best_f[i], best_f[leader]))
                leader = i;
        }
        result_.trace.push_back({0, it, 0.0, 0.0, best_f[leader], SolveStatus::optimal, 0});
        if (cfg_.progress)
            fmt::print(*cfg_.progress, "iter={} best={}\n", it, format_decimal(best_f[leader]));
        if (!result_.best_value || better(best_f[leader], *result_.best_value)) {
            result_.best_value = best_f[leader];
            Instantiation u;
            for (ParamId d = 0; d < dim_; ++d)
                u.set(d, from_double(best_x[leader][d]));
            result_.best_instantiation = std::move(u);
        }

        if (!cfg_.optimize_only) {
            for (std::size_t i = 0; i < n; ++i) {
                if (!satisfies(spec_, fitness[i], kCertificationSlack))
                    continue;
                double value = 0;
                t0 = Clock::now();
                auto u = certified(x[i], value);
                mc_seconds += seconds_since(t0);
                if (u) {
                    result_.status = SynthesisStatus::feasible;
                    result_.instantiation = std::move(u);
                    result_.certified_value = value;
                    result_.solver_seconds = mc_seconds;
                    result_.total_seconds = seconds_since(start);
                    return std::move(result_);
                }
            }
        }

        if (it == cfg_.max_iterations)
            break;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < dim_; ++d) {
                const double r1 = unit(), r2 = unit();
                v[i][d] = cfg_.inertia * v[i][d] + cfg_.cognitive * r1 * (best_x[i][d] - x[i][d]) +
                          cfg_.social * r2 * (best_x[leader][d] - x[i][d]);
                x[i][d] += v[i][d];
            }
            reflect_into_box(x[i], v[i], lo_, hi_);
        }
    }
    result_.status = SynthesisStatus::exhausted;
    result_.solver_seconds = mc_seconds;
    result_.total_seconds = seconds_since(start);
    return std::move(result_);
}

} // namespace

void reflect_into_box(std::span<double> x, std::span<double> v, std::span<const double> lo, std::span<const double> hi) {
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double width = hi[d] - lo[d];
        if (width <= 0) {
            x[d] = lo[d];
            v[d] = 0;
            continue;
        }
        if (x[d] >= lo[d] && x[d] <= hi[d])
            continue;
        // fold onto [lo, lo + 2 width) and mirror the upper half
        double t = std::fmod(x[d] - lo[d], 2 * width);
        if (t < 0)
            t += 2 * width;
        const double bounces = std::floor((x[d] - lo[d]) / width);
        x[d] = std::clamp(t <= width ? lo[d] + t : hi[d] - (t - width), lo[d], hi[d]);
        if (std::fmod(std::abs(bounces), 2.0) == 1.0)
            v[d] = -v[d];
    }
}

SynthesisResult synthesize_pso(const Pmdp& m, const Specification& spec, const PsoConfig& config) {
    config.validate();
    Swarm swarm(m, spec, config);
    return swarm.run();
}

} // namespace paramsynth
