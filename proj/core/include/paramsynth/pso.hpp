#pragma once

#include "paramsynth/ccp.hpp"
#include "paramsynth/model.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>

namespace paramsynth {

/// The parameter region is not the full box, so a box search does not apply.
class NotSupported : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PsoConfig {
    int particles = 40;
    double inertia = 0.7298;
    double cognitive = 1.49618;
    double social = 1.49618;
    int max_iterations = 500;
    std::uint64_t seed = 0;
    /// Worker threads for fitness evaluation; the result does not depend on it.
    int jobs = 1;
    /// Ignore the threshold and run to the iteration cap, reporting the best value.
    bool optimize_only = false;
    /// Wall-clock budget in seconds, checked between iterations.
    std::optional<double> time_budget;
    Rational eps_graph{1, 100000};
    double mc_tol = kDefaultMcTolerance;
    std::ostream* progress = nullptr;

    /// Throws std::invalid_argument.
    void validate() const;
};

/// Mirrors each coordinate back into [lo, hi] as often as needed; the
/// velocity flips sign on an odd number of bounces.
void reflect_into_box(std::span<double> x, std::span<double> v, std::span<const double> lo, std::span<const double> hi);

/// Particle swarm over the parameter box, one model check per particle and
/// round. Throws NotSupported unless every point of the box is well-defined.
SynthesisResult synthesize_pso(const Pmdp& m, const Specification& spec, const PsoConfig& config = {});

} // namespace paramsynth
