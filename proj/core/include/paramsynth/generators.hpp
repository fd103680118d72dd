#pragma once

#include "paramsynth/model.hpp"

#include <cstdint>

namespace paramsynth {

/// Path of n steps; step i succeeds with parameter (i mod params), otherwise
/// falls into a sink. States s0..s{n-1}, goal, fail. Reach value is the
/// product of the step parameters.
Pmdp chain_model(std::size_t n, std::size_t params);

/// size x size grid walked east/south towards the lower-right goal, with
/// seeded traps. East succeeds with 0.1 + 0.8 v, south with 0.9 - 0.8 v.
Pmdp grid_model(std::size_t size, std::size_t params, std::uint64_t seed);

struct MazeOptions {
    std::size_t size = 4;
    std::uint64_t seed = 0;
    /// Without it, some cells get a second, slower action "w".
    bool pmc = false;
};

/// size x size maze over a random spanning tree rooted at the goal cell.
/// Every move costs 1; the tree edge is taken with 0.55 + 0.4 v (or with v
/// flipped), else the walker slips to another neighbour. One parameter per
/// two cells.
Pmdp maze_model(const MazeOptions& options);

struct RandomModelOptions {
    std::size_t states = 8; ///< including target and sink
    std::size_t max_actions = 2;
    std::size_t parameters = 3;
    /// Cost models reach the target almost surely and carry action costs.
    bool costs = false;
    /// Chance that a choice has parameter-dependent entries.
    double parametric_share = 0.6;
};

/// Random graph-preserving affine pMDP; the last state is the target. For
/// every parameter box [1e-5, 1-1e-5] all entries stay >= 1e-5.
Pmdp random_model(const RandomModelOptions& options, std::uint64_t seed);

} // namespace paramsynth
