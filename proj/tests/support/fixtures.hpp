#pragma once

#include <paramsynth/generators.hpp>
#include <paramsynth/model.hpp>
#include <paramsynth/parser.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace paramsynth::testing {

/// Five-state chain s0 -v-> s1 -(1-v)-> s2 -v-> s3, leaking into s4; target s3.
extern const char* const kLeakyChain;

Pmdp leaky_chain();
Instantiation valuation(const Pmdp& m, std::initializer_list<Rational> values);

/// Random valuation on a grid of 1/64 steps inside [1/64, 63/64].
Instantiation random_valuation(const Pmdp& m, std::mt19937_64& rng);

/// Random numeric MDP obtained by instantiating a random pMDP.
ConcreteMdp random_concrete(std::size_t states, std::size_t max_actions, bool costs, std::uint64_t seed,
                            StateSet* targets = nullptr);

/// Reach value of the leaky chain, v^2 (1 - v).
double leaky_chain_value(double v);

} // namespace paramsynth::testing
