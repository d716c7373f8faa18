#pragma once

#include "hbnf/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hbnf {

/// Names accepted by make_fixture, in canonical order.
std::vector<std::string> fixture_names();

/// Builds one of the bundled reference networks; throws std::invalid_argument
/// for an unknown name.
BayesianNetwork make_fixture(const std::string& name);

/// Discrete selector with n states routing straight through n continuous
/// roots: the smallest network whose selector clique grows with n. Optional
/// weights replace the uniform selector prior (must have n entries).
BayesianNetwork make_v_structure(std::size_t n,
                                 const std::vector<double>& weights = {});

/// Random partitioned network: one discrete selector (3-5 states), 2-4
/// continuous roots, and a partitioned child whose cases draw from the roots
/// through identity, affine, normal, or uniform forms. Deterministic in seed.
BayesianNetwork random_partitioned_net(std::uint64_t seed);

/// Seed for randomized runs: HBNF_SEED from the environment when set,
/// otherwise a fixed default.
std::uint64_t base_seed();

}  // namespace hbnf
