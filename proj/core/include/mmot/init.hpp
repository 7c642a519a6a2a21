#pragma once

#include <random>
#include <span>
#include <vector>

#include "mmot/measures.hpp"

namespace mmot {

// A feasible starting point: the working set, the plan supported on it, and
// the construction order (used to seed the LP's phase-1 crash).
struct InitResult {
  ReducedSet omega;
  SparsePlan plan;
  std::vector<std::pair<Configuration, double>> trace;
};

// Multi-marginal north-west corner rule: walk all supports front-to-back,
// assigning to the current configuration the minimum of the residual masses
// and advancing every coordinate whose residual is exhausted. Yields a
// feasible plan on at most sum_k(l_k - 1) + 1 configurations.
//
// order, when given, holds one permutation per marginal: position p of the
// walk visits support index order[k][p]. Defaults to the stored order.
InitResult nw_corner(std::span<const Marginal> marginals,
                     std::span<const std::vector<std::int32_t>> order = {});

// Permutation sorting a marginal's support lexicographically by coordinates.
std::vector<std::int32_t> lex_coordinate_order(const Marginal& m);

struct AugmentReport {
  std::size_t added = 0;
  bool saturated = false;  // product space exhausted before reaching target
};

// Fills omega with distinct uniformly random configurations up to target.
AugmentReport augment_random(ReducedSet& omega, const ProblemShape& shape,
                             std::size_t target, std::mt19937_64& rng);

// Two-marginal start from the index reflection i -> l-1-i. Requires mu2 to be
// the index-reversed copy of mu1 (mass mismatch is an error).
InitResult reflection_init(const Marginal& mu1, const Marginal& mu2);

}  // namespace mmot
