#pragma once

#include <random>
#include <span>
#include <vector>

#include "mmot/costs.hpp"
#include "mmot/lp.hpp"
#include "mmot/measures.hpp"

namespace mmot::testing {

// Independent LP oracle: a dense two-phase tableau simplex over the full
// (undropped) row system, Bland's rule throughout. Deliberately shares no
// code or structure with the production revised simplex.
class DenseTableauBackend : public LpBackend {
 public:
  Result solve(const ReducedLp::Snapshot& snapshot) override;
};

// Exact optimum of the full problem by enumerating every configuration and
// solving the dense LP.
struct BruteForceResult {
  double objective = 0.0;
  SparsePlan plan;
  DualPotentials potentials;
};
BruteForceResult brute_force_mmot(std::span<const Marginal> marginals,
                                  const CostSpec& cost);

// Monotone rearrangement for two 1-D marginals under the quadratic cost.
struct MonotoneCoupling {
  double cost = 0.0;
  SparsePlan plan;
};
MonotoneCoupling monotone_coupling(const Marginal& mu1, const Marginal& mu2);

// Independent natural cubic spline (per-interval a,b,c,d coefficients from
// the textbook recurrence, not the moment form used in production).
class ReferenceSpline {
 public:
  ReferenceSpline(std::span<const double> times, std::span<const double> values);
  double eval(double t) const;
  double second_derivative(double t) const;
  // composite-Simpson integral of S''(t)^2 over the whole time range
  double curvature_energy(int panels_per_interval = 64) const;

 private:
  std::size_t interval(double t) const;
  std::vector<double> t_, a_, b_, c_, d_;
};

// Random problem families for property tests.
Marginal random_marginal(std::mt19937_64& rng, std::size_t support, int dim = 1);
std::vector<Marginal> random_family(std::mt19937_64& rng, int marginals,
                                    std::size_t min_support,
                                    std::size_t max_support, int dim = 1);

// A deterministic pseudo-random cost tensor evaluated lazily per
// configuration (splitmix over the packed indices).
CostSpec hashed_cost(std::uint64_t salt);

double plan_cost(const SparsePlan& plan, const CostSpec& spec,
                 std::span<const Marginal> marginals);

}  // namespace mmot::testing
