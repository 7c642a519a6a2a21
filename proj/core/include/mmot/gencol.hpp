#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mmot/costs.hpp"
#include "mmot/init.hpp"
#include "mmot/lp.hpp"
#include "mmot/measures.hpp"

namespace mmot {

struct GenColConfig {
  double beta = 3.0;            // working-set capacity is beta * sum(l_k)
  std::int64_t max_stall = 0;   // consecutive rejections before stopping;
                                // 0 means the default 10 * sum(l_k)
  std::uint64_t seed = 0;
  std::optional<std::int32_t> locality_radius;  // index-space ball for children
  std::int32_t batch_size = 1;  // columns accepted per re-solve
  bool mass_weighted_parents = false;
  SolverTolerances tolerances;
};

struct GenColState {
  ReducedSet omega;
  LpSolution solution;
  std::int64_t iterations = 0;  // number of LP solves
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t tail_clears = 0;
  std::vector<std::pair<std::int64_t, double>> cost_history;
};

struct ProgressRecord {
  std::int64_t iteration = 0;
  std::size_t omega_size = 0;
  std::size_t support_size = 0;
  double objective = 0.0;
  std::int64_t accepted = 0;
};

struct CertificateReport {
  bool exhaustive = false;
  std::int64_t checked = 0;
  std::int64_t violations = 0;
  double max_violation = 0.0;
  std::optional<Configuration> worst;
};

// Scans dual feasibility of the potentials over the whole product space
// (exhaustive when it holds at most exhaustive_cap configurations, sampled
// with `budget` uniform draws otherwise). Zero violations on an exhaustive
// scan certifies the matching primal plan as optimal for the full problem.
CertificateReport certify_potentials(const DualPotentials& potentials,
                                     const CostSpec& cost,
                                     std::span<const Marginal> marginals,
                                     std::int64_t budget, double exhaustive_cap,
                                     double tol, std::uint64_t seed);

// The genetic column generation loop: alternate reduced-LP solves with
// mutation proposals drawn from the current support, accepting a child only
// when it violates the dual constraint, and clearing the oldest inactive
// configurations when the working set outgrows its cap.
class GenColEngine {
 public:
  GenColEngine(std::vector<Marginal> marginals, CostSpec cost,
               GenColConfig config, InitResult init);

  // Parent uniform over the support, one coordinate redrawn uniformly
  // (never equal to the parent's). Returns nullopt for children already in
  // the working set; callers count that as a rejected trial.
  std::optional<Configuration> propose_child();

  // Dual-violation acceptance test against the current potentials.
  bool accept(const Configuration& child, double cost) const;

  // Adds an arbitrary configuration to the working set, bypassing the
  // mutation/acceptance path (the working set may be augmented freely as
  // long as tail-clearing keeps it within its cap). Returns false if
  // already present. Callers re-run afterwards; a typical use is feeding
  // back the worst violator found by certify.
  bool inject(const Configuration& r);

  // Drops the oldest sum(l_k) configurations that are neither in the support
  // nor in the LP basis. No-op when the cap is not exceeded.
  void tail_clear();

  // Runs the full loop until max_stall consecutive proposals are rejected.
  // Emits one ProgressRecord per solve when a sink is given.
  const GenColState& run(
      const std::function<void(const ProgressRecord&)>& progress = {});

  // Exhaustively scans the product space when it has at most `exhaustive_cap`
  // configurations; otherwise samples `budget` configurations uniformly.
  CertificateReport certify(std::int64_t budget,
                            double exhaustive_cap = 1e6) const;

  const GenColState& state() const { return state_; }
  const std::vector<Marginal>& marginals() const { return marginals_; }
  const ProblemShape& shape() const { return shape_; }
  std::int64_t max_stall() const { return max_stall_; }
  std::size_t capacity() const { return capacity_; }
  ReducedLp& lp() { return lp_; }

 private:
  void solve_and_record(const std::function<void(const ProgressRecord&)>& progress);
  const Configuration& draw_parent();

  std::vector<Marginal> marginals_;
  ProblemShape shape_;
  GenColConfig config_;
  CostEvaluator evaluator_;
  ReducedLp lp_;
  GenColState state_;
  std::mt19937_64 rng_;
  std::int64_t max_stall_ = 0;
  std::size_t capacity_ = 0;
  std::vector<Configuration> support_;  // sorted; refreshed after each solve
  std::vector<std::int32_t> mutable_coords_;  // marginals with l_k > 1
};

// Convenience wrapper: nw-corner init (or the given one), random augmentation
// to capacity, then run.
GenColState run_gencol(std::vector<Marginal> marginals, CostSpec cost,
                       GenColConfig config,
                       std::optional<InitResult> init = std::nullopt,
                       const std::function<void(const ProgressRecord&)>& progress = {});

}  // namespace mmot
