#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mmot/measures.hpp"

namespace mmot {

// All solver tolerances in one place.
struct SolverTolerances {
  double feasibility = 1e-9;
  double optimality = 1e-9;
  double zero_pivot = 1e-11;
  double acceptance = 1e-10;      // dual-violation threshold for new columns
  double refactor_drift = 1e-7;   // residual that forces a refactorization
  int refactor_interval = 100;    // pivots between refactorizations
  int bland_trigger = 50;         // degenerate pivots before Bland's rule
  std::int64_t max_pivots = 1000000;
};

enum class SolveStatus { Optimal, Infeasible, IterationLimit };

// Opaque warm-start state: the basis slots (column ids, or encoded
// artificials). Valid only for the ReducedLp state it was taken from.
struct BasisDescriptor {
  std::vector<std::int32_t> slots;
};

struct LpSolution {
  SparsePlan plan;
  DualPotentials potentials;
  double objective = 0.0;
  BasisDescriptor basis;
  SolveStatus status = SolveStatus::Optimal;
  std::int64_t pivots = 0;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class IterationLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// sum_i u_i(r_i) - c(r); positive iff the dual constraint at r is violated.
double dual_violation(const DualPotentials& potentials, const Configuration& r,
                      double cost);

// The reduced primal LP over the working configuration set: one 0/1 column
// per configuration with exactly one unit entry per marginal. The last row of
// marginals 2..N is dropped (redundant given the normalization), giving a
// full-rank system of sum_k(l_k - 1) + 1 rows; the dropped dual components
// are fixed to zero.
//
// Solved by a revised primal simplex with an explicit basis factorization
// plus product-form eta updates, refactorized periodically. The basis
// persists across add_column/remove_columns, so successive solves warm-start
// by construction.
class ReducedLp {
 public:
  explicit ReducedLp(std::span<const Marginal> marginals,
                     SolverTolerances tol = {});
  ReducedLp(ReducedLp&&) noexcept;
  ReducedLp& operator=(ReducedLp&&) noexcept;
  ~ReducedLp();

  const ProblemShape& shape() const;
  std::size_t num_rows() const;
  std::size_t num_columns() const;  // live columns

  // Appends a column; the current basis stays valid. Throws on duplicates.
  std::int32_t add_column(const Configuration& r, double cost);
  bool has_column(const Configuration& r) const;
  bool is_basic(const Configuration& r) const;

  // Removes nonbasic columns; throws if any is in the current basis.
  void remove_columns(std::span<const Configuration> rs);

  // Configurations offered first to phase-1 pricing, in order. Seeding with
  // a feasible plan's support (e.g. the north-west corner trace) crashes the
  // artificial basis onto that plan.
  void seed_phase1(std::span<const Configuration> rs);

  // Solves from the current internal basis (cold-starting with artificials
  // if there is none). A descriptor restores a basis on a fresh object; when
  // it matches the internal state the existing factorization is reused.
  LpSolution solve(const std::optional<BasisDescriptor>& warm = std::nullopt);

  // Dense snapshot of the live problem, for cross-checking against an
  // independent solver.
  struct Snapshot {
    std::vector<Configuration> columns;
    std::vector<double> costs;
    std::vector<std::vector<double>> rhs;  // per-marginal masses
  };
  Snapshot snapshot() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Interface for an external LP solve of a snapshot, used in tests to verify
// the simplex against an independent implementation.
class LpBackend {
 public:
  struct Result {
    std::vector<double> primal;  // one entry per snapshot column
    std::vector<std::vector<double>> potentials;
    double objective = 0.0;
    SolveStatus status = SolveStatus::Optimal;
  };
  virtual ~LpBackend() = default;
  virtual Result solve(const ReducedLp::Snapshot& snapshot) = 0;
};

}  // namespace mmot
