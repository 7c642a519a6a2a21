#include "mmot/gencol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmot {

GenColEngine::GenColEngine(std::vector<Marginal> marginals, CostSpec cost,
                           GenColConfig config, InitResult init)
    : marginals_(std::move(marginals)),
      shape_(problem_shape(marginals_)),
      config_(std::move(config)),
      lp_(marginals_, config_.tolerances),
      rng_(config_.seed) {
  if (!(config_.beta > 1.0))
    throw std::invalid_argument("GenColEngine: beta must exceed 1");
  if (config_.batch_size < 1)
    throw std::invalid_argument("GenColEngine: batch size must be positive");
  const auto total = shape_.total_support();
  capacity_ = static_cast<std::size_t>(config_.beta * static_cast<double>(total));
  max_stall_ = config_.max_stall > 0 ? config_.max_stall : 10 * total;

  evaluator_ = CostEvaluator(std::move(cost), marginals_, 4 * capacity_);

  if (max_marginal_residual(init.plan, marginals_) > config_.tolerances.feasibility)
    throw InfeasibleError("GenColEngine: initial plan is not feasible");

  state_.omega = std::move(init.omega);
  state_.omega.set_capacity(capacity_);
  for (const auto& r : state_.omega.members_by_age())
    lp_.add_column(r, evaluator_(r));

  std::vector<Configuration> seed;
  seed.reserve(init.trace.size());
  for (const auto& [r, mass] : init.trace) seed.push_back(r);
  if (seed.empty()) seed = init.plan.support();
  lp_.seed_phase1(seed);

  for (std::int32_t k = 0; k < shape_.num_marginals(); ++k)
    if (shape_.sizes[k] > 1) mutable_coords_.push_back(k);
}

const Configuration& GenColEngine::draw_parent() {
  if (support_.empty())
    throw std::logic_error("GenColEngine: current plan has empty support");
  if (config_.mass_weighted_parents) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double target = u01(rng_) * state_.solution.plan.total_mass();
    for (const auto& r : support_) {
      target -= state_.solution.plan.mass(r);
      if (target <= 0.0) return r;
    }
    return support_.back();
  }
  std::uniform_int_distribution<std::size_t> pick(0, support_.size() - 1);
  return support_[pick(rng_)];
}

std::optional<Configuration> GenColEngine::propose_child() {
  if (mutable_coords_.empty()) return std::nullopt;
  const Configuration& parent = draw_parent();
  std::uniform_int_distribution<std::size_t> pick_coord(0, mutable_coords_.size() - 1);
  const std::int32_t k = mutable_coords_[pick_coord(rng_)];
  const std::int32_t l = shape_.sizes[k];
  const std::int32_t cur = parent.indices[k];

  std::int32_t lo = 0, hi = l - 1;
  if (config_.locality_radius) {
    lo = std::max<std::int32_t>(0, cur - *config_.locality_radius);
    hi = std::min<std::int32_t>(l - 1, cur + *config_.locality_radius);
    if (hi <= lo) return std::nullopt;  // window holds only the parent index
  }
  // uniform over the window minus the current index
  std::uniform_int_distribution<std::int32_t> pick(lo, hi - 1);
  std::int32_t v = pick(rng_);
  if (v >= cur) ++v;

  Configuration child = parent;
  child.indices[k] = v;
  if (state_.omega.contains(child)) return std::nullopt;
  return child;
}

bool GenColEngine::accept(const Configuration& child, double cost) const {
  return dual_violation(state_.solution.potentials, child, cost) >
         config_.tolerances.acceptance;
}

bool GenColEngine::inject(const Configuration& r) {
  if (!shape_.contains(r))
    throw std::invalid_argument("GenColEngine::inject: configuration out of shape");
  if (!state_.omega.insert(r)) return false;
  lp_.add_column(r, evaluator_(r));
  return true;
}

void GenColEngine::tail_clear() {
  if (state_.omega.size() <= capacity_) return;
  const auto budget = static_cast<std::size_t>(shape_.total_support());
  std::vector<Configuration> removable;
  removable.reserve(budget);
  for (const auto& r : state_.omega.members_by_age()) {
    if (removable.size() == budget) break;
    if (!lp_.is_basic(r)) removable.push_back(r);
  }
  if (removable.empty()) return;  // everything active; nothing to clear
  lp_.remove_columns(removable);
  for (const auto& r : removable) state_.omega.erase(r);
  ++state_.tail_clears;
}

void GenColEngine::solve_and_record(
    const std::function<void(const ProgressRecord&)>& progress) {
  std::optional<BasisDescriptor> warm;
  if (!state_.cost_history.empty()) warm = state_.solution.basis;
  LpSolution sol = lp_.solve(warm);
  if (sol.status == SolveStatus::Infeasible)
    throw InfeasibleError("GenColEngine: reduced problem became infeasible");
  if (sol.status == SolveStatus::IterationLimit)
    throw IterationLimitError("GenColEngine: simplex hit its pivot limit");
  state_.solution = std::move(sol);
  support_ = state_.solution.plan.support();
  state_.cost_history.emplace_back(state_.iterations, state_.solution.objective);
  if (progress)
    progress(ProgressRecord{state_.iterations, state_.omega.size(),
                            support_.size(), state_.solution.objective,
                            state_.accepted});
  ++state_.iterations;
}

const GenColState& GenColEngine::run(
    const std::function<void(const ProgressRecord&)>& progress) {
  solve_and_record(progress);
  if (mutable_coords_.empty()) return state_;  // no children exist at all

  std::int64_t stall = 0;
  std::int32_t batched = 0;
  while (stall < max_stall_) {
    auto child = propose_child();
    if (!child) {
      ++state_.rejected;
      ++stall;
      continue;
    }
    const double c = evaluator_(*child);
    if (!accept(*child, c)) {
      ++state_.rejected;
      ++stall;
      continue;
    }
    state_.omega.insert(*child);
    lp_.add_column(*child, c);
    ++state_.accepted;
    stall = 0;
    if (++batched >= config_.batch_size) {
      tail_clear();
      solve_and_record(progress);
      batched = 0;
    }
  }
  if (batched > 0) {
    tail_clear();
    solve_and_record(progress);
  }
  return state_;
}

CertificateReport certify_potentials(const DualPotentials& potentials,
                                     const CostSpec& cost,
                                     std::span<const Marginal> marginals,
                                     std::int64_t budget, double exhaustive_cap,
                                     double tol, std::uint64_t seed) {
  const auto shape = problem_shape(marginals);
  CertificateReport rep;
  auto check = [&](const Configuration& r) {
    const double v = dual_violation(potentials, r, eval_cost(cost, r, marginals));
    ++rep.checked;
    if (v > rep.max_violation) {
      rep.max_violation = v;
      rep.worst = r;
    }
    if (v > tol) ++rep.violations;
  };

  if (shape.product_size() <= exhaustive_cap) {
    rep.exhaustive = true;
    Configuration r;
    r.indices.assign(shape.sizes.size(), 0);
    while (true) {
      check(r);
      std::size_t k = 0;
      for (; k < shape.sizes.size(); ++k) {
        if (++r.indices[k] < shape.sizes[k]) break;
        r.indices[k] = 0;
      }
      if (k == shape.sizes.size()) break;
    }
    return rep;
  }

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  Configuration r;
  r.indices.resize(shape.sizes.size());
  for (std::int64_t s = 0; s < budget; ++s) {
    for (std::size_t k = 0; k < shape.sizes.size(); ++k) {
      std::uniform_int_distribution<std::int32_t> pick(0, shape.sizes[k] - 1);
      r.indices[k] = pick(rng);
    }
    check(r);
  }
  return rep;
}

CertificateReport GenColEngine::certify(std::int64_t budget,
                                        double exhaustive_cap) const {
  return certify_potentials(state_.solution.potentials, evaluator_.spec(),
                            marginals_, budget, exhaustive_cap,
                            config_.tolerances.feasibility, config_.seed);
}

GenColState run_gencol(std::vector<Marginal> marginals, CostSpec cost,
                       GenColConfig config, std::optional<InitResult> init,
                       const std::function<void(const ProgressRecord&)>& progress) {
  InitResult start = init ? std::move(*init) : nw_corner(marginals);
  const auto shape = problem_shape(marginals);
  const auto capacity = static_cast<std::size_t>(
      config.beta * static_cast<double>(shape.total_support()));
  if (start.omega.size() < capacity) {
    std::mt19937_64 rng(config.seed ^ 0xd1b54a32d192ed03ull);
    start.omega.set_capacity(capacity);
    augment_random(start.omega, shape, capacity, rng);
  }
  GenColEngine engine(std::move(marginals), std::move(cost), std::move(config),
                      std::move(start));
  engine.run(progress);
  return engine.state();
}

}  // namespace mmot
