#include <doctest.h>

#include <random>

#include "mmot/demo.hpp"
#include "mmot/init.hpp"
#include "mmot/lp.hpp"
#include "support/oracles.hpp"

using namespace mmot;

namespace {

Marginal weights_1d(std::vector<double> masses) {
  Marginal m;
  m.dim = 1;
  m.masses = std::move(masses);
  m.points.resize(m.masses.size());
  for (std::size_t i = 0; i < m.points.size(); ++i)
    m.points[i] = static_cast<double>(i) / std::max<std::size_t>(1, m.points.size() - 1);
  return m;
}

// loads every configuration of the product grid as a column
void add_all_columns(ReducedLp& lp, std::span<const Marginal> ms,
                     const CostSpec& cost) {
  const auto shape = problem_shape(ms);
  Configuration r;
  r.indices.assign(shape.sizes.size(), 0);
  while (true) {
    lp.add_column(r, eval_cost(cost, r, ms));
    std::size_t k = 0;
    for (; k < shape.sizes.size(); ++k) {
      if (++r.indices[k] < shape.sizes[k]) break;
      r.indices[k] = 0;
    }
    if (k == shape.sizes.size()) break;
  }
}

void check_optimality_invariants(const LpSolution& sol, const ReducedLp::Snapshot& snap,
                                 std::span<const Marginal> ms) {
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(max_marginal_residual(sol.plan, ms) <= 1e-9);
  CHECK(sol.plan.size() <= static_cast<std::size_t>(problem_shape(ms).support_bound()));

  double dual_objective = 0.0;
  for (std::size_t k = 0; k < ms.size(); ++k)
    for (std::size_t i = 0; i < ms[k].size(); ++i)
      dual_objective += ms[k].masses[i] * sol.potentials.u[k][i];
  CHECK(std::abs(sol.objective - dual_objective) <=
        1e-8 * (1.0 + std::abs(sol.objective)));

  for (std::size_t j = 0; j < snap.columns.size(); ++j) {
    const double viol = dual_violation(sol.potentials, snap.columns[j], snap.costs[j]);
    CHECK(viol <= 1e-9);  // dual feasibility on the working set
    const double mass = sol.plan.mass(snap.columns[j]);
    if (mass > 0.0) CHECK(std::abs(viol) <= 1e-8);  // complementary slackness
  }
}

}  // namespace

TEST_CASE("two diracs: the only plan is optimal") {
  std::vector<Marginal> ms = {weights_1d({1.0}), weights_1d({1.0})};
  ms[0].points = {0.2};
  ms[1].points = {0.9};
  ReducedLp lp(ms);
  lp.add_column(Configuration{{0, 0}}, eval_cost(QuadraticCost{}, Configuration{{0, 0}}, ms));
  const auto sol = lp.solve();
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(0.49));
  CHECK(sol.plan.mass(Configuration{{0, 0}}) == doctest::Approx(1.0));
}

TEST_CASE("full-product solve agrees with the dense tableau oracle") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    const auto ms = testing::random_family(rng, n, 3, 4);
    const auto cost = testing::hashed_cost(1000 + trial);

    ReducedLp lp(ms);
    add_all_columns(lp, ms, cost);
    const auto sol = lp.solve();
    const auto snap = lp.snapshot();
    check_optimality_invariants(sol, snap, ms);

    testing::DenseTableauBackend oracle;
    const auto ref = oracle.solve(snap);
    REQUIRE(ref.status == SolveStatus::Optimal);
    CHECK(sol.objective ==
          doctest::Approx(ref.objective).epsilon(1e-9));
  }
}

TEST_CASE("reflected 1-d instance: optimum is the monotone coupling") {
  const auto mu1 = demo1d_marginal(40);
  const auto mu2 = index_reflection(mu1);
  const std::vector<Marginal> ms = {mu1, mu2};
  ReducedLp lp(ms);
  add_all_columns(lp, ms, QuadraticCost{});
  const auto sol = lp.solve();
  REQUIRE(sol.status == SolveStatus::Optimal);

  const auto oracle = testing::monotone_coupling(mu1, mu2);
  CHECK(sol.objective == doctest::Approx(oracle.cost).epsilon(1e-9));
  // the optimal plan is the monotone coupling itself
  for (const auto& [r, mass] : oracle.plan.entries())
    CHECK(sol.plan.mass(r) == doctest::Approx(mass).epsilon(1e-7));
}

TEST_CASE("column management contracts") {
  const std::vector<Marginal> ms = {weights_1d({0.4, 0.6}), weights_1d({0.5, 0.5})};
  ReducedLp lp(ms);
  CHECK(lp.num_columns() == 0);
  lp.add_column(Configuration{{0, 0}}, 1.0);
  CHECK(lp.num_columns() == 1);
  CHECK(lp.has_column(Configuration{{0, 0}}));
  CHECK_THROWS_AS(lp.add_column(Configuration{{0, 0}}, 1.0), std::invalid_argument);

  lp.add_column(Configuration{{0, 1}}, 2.0);
  lp.add_column(Configuration{{1, 0}}, 5.0);
  lp.add_column(Configuration{{1, 1}}, 1.0);
  const auto sol = lp.solve();
  REQUIRE(sol.status == SolveStatus::Optimal);

  // removing a basic column is refused
  const auto support = sol.plan.support();
  REQUIRE(!support.empty());
  std::vector<Configuration> basic = {support.front()};
  CHECK_THROWS_AS(lp.remove_columns(basic), std::invalid_argument);

  // removing an inactive column keeps the optimum
  std::vector<Configuration> inactive;
  for (const auto& snap_col : lp.snapshot().columns)
    if (!lp.is_basic(snap_col)) inactive.push_back(snap_col);
  if (!inactive.empty()) {
    lp.remove_columns(std::span(inactive).subspan(0, 1));
    const auto re = lp.solve(sol.basis);
    CHECK(re.objective == doctest::Approx(sol.objective).epsilon(1e-12));
  }
}

TEST_CASE("adding columns never raises the objective") {
  std::mt19937_64 rng(77);
  const auto ms = testing::random_family(rng, 3, 4, 4);
  const auto cost = testing::hashed_cost(9);

  auto init = nw_corner(ms);
  ReducedLp lp(ms);
  std::vector<Configuration> seed;
  for (const auto& [r, m] : init.trace) {
    lp.add_column(r, eval_cost(cost, r, ms));
    seed.push_back(r);
  }
  lp.seed_phase1(seed);
  auto sol = lp.solve();
  REQUIRE(sol.status == SolveStatus::Optimal);

  const auto shape = problem_shape(ms);
  Configuration r;
  r.indices.assign(shape.sizes.size(), 0);
  double prev = sol.objective;
  while (true) {
    if (!lp.has_column(r)) {
      const double c = eval_cost(cost, r, ms);
      const double viol = dual_violation(sol.potentials, r, c);
      lp.add_column(r, c);
      sol = lp.solve(sol.basis);
      REQUIRE(sol.status == SolveStatus::Optimal);
      CHECK(sol.objective <= prev + 1e-10);
      if (viol <= 0.0) {
        // non-violating columns leave the optimum unchanged
        CHECK(sol.objective == doctest::Approx(prev).epsilon(1e-10));
      }
      prev = sol.objective;
    }
    std::size_t k = 0;
    for (; k < shape.sizes.size(); ++k) {
      if (++r.indices[k] < shape.sizes[k]) break;
      r.indices[k] = 0;
    }
    if (k == shape.sizes.size()) break;
  }
}

TEST_CASE("dual violation signs") {
  DualPotentials zeros{{std::vector<double>(3, 0.0), std::vector<double>(3, 0.0)}};
  CHECK(dual_violation(zeros, Configuration{{1, 2}}, 0.5) == doctest::Approx(-0.5));
  CHECK(dual_violation(zeros, Configuration{{1, 2}}, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("warm start reproduces the cold objective") {
  std::mt19937_64 rng(123);
  const auto ms = testing::random_family(rng, 3, 5, 5);
  const auto cost = testing::hashed_cost(31);
  auto init = nw_corner(ms);

  ReducedLp lp(ms);
  std::vector<Configuration> seed;
  for (const auto& [r, m] : init.trace) {
    lp.add_column(r, eval_cost(cost, r, ms));
    seed.push_back(r);
  }
  lp.seed_phase1(seed);
  auto sol = lp.solve();
  REQUIRE(sol.status == SolveStatus::Optimal);

  // insert one improving column, then compare warm against cold
  const auto shape = problem_shape(ms);
  std::optional<Configuration> improving;
  Configuration r;
  r.indices.assign(shape.sizes.size(), 0);
  while (true) {
    if (!lp.has_column(r) &&
        dual_violation(sol.potentials, r, eval_cost(cost, r, ms)) > 1e-9) {
      improving = r;
      break;
    }
    std::size_t k = 0;
    for (; k < shape.sizes.size(); ++k) {
      if (++r.indices[k] < shape.sizes[k]) break;
      r.indices[k] = 0;
    }
    if (k == shape.sizes.size()) break;
  }
  REQUIRE(improving.has_value());

  lp.add_column(*improving, eval_cost(cost, *improving, ms));
  const auto warm = lp.solve(sol.basis);
  REQUIRE(warm.status == SolveStatus::Optimal);

  ReducedLp cold(ms);
  for (const auto& c : lp.snapshot().columns)
    cold.add_column(c, eval_cost(cost, c, ms));
  const auto cold_sol = cold.solve();
  REQUIRE(cold_sol.status == SolveStatus::Optimal);
  CHECK(warm.objective == doctest::Approx(cold_sol.objective).epsilon(1e-9));
  CHECK(warm.pivots <= cold_sol.pivots);
}

TEST_CASE("large bases use the dense factorization and stay exact") {
  // m = 699 rows crosses the dense-factorization threshold; the working set
  // holds the known optimal support plus random columns, so the restricted
  // optimum equals the full one
  const auto mu1 = demo1d_marginal(350);
  const auto mu2 = index_reflection(mu1);
  const std::vector<Marginal> ms = {mu1, mu2};
  const auto oracle = testing::monotone_coupling(mu1, mu2);

  ReducedLp lp(ms);
  for (const auto& [r, mass] : oracle.plan.entries())
    lp.add_column(r, eval_cost(QuadraticCost{}, r, ms));
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::int32_t> pick(0, 349);
  for (int extra = 0; extra < 4000;) {
    Configuration r{{pick(rng), pick(rng)}};
    if (!lp.has_column(r)) {
      lp.add_column(r, eval_cost(QuadraticCost{}, r, ms));
      ++extra;
    }
  }
  const auto sol = lp.solve();
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(oracle.cost).epsilon(1e-9));
  CHECK(max_marginal_residual(sol.plan, ms) <= 1e-9);

  const auto snap = lp.snapshot();
  for (std::size_t j = 0; j < snap.columns.size(); ++j) {
    const double viol =
        dual_violation(sol.potentials, snap.columns[j], snap.costs[j]);
    CHECK(viol <= 1e-9);
  }
}

TEST_CASE("infeasible working sets are reported") {
  const std::vector<Marginal> ms = {weights_1d({0.5, 0.5}), weights_1d({0.5, 0.5})};
  ReducedLp lp(ms);
  lp.add_column(Configuration{{0, 0}}, 1.0);  // cannot serve index 1 of either side
  const auto sol = lp.solve();
  CHECK(sol.status == SolveStatus::Infeasible);
}
