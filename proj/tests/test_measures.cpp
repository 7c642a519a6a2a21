#include <doctest.h>

#include <stdexcept>

#include "mmot/measures.hpp"

using namespace mmot;

namespace {

Marginal weights_1d(std::vector<double> masses) {
  Marginal m;
  m.dim = 1;
  m.masses = std::move(masses);
  m.points.resize(m.masses.size());
  for (std::size_t i = 0; i < m.points.size(); ++i)
    m.points[i] = static_cast<double>(i);
  return m;
}

}  // namespace

TEST_CASE("marginal residuals on dirac identity plan") {
  const std::vector<Marginal> ms = {weights_1d({1.0}), weights_1d({1.0})};
  SparsePlan plan(problem_shape(ms));
  plan.set(Configuration{{0, 0}}, 1.0);
  for (const auto& rk : marginal_residuals(plan, ms))
    for (double v : rk) CHECK(v == 0.0);
}

TEST_CASE("marginal residuals, hand-summed cases") {
  const std::vector<Marginal> ms = {weights_1d({0.5, 0.5}), weights_1d({0.5, 0.5})};

  SparsePlan diagonal(problem_shape(ms));
  diagonal.set(Configuration{{0, 0}}, 0.5);
  diagonal.set(Configuration{{1, 1}}, 0.5);
  CHECK(max_marginal_residual(diagonal, ms) == 0.0);

  SparsePlan lumped(problem_shape(ms));
  lumped.set(Configuration{{0, 0}}, 1.0);
  const auto res = marginal_residuals(lumped, ms);
  for (int k = 0; k < 2; ++k) {
    CHECK(res[k][0] == doctest::Approx(0.5));
    CHECK(res[k][1] == doctest::Approx(-0.5));
  }
}

TEST_CASE("residuals reject shape mismatches") {
  const std::vector<Marginal> ms = {weights_1d({0.5, 0.5}), weights_1d({0.5, 0.5})};
  const std::vector<Marginal> other = {weights_1d({0.5, 0.5})};
  SparsePlan plan(problem_shape(ms));
  CHECK_THROWS_AS(marginal_residuals(plan, other), std::invalid_argument);
}

TEST_CASE("support is sorted and positive-only") {
  ProblemShape shape{{3, 3}};
  SparsePlan plan(shape);
  CHECK(support(plan).empty());
  plan.set(Configuration{{2, 2}}, 0.7);
  plan.set(Configuration{{0, 1}}, 0.3);
  const auto s = support(plan);
  REQUIRE(s.size() == 2);
  CHECK(s[0] == Configuration{{0, 1}});
  CHECK(s[1] == Configuration{{2, 2}});
  plan.set(Configuration{{2, 2}}, 0.0);  // erase
  CHECK(support(plan).size() == 1);
}

TEST_CASE("validate_marginal accepts, renormalizes, rejects") {
  auto ok = weights_1d({0.5, 0.5});
  CHECK(validate_marginal(ok).ok);

  auto nearly = weights_1d({0.5, 0.5000000001});
  const auto rep = validate_marginal(nearly);
  CHECK(rep.ok);
  CHECK(nearly.masses[0] + nearly.masses[1] == doctest::Approx(1.0).epsilon(1e-15));

  auto bad = weights_1d({0.5, -0.1, 0.6});
  const auto rej = validate_marginal(bad);
  CHECK_FALSE(rej.ok);
  CHECK(rej.index == 1);

  auto far = weights_1d({0.5, 0.6});
  CHECK_FALSE(validate_marginal(far).ok);
}

TEST_CASE("reduced set ages strictly increase and survive erasure") {
  ReducedSet omega(10);
  REQUIRE(omega.insert(Configuration{{0, 0}}));
  REQUIRE(omega.insert(Configuration{{1, 0}}));
  CHECK_FALSE(omega.insert(Configuration{{0, 0}}));
  CHECK(omega.age(Configuration{{0, 0}}) < omega.age(Configuration{{1, 0}}));

  omega.erase(Configuration{{0, 0}});
  REQUIRE(omega.insert(Configuration{{0, 0}}));  // re-insertion gets a new stamp
  CHECK(omega.age(Configuration{{0, 0}}) > omega.age(Configuration{{1, 0}}));

  const auto by_age = omega.members_by_age();
  REQUIRE(by_age.size() == 2);
  CHECK(by_age[0] == Configuration{{1, 0}});
}

TEST_CASE("problem shape arithmetic") {
  ProblemShape shape{{3, 4, 5}};
  CHECK(shape.total_support() == 12);
  CHECK(shape.support_bound() == 10);
  CHECK(shape.product_size() == doctest::Approx(60.0));
  CHECK(shape.contains(Configuration{{2, 3, 4}}));
  CHECK_FALSE(shape.contains(Configuration{{3, 0, 0}}));
  CHECK_FALSE(shape.contains(Configuration{{0, 0}}));
}
