#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mmot/baselines.hpp"
#include "mmot/demo.hpp"
#include "support/oracles.hpp"

using namespace mmot;

namespace {

double quadratic_on(const Marginal& a, const Marginal& b, std::size_t i,
                    std::size_t j) {
  double s = 0.0;
  for (int d = 0; d < a.dim; ++d) {
    const double e = a.point(i)[d] - b.point(j)[d];
    s += e * e;
  }
  return s;
}

}  // namespace

TEST_CASE("sinkhorn on identical diracs") {
  Marginal a, b;
  a.dim = b.dim = 1;
  a.points = b.points = {0.4};
  a.masses = b.masses = {1.0};
  SinkhornParams params;
  params.epsilon = 0.1;
  const auto res = sinkhorn_2m(
      a, b, [&](std::size_t i, std::size_t j) { return quadratic_on(a, b, i, j); },
      params);
  CHECK(res.plan(0, 0) == doctest::Approx(1.0));
  CHECK(res.cost == doctest::Approx(0.0));
}

TEST_CASE("sinkhorn marginal error decreases and the plan is near-feasible") {
  const auto mu1 = demo1d_marginal(30);
  const auto mu2 = index_reflection(mu1);
  SinkhornParams params;
  params.epsilon = 0.05;
  params.max_iterations = 2000;
  params.tolerance = 1e-10;
  const auto res = sinkhorn_2m(
      mu1, mu2,
      [&](std::size_t i, std::size_t j) { return quadratic_on(mu1, mu2, i, j); },
      params);
  REQUIRE(res.error_history.size() >= 2);
  for (std::size_t t = 1; t < res.error_history.size(); ++t)
    CHECK(res.error_history[t] <= res.error_history[t - 1] * (1.0 + 1e-12));

  // row marginals are exact after an f-update; columns within tolerance
  for (std::size_t i = 0; i < mu1.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < mu2.size(); ++j) row += res.plan(i, j);
    CHECK(row == doctest::Approx(mu1.masses[i]).epsilon(1e-8));
  }
}

TEST_CASE("entropic cost decreases toward the exact cost as epsilon shrinks") {
  const auto mu1 = demo1d_marginal(12);
  const auto mu2 = index_reflection(mu1);
  const auto exact = testing::monotone_coupling(mu1, mu2);

  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.2, 0.05, 0.01, 0.002}) {
    SinkhornParams params;
    params.epsilon = eps;
    params.max_iterations = 20000;
    params.tolerance = 1e-10;
    const auto res = sinkhorn_2m(
        mu1, mu2,
        [&](std::size_t i, std::size_t j) { return quadratic_on(mu1, mu2, i, j); },
        params);
    CHECK(res.cost <= prev + 1e-9);
    CHECK(res.cost >= exact.cost - 1e-6);
    prev = res.cost;
  }
  CHECK(prev == doctest::Approx(exact.cost).epsilon(2e-3));
}

TEST_CASE("plain-scaling mode reports underflow at tiny epsilon") {
  const auto mu1 = demo1d_marginal(20);
  const auto mu2 = index_reflection(mu1);
  SinkhornParams params;
  params.epsilon = 1e-5;
  params.log_domain = false;
  params.max_iterations = 50;
  // a cost bounded away from zero drives every kernel entry to exact zero
  CHECK_THROWS_WITH_AS(
      sinkhorn_2m(mu1, mu2,
                  [&](std::size_t i, std::size_t j) {
                    return 2.0 + quadratic_on(mu1, mu2, i, j);
                  },
                  params),
      doctest::Contains("log-domain"), std::runtime_error);

  // the log-domain default handles the same instance
  params.log_domain = true;
  params.max_iterations = 200;
  CHECK_NOTHROW(sinkhorn_2m(mu1, mu2,
                            [&](std::size_t i, std::size_t j) {
                              return 2.0 + quadratic_on(mu1, mu2, i, j);
                            },
                            params));
}

TEST_CASE("ibp barycenter of identical marginals stays put") {
  const auto mu = demo1d_marginal(25);
  const std::vector<Marginal> ms = {mu, mu, mu};
  const std::vector<double> w{1.0 / 3, 1.0 / 3, 1.0 / 3};
  SinkhornParams params;
  params.epsilon = 0.002;
  params.max_iterations = 4000;
  params.tolerance = 1e-10;
  const auto p = ibp_barycenter(ms, w, params);
  double sum = 0.0, err = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p[i] >= 0.0);
    sum += p[i];
    err = std::max(err, std::abs(p[i] - mu.masses[i]));
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(err <= 0.05);  // identical inputs: fixed point up to the blur scale
}

TEST_CASE("ibp barycenter of two diracs concentrates at the midpoint") {
  Marginal grid;
  grid.dim = 1;
  for (int i = 0; i <= 10; ++i) {
    grid.points.push_back(i / 10.0);
    grid.masses.push_back(1e-12);
  }
  Marginal a = grid, b = grid;
  a.masses[2] = 1.0;
  b.masses[8] = 1.0;
  const std::vector<Marginal> ms = {a, b};
  const std::vector<double> w{0.5, 0.5};
  SinkhornParams params;
  params.epsilon = 0.005;
  params.max_iterations = 5000;
  params.tolerance = 1e-12;
  const auto p = ibp_barycenter(ms, w, params);
  const auto peak = std::max_element(p.begin(), p.end()) - p.begin();
  CHECK(peak == 5);
}

TEST_CASE("marginals must share one support") {
  const auto mu = demo1d_marginal(10);
  auto other = mu;
  other.points[3] += 0.01;
  const std::vector<Marginal> ms = {mu, other};
  const std::vector<double> w{0.5, 0.5};
  CHECK_THROWS_AS(ibp_barycenter(ms, w, SinkhornParams{}), std::invalid_argument);
}
