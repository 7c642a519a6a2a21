#include <doctest.h>

#include <stdexcept>

#include <random>

#include "mmot/costs.hpp"
#include "support/oracles.hpp"

using namespace mmot;

TEST_CASE("quadratic cost basics") {
  const std::vector<double> a{0.0, 0.0}, b{3.0, 4.0};
  CHECK(eval_quadratic_cost(a, a) == 0.0);
  CHECK(eval_quadratic_cost(a, b) == doctest::Approx(25.0));
  const std::vector<double> x{0.2}, y{0.5};
  CHECK(eval_quadratic_cost(x, y) == doctest::Approx(0.09));
  const std::vector<double> wrong{1.0};
  CHECK_THROWS_AS(eval_quadratic_cost(a, wrong), std::invalid_argument);
}

TEST_CASE("barycenter map and cost, worked values") {
  {
    const std::vector<double> pts{1.0, 2.0, 1.0, 2.0};
    const std::vector<double> w{0.5, 0.5};
    const auto b = barycenter_map(pts, 2, w);
    CHECK(b[0] == doctest::Approx(1.0));
    CHECK(b[1] == doctest::Approx(2.0));
    CHECK(eval_barycenter_cost(pts, 2, w) == 0.0);
  }
  {
    const std::vector<double> pts{0.0, 0.0, 2.0, 4.0};
    const std::vector<double> w{0.5, 0.5};
    const auto b = barycenter_map(pts, 2, w);
    CHECK(b[0] == doctest::Approx(1.0));
    CHECK(b[1] == doctest::Approx(2.0));
  }
  {
    const std::vector<double> pts{0.0, 4.0};
    const std::vector<double> w{0.25, 0.75};
    CHECK(barycenter_map(pts, 1, w)[0] == doctest::Approx(3.0));
  }
  {
    const std::vector<double> pts{0.0, 1.0};
    const std::vector<double> w{0.5, 0.5};
    CHECK(eval_barycenter_cost(pts, 1, w) == doctest::Approx(0.25));
  }
  {
    const std::vector<double> pts{0.0, 0.0, 3.0};
    const std::vector<double> w{1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK(eval_barycenter_cost(pts, 1, w) == doctest::Approx(2.0));
  }
}

TEST_CASE("barycenter cost equals the second-moment identity") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const int dim = 1 + static_cast<int>(rng() % 3);
    std::vector<double> pts(n * dim), w(n);
    for (auto& p : pts) p = u(rng);
    double sum = 0.0;
    for (auto& v : w) {
      v = 0.1 + std::abs(u(rng));
      sum += v;
    }
    for (auto& v : w) v /= sum;
    const double direct = eval_barycenter_cost(pts, dim, w);
    const auto b = barycenter_map(pts, dim, w);
    double moments = 0.0;
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < dim; ++d)
        moments += w[i] * pts[i * dim + d] * pts[i * dim + d];
    for (int d = 0; d < dim; ++d) moments -= b[d] * b[d];
    CHECK(direct == doctest::Approx(moments).epsilon(1e-12));
    CHECK(direct >= 0.0);
  }
}

TEST_CASE("spline moments: collinear knots have zero curvature") {
  const std::vector<double> knots{0.0, 0.5, 1.0};
  const std::vector<double> times{0.0, 0.5, 1.0};
  const auto mo = spline_moments(knots, 1, times);
  for (double v : mo.m) CHECK(v == doctest::Approx(0.0));
  CHECK(spline_energy(mo) == doctest::Approx(0.0));
}

TEST_CASE("spline moments: hand-solved 3-knot case") {
  const std::vector<double> knots{0.0, 1.0, 0.0};
  const std::vector<double> times{0.0, 0.5, 1.0};
  const auto mo = spline_moments(knots, 1, times);
  CHECK(mo.m[0] == doctest::Approx(0.0));
  CHECK(mo.m[1] == doctest::Approx(-12.0));
  CHECK(mo.m[2] == doctest::Approx(0.0));
  CHECK(eval_spline_cost_exact(knots, 1, times) == doctest::Approx(48.0));
  CHECK(eval_spline_cost_approx(knots, 1, 0.5) == doctest::Approx(32.0));
}

TEST_CASE("spline moments satisfy the tridiagonal system") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 3 + rng() % 5;
    std::vector<double> times(n), knots(n);
    times[0] = 0.0;
    for (std::size_t j = 1; j < n; ++j)
      times[j] = times[j - 1] + 0.1 + 0.4 * std::abs(u(rng));
    const double span = times.back();
    for (auto& t : times) t /= span;
    for (auto& x : knots) x = u(rng);
    const auto mo = spline_moments(knots, 1, times);

    CHECK(mo.m.front() == 0.0);
    CHECK(mo.m.back() == 0.0);
    // residual of the defining system, rebuilt from scratch
    double worst = 0.0;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double hj = times[j] - times[j - 1];
      const double hj1 = times[j + 1] - times[j];
      const double lam = hj1 / (hj + hj1);
      const double mu = 1.0 - lam;
      const double d = 6.0 / (hj + hj1) *
                       ((knots[j + 1] - knots[j]) / hj1 - (knots[j] - knots[j - 1]) / hj);
      const double lhs = mu * mo.m[j - 1] + 2.0 * mo.m[j] + lam * mo.m[j + 1];
      worst = std::max(worst, std::abs(lhs - d) / std::max(1.0, std::abs(d)));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("moments are linear in the knots") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::vector<double> times{0.0, 0.2, 0.55, 1.0};
  std::vector<double> a(4), b(4), ab(4);
  for (int i = 0; i < 4; ++i) {
    a[i] = u(rng);
    b[i] = u(rng);
    ab[i] = a[i] + b[i];
  }
  const auto ma = spline_moments(a, 1, times);
  const auto mb = spline_moments(b, 1, times);
  const auto mab = spline_moments(ab, 1, times);
  for (std::size_t j = 0; j < 4; ++j)
    CHECK(mab.m[j] == doctest::Approx(ma.m[j] + mb.m[j]).epsilon(1e-12));
}

TEST_CASE("exact spline energy matches independent quadrature") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + rng() % 3;
    std::vector<double> times(n), knots(n);
    times[0] = 0.0;
    for (std::size_t j = 1; j < n; ++j)
      times[j] = times[j - 1] + 0.1 + 0.5 * std::abs(u(rng));
    const double span = times.back();
    for (auto& t : times) t /= span;
    for (auto& x : knots) x = u(rng);

    const double closed = eval_spline_cost_exact(knots, 1, times);
    const testing::ReferenceSpline ref(times, knots);
    const double quad = ref.curvature_energy();
    CHECK(closed == doctest::Approx(quad).epsilon(1e-8));
  }
}

TEST_CASE("spline energy is translation invariant and zero on lines") {
  const std::vector<double> times{0.0, 0.3, 0.6, 1.0};
  std::vector<double> knots{0.4, -0.2, 0.9, 0.1};
  const double base = eval_spline_cost_exact(knots, 1, times);
  for (auto& x : knots) x += 17.5;
  CHECK(eval_spline_cost_exact(knots, 1, times) == doctest::Approx(base).epsilon(1e-10));

  std::vector<double> affine(4);
  for (int j = 0; j < 4; ++j) affine[j] = -0.7 + 2.1 * times[j];
  CHECK(eval_spline_cost_exact(affine, 1, times) == doctest::Approx(0.0));
  // affine knots at equidistant times: second differences vanish too
  const std::vector<double> eq{1.0, 1.5, 2.0, 2.5};
  CHECK(eval_spline_cost_approx(eq, 1, 1.0 / 3) == doctest::Approx(0.0));
}

TEST_CASE("spline rejects bad inputs") {
  const std::vector<double> knots{0.0, 1.0, 0.0};
  const std::vector<double> bad_times{0.0, 0.5, 0.5};
  CHECK_THROWS_AS(spline_moments(knots, 1, bad_times), std::invalid_argument);
  CHECK_THROWS_AS(eval_spline_cost_approx(knots, 1, 0.0), std::invalid_argument);
  const std::vector<double> two{0.0, 1.0};
  const std::vector<double> two_times{0.0, 1.0};
  CHECK_THROWS_AS(spline_moments(two, 1, two_times), std::invalid_argument);
}

TEST_CASE("eval_cost dispatch over marginals") {
  Marginal line;
  line.dim = 1;
  line.points = {0.0, 0.25, 0.5, 0.75};
  line.masses = {0.25, 0.25, 0.25, 0.25};
  const std::vector<Marginal> pair_ms(2, line);

  CHECK(eval_cost(QuadraticCost{}, Configuration{{1, 3}}, pair_ms) ==
        doctest::Approx(0.25));

  // identical coordinates make the barycenter deviation vanish
  const std::vector<Marginal> triple_ms(3, line);
  BarycenterCost bc{{0.2, 0.3, 0.5}};
  CHECK(eval_cost(CostSpec{bc}, Configuration{{2, 2, 2}}, triple_ms) ==
        doctest::Approx(0.0));

  // dirac marginals on a line: the approximate spline cost of the only
  // configuration is zero only when the points are affine in time
  std::vector<Marginal> diracs;
  for (double x : {0.0, 0.5, 1.0}) {
    Marginal d;
    d.dim = 1;
    d.points = {x};
    d.masses = {1.0};
    diracs.push_back(d);
  }
  CHECK(eval_cost(CostSpec{SplineApproxCost{0.5}}, Configuration{{0, 0, 0}},
                  diracs) == doctest::Approx(0.0));

  const std::vector<Marginal> three(3, line);
  CHECK_THROWS_AS(eval_cost(CostSpec{QuadraticCost{}}, Configuration{{0, 0, 0}}, three),
                  std::invalid_argument);
}

TEST_CASE("cost spec validation") {
  ProblemShape pair_shape{{4, 4}};
  ProblemShape triple_shape{{4, 4, 4}};
  CHECK_NOTHROW(validate_cost_spec(QuadraticCost{}, pair_shape));
  CHECK_THROWS_AS(validate_cost_spec(QuadraticCost{}, triple_shape),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_cost_spec(BarycenterCost{{0.5, 0.6}}, pair_shape),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_cost_spec(SplineExactCost{{0.0, 0.5, 0.9}}, triple_shape),
                  std::invalid_argument);
  CHECK_NOTHROW(validate_cost_spec(SplineExactCost{{0.0, 0.5, 1.0}}, triple_shape));
}

TEST_CASE("cost evaluator cache is invisible") {
  Marginal line;
  line.dim = 1;
  line.points = {0.0, 0.5, 1.0};
  line.masses = {0.3, 0.3, 0.4};
  const std::vector<Marginal> ms(2, line);
  CostEvaluator eval(QuadraticCost{}, ms, 2);  // tiny cache forces eviction
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    Configuration r{{static_cast<std::int32_t>(rng() % 3),
                     static_cast<std::int32_t>(rng() % 3)}};
    CHECK(eval(r) == eval.uncached(r));
  }
}
