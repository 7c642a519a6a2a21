#include "mmot/costs.hpp"

#include <cmath>
#include <stdexcept>

namespace mmot {

namespace {

void check_weights(const std::vector<double>& w, int n) {
  if (static_cast<int>(w.size()) != n)
    throw std::invalid_argument("barycenter weights: expected one per marginal");
  double sum = 0.0;
  for (double v : w) {
    // zero weights are allowed: they select a sub-family (degenerate sweeps)
    if (!(v >= 0.0)) throw std::invalid_argument("barycenter weights must be nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("barycenter weights must sum to 1");
}

void check_times(const std::vector<double>& t, int n) {
  if (static_cast<int>(t.size()) != n)
    throw std::invalid_argument("spline times: expected one per marginal");
  if (n < 3) throw std::invalid_argument("spline cost needs at least 3 marginals");
  for (std::size_t j = 1; j < t.size(); ++j)
    if (!(t[j] > t[j - 1]))
      throw std::invalid_argument("spline times must be strictly increasing");
  if (std::abs(t.front()) > 1e-12 || std::abs(t.back() - 1.0) > 1e-12)
    throw std::invalid_argument("spline times must start at 0 and end at 1");
}

}  // namespace

void validate_cost_spec(const CostSpec& spec, const ProblemShape& shape) {
  const int n = shape.num_marginals();
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, QuadraticCost>) {
          if (n != 2)
            throw std::invalid_argument("quadratic cost requires exactly 2 marginals");
        } else if constexpr (std::is_same_v<T, BarycenterCost>) {
          check_weights(s.weights, n);
        } else if constexpr (std::is_same_v<T, SplineExactCost>) {
          check_times(s.times, n);
        } else if constexpr (std::is_same_v<T, SplineApproxCost>) {
          if (n < 3)
            throw std::invalid_argument("spline cost needs at least 3 marginals");
          if (!(s.step > 0.0))
            throw std::invalid_argument("spline step must be positive");
        } else {
          if (!s.fn) throw std::invalid_argument("custom cost callback is empty");
        }
      },
      spec);
}

double eval_quadratic_cost(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("quadratic cost: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

std::vector<double> barycenter_map(std::span<const double> points, int dim,
                                   std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (points.size() != n * static_cast<std::size_t>(dim))
    throw std::invalid_argument("barycenter_map: dimension mismatch");
  std::vector<double> b(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) b[d] += weights[i] * points[i * dim + d];
  return b;
}

double eval_barycenter_cost(std::span<const double> points, int dim,
                            std::span<const double> weights) {
  const auto b = barycenter_map(points, dim, weights);
  double cost = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double dev = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double e = points[i * dim + d] - b[d];
      dev += e * e;
    }
    cost += weights[i] * dev;
  }
  return cost;
}

SplineMoments spline_moments(std::span<const double> knots, int dim,
                             std::span<const double> times) {
  const std::size_t n = times.size();
  if (n < 3) throw std::invalid_argument("spline_moments: need at least 3 knots");
  if (knots.size() != n * static_cast<std::size_t>(dim))
    throw std::invalid_argument("spline_moments: knots/times mismatch");

  SplineMoments out;
  out.dim = dim;
  out.intervals.resize(n - 1);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    out.intervals[j] = times[j + 1] - times[j];
    if (!(out.intervals[j] > 0.0))
      throw std::invalid_argument("spline_moments: times must be strictly increasing");
  }

  // Tridiagonal system: diagonal 2, superdiagonal lam_j, subdiagonal
  // 1 - lam_j; boundary rows have zero off-diagonal and zero rhs, which
  // forces the natural condition M_0 = M_last = 0.
  std::vector<double> lower(n, 0.0), upper(n, 0.0);
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double hj = out.intervals[j - 1];
    const double hj1 = out.intervals[j];
    upper[j] = hj1 / (hj + hj1);
    lower[j] = 1.0 - upper[j];
  }

  out.m.assign(n * dim, 0.0);
  std::vector<double> diag(n), rhs(n);
  for (int d = 0; d < dim; ++d) {
    for (std::size_t j = 0; j < n; ++j) diag[j] = 2.0;
    rhs[0] = 0.0;
    rhs[n - 1] = 0.0;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double hj = out.intervals[j - 1];
      const double hj1 = out.intervals[j];
      const double xjm = knots[(j - 1) * dim + d];
      const double xj = knots[j * dim + d];
      const double xjp = knots[(j + 1) * dim + d];
      rhs[j] = 6.0 / (hj + hj1) * ((xjp - xj) / hj1 - (xj - xjm) / hj);
    }
    // Thomas forward sweep / back substitution
    for (std::size_t j = 1; j < n; ++j) {
      const double w = lower[j] / diag[j - 1];
      diag[j] -= w * upper[j - 1];
      rhs[j] -= w * rhs[j - 1];
    }
    out.m[(n - 1) * dim + d] = rhs[n - 1] / diag[n - 1];
    for (std::size_t j = n - 1; j-- > 0;)
      out.m[j * dim + d] = (rhs[j] - upper[j] * out.m[(j + 1) * dim + d]) / diag[j];
  }
  return out;
}

double spline_energy(const SplineMoments& mo) {
  double e = 0.0;
  const int dim = mo.dim;
  for (std::size_t j = 0; j + 1 < mo.num_knots(); ++j) {
    double mm = 0.0, mn = 0.0, nn = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double a = mo.m[j * dim + d];
      const double b = mo.m[(j + 1) * dim + d];
      mm += a * a;
      mn += a * b;
      nn += b * b;
    }
    e += mo.intervals[j] / 3.0 * (mm + mn + nn);
  }
  return e;
}

double eval_spline_cost_exact(std::span<const double> knots, int dim,
                              std::span<const double> times) {
  return spline_energy(spline_moments(knots, dim, times));
}

double eval_spline_cost_approx(std::span<const double> knots, int dim,
                               double step) {
  if (!(step > 0.0))
    throw std::invalid_argument("eval_spline_cost_approx: step must be positive");
  const std::size_t n = knots.size() / static_cast<std::size_t>(dim);
  if (n < 3)
    throw std::invalid_argument("eval_spline_cost_approx: need at least 3 knots");
  const double tau3 = step * step * step;
  double e = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double dd = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double v = knots[(i + 1) * dim + d] - 2.0 * knots[i * dim + d] +
                       knots[(i - 1) * dim + d];
      dd += v * v;
    }
    e += dd / tau3;
  }
  return e;
}

std::vector<double> gather_coordinates(const Configuration& r,
                                       std::span<const Marginal> marginals) {
  if (r.indices.size() != marginals.size())
    throw std::invalid_argument("gather_coordinates: configuration length mismatch");
  const int dim = marginals.empty() ? 1 : marginals[0].dim;
  std::vector<double> coords(marginals.size() * static_cast<std::size_t>(dim));
  for (std::size_t k = 0; k < marginals.size(); ++k) {
    if (marginals[k].dim != dim)
      throw std::invalid_argument("gather_coordinates: marginal dimensions differ");
    const auto p = marginals[k].point(static_cast<std::size_t>(r.indices[k]));
    for (int d = 0; d < dim; ++d) coords[k * dim + d] = p[d];
  }
  return coords;
}

double eval_cost(const CostSpec& spec, const Configuration& r,
                 std::span<const Marginal> marginals) {
  if (const auto* c = std::get_if<CustomCost>(&spec)) return c->fn(r);
  const int dim = marginals.empty() ? 1 : marginals[0].dim;
  const auto coords = gather_coordinates(r, marginals);
  if (const auto* q = std::get_if<QuadraticCost>(&spec)) {
    (void)q;
    if (marginals.size() != 2)
      throw std::invalid_argument("quadratic cost requires exactly 2 marginals");
    return eval_quadratic_cost(
        std::span<const double>(coords.data(), dim),
        std::span<const double>(coords.data() + dim, dim));
  }
  if (const auto* b = std::get_if<BarycenterCost>(&spec))
    return eval_barycenter_cost(coords, dim, b->weights);
  if (const auto* s = std::get_if<SplineExactCost>(&spec))
    return eval_spline_cost_exact(coords, dim, s->times);
  const auto& a = std::get<SplineApproxCost>(spec);
  return eval_spline_cost_approx(coords, dim, a.step);
}

CostEvaluator::CostEvaluator(CostSpec spec, std::span<const Marginal> marginals,
                             std::size_t cache_capacity)
    : spec_(std::move(spec)), marginals_(marginals), capacity_(cache_capacity) {
  validate_cost_spec(spec_, problem_shape(marginals));
}

double CostEvaluator::operator()(const Configuration& r) {
  if (capacity_ == 0) return uncached(r);
  if (auto it = cache_.find(r); it != cache_.end()) return it->second;
  const double c = uncached(r);
  if (cache_.size() >= capacity_) {
    cache_.erase(order_.front());
    order_.pop_front();
  }
  cache_.emplace(r, c);
  order_.push_back(r);
  return c;
}

double CostEvaluator::uncached(const Configuration& r) const {
  return eval_cost(spec_, r, marginals_);
}

}  // namespace mmot
