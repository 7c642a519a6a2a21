#pragma once

#include <deque>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "mmot/measures.hpp"

namespace mmot {

// Cost families. Costs are evaluated per configuration on demand; a full
// cost tensor is never materialized.

struct QuadraticCost {};  // |x - y|^2, two marginals only

struct BarycenterCost {
  std::vector<double> weights;  // positive, summing to 1
};

struct SplineExactCost {
  std::vector<double> times;  // strictly increasing, t_0 = 0, t_last = 1
};

struct SplineApproxCost {
  double step = 0.0;  // equidistant time step tau > 0
};

struct CustomCost {
  std::function<double(const Configuration&)> fn;
};

using CostSpec = std::variant<QuadraticCost, BarycenterCost, SplineExactCost,
                              SplineApproxCost, CustomCost>;

// Throws std::invalid_argument on weight/time/marginal-count violations.
void validate_cost_spec(const CostSpec& spec, const ProblemShape& shape);

double eval_quadratic_cost(std::span<const double> x, std::span<const double> y);

// B_lambda(x_1..x_N) = sum_i lambda_i x_i
std::vector<double> barycenter_map(std::span<const double> points, int dim,
                                   std::span<const double> weights);

// sum_i lambda_i |x_i - B_lambda(x)|^2
double eval_barycenter_cost(std::span<const double> points, int dim,
                            std::span<const double> weights);

// Second derivatives of the natural cubic spline at the knots, one component
// per spatial dimension, plus the knot interval lengths. M front/back are
// exactly zero (natural boundary).
struct SplineMoments {
  int dim = 1;
  std::vector<double> m;          // row-major, (num_knots) x dim
  std::vector<double> intervals;  // h_j = t_j - t_{j-1}, size num_knots - 1

  std::size_t num_knots() const { return intervals.size() + 1; }
  std::span<const double> moment(std::size_t j) const {
    return {m.data() + static_cast<std::size_t>(dim) * j,
            static_cast<std::size_t>(dim)};
  }
};

// Solves the moment system of the natural cubic spline through
// (times[j], knots[j]) with the Thomas algorithm. The matrix has diagonal 2
// and off-diagonals in [0,1], hence is strictly diagonally dominant and needs
// no pivoting. Requires >= 3 knots and strictly increasing times.
SplineMoments spline_moments(std::span<const double> knots, int dim,
                             std::span<const double> times);

// Integral of |x''(t)|^2 over [t_0, t_last] for the natural cubic spline:
// sum_j h/3 (|M_j|^2 + M_j.M_{j+1} + |M_{j+1}|^2), with x'' piecewise linear
// between moments.
double eval_spline_cost_exact(std::span<const double> knots, int dim,
                              std::span<const double> times);
double spline_energy(const SplineMoments& moments);

// Equidistant-time approximation: sum_i |x_{i+1} - 2 x_i + x_{i-1}|^2 / tau^3.
double eval_spline_cost_approx(std::span<const double> knots, int dim,
                               double step);

// Coordinates of the configuration's points, one marginal per row, row-major.
std::vector<double> gather_coordinates(const Configuration& r,
                                       std::span<const Marginal> marginals);

// Pure dispatch: map indices to coordinates, then evaluate the cost family.
double eval_cost(const CostSpec& spec, const Configuration& r,
                 std::span<const Marginal> marginals);

// eval_cost with a bounded FIFO cache keyed by configuration. Semantically
// identical to the uncached path; not safe for concurrent mutation.
class CostEvaluator {
 public:
  CostEvaluator() = default;
  CostEvaluator(CostSpec spec, std::span<const Marginal> marginals,
                std::size_t cache_capacity);

  double operator()(const Configuration& r);
  double uncached(const Configuration& r) const;
  const CostSpec& spec() const { return spec_; }

 private:
  CostSpec spec_;
  std::span<const Marginal> marginals_;
  std::size_t capacity_ = 0;
  std::unordered_map<Configuration, double, ConfigurationHash> cache_;
  std::deque<Configuration> order_;
};

}  // namespace mmot
