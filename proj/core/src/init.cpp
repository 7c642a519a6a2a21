#include "mmot/init.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mmot {

InitResult nw_corner(std::span<const Marginal> marginals,
                     std::span<const std::vector<std::int32_t>> order) {
  const auto shape = problem_shape(marginals);
  const std::size_t n = marginals.size();
  if (n == 0) throw std::invalid_argument("nw_corner: no marginals");
  if (!order.empty() && order.size() != n)
    throw std::invalid_argument("nw_corner: one order per marginal expected");

  auto support_at = [&](std::size_t k, std::int32_t pos) -> std::int32_t {
    return order.empty() ? pos : order[k][pos];
  };

  std::vector<std::int32_t> pos(n, 0);   // walk position per marginal
  std::vector<double> residual(n), exhausted_below(n);
  for (std::size_t k = 0; k < n; ++k) {
    residual[k] = marginals[k].masses[support_at(k, 0)];
    // exact-zero test tolerance, relative to the mass the residual refilled from
    exhausted_below[k] = 1e-15 * residual[k];
  }

  InitResult out;
  out.plan = SparsePlan(shape);
  out.omega = ReducedSet(static_cast<std::size_t>(shape.total_support()));

  // Emit-then-advance: the loop body always records the current configuration
  // before moving on, so the final all-last configuration (where no advance is
  // possible) still receives the remaining mass.
  while (true) {
    const double gamma = *std::min_element(residual.begin(), residual.end());
    Configuration r;
    r.indices.resize(n);
    for (std::size_t k = 0; k < n; ++k) r.indices[k] = support_at(k, pos[k]);
    if (gamma > 0.0) {
      out.plan.add(r, gamma);
      out.omega.insert(r);
      out.trace.emplace_back(r, gamma);
    }
    bool advanced = false;
    for (std::size_t k = 0; k < n; ++k) {
      residual[k] -= gamma;
      if (residual[k] <= exhausted_below[k] &&
          pos[k] + 1 < static_cast<std::int32_t>(marginals[k].size())) {
        ++pos[k];
        residual[k] = marginals[k].masses[support_at(k, pos[k])];
        exhausted_below[k] = 1e-15 * residual[k];
        advanced = true;
      }
    }
    if (!advanced) break;
  }
  return out;
}

std::vector<std::int32_t> lex_coordinate_order(const Marginal& m) {
  std::vector<std::int32_t> order(m.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    const auto pa = m.point(a), pb = m.point(b);
    return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(),
                                        pb.end());
  });
  return order;
}

AugmentReport augment_random(ReducedSet& omega, const ProblemShape& shape,
                             std::size_t target, std::mt19937_64& rng) {
  if (target < omega.size())
    throw std::invalid_argument("augment_random: target below current size");
  AugmentReport rep;
  const double product = shape.product_size();
  if (static_cast<double>(target) >= product) {
    // small product space: enumerate everything we can
    Configuration r;
    r.indices.assign(shape.sizes.size(), 0);
    while (true) {
      if (omega.insert(r)) ++rep.added;
      std::size_t k = 0;
      for (; k < shape.sizes.size(); ++k) {
        if (++r.indices[k] < shape.sizes[k]) break;
        r.indices[k] = 0;
      }
      if (k == shape.sizes.size()) break;
    }
    rep.saturated = omega.size() < target;
    return rep;
  }
  Configuration r;
  r.indices.resize(shape.sizes.size());
  while (omega.size() < target) {
    for (std::size_t k = 0; k < shape.sizes.size(); ++k) {
      std::uniform_int_distribution<std::int32_t> pick(0, shape.sizes[k] - 1);
      r.indices[k] = pick(rng);
    }
    if (omega.insert(r)) ++rep.added;
  }
  return rep;
}

InitResult reflection_init(const Marginal& mu1, const Marginal& mu2) {
  const std::int32_t l = static_cast<std::int32_t>(mu1.size());
  if (mu2.size() != mu1.size())
    throw std::invalid_argument("reflection_init: support sizes differ");
  for (std::int32_t i = 0; i < l; ++i) {
    if (std::abs(mu1.masses[i] - mu2.masses[l - 1 - i]) > 1e-12)
      throw std::invalid_argument(
          "reflection_init: marginals are not index reflections of each other");
  }
  const Marginal views[2] = {mu1, mu2};
  InitResult out;
  out.plan = SparsePlan(problem_shape(views));
  out.omega = ReducedSet(static_cast<std::size_t>(2 * l));
  for (std::int32_t i = 0; i < l; ++i) {
    Configuration r{{i, l - 1 - i}};
    out.plan.set(r, mu1.masses[i]);
    out.omega.insert(r);
    out.trace.emplace_back(r, mu1.masses[i]);
  }
  return out;
}

}  // namespace mmot
