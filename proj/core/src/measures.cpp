#include "mmot/measures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmot {

std::int64_t ProblemShape::total_support() const {
  std::int64_t s = 0;
  for (auto l : sizes) s += l;
  return s;
}

std::int64_t ProblemShape::support_bound() const {
  std::int64_t s = 1;
  for (auto l : sizes) s += l - 1;
  return s;
}

double ProblemShape::product_size() const {
  double p = 1.0;
  for (auto l : sizes) p *= static_cast<double>(l);
  return p;
}

bool ProblemShape::contains(const Configuration& c) const {
  if (c.indices.size() != sizes.size()) return false;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (c.indices[k] < 0 || c.indices[k] >= sizes[k]) return false;
  }
  return true;
}

ProblemShape problem_shape(std::span<const Marginal> marginals) {
  ProblemShape s;
  s.sizes.reserve(marginals.size());
  for (const auto& m : marginals) s.sizes.push_back(static_cast<std::int32_t>(m.size()));
  return s;
}

void SparsePlan::set(const Configuration& r, double mass) {
  if (!shape_.sizes.empty() && !shape_.contains(r))
    throw std::invalid_argument("SparsePlan::set: configuration out of shape");
  if (mass > 0.0)
    entries_[r] = mass;
  else
    entries_.erase(r);
}

void SparsePlan::add(const Configuration& r, double mass) {
  set(r, this->mass(r) + mass);
}

double SparsePlan::mass(const Configuration& r) const {
  auto it = entries_.find(r);
  return it == entries_.end() ? 0.0 : it->second;
}

double SparsePlan::total_mass() const {
  double s = 0.0;
  for (const auto& [r, m] : entries_) s += m;
  return s;
}

std::vector<Configuration> SparsePlan::support() const {
  std::vector<Configuration> out;
  out.reserve(entries_.size());
  for (const auto& [r, m] : entries_) out.push_back(r);
  std::sort(out.begin(), out.end());
  return out;
}

bool ReducedSet::insert(const Configuration& r) {
  auto [it, inserted] = age_.try_emplace(r, next_stamp_);
  if (inserted) ++next_stamp_;
  return inserted;
}

std::uint64_t ReducedSet::age(const Configuration& r) const {
  auto it = age_.find(r);
  if (it == age_.end()) throw std::out_of_range("ReducedSet::age: not a member");
  return it->second;
}

std::vector<Configuration> ReducedSet::members_by_age() const {
  std::vector<std::pair<std::uint64_t, const Configuration*>> tmp;
  tmp.reserve(age_.size());
  for (const auto& [r, a] : age_) tmp.emplace_back(a, &r);
  std::sort(tmp.begin(), tmp.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Configuration> out;
  out.reserve(tmp.size());
  for (const auto& [a, r] : tmp) out.push_back(*r);
  return out;
}

ValidationReport validate_marginal(Marginal& m, bool renormalize) {
  ValidationReport rep;
  if (m.dim < 1) return {false, -1, "dimension must be >= 1"};
  if (m.masses.empty()) return {false, -1, "empty support"};
  if (m.points.size() != m.masses.size() * static_cast<std::size_t>(m.dim))
    return {false, -1, "points/masses length mismatch"};
  double sum = 0.0;
  for (std::size_t i = 0; i < m.masses.size(); ++i) {
    if (!(m.masses[i] > 0.0))
      return {false, static_cast<std::ptrdiff_t>(i),
              "nonpositive mass at index " + std::to_string(i)};
    sum += m.masses[i];
  }
  double dev = std::abs(sum - 1.0);
  if (dev > 1e-6)
    return {false, -1, "mass sum deviates from 1 by " + std::to_string(dev)};
  if (dev > 1e-12) {
    if (!renormalize)
      return {false, -1, "mass sum deviates from 1 by " + std::to_string(dev)};
    for (auto& w : m.masses) w /= sum;
  }
  return rep;
}

std::vector<std::vector<double>> marginal_residuals(
    const SparsePlan& plan, std::span<const Marginal> marginals) {
  const auto& shape = plan.shape();
  if (shape.sizes.size() != marginals.size())
    throw std::invalid_argument("marginal_residuals: marginal count mismatch");
  std::vector<std::vector<double>> res(marginals.size());
  for (std::size_t k = 0; k < marginals.size(); ++k) {
    if (static_cast<std::size_t>(shape.sizes[k]) != marginals[k].size())
      throw std::invalid_argument("marginal_residuals: support size mismatch");
    res[k].assign(marginals[k].size(), 0.0);
  }
  for (const auto& [r, mass] : plan.entries()) {
    for (std::size_t k = 0; k < marginals.size(); ++k)
      res[k][r.indices[k]] += mass;
  }
  for (std::size_t k = 0; k < marginals.size(); ++k)
    for (std::size_t i = 0; i < marginals[k].size(); ++i)
      res[k][i] -= marginals[k].masses[i];
  return res;
}

double max_marginal_residual(const SparsePlan& plan,
                             std::span<const Marginal> marginals) {
  double worst = 0.0;
  for (const auto& rk : marginal_residuals(plan, marginals))
    for (double v : rk) worst = std::max(worst, std::abs(v));
  return worst;
}

std::vector<Configuration> support(const SparsePlan& plan) {
  return plan.support();
}

}  // namespace mmot
