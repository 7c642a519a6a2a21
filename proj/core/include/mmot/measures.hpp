#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace mmot {

// A discrete probability measure: support points in R^d plus positive masses
// summing to one. Supports of different marginals may have different sizes
// and even different point sets; only the dimension d must agree across a
// problem.
struct Marginal {
  int dim = 1;
  std::vector<double> points;  // row-major, size == dim * masses.size()
  std::vector<double> masses;
  std::string label;

  std::size_t size() const { return masses.size(); }

  std::span<const double> point(std::size_t i) const {
    return {points.data() + static_cast<std::size_t>(dim) * i,
            static_cast<std::size_t>(dim)};
  }
};

// One point of the product grid X_1 x ... x X_N: per-marginal support indices.
struct Configuration {
  std::vector<std::int32_t> indices;

  bool operator==(const Configuration&) const = default;
  // lexicographic; the deterministic ordering used throughout
  auto operator<=>(const Configuration&) const = default;
};

struct ConfigurationHash {
  std::size_t operator()(const Configuration& c) const {
    // FNV-1a over the packed index tuple
    std::uint64_t h = 1469598103934665603ull;
    for (std::int32_t v : c.indices) {
      for (int b = 0; b < 4; ++b) {
        h ^= static_cast<std::uint64_t>(v >> (8 * b)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
    return static_cast<std::size_t>(h);
  }
};

// Support sizes (l_1, ..., l_N) of a marginal family.
struct ProblemShape {
  std::vector<std::int32_t> sizes;

  int num_marginals() const { return static_cast<int>(sizes.size()); }
  std::int64_t total_support() const;            // sum of the l_k
  std::int64_t support_bound() const;            // sum of (l_k - 1) + 1
  double product_size() const;                   // may overflow int64, hence double
  bool contains(const Configuration& c) const;

  bool operator==(const ProblemShape&) const = default;
};

ProblemShape problem_shape(std::span<const Marginal> marginals);

// A transport plan stored sparsely: configuration -> positive mass.
// Zeros are absent, never stored.
class SparsePlan {
 public:
  using Map = std::unordered_map<Configuration, double, ConfigurationHash>;

  SparsePlan() = default;
  explicit SparsePlan(ProblemShape shape) : shape_(std::move(shape)) {}

  const ProblemShape& shape() const { return shape_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // mass <= 0 erases the entry
  void set(const Configuration& r, double mass);
  void add(const Configuration& r, double mass);
  double mass(const Configuration& r) const;
  bool contains(const Configuration& r) const { return entries_.count(r) != 0; }

  double total_mass() const;
  const Map& entries() const { return entries_; }

  // configurations with positive mass, sorted lexicographically
  std::vector<Configuration> support() const;

 private:
  ProblemShape shape_;
  Map entries_;
};

// Kantorovich potentials: one value per support point of each marginal.
struct DualPotentials {
  std::vector<std::vector<double>> u;

  double sum_at(const Configuration& r) const {
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += u[k][r.indices[k]];
    return s;
  }
};

// The working configuration set Omega with insertion-age bookkeeping for
// tail-clearing. Single writer; safe to share read-only.
class ReducedSet {
 public:
  ReducedSet() = default;
  explicit ReducedSet(std::size_t capacity) : capacity_(capacity) {}

  std::size_t size() const { return age_.size(); }
  std::size_t capacity() const { return capacity_; }
  void set_capacity(std::size_t c) { capacity_ = c; }

  bool contains(const Configuration& r) const { return age_.count(r) != 0; }
  // false if already present; otherwise stamps a strictly increasing age
  bool insert(const Configuration& r);
  bool erase(const Configuration& r) { return age_.erase(r) != 0; }

  std::uint64_t age(const Configuration& r) const;

  // members sorted oldest-first (ages are unique, so this is deterministic)
  std::vector<Configuration> members_by_age() const;
  const std::unordered_map<Configuration, std::uint64_t, ConfigurationHash>&
  members() const {
    return age_;
  }

 private:
  std::unordered_map<Configuration, std::uint64_t, ConfigurationHash> age_;
  std::uint64_t next_stamp_ = 0;
  std::size_t capacity_ = 0;
};

struct ValidationReport {
  bool ok = true;
  std::ptrdiff_t index = -1;  // offending entry, -1 if not entry-specific
  std::string message;
};

// Checks the Marginal invariants. With renormalize, a mass-sum deviation of
// at most 1e-6 is repaired by rescaling; larger deviations and nonpositive
// masses are rejected with the offending index.
ValidationReport validate_marginal(Marginal& m, bool renormalize = true);

// M_k gamma - mu_k for each k; plain summation over the plan entries.
std::vector<std::vector<double>> marginal_residuals(
    const SparsePlan& plan, std::span<const Marginal> marginals);

// Largest componentwise residual over all marginals.
double max_marginal_residual(const SparsePlan& plan,
                             std::span<const Marginal> marginals);

std::vector<Configuration> support(const SparsePlan& plan);

}  // namespace mmot
