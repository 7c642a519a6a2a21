#include "mmot/extract.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mmot {

namespace {

// Deterministic merge of coincident points: lexicographic sort, then a single
// pass grouping rows that agree with the group head within tol.
WeightedPointCloud merge_points(int dim, std::vector<double> points,
                                std::vector<double> masses, double tol) {
  const std::size_t n = masses.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(
        points.begin() + a * dim, points.begin() + (a + 1) * dim,
        points.begin() + b * dim, points.begin() + (b + 1) * dim);
  });

  WeightedPointCloud out;
  out.dim = dim;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t i = idx[s];
    bool merged = false;
    if (!out.masses.empty()) {
      const std::size_t head = out.masses.size() - 1;
      merged = true;
      for (int d = 0; d < dim; ++d) {
        if (std::abs(out.points[head * dim + d] - points[i * dim + d]) > tol) {
          merged = false;
          break;
        }
      }
      if (merged) out.masses[head] += masses[i];
    }
    if (!merged) {
      for (int d = 0; d < dim; ++d) out.points.push_back(points[i * dim + d]);
      out.masses.push_back(masses[i]);
    }
  }
  return out;
}

}  // namespace

WeightedPointCloud barycenter_pushforward(const SparsePlan& plan,
                                          std::span<const Marginal> marginals,
                                          std::span<const double> weights,
                                          double merge_tol) {
  if (weights.size() != marginals.size())
    throw std::invalid_argument("barycenter_pushforward: weight count mismatch");
  const int dim = marginals.empty() ? 1 : marginals[0].dim;
  std::vector<double> points, masses;
  for (const auto& r : plan.support()) {
    const auto coords = gather_coordinates(r, marginals);
    const auto b = barycenter_map(coords, dim, weights);
    points.insert(points.end(), b.begin(), b.end());
    masses.push_back(plan.mass(r));
  }
  return merge_points(dim, std::move(points), std::move(masses), merge_tol);
}

void spline_eval(const SplineMoments& mo, std::span<const double> knots,
                 std::span<const double> times, double t, std::span<double> out) {
  const int dim = mo.dim;
  const std::size_t n = times.size();
  // locate the interval [t_j, t_{j+1}] containing t
  std::size_t j = std::upper_bound(times.begin(), times.end(), t) - times.begin();
  j = (j == 0) ? 0 : j - 1;
  if (j + 1 >= n) j = n - 2;
  const double h = mo.intervals[j];
  const double a = times[j + 1] - t;  // distance to the right knot
  const double c = t - times[j];
  for (int d = 0; d < dim; ++d) {
    const double mj = mo.m[j * dim + d];
    const double mj1 = mo.m[(j + 1) * dim + d];
    const double xj = knots[j * dim + d];
    const double xj1 = knots[(j + 1) * dim + d];
    out[d] = mj * a * a * a / (6.0 * h) + mj1 * c * c * c / (6.0 * h) +
             (xj - mj * h * h / 6.0) * a / h + (xj1 - mj1 * h * h / 6.0) * c / h;
  }
}

MeasurePath spline_path(const SparsePlan& plan,
                        std::span<const Marginal> marginals,
                        std::span<const double> knot_times,
                        std::span<const double> query_times, double merge_tol) {
  if (knot_times.size() != marginals.size())
    throw std::invalid_argument("spline_path: one knot time per marginal expected");
  for (double t : query_times)
    if (t < 0.0 || t > 1.0)
      throw std::invalid_argument("spline_path: query time outside [0,1]");
  const int dim = marginals.empty() ? 1 : marginals[0].dim;

  const auto configs = plan.support();
  std::vector<std::vector<double>> knots(configs.size());
  std::vector<SplineMoments> moments(configs.size());
  std::vector<double> masses(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    knots[i] = gather_coordinates(configs[i], marginals);
    moments[i] = spline_moments(knots[i], dim, knot_times);
    masses[i] = plan.mass(configs[i]);
  }

  MeasurePath path;
  path.times.assign(query_times.begin(), query_times.end());
  std::vector<double> pt(dim);
  for (double t : query_times) {
    // at a knot time, take the knot coordinates themselves
    std::ptrdiff_t knot = -1;
    for (std::size_t j = 0; j < knot_times.size(); ++j)
      if (t == knot_times[j]) {
        knot = static_cast<std::ptrdiff_t>(j);
        break;
      }
    std::vector<double> points;
    points.reserve(configs.size() * dim);
    for (std::size_t i = 0; i < configs.size(); ++i) {
      if (knot >= 0) {
        for (int d = 0; d < dim; ++d) points.push_back(knots[i][knot * dim + d]);
      } else {
        spline_eval(moments[i], knots[i], knot_times, t, pt);
        points.insert(points.end(), pt.begin(), pt.end());
      }
    }
    path.clouds.push_back(merge_points(dim, std::move(points),
                                       std::vector<double>(masses), merge_tol));
  }
  return path;
}

Grid rasterize(const WeightedPointCloud& cloud, const GridSpec& spec) {
  if (cloud.dim != spec.dim)
    throw std::invalid_argument("rasterize: dimension mismatch");
  Grid g;
  g.spec = spec;
  g.values.assign(static_cast<std::size_t>(spec.cells()), 0.0);
  std::vector<std::int64_t> cell(spec.dim);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    std::int64_t flat = 0;
    for (int d = 0; d < spec.dim; ++d) {
      const double u = (p[d] - spec.origin[d]) / spec.spacing[d];
      // nearest cell center; exact halves go to the lower index
      const auto c = static_cast<std::int64_t>(std::ceil(u - 0.5));
      if (c < 0 || c >= spec.shape[d])
        throw std::invalid_argument("rasterize: point " + std::to_string(i) +
                                    " falls outside the grid on axis " +
                                    std::to_string(d));
      cell[d] = c;
      flat = flat * spec.shape[d] + c;
    }
    g.values[static_cast<std::size_t>(flat)] += cloud.masses[i];
  }
  return g;
}

Grid gaussian_blur(const Grid& grid, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("gaussian_blur: negative sigma");
  Grid out = grid;
  if (sigma == 0.0) return out;
  const auto radius = static_cast<std::int64_t>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (std::int64_t t = -radius; t <= radius; ++t) {
    kernel[t + radius] = std::exp(-0.5 * (t * t) / (sigma * sigma));
    norm += kernel[t + radius];
  }
  for (auto& w : kernel) w /= norm;

  const auto& shape = grid.spec.shape;
  const int dim = grid.spec.dim;
  std::vector<double> tmp(out.values.size());
  // convolve one axis at a time; outer/inner strides address the rest
  std::int64_t stride = 1;
  for (int axis = dim - 1; axis >= 0; --axis) {
    const std::int64_t len = shape[axis];
    const std::int64_t total = grid.spec.cells();
    for (std::int64_t base = 0; base < total; ++base) {
      const std::int64_t pos = (base / stride) % len;
      double acc = 0.0;
      for (std::int64_t t = -radius; t <= radius; ++t) {
        const std::int64_t q = pos + t;
        if (q < 0 || q >= len) continue;  // zero padding
        acc += kernel[t + radius] * out.values[base + (q - pos) * stride];
      }
      tmp[base] = acc;
    }
    out.values.swap(tmp);
    stride *= len;
  }
  return out;
}

Grid smooth_threshold(const Grid& grid, double sigma, double level) {
  Grid blurred = gaussian_blur(grid, sigma);
  for (auto& v : blurred.values) v = v >= level ? 1.0 : 0.0;
  return blurred;
}

}  // namespace mmot
