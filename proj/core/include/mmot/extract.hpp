#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmot/costs.hpp"
#include "mmot/measures.hpp"

namespace mmot {

// A weighted point cloud off any grid: the natural output of pushing a
// sparse plan forward.
struct WeightedPointCloud {
  int dim = 1;
  std::vector<double> points;  // row-major
  std::vector<double> masses;

  std::size_t size() const { return masses.size(); }
  std::span<const double> point(std::size_t i) const {
    return {points.data() + static_cast<std::size_t>(dim) * i,
            static_cast<std::size_t>(dim)};
  }
};

struct MeasurePath {
  std::vector<double> times;
  std::vector<WeightedPointCloud> clouds;
};

// One point B_lambda(coords(r)) with mass gamma(r) per support configuration,
// coincident points merged (componentwise within merge_tol).
WeightedPointCloud barycenter_pushforward(const SparsePlan& plan,
                                          std::span<const Marginal> marginals,
                                          std::span<const double> weights,
                                          double merge_tol = 1e-12);

// Natural cubic spline through each support configuration's points at the
// knot times, evaluated at the query times. Query times must lie in [0,1];
// a query equal to a knot time returns that knot's coordinates exactly.
MeasurePath spline_path(const SparsePlan& plan,
                        std::span<const Marginal> marginals,
                        std::span<const double> knot_times,
                        std::span<const double> query_times,
                        double merge_tol = 1e-12);

// Piecewise-cubic evaluation from the moments; out holds dim values.
void spline_eval(const SplineMoments& moments, std::span<const double> knots,
                 std::span<const double> times, double t, std::span<double> out);

struct GridSpec {
  int dim = 1;
  std::vector<double> origin;   // center of cell (0,...,0)
  std::vector<double> spacing;  // per axis
  std::vector<std::int64_t> shape;

  std::int64_t cells() const {
    std::int64_t n = 1;
    for (auto s : shape) n *= s;
    return n;
  }
};

struct Grid {
  GridSpec spec;
  std::vector<double> values;  // row-major over spec.shape
};

// Each point's mass goes to its nearest cell center (ties to the lower
// index); points whose nearest cell is outside the grid are an error.
// Total mass is preserved exactly.
Grid rasterize(const WeightedPointCloud& cloud, const GridSpec& spec);

// Separable Gaussian blur, kernel truncated at 4 sigma, zero padding.
// sigma is in cell units; sigma = 0 returns the input unchanged.
Grid gaussian_blur(const Grid& grid, double sigma);

// Blur then threshold: cells with blurred value >= level become 1, else 0.
Grid smooth_threshold(const Grid& grid, double sigma, double level);

}  // namespace mmot
