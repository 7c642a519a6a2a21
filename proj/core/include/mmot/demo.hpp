#pragma once

#include <cstdint>
#include <vector>

#include "mmot/measures.hpp"

namespace mmot {

// Generators for the bundled experiments.

// The 1-D demo marginal: a two-Gaussian mixture with a small positive floor
// on `gridpoints` uniform points of [0,1]. Its index reflection is the second
// marginal of the demo instance.
Marginal demo1d_marginal(std::size_t gridpoints = 100);
Marginal index_reflection(const Marginal& m);

// A 1-D Gaussian sampled on `gridpoints` uniform points of [0,1] (small
// positive floor, normalized).
Marginal gaussian_1d(std::size_t gridpoints, double mean, double sigma);

// A 2-D Gaussian on an n x n unit-square grid.
Marginal gaussian_2d(std::size_t n, double mean_x, double mean_y, double sigma);

// Deterministic digit-like 28x28 test images: a thick parametric stroke per
// digit id, quantized to uint8. Stand-ins for handwritten-digit data when no
// dataset file is available.
std::vector<std::uint8_t> synthetic_digit_image(int digit, std::uint64_t seed);

}  // namespace mmot
