#include "mmot/demo.hpp"

#include <cmath>
#include <random>

namespace mmot {

namespace {

Marginal sampled_1d(std::size_t n, const std::vector<double>& density) {
  Marginal m;
  m.dim = 1;
  m.points.resize(n);
  m.masses = density;
  double sum = 0.0;
  for (double v : density) sum += v;
  for (std::size_t i = 0; i < n; ++i) {
    m.points[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    m.masses[i] /= sum;
  }
  return m;
}

double gauss(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return std::exp(-0.5 * z * z);
}

}  // namespace

Marginal demo1d_marginal(std::size_t n) {
  std::vector<double> density(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n - 1);
    density[i] = 0.7 * gauss(x, 0.3, 0.1) + 0.3 * gauss(x, 0.7, 0.05) + 1e-4;
  }
  auto m = sampled_1d(n, density);
  m.label = "demo1d";
  return m;
}

Marginal index_reflection(const Marginal& m) {
  Marginal out = m;
  out.label = m.label + "_reflected";
  const std::size_t l = m.size();
  for (std::size_t i = 0; i < l; ++i) out.masses[i] = m.masses[l - 1 - i];
  return out;
}

Marginal gaussian_1d(std::size_t n, double mean, double sigma) {
  std::vector<double> density(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n - 1);
    density[i] = gauss(x, mean, sigma) + 1e-6;
  }
  auto m = sampled_1d(n, density);
  m.label = "gauss1d";
  return m;
}

Marginal gaussian_2d(std::size_t n, double mean_x, double mean_y, double sigma) {
  Marginal m;
  m.dim = 2;
  m.label = "gauss2d";
  double sum = 0.0;
  std::vector<double> w;
  w.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double x = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
      const double y = (static_cast<double>(n - i) - 0.5) / static_cast<double>(n);
      const double v = gauss(x, mean_x, sigma) * gauss(y, mean_y, sigma) + 1e-9;
      m.points.push_back(x);
      m.points.push_back(y);
      w.push_back(v);
      sum += v;
    }
  m.masses.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) m.masses[i] = w[i] / sum;
  return m;
}

std::vector<std::uint8_t> synthetic_digit_image(int digit, std::uint64_t seed) {
  constexpr int n = 28;
  std::vector<double> canvas(n * n, 0.0);
  std::mt19937_64 rng(seed * 1000003ull + static_cast<std::uint64_t>(digit));
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);

  // one closed/open parametric stroke per digit id, lightly jittered
  const double cx = 0.5 + jitter(rng), cy = 0.5 + jitter(rng);
  const double rx = 0.28 + jitter(rng) * 0.4, ry = 0.34 + jitter(rng) * 0.4;
  const double phase = digit * 0.61 + jitter(rng);
  auto put = [&](double x, double y) {
    const int cj = static_cast<int>(std::lround(x * (n - 1)));
    const int ci = static_cast<int>(std::lround((1.0 - y) * (n - 1)));
    // thin plus-shaped stamp, roughly the stroke width of scanned digits
    static constexpr int di[] = {0, -1, 1, 0, 0};
    static constexpr int dj[] = {0, 0, 0, -1, 1};
    for (int s = 0; s < 5; ++s) {
      const int i = ci + di[s], j = cj + dj[s];
      if (i < 0 || j < 0 || i >= n || j >= n) continue;
      canvas[i * n + j] += s == 0 ? 1.0 : 0.3;
    }
  };
  const int steps = 110;
  for (int s = 0; s < steps; ++s) {
    const double t = 2.0 * M_PI * s / steps;
    // digit id warps the ellipse into distinct shapes
    const double wob = 1.0 + 0.25 * std::sin((digit % 5 + 1) * t + phase);
    double x = cx + rx * wob * std::cos(t);
    double y = cy + ry * wob * std::sin(t + 0.3 * (digit % 3));
    if (digit >= 5) y = cy + (y - cy) * 0.6 + 0.12 * std::sin(3 * t);
    put(std::clamp(x, 0.0, 1.0), std::clamp(y, 0.0, 1.0));
  }
  double peak = 0.0;
  for (double v : canvas) peak = std::max(peak, v);
  std::vector<std::uint8_t> img(n * n, 0);
  for (int p = 0; p < n * n; ++p)
    img[p] = static_cast<std::uint8_t>(std::lround(255.0 * canvas[p] / peak));
  return img;
}

}  // namespace mmot
