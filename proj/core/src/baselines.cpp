#include "mmot/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mmot {

namespace {

double log_sum_exp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

double SinkhornResult::plan(std::size_t i, std::size_t j) const {
  return std::exp((f[i] + g[j] - cost_matrix_[i * l2_ + j]) / epsilon_ +
                  log_mu_[i] + log_nu_[j]);
}

SinkhornResult sinkhorn_2m(
    const Marginal& mu1, const Marginal& mu2,
    const std::function<double(std::size_t, std::size_t)>& cost,
    const SinkhornParams& params) {
  if (!(params.epsilon > 0.0))
    throw std::invalid_argument("sinkhorn_2m: epsilon must be positive");
  const std::size_t l1 = mu1.size(), l2 = mu2.size();
  const double eps = params.epsilon;

  SinkhornResult res;
  res.epsilon_ = eps;
  res.l2_ = l2;
  res.cost_matrix_.resize(l1 * l2);
  for (std::size_t i = 0; i < l1; ++i)
    for (std::size_t j = 0; j < l2; ++j) res.cost_matrix_[i * l2 + j] = cost(i, j);
  res.log_mu_.resize(l1);
  res.log_nu_.resize(l2);
  for (std::size_t i = 0; i < l1; ++i) res.log_mu_[i] = std::log(mu1.masses[i]);
  for (std::size_t j = 0; j < l2; ++j) res.log_nu_[j] = std::log(mu2.masses[j]);

  if (!params.log_domain) {
    // plain scaling; detect underflow and point at the stabilized mode
    std::vector<double> a(l1, 1.0), b(l2, 1.0), K(l1 * l2);
    for (std::size_t ij = 0; ij < K.size(); ++ij)
      K[ij] = std::exp(-res.cost_matrix_[ij] / eps);
    for (res.iterations = 0; res.iterations < params.max_iterations;
         ++res.iterations) {
      for (std::size_t i = 0; i < l1; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < l2; ++j) s += K[i * l2 + j] * b[j];
        if (!(s > 0.0) || !std::isfinite(s))
          throw std::runtime_error(
              "sinkhorn_2m: underflow at this epsilon; use log-domain mode");
        a[i] = mu1.masses[i] / s;
      }
      double err = 0.0;
      for (std::size_t j = 0; j < l2; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < l1; ++i) s += K[i * l2 + j] * a[i];
        if (!(s > 0.0) || !std::isfinite(s))
          throw std::runtime_error(
              "sinkhorn_2m: underflow at this epsilon; use log-domain mode");
        err += std::abs(s * b[j] - mu2.masses[j]);
        b[j] = mu2.masses[j] / s;
      }
      res.marginal_error = err;
      res.error_history.push_back(err);
      if (err <= params.tolerance) {
        ++res.iterations;
        break;
      }
    }
    for (std::size_t i = 0; i < l1; ++i)
      res.f.push_back(eps * (std::log(a[i]) - res.log_mu_[i]));
    for (std::size_t j = 0; j < l2; ++j)
      res.g.push_back(eps * (std::log(b[j]) - res.log_nu_[j]));
  } else {
    res.f.assign(l1, 0.0);
    res.g.assign(l2, 0.0);
    std::vector<double> work(std::max(l1, l2));
    for (res.iterations = 0; res.iterations < params.max_iterations;
         ++res.iterations) {
      // f-update makes the mu1 rows exact
      for (std::size_t i = 0; i < l1; ++i) {
        for (std::size_t j = 0; j < l2; ++j)
          work[j] = (res.g[j] - res.cost_matrix_[i * l2 + j]) / eps + res.log_nu_[j];
        res.f[i] = -eps * log_sum_exp({work.data(), l2});
      }
      // column error before the g-update; this is the standard alternation's
      // residual and decreases monotonically
      double err = 0.0;
      for (std::size_t j = 0; j < l2; ++j) {
        for (std::size_t i = 0; i < l1; ++i)
          work[i] = (res.f[i] - res.cost_matrix_[i * l2 + j]) / eps + res.log_mu_[i];
        const double lse = log_sum_exp({work.data(), l1});
        err += std::abs(std::exp(lse + res.g[j] / eps + res.log_nu_[j]) -
                        mu2.masses[j]);
        res.g[j] = -eps * lse;
      }
      res.marginal_error = err;
      res.error_history.push_back(err);
      if (err <= params.tolerance) {
        ++res.iterations;
        break;
      }
    }
  }

  double c = 0.0;
  for (std::size_t i = 0; i < l1; ++i)
    for (std::size_t j = 0; j < l2; ++j)
      c += res.plan(i, j) * res.cost_matrix_[i * l2 + j];
  res.cost = c;
  return res;
}

std::vector<double> ibp_barycenter(std::span<const Marginal> marginals,
                                   std::span<const double> weights,
                                   const SinkhornParams& params) {
  if (marginals.empty()) throw std::invalid_argument("ibp_barycenter: no marginals");
  if (weights.size() != marginals.size())
    throw std::invalid_argument("ibp_barycenter: weight count mismatch");
  const auto& grid = marginals[0];
  const std::size_t n = grid.size();
  for (const auto& m : marginals) {
    if (m.size() != n || m.dim != grid.dim || m.points != grid.points)
      throw std::invalid_argument("ibp_barycenter: marginals must share one support");
  }
  const double eps = params.epsilon;
  if (!(eps > 0.0)) throw std::invalid_argument("ibp_barycenter: epsilon must be positive");

  // -C/eps for the shared grid, row-major
  std::vector<double> mk(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double d2 = 0.0;
      const auto pi = grid.point(i), pj = grid.point(j);
      for (int d = 0; d < grid.dim; ++d) {
        const double e = pi[d] - pj[d];
        d2 += e * e;
      }
      mk[i * n + j] = -d2 / eps;
    }

  const std::size_t nmar = marginals.size();
  std::vector<std::vector<double>> lu(nmar, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> lv(nmar, std::vector<double>(n, 0.0));
  std::vector<double> log_p(n, -std::log(static_cast<double>(n)));
  std::vector<double> work(n), lkv(n);
  std::vector<double> prev_p(n, 1.0 / static_cast<double>(n));

  for (std::int64_t it = 0; it < params.max_iterations; ++it) {
    std::fill(log_p.begin(), log_p.end(), 0.0);
    for (std::size_t k = 0; k < nmar; ++k) {
      // project onto the k-th marginal constraint: v_k = mu_k / (K^T u_k)
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) work[i] = lu[k][i] + mk[i * n + j];
        lv[k][j] = std::log(marginals[k].masses[j]) - log_sum_exp({work.data(), n});
      }
      // accumulate the geometric mean of the K v_k
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) work[j] = lv[k][j] + mk[i * n + j];
        lkv[i] = log_sum_exp({work.data(), n});
        log_p[i] += weights[k] * lkv[i];
      }
      // stash K v_k for the u-update below
      lu[k] = lkv;
    }
    for (std::size_t k = 0; k < nmar; ++k)
      for (std::size_t i = 0; i < n; ++i) lu[k][i] = log_p[i] - lu[k][i];

    double err = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::exp(log_p[i]);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::exp(log_p[i]) / sum;
      err += std::abs(p - prev_p[i]);
      prev_p[i] = p;
    }
    if (err <= params.tolerance) break;
  }
  return prev_p;
}

}  // namespace mmot
