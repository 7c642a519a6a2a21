#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mmot/measures.hpp"

namespace mmot {

struct SinkhornParams {
  double epsilon = 0.05;
  std::int64_t max_iterations = 100000;
  double tolerance = 1e-8;  // L1 marginal error
  bool log_domain = true;
};

// Entropic two-marginal transport. Log-domain scaling by default; f and g are
// the stabilized potentials, plan entries come from plan(i, j).
class SinkhornResult {
 public:
  std::vector<double> f, g;        // per support point of mu1 / mu2
  double cost = 0.0;               // <C, plan>
  std::int64_t iterations = 0;
  double marginal_error = 0.0;     // final L1 error on the mu2 side
  std::vector<double> error_history;  // one entry per iteration

  double plan(std::size_t i, std::size_t j) const;

 private:
  friend SinkhornResult sinkhorn_2m(const Marginal&, const Marginal&,
                                    const std::function<double(std::size_t, std::size_t)>&,
                                    const SinkhornParams&);
  double epsilon_ = 0.0;
  std::vector<double> log_mu_, log_nu_;
  std::vector<double> cost_matrix_;  // row-major l1 x l2
  std::size_t l2_ = 0;
};

SinkhornResult sinkhorn_2m(
    const Marginal& mu1, const Marginal& mu2,
    const std::function<double(std::size_t, std::size_t)>& cost,
    const SinkhornParams& params);

// Fixed-support entropic barycenter via iterative Bregman projections.
// All marginals must live on one shared support; returns the barycenter
// masses on that support (normalized).
std::vector<double> ibp_barycenter(std::span<const Marginal> marginals,
                                   std::span<const double> weights,
                                   const SinkhornParams& params);

}  // namespace mmot
