#include "mmot/lp.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <limits>

namespace mmot {

double dual_violation(const DualPotentials& potentials, const Configuration& r,
                      double cost) {
  return potentials.sum_at(r) - cost;
}

namespace {

// basis slot encoding: >= 0 is a column id, < 0 is the artificial of row -(s+1)
constexpr std::int32_t artificial_slot(int row) { return -(row + 1); }
constexpr int artificial_row(std::int32_t slot) { return -(slot + 1); }

}  // namespace

struct ReducedLp::Impl {
  ProblemShape shape;
  SolverTolerances tol;
  std::vector<std::vector<double>> masses;  // per-marginal rhs
  int m = 0;                                // rows after redundancy drop
  std::vector<int> row_offset;              // per marginal
  Eigen::VectorXd b;         // true rhs
  Eigen::VectorXd b_solver;  // internally perturbed rhs (anti-degeneracy)

  struct Column {
    Configuration config;
    double cost = 0.0;
    std::vector<std::int32_t> rows;
    bool alive = false;
  };
  std::vector<Column> cols;
  std::vector<std::int32_t> free_slots;
  std::unordered_map<Configuration, std::int32_t, ConfigurationHash> index;
  std::vector<std::int32_t> active;  // live column ids, ascending

  bool has_basis = false;
  std::vector<std::int32_t> basic;   // size m
  Eigen::VectorXd x;                 // values of the basic variables
  std::vector<std::int32_t> basis_pos;  // per column id, -1 when nonbasic
  std::vector<std::int32_t> art_pos;    // per row, -1 when the artificial is out

  // Small bases factorize sparsely; larger multi-marginal bases fill in so
  // heavily that a dense factorization is both faster to build and to solve.
  static constexpr int kDenseThreshold = 600;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  Eigen::PartialPivLU<Eigen::MatrixXd> dense_lu;
  bool use_dense = false;
  bool factorized = false;
  struct Eta {
    std::int32_t pos;
    double pivot;
    std::vector<std::pair<std::int32_t, double>> others;
  };
  std::vector<Eta> etas;
  int pivots_since_refactor = 0;

  std::deque<std::int32_t> seed;  // phase-1 entering queue

  int phase = 2;
  int degenerate_run = 0;
  bool bland = false;

  // row of (marginal k, support index i); -1 for dropped rows
  int row_of(int k, std::int32_t i) const {
    if (k > 0 && i == shape.sizes[k] - 1) return -1;
    return row_offset[k] + i;
  }

  double cost_of(std::int32_t slot) const {
    if (slot < 0) return phase == 1 ? 1.0 : 0.0;
    return phase == 1 ? 0.0 : cols[slot].cost;
  }

  void mark_basic(std::int32_t slot, int pos) {
    basic[pos] = slot;
    if (slot < 0)
      art_pos[artificial_row(slot)] = pos;
    else
      basis_pos[slot] = pos;
  }

  void mark_nonbasic(std::int32_t slot) {
    if (slot < 0)
      art_pos[artificial_row(slot)] = -1;
    else
      basis_pos[slot] = -1;
  }

  void cold_start() {
    basic.resize(m);
    x = b_solver;
    std::fill(basis_pos.begin(), basis_pos.end(), -1);
    art_pos.assign(m, -1);
    for (int i = 0; i < m; ++i) mark_basic(artificial_slot(i), i);
    has_basis = true;
    factorized = false;
    etas.clear();
  }

  // Rebuilds the factorization of the current basis and refreshes the basic
  // values. Returns false when the basis is singular or drifted infeasible.
  bool refactorize() {
    use_dense = m >= kDenseThreshold;
    if (use_dense) {
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
      for (int pos = 0; pos < m; ++pos) {
        const auto slot = basic[pos];
        if (slot < 0) {
          B(artificial_row(slot), pos) = 1.0;
        } else {
          for (auto r : cols[slot].rows) B(r, pos) = 1.0;
        }
      }
      dense_lu.compute(B);
      double dmin = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i)
        dmin = std::min(dmin, std::abs(dense_lu.matrixLU()(i, i)));
      if (!(dmin > tol.zero_pivot)) return false;
    } else {
      Eigen::SparseMatrix<double> B(m, m);
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(static_cast<std::size_t>(m) * shape.sizes.size());
      for (int pos = 0; pos < m; ++pos) {
        const auto slot = basic[pos];
        if (slot < 0) {
          trips.emplace_back(artificial_row(slot), pos, 1.0);
        } else {
          for (auto r : cols[slot].rows) trips.emplace_back(r, pos, 1.0);
        }
      }
      B.setFromTriplets(trips.begin(), trips.end());
      lu.compute(B);
      if (lu.info() != Eigen::Success) return false;
    }
    etas.clear();
    pivots_since_refactor = 0;
    factorized = true;
    x = b_solver;
    base_solve(x);
    double worst = 0.0;
    for (int i = 0; i < m; ++i) worst = std::min(worst, x[i]);
    return worst >= -tol.feasibility;
  }

  void base_solve(Eigen::VectorXd& w) {
    if (use_dense)
      w = dense_lu.solve(w);
    else
      w = lu.solve(w);
  }

  // B^T y = c given the factorization of B. Eigen's dense transpose-solve
  // adaptor is slow, so spell out the triangular passes: B = P^{-1} L U,
  // hence B^T y = c solves as U^T z = c, L^T w = z, y = P^{-1} w.
  void base_solve_transposed(Eigen::VectorXd& y) {
    if (use_dense) {
      dense_lu.matrixLU()
          .triangularView<Eigen::Upper>()
          .transpose()
          .solveInPlace(y);
      dense_lu.matrixLU()
          .triangularView<Eigen::UnitLower>()
          .transpose()
          .solveInPlace(y);
      y = dense_lu.permutationP().inverse() * y;
    } else {
      y = lu.transpose().solve(y);
    }
  }

  // w <- B^{-1} w (base factorization, then the eta file in order)
  void ftran(Eigen::VectorXd& w) {
    base_solve(w);
    for (const auto& e : etas) {
      double wp = w[e.pos];
      if (wp != 0.0) {
        wp /= e.pivot;
        for (const auto& [i, v] : e.others) w[i] -= v * wp;
      }
      w[e.pos] = wp;
    }
  }

  // y <- B^{-T} y (eta file reversed, then the base transpose solve)
  void btran(Eigen::VectorXd& y) {
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      double acc = y[it->pos];
      for (const auto& [i, v] : it->others) acc -= v * y[i];
      y[it->pos] = acc / it->pivot;
    }
    base_solve_transposed(y);
  }

  Eigen::VectorXd dual_vector() {
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) y[i] = cost_of(basic[i]);
    btran(y);
    return y;
  }

  double reduced_cost(std::int32_t col, const Eigen::VectorXd& y) const {
    double d = cost_of(col);
    for (auto r : cols[col].rows) d -= y[r];
    return d;
  }

  // Entering column id, or -1 at (phase) optimality. Phase 1 consumes the
  // seed queue first; otherwise Dantzig, or Bland once degeneracy stalls.
  std::int32_t price(const Eigen::VectorXd& y) {
    if (phase == 1) {
      while (!seed.empty()) {
        const auto id = seed.front();
        seed.pop_front();
        if (id < 0 || id >= static_cast<std::int32_t>(cols.size())) continue;
        if (!cols[id].alive || basis_pos[id] >= 0) continue;
        if (reduced_cost(id, y) < -tol.optimality) return id;
      }
    }
    std::int32_t best = -1;
    double best_d = -tol.optimality;
    for (auto id : active) {
      if (basis_pos[id] >= 0) continue;
      const double d = reduced_cost(id, y);
      if (bland) {
        if (d < -tol.optimality) return id;  // ids scanned in ascending order
      } else if (d < best_d) {
        best_d = d;
        best = id;
      }
    }
    return best;
  }

  struct Ratio {
    int pos = -1;
    double theta = 0.0;
  };

  // In phase 2, basic artificials are pinned at zero: any usable pivot in
  // their row blocks at theta = 0 and drives them out first.
  std::optional<Ratio> ratio_test(const Eigen::VectorXd& alpha) const {
    if (phase == 2) {
      int best = -1;
      double best_mag = tol.zero_pivot;
      for (int i = 0; i < m; ++i) {
        if (basic[i] >= 0) continue;
        const double mag = std::abs(alpha[i]);
        if (mag > best_mag) {
          best_mag = mag;
          best = i;
        }
      }
      if (best >= 0) return Ratio{best, 0.0};
    }
    int leave = -1;
    double theta = std::numeric_limits<double>::infinity();
    double leave_mag = 0.0;
    for (int i = 0; i < m; ++i) {
      const double a = alpha[i];
      if (a <= tol.zero_pivot) continue;
      const double ratio = std::max(x[i], 0.0) / a;
      bool take = false;
      if (leave < 0 || ratio < theta - 1e-13)
        take = true;
      else if (ratio <= theta + 1e-13)
        take = bland ? basic[i] < basic[leave] : a > leave_mag;
      if (take) {
        leave = i;
        theta = std::min(theta, ratio);
        leave_mag = a;
      }
    }
    if (leave < 0) return std::nullopt;
    return Ratio{leave, theta};
  }

  void apply_pivot(std::int32_t enter, const Eigen::VectorXd& alpha,
                   const Ratio& r) {
    const double theta = r.theta;
    if (theta != 0.0) x -= theta * alpha;
    const auto leaving = basic[r.pos];
    mark_nonbasic(leaving);
    mark_basic(enter, r.pos);
    x[r.pos] = theta;

    Eta e;
    e.pos = r.pos;
    e.pivot = alpha[r.pos];
    for (int i = 0; i < m; ++i) {
      if (i == r.pos) continue;
      if (std::abs(alpha[i]) > 1e-13) e.others.emplace_back(i, alpha[i]);
    }
    etas.push_back(std::move(e));
    ++pivots_since_refactor;

    if (theta > 1e-12) {
      degenerate_run = 0;
      bland = false;
    } else if (++degenerate_run >= tol.bland_trigger) {
      bland = true;
    }
  }

  double artificial_infeasibility() const {
    double s = 0.0;
    for (int i = 0; i < m; ++i)
      if (basic[i] < 0) s += std::max(x[i], 0.0);
    return s;
  }

  bool any_artificial_above(double eps) const {
    for (int i = 0; i < m; ++i)
      if (basic[i] < 0 && x[i] > eps) return true;
    return false;
  }
};

ReducedLp::ReducedLp(std::span<const Marginal> marginals, SolverTolerances tol)
    : impl_(std::make_unique<Impl>()) {
  auto& d = *impl_;
  d.tol = tol;
  d.shape = problem_shape(marginals);
  if (marginals.empty()) throw std::invalid_argument("ReducedLp: no marginals");
  d.masses.reserve(marginals.size());
  d.row_offset.resize(marginals.size());
  int rows = 0;
  for (std::size_t k = 0; k < marginals.size(); ++k) {
    const auto& mk = marginals[k];
    double sum = 0.0;
    for (double v : mk.masses) {
      if (!(v > 0.0))
        throw std::invalid_argument("ReducedLp: marginal masses must be positive");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("ReducedLp: marginal masses must sum to 1");
    d.masses.push_back(mk.masses);
    d.row_offset[k] = rows;
    rows += static_cast<int>(mk.size()) - (k > 0 ? 1 : 0);
  }
  d.m = rows;
  d.b.resize(rows);
  for (std::size_t k = 0; k < marginals.size(); ++k) {
    const int keep = static_cast<int>(marginals[k].size()) - (k > 0 ? 1 : 0);
    for (int i = 0; i < keep; ++i) d.b[d.row_offset[k] + i] = d.masses[k][i];
  }
  // Transportation polytopes are massively degenerate; a fixed tiny
  // perturbation of the rhs (equal total per marginal, so feasibility is
  // preserved) makes ratio-test ties generic and cuts the pivot count by
  // orders of magnitude. The solver pivots on the perturbed rhs; optimal
  // bases are certified by dual feasibility, which does not involve the
  // rhs, and the reported plan is refreshed from the true rhs.
  d.b_solver = d.b;
  {
    std::mt19937_64 prng(0x5eed5eed5eed5eedull);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    constexpr double kTotalShift = 1e-9;
    for (std::size_t k = 0; k < marginals.size(); ++k) {
      const auto l = marginals[k].size();
      std::vector<double> xi(l);
      double sum = 0.0;
      for (auto& v : xi) {
        v = u(prng);
        sum += v;
      }
      const int keep = static_cast<int>(l) - (k > 0 ? 1 : 0);
      for (int i = 0; i < keep; ++i)
        d.b_solver[d.row_offset[k] + i] += xi[i] / sum * kTotalShift;
    }
  }
  d.art_pos.assign(d.m, -1);
}

ReducedLp::ReducedLp(ReducedLp&&) noexcept = default;
ReducedLp& ReducedLp::operator=(ReducedLp&&) noexcept = default;
ReducedLp::~ReducedLp() = default;

const ProblemShape& ReducedLp::shape() const { return impl_->shape; }
std::size_t ReducedLp::num_rows() const { return impl_->m; }
std::size_t ReducedLp::num_columns() const { return impl_->active.size(); }

std::int32_t ReducedLp::add_column(const Configuration& r, double cost) {
  auto& d = *impl_;
  if (!d.shape.contains(r))
    throw std::invalid_argument("add_column: configuration out of shape");
  if (d.index.count(r)) throw std::invalid_argument("add_column: duplicate column");
  std::int32_t id;
  if (!d.free_slots.empty()) {
    id = d.free_slots.back();
    d.free_slots.pop_back();
  } else {
    id = static_cast<std::int32_t>(d.cols.size());
    d.cols.emplace_back();
    d.basis_pos.push_back(-1);
  }
  auto& col = d.cols[id];
  col.config = r;
  col.cost = cost;
  col.alive = true;
  col.rows.clear();
  for (std::size_t k = 0; k < d.shape.sizes.size(); ++k) {
    const int row = d.row_of(static_cast<int>(k), r.indices[k]);
    if (row >= 0) col.rows.push_back(row);
  }
  d.basis_pos[id] = -1;
  d.index.emplace(r, id);
  d.active.insert(std::lower_bound(d.active.begin(), d.active.end(), id), id);
  return id;
}

bool ReducedLp::has_column(const Configuration& r) const {
  return impl_->index.count(r) != 0;
}

bool ReducedLp::is_basic(const Configuration& r) const {
  const auto& d = *impl_;
  auto it = d.index.find(r);
  return it != d.index.end() && d.basis_pos[it->second] >= 0;
}

void ReducedLp::remove_columns(std::span<const Configuration> rs) {
  auto& d = *impl_;
  std::vector<std::int32_t> ids;
  ids.reserve(rs.size());
  for (const auto& r : rs) {
    auto it = d.index.find(r);
    if (it == d.index.end())
      throw std::invalid_argument("remove_columns: unknown column");
    if (d.basis_pos[it->second] >= 0)
      throw std::invalid_argument("remove_columns: column is basic");
    ids.push_back(it->second);
  }
  for (auto id : ids) {
    d.index.erase(d.cols[id].config);
    d.cols[id].alive = false;
    d.cols[id].config = Configuration{};
    d.active.erase(std::lower_bound(d.active.begin(), d.active.end(), id));
    d.free_slots.push_back(id);
  }
}

void ReducedLp::seed_phase1(std::span<const Configuration> rs) {
  auto& d = *impl_;
  d.seed.clear();
  for (const auto& r : rs) {
    auto it = d.index.find(r);
    if (it != d.index.end()) d.seed.push_back(it->second);
  }
}

ReducedLp::Snapshot ReducedLp::snapshot() const {
  const auto& d = *impl_;
  Snapshot s;
  s.columns.reserve(d.active.size());
  s.costs.reserve(d.active.size());
  for (auto id : d.active) {
    s.columns.push_back(d.cols[id].config);
    s.costs.push_back(d.cols[id].cost);
  }
  s.rhs = d.masses;
  return s;
}

LpSolution ReducedLp::solve(const std::optional<BasisDescriptor>& warm) {
  auto& d = *impl_;

  if (warm && !(d.has_basis && warm->slots == d.basic)) {
    // install the descriptor if it is structurally valid; otherwise fall back
    bool ok = warm->slots.size() == static_cast<std::size_t>(d.m);
    if (ok) {
      std::vector<bool> seen_row(d.m, false);
      std::vector<bool> seen_col;
      seen_col.resize(d.cols.size(), false);
      for (auto slot : warm->slots) {
        if (slot < 0) {
          const int row = artificial_row(slot);
          if (row >= d.m || seen_row[row]) {
            ok = false;
            break;
          }
          seen_row[row] = true;
        } else {
          if (slot >= static_cast<std::int32_t>(d.cols.size()) ||
              !d.cols[slot].alive || seen_col[slot]) {
            ok = false;
            break;
          }
          seen_col[slot] = true;
        }
      }
      if (ok) {
        d.basic = warm->slots;
        std::fill(d.basis_pos.begin(), d.basis_pos.end(), -1);
        d.art_pos.assign(d.m, -1);
        for (int i = 0; i < d.m; ++i) d.mark_basic(d.basic[i], i);
        d.has_basis = true;
        if (!d.refactorize()) ok = false;
      }
    }
    if (!ok) {
      d.cold_start();
    }
  }
  if (!d.has_basis) d.cold_start();
  if (!d.factorized && !d.refactorize()) {
    d.cold_start();
    if (!d.refactorize())
      throw std::runtime_error("ReducedLp: identity basis failed to factorize");
  }

  d.phase = d.any_artificial_above(d.tol.feasibility) ? 1 : 2;
  d.degenerate_run = 0;
  d.bland = false;

  LpSolution sol;
  sol.plan = SparsePlan(d.shape);
  std::int64_t pivots = 0;
  Eigen::VectorXd alpha(d.m);
  Eigen::VectorXd final_y;
  bool final_y_valid = false;

  while (true) {
    if (pivots >= d.tol.max_pivots) {
      sol.status = SolveStatus::IterationLimit;
      break;
    }
    if (d.pivots_since_refactor >= d.tol.refactor_interval) {
      if (!d.refactorize()) {
        d.cold_start();
        d.refactorize();
        d.phase = 1;
        continue;
      }
      if (d.phase == 2 && d.any_artificial_above(d.tol.feasibility)) d.phase = 1;
    }

    const Eigen::VectorXd y = d.dual_vector();
    const std::int32_t enter = d.price(y);
    if (enter < 0) {
      if (d.phase == 1) {
        if (d.artificial_infeasibility() > d.tol.feasibility) {
          sol.status = SolveStatus::Infeasible;
          break;
        }
        d.phase = 2;
        d.seed.clear();
        d.degenerate_run = 0;
        d.bland = false;
        continue;
      }
      sol.status = SolveStatus::Optimal;
      final_y = y;  // phase-2 pricing duals at the optimal basis
      final_y_valid = true;
      break;
    }

    alpha.setZero();
    for (auto r : d.cols[enter].rows) alpha[r] = 1.0;
    d.ftran(alpha);

    const auto ratio = d.ratio_test(alpha);
    if (!ratio)
      throw std::runtime_error("ReducedLp: unbounded direction (numerical failure)");
    d.apply_pivot(enter, alpha, *ratio);
    ++pivots;

    // periodic drift control between scheduled refactorizations
    if (d.pivots_since_refactor % 32 == 0) {
      Eigen::VectorXd res = -d.b_solver;
      for (int i = 0; i < d.m; ++i) {
        const auto slot = d.basic[i];
        if (slot < 0)
          res[artificial_row(slot)] += d.x[i];
        else
          for (auto r : d.cols[slot].rows) res[r] += d.x[i];
      }
      if (res.cwiseAbs().maxCoeff() > d.tol.refactor_drift) {
        if (!d.refactorize()) {
          d.cold_start();
          d.refactorize();
          d.phase = 1;
        } else if (d.phase == 2 && d.any_artificial_above(d.tol.feasibility)) {
          d.phase = 1;
        }
      }
    }
  }

  // extract solution from the current basis, on the true (unperturbed) rhs
  sol.pivots = pivots;
  sol.basis.slots = d.basic;
  if (sol.status != SolveStatus::Infeasible) {
    Eigen::VectorXd x_true = d.b;
    d.ftran(x_true);
    double obj = 0.0;
    for (int i = 0; i < d.m; ++i) {
      const auto slot = d.basic[i];
      if (slot < 0) continue;
      // degenerate basic values below the dust level are numerically zero
      if (x_true[i] > 1e-13) sol.plan.set(d.cols[slot].config, x_true[i]);
      obj += d.cols[slot].cost * std::max(x_true[i], 0.0);
    }
    sol.objective = obj;
  }
  {
    Eigen::VectorXd y;
    if (final_y_valid) {
      y = std::move(final_y);
    } else {
      const int saved_phase = d.phase;
      d.phase = 2;  // potentials always come from the true costs
      y = d.dual_vector();
      d.phase = saved_phase;
    }
    sol.potentials.u.resize(d.shape.sizes.size());
    for (std::size_t k = 0; k < d.shape.sizes.size(); ++k) {
      auto& uk = sol.potentials.u[k];
      uk.assign(d.shape.sizes[k], 0.0);
      const int keep = d.shape.sizes[k] - (k > 0 ? 1 : 0);
      for (int i = 0; i < keep; ++i) uk[i] = y[d.row_offset[k] + i];
    }
  }
  return sol;
}

}  // namespace mmot
