// Command-line frontend: end-to-end solves, Wasserstein barycenters and
// splines, the north-west corner initializer, entropic baselines, and
// optimality certification.
//
// Exit codes: 0 success, 2 input/format error, 3 infeasible problem,
// 4 iteration limit or failed certification.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "mmot/baselines.hpp"
#include "mmot/demo.hpp"
#include "mmot/extract.hpp"
#include "mmot/gencol.hpp"
#include "mmot/init.hpp"
#include "mmot/io.hpp"
#include "mmot/lp.hpp"

namespace fs = std::filesystem;
using namespace mmot;

namespace {

struct CommonFlags {
  double beta = 3.0;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  std::int64_t max_stall = 0;
  std::string out_dir;
  bool progress = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--beta", beta, "Working-set size factor (> 1)")
        ->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--tol", tol, "Feasibility/optimality tolerance")
        ->capture_default_str();
    cmd->add_option("--max-stall", max_stall,
                    "Consecutive rejected proposals before stopping "
                    "(0 = 10 x total support)");
    cmd->add_option("--out-dir", out_dir,
                    "Output directory (default: $MMOT_OUT_DIR or .)");
    cmd->add_flag("--progress", progress, "Write per-solve progress.csv");
  }

  fs::path resolve_out_dir() const {
    fs::path dir = out_dir;
    if (dir.empty()) {
      if (const char* env = std::getenv("MMOT_OUT_DIR")) dir = env;
      if (dir.empty()) dir = ".";
    }
    fs::create_directories(dir);
    return dir;
  }

  GenColConfig engine_config() const {
    GenColConfig cfg;
    cfg.beta = beta;
    cfg.seed = seed;
    cfg.max_stall = max_stall;
    cfg.tolerances.feasibility = tol;
    cfg.tolerances.optimality = tol;
    return cfg;
  }

  void echo(RunRecord& rec) const {
    rec.parameters.emplace_back("beta", std::to_string(beta));
    rec.parameters.emplace_back("seed", std::to_string(seed));
    rec.parameters.emplace_back("tol", std::to_string(tol));
    rec.parameters.emplace_back("max_stall", std::to_string(max_stall));
  }
};

struct LoadedMarginals {
  std::vector<Marginal> ms;
  std::int64_t image_resolution = 0;  // max image edge, 0 for point clouds
};

LoadedMarginals load_marginals(const std::vector<std::string>& inputs,
                               const std::vector<std::size_t>& idx_indices) {
  LoadedMarginals out;
  for (const auto& raw : inputs) {
    const fs::path path = raw;
    const auto ext = path.extension().string();
    if (ext == ".csv") {
      out.ms.push_back(read_csv_cloud(path));
    } else if (ext == ".pgm") {
      const auto info = probe_pgm(path);
      out.image_resolution = std::max<std::int64_t>(
          out.image_resolution, std::max(info.rows, info.cols));
      out.ms.push_back(read_pgm(path));
    } else {
      // IDX image collections (e.g. MNIST train-images-idx3-ubyte)
      if (idx_indices.empty())
        throw FormatError("IDX input " + raw + " needs --idx-indices");
      const auto info = probe_idx(path);
      out.image_resolution = std::max<std::int64_t>(
          out.image_resolution, std::max(info.rows, info.cols));
      auto ms = read_idx_images(path, idx_indices);
      out.ms.insert(out.ms.end(), std::make_move_iterator(ms.begin()),
                    std::make_move_iterator(ms.end()));
    }
  }
  for (auto& m : out.ms) {
    const auto rep = validate_marginal(m);
    if (!rep.ok) throw FormatError(m.label + ": " + rep.message);
  }
  return out;
}

std::function<void(const ProgressRecord&)> progress_sink(
    const CommonFlags& flags, const fs::path& dir, std::ofstream& stream) {
  if (!flags.progress) return {};
  stream.open(dir / "progress.csv");
  stream << "iteration,omega,support,objective,accepted\n";
  return [&stream](const ProgressRecord& p) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", p.objective);
    stream << p.iteration << ',' << p.omega_size << ',' << p.support_size << ','
           << buf << ',' << p.accepted << '\n';
  };
}

void write_history(const GenColState& state, const fs::path& path) {
  std::ofstream out(path);
  out << "iteration,objective\n";
  for (const auto& [it, obj] : state.cost_history) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", obj);
    out << it << ',' << buf << '\n';
  }
}

// Shared tail of every solve-like subcommand: run the engine, dump the
// standard artifacts, optionally certify. Returns the exit code.
int run_and_emit(std::vector<Marginal> marginals, CostSpec cost,
                 const CommonFlags& flags, const std::string& command,
                 std::optional<InitResult> init, std::int64_t certify_budget,
                 RunRecord rec, GenColState* state_out = nullptr) {
  const auto dir = flags.resolve_out_dir();
  const auto t0 = std::chrono::steady_clock::now();

  auto cfg = flags.engine_config();
  InitResult start = init ? std::move(*init) : nw_corner(marginals);
  const auto shape = problem_shape(marginals);
  const auto capacity = static_cast<std::size_t>(
      cfg.beta * static_cast<double>(shape.total_support()));
  if (start.omega.size() < capacity) {
    std::mt19937_64 rng(cfg.seed ^ 0xd1b54a32d192ed03ull);
    start.omega.set_capacity(capacity);
    augment_random(start.omega, shape, capacity, rng);
  }

  GenColEngine engine(std::move(marginals), std::move(cost), std::move(cfg),
                      std::move(start));

  std::ofstream progress_stream;
  const auto& state = engine.run(progress_sink(flags, dir, progress_stream));

  write_history(state, dir / "cost_history.csv");
  write_plan(state.solution.plan, dir / "plan.csv");
  write_potentials(state.solution.potentials, dir / "potentials.csv");

  rec.command = command;
  flags.echo(rec);
  rec.cost_history = state.cost_history;
  rec.final_objective = state.solution.objective;
  rec.support_size = state.solution.plan.size();
  rec.omega_size = state.omega.size();
  rec.iterations = state.iterations;
  rec.accepted = state.accepted;
  rec.rejected = state.rejected;

  int code = 0;
  if (certify_budget >= 0) {
    const auto cert = engine.certify(certify_budget);
    rec.certificate = cert;
    std::cout << (cert.exhaustive ? "exhaustive" : "sampled") << " certificate: "
              << cert.violations << " violations, max "
              << cert.max_violation << " over " << cert.checked
              << " configurations\n";
    if (cert.violations > 0) code = 4;
  }
  rec.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_record(rec, dir / "runrecord.json");
  std::cout << command << ": objective " << state.solution.objective
            << ", support " << state.solution.plan.size() << ", iterations "
            << state.iterations << "\n";
  if (state_out) *state_out = state;
  return code;
}

CostSpec make_cost(const std::string& name, std::vector<double> weights,
                   std::vector<double> times, double tau, std::size_t n) {
  if (name == "quadratic") return QuadraticCost{};
  if (name == "barycenter") {
    if (weights.empty()) weights.assign(n, 1.0 / static_cast<double>(n));
    return BarycenterCost{std::move(weights)};
  }
  if (name == "spline") {
    if (times.empty())
      for (std::size_t i = 0; i < n; ++i)
        times.push_back(static_cast<double>(i) / static_cast<double>(n - 1));
    return SplineExactCost{std::move(times)};
  }
  if (name == "spline-approx") {
    if (tau <= 0.0) tau = 1.0 / static_cast<double>(n - 1);
    return SplineApproxCost{tau};
  }
  throw CLI::ValidationError("--cost", "unknown cost family " + name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse multi-marginal optimal transport via genetic column "
               "generation: solver, Wasserstein barycenters, splines, and "
               "entropic baselines"};
  app.require_subcommand(1);

  // ---- demo1d ----
  auto* demo = app.add_subcommand(
      "demo1d", "Two reflected 1-D marginals, quadratic cost, reflection init");
  CommonFlags demo_flags;
  demo_flags.attach(demo);
  std::size_t demo_grid = 100;
  bool demo_sinkhorn = false;
  std::vector<double> demo_eps;
  std::int64_t demo_certify = -1;
  demo->add_option("--gridpoints", demo_grid, "Support size per marginal")
      ->capture_default_str();
  demo->add_flag("--sinkhorn", demo_sinkhorn, "Also run the Sinkhorn sweep");
  demo->add_option("--epsilon", demo_eps, "Sinkhorn regularization sweep");
  demo->add_option("--certify", demo_certify,
                   "Certify with this sampling budget (exhaustive when small)");

  // ---- solve ----
  auto* solve = app.add_subcommand("solve", "Generic solve with a named cost");
  CommonFlags solve_flags;
  solve_flags.attach(solve);
  std::vector<std::string> solve_inputs;
  std::vector<std::size_t> solve_idx;
  std::string solve_cost = "quadratic";
  std::vector<double> solve_weights, solve_times;
  double solve_tau = 0.0;
  std::int64_t solve_certify = -1;
  solve->add_option("--input", solve_inputs, "Marginal files (csv/pgm/idx)")
      ->required();
  solve->add_option("--idx-indices", solve_idx, "Image indices for IDX inputs");
  solve->add_option("--cost", solve_cost,
                    "quadratic | barycenter | spline | spline-approx")
      ->capture_default_str();
  solve->add_option("--weights", solve_weights, "Barycenter weights");
  solve->add_option("--times", solve_times, "Spline knot times");
  solve->add_option("--tau", solve_tau, "Equidistant spline step");
  solve->add_option("--certify", solve_certify, "Certification budget");

  // ---- barycenter ----
  auto* bary = app.add_subcommand("barycenter",
                                  "Mesh-free Wasserstein barycenter");
  CommonFlags bary_flags;
  bary_flags.attach(bary);
  std::vector<std::string> bary_inputs;
  std::vector<std::size_t> bary_idx;
  std::vector<double> bary_weights;
  int bary_refine = 0;
  double bary_sigma = 0.0, bary_level = 0.0;
  std::int64_t bary_certify = -1;
  bary->add_option("--input", bary_inputs, "Marginal files")->required();
  bary->add_option("--idx-indices", bary_idx, "Image indices for IDX inputs");
  bary->add_option("--weights", bary_weights, "Weights (default: equal)");
  bary->add_option("--refine", bary_refine,
                   "Rasterize on a grid this many times finer than the input "
                   "images (0 = no raster)");
  bary->add_option("--sigma", bary_sigma, "Post-raster blur, in cells");
  bary->add_option("--level", bary_level, "Threshold level after blurring");
  bary->add_option("--certify", bary_certify, "Certification budget");

  // ---- spline ----
  auto* spline = app.add_subcommand(
      "spline", "Cubic interpolation of measures across time");
  CommonFlags spline_flags;
  spline_flags.attach(spline);
  std::vector<std::string> spline_inputs;
  std::vector<std::size_t> spline_idx;
  std::vector<double> spline_times, spline_queries;
  bool spline_approx = false;
  std::int64_t spline_certify = -1;
  spline->add_option("--input", spline_inputs, "Marginal files (>= 3)")
      ->required();
  spline->add_option("--idx-indices", spline_idx, "Image indices for IDX inputs");
  spline->add_option("--times", spline_times,
                     "Knot times (default: equidistant on [0,1])");
  spline->add_option("--query", spline_queries, "Query times in [0,1]")
      ->required();
  spline->add_flag("--approx", spline_approx,
                   "Use the second-difference cost (equidistant times)");
  spline->add_option("--certify", spline_certify, "Certification budget");

  // ---- nwcorner ----
  auto* nwc = app.add_subcommand("nwcorner",
                                 "Feasible start from the north-west corner rule");
  CommonFlags nwc_flags;
  nwc_flags.attach(nwc);
  std::vector<std::string> nwc_inputs;
  std::vector<std::size_t> nwc_idx;
  nwc->add_option("--input", nwc_inputs, "Marginal files")->required();
  nwc->add_option("--idx-indices", nwc_idx, "Image indices for IDX inputs");

  // ---- sinkhorn ----
  auto* sink = app.add_subcommand("sinkhorn",
                                  "Two-marginal entropic baseline (log-domain)");
  CommonFlags sink_flags;
  sink_flags.attach(sink);
  std::vector<std::string> sink_inputs;
  std::vector<std::size_t> sink_idx;
  std::vector<double> sink_eps{0.05};
  std::int64_t sink_iters = 100000;
  sink->add_option("--input", sink_inputs, "Exactly two marginal files")
      ->required();
  sink->add_option("--idx-indices", sink_idx, "Image indices for IDX inputs");
  sink->add_option("--epsilon", sink_eps, "Regularization sweep")
      ->capture_default_str();
  sink->add_option("--max-iter", sink_iters, "Iteration cap per epsilon")
      ->capture_default_str();

  // ---- certify ----
  auto* cert = app.add_subcommand(
      "certify", "Check stored potentials against the full product space");
  CommonFlags cert_flags;
  cert_flags.attach(cert);
  std::vector<std::string> cert_inputs;
  std::vector<std::size_t> cert_idx;
  std::string cert_potentials;
  std::string cert_cost = "quadratic";
  std::vector<double> cert_weights, cert_times;
  double cert_tau = 0.0;
  std::int64_t cert_budget = 100000;
  cert->add_option("--input", cert_inputs, "Marginal files")->required();
  cert->add_option("--idx-indices", cert_idx, "Image indices for IDX inputs");
  cert->add_option("--potentials", cert_potentials, "potentials.csv from a run")
      ->required();
  cert->add_option("--cost", cert_cost,
                   "quadratic | barycenter | spline | spline-approx");
  cert->add_option("--weights", cert_weights, "Barycenter weights");
  cert->add_option("--times", cert_times, "Spline knot times");
  cert->add_option("--tau", cert_tau, "Equidistant spline step");
  cert->add_option("--budget", cert_budget, "Sampling budget")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (demo->parsed()) {
      const auto mu1 = demo1d_marginal(demo_grid);
      const auto mu2 = index_reflection(mu1);
      std::vector<Marginal> ms{mu1, mu2};
      RunRecord rec;
      rec.parameters.emplace_back("gridpoints", std::to_string(demo_grid));
      const int code =
          run_and_emit(ms, QuadraticCost{}, demo_flags, "demo1d",
                       reflection_init(mu1, mu2), demo_certify, std::move(rec));
      if (demo_sinkhorn) {
        if (demo_eps.empty()) demo_eps = {0.05, 0.02, 0.01, 0.005, 0.002, 0.001};
        const auto dir = demo_flags.resolve_out_dir();
        std::ofstream out(dir / "sinkhorn.csv");
        out << "epsilon,iterations,cost,marginal_error\n";
        for (double eps : demo_eps) {
          SinkhornParams params;
          params.epsilon = eps;
          params.max_iterations = 1000;
          const auto res = sinkhorn_2m(
              mu1, mu2,
              [&](std::size_t i, std::size_t j) {
                const double d = mu1.points[i] - mu2.points[j];
                return d * d;
              },
              params);
          char buf[64];
          std::snprintf(buf, sizeof(buf), "%.17g", res.cost);
          out << eps << ',' << res.iterations << ',' << buf << ','
              << res.marginal_error << '\n';
        }
      }
      return code;
    }

    if (solve->parsed()) {
      auto ms = load_marginals(solve_inputs, solve_idx).ms;
      auto cost = make_cost(solve_cost, solve_weights, solve_times, solve_tau,
                            ms.size());
      validate_cost_spec(cost, problem_shape(ms));
      RunRecord rec;
      rec.parameters.emplace_back("cost", solve_cost);
      return run_and_emit(std::move(ms), std::move(cost), solve_flags, "solve",
                          std::nullopt, solve_certify, std::move(rec));
    }

    if (bary->parsed()) {
      auto loaded = load_marginals(bary_inputs, bary_idx);
      auto& ms = loaded.ms;
      if (ms.size() < 2) throw FormatError("barycenter needs >= 2 marginals");
      if (bary_weights.empty())
        bary_weights.assign(ms.size(), 1.0 / static_cast<double>(ms.size()));
      if (bary_weights.size() != ms.size())
        throw FormatError("barycenter: one weight per marginal expected");
      CostSpec cost = BarycenterCost{bary_weights};
      validate_cost_spec(cost, problem_shape(ms));
      RunRecord rec;
      rec.parameters.emplace_back("cost", "barycenter");
      GenColState state;
      const int code = run_and_emit(ms, cost, bary_flags, "barycenter",
                                    std::nullopt, bary_certify, std::move(rec),
                                    &state);
      const auto dir = bary_flags.resolve_out_dir();
      const auto cloud =
          barycenter_pushforward(state.solution.plan, ms, bary_weights);
      write_cloud(cloud, dir / "cloud.csv");
      if (bary_refine > 0) {
        if (cloud.dim != 2) throw FormatError("--refine needs 2-D marginals");
        if (loaded.image_resolution == 0)
          throw FormatError("--refine needs image inputs (pgm or idx)");
        const std::int64_t cells = loaded.image_resolution * bary_refine;
        GridSpec raster;
        raster.dim = 2;
        raster.shape = {cells, cells};
        raster.spacing = {1.0 / static_cast<double>(cells),
                          1.0 / static_cast<double>(cells)};
        raster.origin = {0.5 / static_cast<double>(cells),
                         0.5 / static_cast<double>(cells)};
        // image rows run top-down: store points as (1 - y, x)
        WeightedPointCloud flipped = cloud;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
          flipped.points[2 * i] = 1.0 - cloud.point(i)[1];
          flipped.points[2 * i + 1] = cloud.point(i)[0];
        }
        auto grid = rasterize(flipped, raster);
        write_grid(grid, dir / "raster.pgm");
        if (bary_sigma > 0.0 || bary_level > 0.0) {
          const auto bin = smooth_threshold(grid, bary_sigma, bary_level);
          write_grid(bin, dir / "binary.pgm");
        }
      }
      return code;
    }

    if (spline->parsed()) {
      auto ms = load_marginals(spline_inputs, spline_idx).ms;
      if (ms.size() < 3) throw FormatError("spline needs >= 3 marginals");
      if (spline_times.empty())
        for (std::size_t i = 0; i < ms.size(); ++i)
          spline_times.push_back(static_cast<double>(i) /
                                 static_cast<double>(ms.size() - 1));
      CostSpec cost;
      if (spline_approx) {
        cost = SplineApproxCost{spline_times[1] - spline_times[0]};
      } else {
        cost = SplineExactCost{spline_times};
      }
      validate_cost_spec(cost, problem_shape(ms));
      RunRecord rec;
      rec.parameters.emplace_back("cost",
                                  spline_approx ? "spline-approx" : "spline");
      GenColState state;
      const int code = run_and_emit(ms, cost, spline_flags, "spline",
                                    std::nullopt, spline_certify,
                                    std::move(rec), &state);
      const auto dir = spline_flags.resolve_out_dir();
      const auto path = spline_path(state.solution.plan, ms, spline_times,
                                    spline_queries);
      for (std::size_t q = 0; q < path.times.size(); ++q) {
        char name[64];
        std::snprintf(name, sizeof(name), "frame_%07.5f.csv", path.times[q]);
        write_cloud(path.clouds[q], dir / name);
      }
      return code;
    }

    if (nwc->parsed()) {
      auto ms = load_marginals(nwc_inputs, nwc_idx).ms;
      const auto dir = nwc_flags.resolve_out_dir();
      const auto init = nw_corner(ms);
      write_plan(init.plan, dir / "plan.csv");
      const double residual = max_marginal_residual(init.plan, ms);
      RunRecord rec;
      rec.command = "nwcorner";
      nwc_flags.echo(rec);
      rec.support_size = init.plan.size();
      rec.omega_size = init.omega.size();
      rec.parameters.emplace_back("residual", std::to_string(residual));
      write_run_record(rec, dir / "runrecord.json");
      std::cout << "nwcorner: " << init.plan.size() << " configurations, residual "
                << residual << "\n";
      return residual <= nwc_flags.tol ? 0 : 3;
    }

    if (sink->parsed()) {
      auto ms = load_marginals(sink_inputs, sink_idx).ms;
      if (ms.size() != 2) throw FormatError("sinkhorn needs exactly 2 marginals");
      const auto dir = sink_flags.resolve_out_dir();
      std::ofstream out(dir / "sinkhorn.csv");
      out << "epsilon,iterations,cost,marginal_error\n";
      for (double eps : sink_eps) {
        SinkhornParams params;
        params.epsilon = eps;
        params.max_iterations = sink_iters;
        const auto res = sinkhorn_2m(
            ms[0], ms[1],
            [&](std::size_t i, std::size_t j) {
              double s = 0.0;
              for (int d = 0; d < ms[0].dim; ++d) {
                const double e = ms[0].point(i)[d] - ms[1].point(j)[d];
                s += e * e;
              }
              return s;
            },
            params);
        out << eps << ',' << res.iterations << ',' << res.cost << ','
            << res.marginal_error << '\n';
        std::cout << "epsilon " << eps << ": cost " << res.cost << " after "
                  << res.iterations << " iterations\n";
      }
      return 0;
    }

    if (cert->parsed()) {
      auto ms = load_marginals(cert_inputs, cert_idx).ms;
      auto cost = make_cost(cert_cost, cert_weights, cert_times, cert_tau,
                            ms.size());
      validate_cost_spec(cost, problem_shape(ms));
      const auto potentials = read_potentials(cert_potentials, problem_shape(ms));
      const auto rep = certify_potentials(potentials, cost, ms, cert_budget,
                                          1e6, cert_flags.tol, cert_flags.seed);
      std::cout << (rep.exhaustive ? "exhaustive" : "sampled")
                << " certificate: " << rep.violations << " violations, max "
                << rep.max_violation << " over " << rep.checked
                << " configurations\n";
      return rep.violations == 0 ? 0 : 4;
    }
  } catch (const FormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const IterationLimitError& e) {
    std::cerr << "iteration limit: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
