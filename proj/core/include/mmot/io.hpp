#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmot/extract.hpp"
#include "mmot/gencol.hpp"
#include "mmot/measures.hpp"

namespace mmot {

// Malformed input; the message carries the byte offset or line number.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// IDX3 images (big-endian magic 0x00000803, 28x28 in the MNIST case). Each
// selected image becomes a Marginal on the unit square: pixel (row i, col j)
// of an HxW image sits at ((j+0.5)/W, (H-i-0.5)/H); intensities are
// normalized to sum 1 and zero pixels are dropped. An all-zero image is an
// error ("empty measure").
std::vector<Marginal> read_idx_images(const std::filesystem::path& path,
                                      std::span<const std::size_t> indices);

struct IdxInfo {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
};
IdxInfo probe_idx(const std::filesystem::path& path);

// Writes uint8 images (row-major, one per entry) in IDX3 format.
void write_idx_images(const std::filesystem::path& path,
                      std::span<const std::vector<std::uint8_t>> images,
                      std::size_t rows, std::size_t cols);

// PGM P2/P5 grayscale, same pixel-to-unit-square convention as IDX.
Marginal read_pgm(const std::filesystem::path& path);

struct PgmInfo {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t maxval = 0;
};
PgmInfo probe_pgm(const std::filesystem::path& path);

// CSV rows "x[,y[,z]],mass"; masses must be positive and are normalized.
Marginal read_csv_cloud(const std::filesystem::path& path);

// Plans as CSV "i1,...,iN,mass", sorted lexicographically, full precision.
void write_plan(const SparsePlan& plan, const std::filesystem::path& path);
SparsePlan read_plan(const std::filesystem::path& path, ProblemShape shape);

// Clouds as CSV "x1,...,xd,mass", full precision.
void write_cloud(const WeightedPointCloud& cloud,
                 const std::filesystem::path& path);
WeightedPointCloud read_cloud(const std::filesystem::path& path);

// Potentials as CSV "k,i,u"; one line per support point.
void write_potentials(const DualPotentials& potentials,
                      const std::filesystem::path& path);
DualPotentials read_potentials(const std::filesystem::path& path,
                               const ProblemShape& shape);

// 16-bit max-normalized PGM plus a "<path>.scale.txt" sidecar recording the
// true value scale and the grid geometry.
void write_grid(const Grid& grid, const std::filesystem::path& path);

// Everything needed to reproduce a run bit-identically with the same build.
struct RunRecord {
  std::string command;
  std::vector<std::pair<std::string, std::string>> parameters;  // flag echo
  std::vector<std::pair<std::int64_t, double>> cost_history;
  double final_objective = 0.0;
  std::size_t support_size = 0;
  std::size_t omega_size = 0;
  std::int64_t iterations = 0;
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  double wall_clock_seconds = 0.0;  // the only nondeterministic field
  std::optional<CertificateReport> certificate;
};

void write_run_record(const RunRecord& record,
                      const std::filesystem::path& path);

}  // namespace mmot
