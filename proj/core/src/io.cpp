#include "mmot/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mmot {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

// Shared pixel-grid-to-marginal conversion for IDX and PGM inputs.
Marginal image_to_marginal(std::span<const double> pixels, std::size_t rows,
                           std::size_t cols, std::string label) {
  double sum = 0.0;
  for (double v : pixels) sum += v;
  if (sum <= 0.0) throw FormatError("empty measure: " + label);
  Marginal m;
  m.dim = 2;
  m.label = std::move(label);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = pixels[i * cols + j];
      if (v <= 0.0) continue;
      m.points.push_back((static_cast<double>(j) + 0.5) / static_cast<double>(cols));
      m.points.push_back((static_cast<double>(rows - i) - 0.5) /
                         static_cast<double>(rows));
      m.masses.push_back(v / sum);
    }
  return m;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw FormatError("malformed number '" + s + "' at line " +
                      std::to_string(line_no));
  }
}

}  // namespace

IdxInfo probe_idx(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  if (bytes.size() < 16)
    throw FormatError(path.string() + ": truncated IDX header (offset " +
                      std::to_string(bytes.size()) + ")");
  if (be32(bytes.data()) != 0x00000803u)
    throw FormatError(path.string() + ": bad IDX magic at offset 0");
  IdxInfo info;
  info.count = be32(bytes.data() + 4);
  info.rows = be32(bytes.data() + 8);
  info.cols = be32(bytes.data() + 12);
  if (bytes.size() < 16 + info.count * info.rows * info.cols)
    throw FormatError(path.string() + ": truncated IDX payload at offset " +
                      std::to_string(bytes.size()));
  return info;
}

std::vector<Marginal> read_idx_images(const std::filesystem::path& path,
                                      std::span<const std::size_t> indices) {
  const auto info = probe_idx(path);
  const auto bytes = read_all(path);
  std::vector<Marginal> out;
  out.reserve(indices.size());
  std::vector<double> pixels(info.rows * info.cols);
  for (std::size_t idx : indices) {
    if (idx >= info.count)
      throw FormatError(path.string() + ": image index " + std::to_string(idx) +
                        " out of range (file holds " + std::to_string(info.count) +
                        ")");
    const std::uint8_t* img = bytes.data() + 16 + idx * info.rows * info.cols;
    for (std::size_t p = 0; p < pixels.size(); ++p)
      pixels[p] = static_cast<double>(img[p]);
    out.push_back(image_to_marginal(pixels, info.rows, info.cols,
                                    path.stem().string() + "#" + std::to_string(idx)));
  }
  return out;
}

void write_idx_images(const std::filesystem::path& path,
                      std::span<const std::vector<std::uint8_t>> images,
                      std::size_t rows, std::size_t cols) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  auto put32 = [&](std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                       static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(b, 4);
  };
  put32(0x00000803u);
  put32(static_cast<std::uint32_t>(images.size()));
  put32(static_cast<std::uint32_t>(rows));
  put32(static_cast<std::uint32_t>(cols));
  for (const auto& img : images) {
    if (img.size() != rows * cols)
      throw std::invalid_argument("write_idx_images: image size mismatch");
    out.write(reinterpret_cast<const char*>(img.data()),
              static_cast<std::streamsize>(img.size()));
  }
}

PgmInfo probe_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string magic;
  PgmInfo info;
  in >> magic;
  if (magic != "P2" && magic != "P5")
    throw FormatError(path.string() + ": expected P2 or P5 PGM");
  auto next = [&]() -> std::size_t {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return static_cast<std::size_t>(std::stoul(tok));
    }
    throw FormatError(path.string() + ": truncated header");
  };
  info.cols = next();
  info.rows = next();
  info.maxval = next();
  return info;
}

Marginal read_pgm(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto token = [&]() -> std::string {
    skip_ws();
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(bytes[pos++]);
    if (t.empty())
      throw FormatError(path.string() + ": truncated header at offset " +
                        std::to_string(pos));
    return t;
  };
  const std::string magic = token();
  if (magic != "P2" && magic != "P5")
    throw FormatError(path.string() + ": expected P2 or P5 PGM");
  const auto width = static_cast<std::size_t>(std::stoul(token()));
  const auto height = static_cast<std::size_t>(std::stoul(token()));
  const auto maxval = static_cast<std::size_t>(std::stoul(token()));
  if (maxval == 0 || maxval > 65535)
    throw FormatError(path.string() + ": unsupported maxval");

  std::vector<double> pixels(width * height);
  if (magic == "P2") {
    for (auto& v : pixels) v = parse_double(token(), 0);
  } else {
    ++pos;  // the single whitespace byte after maxval
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    if (bytes.size() < pos + bpp * pixels.size())
      throw FormatError(path.string() + ": truncated pixel data at offset " +
                        std::to_string(bytes.size()));
    for (auto& v : pixels) {
      if (bpp == 1) {
        v = bytes[pos++];
      } else {
        v = 256.0 * bytes[pos] + bytes[pos + 1];
        pos += 2;
      }
    }
  }
  return image_to_marginal(pixels, height, width, path.stem().string());
}

Marginal read_csv_cloud(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  Marginal m;
  m.label = path.stem().string();
  std::string line;
  std::size_t line_no = 0;
  int dim = 0;
  double sum = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv(line);
    if (fields.size() < 2 || fields.size() > 4)
      throw FormatError(path.string() + ": expected x[,y[,z]],mass at line " +
                        std::to_string(line_no));
    if (dim == 0) {
      dim = static_cast<int>(fields.size()) - 1;
      m.dim = dim;
    } else if (static_cast<int>(fields.size()) - 1 != dim) {
      throw FormatError(path.string() + ": inconsistent dimension at line " +
                        std::to_string(line_no));
    }
    for (int d = 0; d < dim; ++d)
      m.points.push_back(parse_double(fields[d], line_no));
    const double mass = parse_double(fields.back(), line_no);
    if (!(mass > 0.0))
      throw FormatError(path.string() + ": nonpositive mass at line " +
                        std::to_string(line_no));
    m.masses.push_back(mass);
    sum += mass;
  }
  if (m.masses.empty()) throw FormatError(path.string() + ": empty measure");
  for (auto& w : m.masses) w /= sum;
  return m;
}

void write_plan(const SparsePlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& r : plan.support()) {
    for (auto i : r.indices) out << i << ',';
    out << fmt17(plan.mass(r)) << '\n';
  }
}

SparsePlan read_plan(const std::filesystem::path& path, ProblemShape shape) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  SparsePlan plan(std::move(shape));
  std::string line;
  std::size_t line_no = 0;
  const std::size_t n = plan.shape().sizes.size();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv(line);
    if (fields.size() != n + 1)
      throw FormatError(path.string() + ": expected " + std::to_string(n) +
                        " indices and a mass at line " + std::to_string(line_no));
    Configuration r;
    for (std::size_t k = 0; k < n; ++k)
      r.indices.push_back(
          static_cast<std::int32_t>(parse_double(fields[k], line_no)));
    if (!plan.shape().contains(r))
      throw FormatError(path.string() + ": configuration out of range at line " +
                        std::to_string(line_no));
    plan.set(r, parse_double(fields.back(), line_no));
  }
  return plan;
}

void write_cloud(const WeightedPointCloud& cloud,
                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (double v : cloud.point(i)) out << fmt17(v) << ',';
    out << fmt17(cloud.masses[i]) << '\n';
  }
}

WeightedPointCloud read_cloud(const std::filesystem::path& path) {
  const Marginal m = read_csv_cloud(path);
  WeightedPointCloud c;
  c.dim = m.dim;
  c.points = m.points;
  c.masses = m.masses;
  return c;
}

void write_potentials(const DualPotentials& potentials,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  for (std::size_t k = 0; k < potentials.u.size(); ++k)
    for (std::size_t i = 0; i < potentials.u[k].size(); ++i)
      out << k << ',' << i << ',' << fmt17(potentials.u[k][i]) << '\n';
}

DualPotentials read_potentials(const std::filesystem::path& path,
                               const ProblemShape& shape) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  DualPotentials out;
  out.u.resize(shape.sizes.size());
  for (std::size_t k = 0; k < shape.sizes.size(); ++k)
    out.u[k].assign(shape.sizes[k], 0.0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv(line);
    if (fields.size() != 3)
      throw FormatError(path.string() + ": expected k,i,u at line " +
                        std::to_string(line_no));
    const auto k = static_cast<std::size_t>(parse_double(fields[0], line_no));
    const auto i = static_cast<std::size_t>(parse_double(fields[1], line_no));
    if (k >= out.u.size() || i >= out.u[k].size())
      throw FormatError(path.string() + ": index out of range at line " +
                        std::to_string(line_no));
    out.u[k][i] = parse_double(fields[2], line_no);
  }
  return out;
}

void write_grid(const Grid& grid, const std::filesystem::path& path) {
  if (grid.spec.dim != 2)
    throw std::invalid_argument("write_grid: only 2-D grids become PGM images");
  double peak = 0.0;
  for (double v : grid.values) peak = std::max(peak, v);
  const double scale = peak > 0.0 ? peak : 1.0;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  const auto h = grid.spec.shape[0], w = grid.spec.shape[1];
  out << "P5\n" << w << ' ' << h << "\n65535\n";
  for (double v : grid.values) {
    const auto q = static_cast<std::uint32_t>(
        std::lround(std::clamp(v / scale, 0.0, 1.0) * 65535.0));
    const char b[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
    out.write(b, 2);
  }

  std::ofstream side(path.string() + ".scale.txt");
  side << "scale " << fmt17(scale) << '\n';
  side << "origin";
  for (double v : grid.spec.origin) side << ' ' << fmt17(v);
  side << "\nspacing";
  for (double v : grid.spec.spacing) side << ' ' << fmt17(v);
  side << "\nshape";
  for (auto v : grid.spec.shape) side << ' ' << v;
  side << '\n';
}

void write_run_record(const RunRecord& record,
                      const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["command"] = record.command;
  for (const auto& [k, v] : record.parameters) j[k] = v;
  j["iterations"] = record.iterations;
  j["accepted"] = record.accepted;
  j["rejected"] = record.rejected;
  j["final_objective"] = record.final_objective;
  j["support_size"] = record.support_size;
  j["omega_size"] = record.omega_size;
  j["wall_clock_seconds"] = record.wall_clock_seconds;
  if (record.certificate) {
    j["certificate_exhaustive"] = record.certificate->exhaustive;
    j["certificate_checked"] = record.certificate->checked;
    j["certificate_violations"] = record.certificate->violations;
    j["certificate_max_violation"] = record.certificate->max_violation;
  }
  nlohmann::ordered_json hist = nlohmann::ordered_json::array();
  for (const auto& [it, obj] : record.cost_history)
    hist.push_back({it, obj});
  j["cost_history"] = std::move(hist);

  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace mmot
