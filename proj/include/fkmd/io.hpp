#pragma once

#include "fkmd/error.hpp"
#include "fkmd/field.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fkmd::io {

/// Shortest round-trip text for a double.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    require(static_cast<bool>(out_), "cannot write " + path.string());
    row_strings(header);
  }

  void row(const std::vector<double>& values) {
    std::vector<std::string> s;
    s.reserve(values.size());
    for (double v : values) s.push_back(num(v));
    row_strings(s);
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

inline std::vector<std::string> coordinate_header(int dim) {
  std::vector<std::string> h;
  for (int i = 1; i <= dim; ++i) h.push_back("x" + std::to_string(i));
  return h;
}

/// solution.csv: x1..xd,u,stderr for every grid node.
inline void write_solution(const std::filesystem::path& path, const SolutionField& u, const std::vector<double>& std_error) {
  auto header = coordinate_header(u.grid().dim());
  header.emplace_back("u");
  header.emplace_back("stderr");
  CsvWriter w(path, header);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Vec x = u.grid().point(i);
    std::vector<double> row(x.data(), x.data() + x.size());
    row.push_back(u[i]);
    row.push_back(std_error.empty() ? 0.0 : std_error[i]);
    w.row(row);
  }
}

struct SolutionTable {
  std::vector<Vec> points;
  std::vector<double> u;
  std::vector<double> std_error;
};

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string c;
  while (std::getline(ss, c, ',')) cells.push_back(c);
  return cells;
}

/// Reads a solution.csv and checks it against the expected grid.
inline SolutionField read_solution(const std::filesystem::path& path, const Grid& grid, const Domain& domain,
                                   std::vector<double>* std_error = nullptr) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "missing solution artifact " + path.string());
  std::string line;
  std::getline(in, line);
  const auto header = split(line);
  const auto d = static_cast<std::size_t>(grid.dim());
  require(header.size() == d + 2 && header[d] == "u", "solution artifact has an unexpected header");
  std::vector<double> values;
  std::vector<double> se;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    require(cells.size() == d + 2, "malformed row in solution artifact");
    const std::size_t i = values.size();
    require(i < grid.size(), "solution artifact has more rows than the grid");
    const Vec x = grid.point(i);
    for (std::size_t a = 0; a < d; ++a)
      require(std::abs(std::stod(cells[a]) - x[static_cast<Eigen::Index>(a)]) <= 1e-9 * (1.0 + std::abs(x[static_cast<Eigen::Index>(a)])),
              "solution artifact grid does not match the configured grid");
    values.push_back(std::stod(cells[d]));
    se.push_back(std::stod(cells[d + 1]));
  }
  require(values.size() == grid.size(), "solution artifact has fewer rows than the grid");
  if (std_error) *std_error = se;
  return SolutionField(grid, domain, values);
}

}  // namespace fkmd::io
