#include "ddc/csv_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddc {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << m.rows() << "," << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_double(m(i, j));
    os << "\n";
  }
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::string line;
  long rows = -1, cols = -1;
  char comma = 0;
  if (!std::getline(is, line)) throw std::runtime_error(path + ": empty file");
  std::istringstream hs(line);
  if (!(hs >> rows >> comma >> cols) || comma != ',' || rows < 0 || cols < 0)
    throw std::runtime_error(path + ": bad dimension header");
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (!std::getline(is, line)) throw std::runtime_error(path + ": missing rows");
    std::istringstream ls(line);
    std::string cell;
    for (long j = 0; j < cols; ++j) {
      if (!std::getline(ls, cell, ',')) throw std::runtime_error(path + ": short row");
      m(i, j) = std::stod(cell);
    }
  }
  return m;
}

}  // namespace ddc
