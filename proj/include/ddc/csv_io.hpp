#pragma once

#include <string>

#include "ddc/linalg.hpp"

namespace ddc {

// Matrix CSV: first row "rows,cols", then one row-major line per matrix row,
// 17 significant digits.
void write_matrix_csv(const std::string& path, const Matrix& m);
Matrix read_matrix_csv(const std::string& path);

std::string format_double(double v);

}  // namespace ddc
