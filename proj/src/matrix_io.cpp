// SPDX-License-Identifier: Apache-2.0
#include "radcom/matrix_io.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace radcom {

void write_complex_csv(const CMatrix& m, std::ostream& out) {
  out << "row,col,real,imag\n" << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out << r << ',' << c << ',' << m(r, c).real() << ',' << m(r, c).imag() << '\n';
}

CMatrix read_complex_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("matrix csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "row,col,real,imag")
    throw std::runtime_error("matrix csv line 1: expected header row,col,real,imag");

  std::map<std::pair<long, long>, Complex> entries;
  long rows = 0;
  long cols = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    long r = -1;
    long c = -1;
    double re = 0.0;
    double im = 0.0;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(ss >> r >> c1 >> c >> c2 >> re >> c3 >> im) || c1 != ',' || c2 != ',' || c3 != ',' ||
        r < 0 || c < 0 || !(ss >> std::ws).eof())
      throw std::runtime_error("matrix csv line " + std::to_string(lineno) + ": malformed entry");
    if (!entries.emplace(std::make_pair(r, c), Complex(re, im)).second)
      throw std::runtime_error("matrix csv line " + std::to_string(lineno) + ": duplicate entry");
    rows = std::max(rows, r + 1);
    cols = std::max(cols, c + 1);
  }
  if (static_cast<long>(entries.size()) != rows * cols)
    throw std::runtime_error("matrix csv: missing entries for a " + std::to_string(rows) + "x" +
                             std::to_string(cols) + " matrix");
  CMatrix m(rows, cols);
  for (const auto& [rc, v] : entries) m(rc.first, rc.second) = v;
  return m;
}

CMatrix read_complex_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  try {
    return read_complex_csv(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace radcom
