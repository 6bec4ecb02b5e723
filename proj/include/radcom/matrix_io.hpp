// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>

#include "radcom/types.hpp"

namespace radcom {

/// Long-format complex matrix CSV: header "row,col,real,imag", one line per
/// entry, row-major order, 17 significant digits.
void write_complex_csv(const CMatrix& m, std::ostream& out);
/// Inverse of write_complex_csv. Every entry of the bounding shape must be
/// present exactly once; errors name the line.
CMatrix read_complex_csv(std::istream& in);
CMatrix read_complex_csv_file(const std::string& path);

}  // namespace radcom
