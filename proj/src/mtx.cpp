#include "riemopt/mtx.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace riemopt {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos) continue;
    if (line[pos] == '%') continue;
    return true;
  }
  return false;
}

}  // namespace

DenseMat read_matrix_market(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("%%MatrixMarket", 0) != 0)
    throw MtxFormatError("missing %%MatrixMarket header");

  std::istringstream hs(header);
  std::string tag, object, format, field, symmetry;
  hs >> tag >> object >> format >> field >> symmetry;
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);

  if (object != "matrix") throw MtxFormatError("unsupported object: " + object);
  if (field != "real" && field != "integer")
    throw MtxFormatError("unsupported field: " + field);
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw MtxFormatError("unsupported symmetry: " + symmetry);

  std::string line;
  if (!next_data_line(in, line)) throw MtxFormatError("missing size line");
  std::istringstream sz(line);

  if (format == "coordinate") {
    long rows = 0, cols = 0, nnz = 0;
    if (!(sz >> rows >> cols >> nnz) || rows <= 0 || cols <= 0 || nnz < 0)
      throw MtxFormatError("bad coordinate size line: " + line);
    DenseMat a = DenseMat::Zero(rows, cols);
    for (long k = 0; k < nnz; ++k) {
      if (!next_data_line(in, line)) throw MtxFormatError("unexpected end of entries");
      std::istringstream es(line);
      long i = 0, j = 0;
      double v = 0.0;
      if (!(es >> i >> j >> v) || i < 1 || i > rows || j < 1 || j > cols)
        throw MtxFormatError("bad entry: " + line);
      a(i - 1, j - 1) = v;
      if (symmetric) a(j - 1, i - 1) = v;
    }
    return a;
  }

  if (format == "array") {
    long rows = 0, cols = 0;
    if (!(sz >> rows >> cols) || rows <= 0 || cols <= 0)
      throw MtxFormatError("bad array size line: " + line);
    if (symmetric && rows != cols)
      throw MtxFormatError("symmetric array must be square");
    DenseMat a = DenseMat::Zero(rows, cols);
    // Array data is column-major; symmetric files store the lower triangle.
    for (long j = 0; j < cols; ++j) {
      for (long i = symmetric ? j : 0; i < rows; ++i) {
        if (!next_data_line(in, line)) throw MtxFormatError("unexpected end of entries");
        std::istringstream es(line);
        double v = 0.0;
        if (!(es >> v)) throw MtxFormatError("bad value: " + line);
        a(i, j) = v;
        if (symmetric) a(j, i) = v;
      }
    }
    return a;
  }

  throw MtxFormatError("unsupported format: " + format);
}

DenseMat read_matrix_market_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MtxFormatError("cannot open " + path);
  return read_matrix_market(in);
}

}  // namespace riemopt
