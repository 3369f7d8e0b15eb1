#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "accelkit/problems.hpp"

namespace accelkit {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool blank_or_comment(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '%';
}

}  // namespace

MatrixMarketMatrix parse_matrix_market(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorCode::ParseError, "empty Matrix Market stream");

  std::istringstream hs(header);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") throw Error(ErrorCode::ParseError, "missing %%MatrixMarket banner");
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (object != "matrix") throw Error(ErrorCode::ParseError, "unsupported object '" + object + "'");
  if (format != "coordinate") throw Error(ErrorCode::UnsupportedFormat, "only coordinate format is supported");
  if (field == "complex" || field == "pattern") {
    throw Error(ErrorCode::UnsupportedFormat, "field '" + field + "' is not supported");
  }
  if (field != "real" && field != "integer" && field != "double") {
    throw Error(ErrorCode::ParseError, "unknown field '" + field + "'");
  }
  if (symmetry == "skew-symmetric" || symmetry == "hermitian") {
    throw Error(ErrorCode::UnsupportedFormat, "symmetry '" + symmetry + "' is not supported");
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    throw Error(ErrorCode::ParseError, "unknown symmetry '" + symmetry + "'");
  }
  const bool symmetric = symmetry == "symmetric";

  std::string line;
  do {
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "missing size line");
  } while (blank_or_comment(line));

  long long rows = 0, cols = 0, entries = 0;
  {
    std::istringstream ls(line);
    if (!(ls >> rows >> cols >> entries) || rows <= 0 || cols <= 0 || entries < 0) {
      throw Error(ErrorCode::ParseError, "malformed size line '" + line + "'");
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(symmetric ? 2 * entries : entries));
  long long read = 0;
  while (read < entries && std::getline(in, line)) {
    if (blank_or_comment(line)) continue;
    std::istringstream ls(line);
    long long i = 0, j = 0;
    double v = 0.0;
    if (!(ls >> i >> j >> v)) throw Error(ErrorCode::ParseError, "malformed entry '" + line + "'");
    if (i < 1 || i > rows || j < 1 || j > cols) {
      throw Error(ErrorCode::ParseError, "entry index out of range in '" + line + "'");
    }
    triplets.emplace_back(static_cast<Index>(i - 1), static_cast<Index>(j - 1), v);
    if (symmetric && i != j) triplets.emplace_back(static_cast<Index>(j - 1), static_cast<Index>(i - 1), v);
    ++read;
  }
  if (read != entries) {
    throw Error(ErrorCode::ParseError, "expected " + std::to_string(entries) + " entries, found " +
                                           std::to_string(read));
  }

  MatrixMarketMatrix out;
  out.matrix.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.matrix.makeCompressed();
  out.info.rows = static_cast<Index>(rows);
  out.info.cols = static_cast<Index>(cols);
  out.info.stored_entries = static_cast<Index>(entries);
  out.info.nonzeros = out.matrix.nonZeros();
  out.info.symmetric = symmetric;
  out.info.field = field;
  out.info.symmetry = symmetry;
  return out;
}

MatrixMarketMatrix read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return parse_matrix_market(in);
}

LinearOperator load_matrix_market(const std::filesystem::path& path) {
  auto mm = read_matrix_market(path);
  if (mm.info.rows != mm.info.cols) throw Error(ErrorCode::UnsupportedFormat, "operator matrix must be square");
  return make_sparse_operator(std::move(mm.matrix), path.filename().string());
}

}  // namespace accelkit
