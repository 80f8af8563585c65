#include "cgeig/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace cgeig {
namespace {

enum class Layout { kCoordinate, kArray };
enum class Field { kReal, kInteger, kComplex, kPattern };
enum class Symmetry { kGeneral, kSymmetric, kHermitian, kSkew };

struct Header {
  Layout layout;
  Field field;
  Symmetry symmetry;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
  throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line) + ": " + what);
}

Header parse_header(const std::filesystem::path& path, const std::string& line) {
  std::istringstream in(line);
  std::string banner, object, layout, field, symmetry;
  in >> banner >> object >> layout >> field >> symmetry;
  if (banner != "%%MatrixMarket") parse_fail(path, 1, "missing %%MatrixMarket banner");
  if (lower(object) != "matrix") parse_fail(path, 1, "only 'matrix' objects are supported");
  Header h{};
  layout = lower(layout);
  if (layout == "coordinate") {
    h.layout = Layout::kCoordinate;
  } else if (layout == "array") {
    h.layout = Layout::kArray;
  } else {
    parse_fail(path, 1, "unknown format '" + layout + "'");
  }
  field = lower(field);
  if (field == "real" || field == "double") {
    h.field = Field::kReal;
  } else if (field == "integer") {
    h.field = Field::kInteger;
  } else if (field == "complex") {
    h.field = Field::kComplex;
  } else if (field == "pattern") {
    h.field = Field::kPattern;
  } else {
    parse_fail(path, 1, "unknown field '" + field + "'");
  }
  symmetry = lower(symmetry);
  if (symmetry == "general") {
    h.symmetry = Symmetry::kGeneral;
  } else if (symmetry == "symmetric") {
    h.symmetry = Symmetry::kSymmetric;
  } else if (symmetry == "hermitian") {
    h.symmetry = Symmetry::kHermitian;
  } else if (symmetry == "skew-symmetric") {
    h.symmetry = Symmetry::kSkew;
  } else {
    parse_fail(path, 1, "unknown symmetry '" + symmetry + "'");
  }
  return h;
}

template <Scalar S>
S read_value(std::istringstream& in, Field field, const std::filesystem::path& path,
             std::size_t line) {
  double re = 0.0;
  if (!(in >> re)) parse_fail(path, line, "missing value");
  if (field == Field::kComplex) {
    double im = 0.0;
    if (!(in >> im)) parse_fail(path, line, "missing imaginary part");
    if constexpr (std::same_as<S, double>) {
      parse_fail(path, line, "complex entries require a complex operator");
    } else {
      return S(re, im);
    }
  }
  return S(re);
}

template <Scalar S>
S conj_of(const S& v) {
  if constexpr (std::same_as<S, double>) {
    return v;
  } else {
    return std::conj(v);
  }
}

// Next line that is neither blank nor a comment.
bool next_data_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') continue;
    return true;
  }
  return false;
}

}  // namespace

template <Scalar S>
HermitianOperator<S> load_matrix_market(const std::filesystem::path& path,
                                        const MatrixMarketOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) parse_fail(path, 1, "empty file");
  ++line_no;
  const Header header = parse_header(path, line);
  if (header.field == Field::kPattern) parse_fail(path, 1, "values required");
  if (header.symmetry == Symmetry::kSkew) {
    parse_fail(path, 1, "skew-symmetric matrices are not Hermitian");
  }

  if (!next_data_line(in, line, line_no)) parse_fail(path, line_no, "missing size line");
  long rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream size_in(line);
    if (!(size_in >> rows >> cols)) parse_fail(path, line_no, "malformed size line");
    if (header.layout == Layout::kCoordinate && !(size_in >> nnz)) {
      parse_fail(path, line_no, "coordinate size line needs an entry count");
    }
  }
  if (rows <= 0 || cols <= 0) parse_fail(path, line_no, "non-positive dimensions");
  if (rows != cols) parse_fail(path, line_no, "matrix is not square");

  const bool triangle = header.symmetry != Symmetry::kGeneral;
  std::vector<Eigen::Triplet<S>> triplets;
  auto add = [&](long i, long j, const S& v) {
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    if (triangle && i != j) {
      triplets.emplace_back(static_cast<int>(j), static_cast<int>(i), conj_of(v));
    }
  };

  if (header.layout == Layout::kCoordinate) {
    triplets.reserve(static_cast<std::size_t>(triangle ? 2 * nnz : nnz));
    for (long k = 0; k < nnz; ++k) {
      if (!next_data_line(in, line, line_no)) {
        parse_fail(path, line_no, "expected " + std::to_string(nnz) + " entries, found " +
                                      std::to_string(k));
      }
      std::istringstream entry(line);
      long i = 0, j = 0;
      if (!(entry >> i >> j)) parse_fail(path, line_no, "malformed entry indices");
      if (i < 1 || i > rows || j < 1 || j > cols) parse_fail(path, line_no, "index out of range");
      const S v = read_value<S>(entry, header.field, path, line_no);
      add(i - 1, j - 1, v);
    }
  } else {
    // Column-major; symmetric variants list only the lower triangle.
    for (long j = 0; j < cols; ++j) {
      for (long i = triangle ? j : 0; i < rows; ++i) {
        if (!next_data_line(in, line, line_no)) parse_fail(path, line_no, "too few array entries");
        std::istringstream entry(line);
        const S v = read_value<S>(entry, header.field, path, line_no);
        if (v != S(0)) add(i, j, v);
      }
    }
  }
  if (next_data_line(in, line, line_no)) parse_fail(path, line_no, "trailing data after entries");

  SparseMat<S> mat(rows, cols);
  mat.setFromTriplets(triplets.begin(), triplets.end());
  mat.makeCompressed();

  if (header.symmetry == Symmetry::kGeneral) {
    SparseMat<S> adj = mat.adjoint();
    const double defect = (mat - adj).norm();
    if (defect > options.hermitian_tol * mat.norm() && !options.symmetrize) {
      throw Error(ErrorCode::kInvalidInput,
                  path.string() + ": general matrix is not Hermitian (set symmetrize to accept)");
    }
    mat = SparseMat<S>((mat + adj) * S(0.5));
  }
  return HermitianOperator<S>::from_sparse(std::move(mat), options.hermitian_tol);
}

template <Scalar S>
void write_matrix_market(const std::filesystem::path& path, const HermitianOperator<S>& op) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  const SparseMat<S> mat = op.to_sparse();
  constexpr bool is_complex = std::same_as<S, Complex>;
  std::vector<std::string> lines;
  char buf[128];
  for (int i = 0; i < mat.outerSize(); ++i) {
    for (typename SparseMat<S>::InnerIterator it(mat, i); it; ++it) {
      if (it.col() > i) continue;
      if constexpr (is_complex) {
        std::snprintf(buf, sizeof(buf), "%d %d %.17g %.17g", i + 1, static_cast<int>(it.col()) + 1,
                      it.value().real(), it.value().imag());
      } else {
        std::snprintf(buf, sizeof(buf), "%d %d %.17g", i + 1, static_cast<int>(it.col()) + 1,
                      it.value());
      }
      lines.emplace_back(buf);
    }
  }
  out << "%%MatrixMarket matrix coordinate " << (is_complex ? "complex hermitian" : "real symmetric")
      << "\n";
  out << mat.rows() << " " << mat.cols() << " " << lines.size() << "\n";
  for (const auto& l : lines) out << l << "\n";
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

template HermitianOperator<double> load_matrix_market<double>(const std::filesystem::path&,
                                                              const MatrixMarketOptions&);
template HermitianOperator<Complex> load_matrix_market<Complex>(const std::filesystem::path&,
                                                                const MatrixMarketOptions&);
template void write_matrix_market<double>(const std::filesystem::path&,
                                          const HermitianOperator<double>&);
template void write_matrix_market<Complex>(const std::filesystem::path&,
                                           const HermitianOperator<Complex>&);

}  // namespace cgeig
