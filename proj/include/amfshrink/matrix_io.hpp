#pragma once

// Matrix files.
//
// Text: comma-separated, one row per line. Complex entries are written as
// "re+imj" / "re-imj"; a file is complex if any entry carries a 'j'.
//
// Binary, little-endian:
//   bytes 0..7   magic "AMFSHRK1"
//   u32          rows
//   u32          cols
//   u8           field tag (0 real, 1 complex)
//   f64...       row-major entries; complex entries as (re, im) pairs

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "amfshrink/field.hpp"

namespace amfshrink {

enum class IoErrorCode {
  Open,
  MagicMismatch,
  Truncated,
  DimensionOverflow,
  BadHeader,
  TrailingData,
  Parse,
};

inline std::string_view to_string(IoErrorCode c) {
  switch (c) {
    case IoErrorCode::Open: return "open";
    case IoErrorCode::MagicMismatch: return "magic-mismatch";
    case IoErrorCode::Truncated: return "truncated";
    case IoErrorCode::DimensionOverflow: return "dimension-overflow";
    case IoErrorCode::BadHeader: return "bad-header";
    case IoErrorCode::TrailingData: return "trailing-data";
    case IoErrorCode::Parse: return "parse";
  }
  return "?";
}

class IoError : public DataError {
 public:
  IoError(IoErrorCode code, const std::string& what)
      : DataError(std::string(to_string(code)) + ": " + what), code_(code) {}
  IoErrorCode code() const noexcept { return code_; }

 private:
  IoErrorCode code_;
};

/// A matrix read from or written to disk. Values are held as complex; for a
/// real grid the imaginary parts are zero.
struct MatrixGrid {
  Field field = Field::Real;
  Eigen::MatrixXcd values;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  template <FieldScalar S>
  static MatrixGrid from(const Matrix<S>& m) {
    return MatrixGrid{field_of<S>, m.template cast<Complex>()};
  }

  /// Real view; fails if the grid is complex with nonzero imaginary parts.
  template <FieldScalar S>
  Matrix<S> as() const {
    if constexpr (std::same_as<S, Complex>) {
      return values;
    } else {
      if (field == Field::Complex && values.imag().cwiseAbs().maxCoeff() != 0.0)
        throw DataError("complex matrix supplied where a real one is required");
      return values.real();
    }
  }
};

inline constexpr std::array<char, 8> kMatrixMagic = {'A', 'M', 'F', 'S', 'H', 'R', 'K', '1'};
inline constexpr std::uint64_t kMaxMatrixEntries = std::uint64_t{1} << 28;

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "binary matrix format assumes a little-endian host");

inline std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  (void)ec;
  return std::string(buf.data(), ptr);
}

inline double parse_double(std::string_view s, std::string_view context) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw IoError(IoErrorCode::Parse, "cannot parse number '" + std::string(s) + "' in " +
                                          std::string(context));
  return v;
}

}  // namespace detail

/// Parses "3", "-1.5e-3", "1+2j", "1-2j", "2j", "-j".
inline Complex parse_entry(std::string_view s, bool* had_j = nullptr) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) throw IoError(IoErrorCode::Parse, "empty entry");
  if (s.back() != 'j' && s.back() != 'i') {
    if (had_j) *had_j = false;
    return {detail::parse_double(s, "entry"), 0.0};
  }
  if (had_j) *had_j = true;
  std::string_view body = s.substr(0, s.size() - 1);
  // Split at the last sign that is not a leading sign or an exponent sign.
  std::size_t split = std::string_view::npos;
  for (std::size_t i = body.size(); i-- > 1;) {
    if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  auto imag_of = [](std::string_view t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    return detail::parse_double(t, "imaginary part");
  };
  if (split == std::string_view::npos) return {0.0, imag_of(body)};
  return {detail::parse_double(body.substr(0, split), "real part"), imag_of(body.substr(split))};
}

inline std::string format_entry(const Complex& z, Field field) {
  if (field == Field::Real) return detail::format_double(z.real());
  std::string out = detail::format_double(z.real());
  const std::string im = detail::format_double(z.imag());
  if (im.front() != '-') out += '+';
  out += im;
  out += 'j';
  return out;
}

inline MatrixGrid parse_matrix_text(std::string_view text) {
  std::vector<std::vector<Complex>> rows;
  bool any_j = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    if (line.front() == '#') continue;
    std::vector<Complex> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      bool had_j = false;
      row.push_back(parse_entry(line.substr(start, comma == std::string_view::npos
                                                       ? std::string_view::npos
                                                       : comma - start),
                                &had_j));
      any_j = any_j || had_j;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError(IoErrorCode::Parse, "row " + std::to_string(rows.size() + 1) + " has " +
                                            std::to_string(row.size()) + " entries, expected " +
                                            std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(IoErrorCode::Parse, "no matrix rows found");
  MatrixGrid g;
  g.field = any_j ? Field::Complex : Field::Real;
  g.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      g.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return g;
}

inline std::string format_matrix_text(const MatrixGrid& g) {
  std::string out;
  for (Index i = 0; i < g.rows(); ++i) {
    for (Index j = 0; j < g.cols(); ++j) {
      if (j) out += ',';
      out += format_entry(g.values(i, j), g.field);
    }
    out += '\n';
  }
  return out;
}

inline std::string encode_matrix_binary(const MatrixGrid& g) {
  if (g.rows() < 1 || g.cols() < 1) throw IoError(IoErrorCode::BadHeader, "empty matrix");
  if (static_cast<std::uint64_t>(g.rows()) > UINT32_MAX ||
      static_cast<std::uint64_t>(g.cols()) > UINT32_MAX)
    throw IoError(IoErrorCode::DimensionOverflow, "dimensions exceed u32");
  std::string out(kMatrixMagic.begin(), kMatrixMagic.end());
  auto put = [&out](const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
  };
  const std::uint32_t rows = static_cast<std::uint32_t>(g.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(g.cols());
  const std::uint8_t tag = g.field == Field::Complex ? 1 : 0;
  put(&rows, 4);
  put(&cols, 4);
  put(&tag, 1);
  for (Index i = 0; i < g.rows(); ++i)
    for (Index j = 0; j < g.cols(); ++j) {
      const double re = g.values(i, j).real();
      put(&re, 8);
      if (tag) {
        const double im = g.values(i, j).imag();
        put(&im, 8);
      }
    }
  return out;
}

inline MatrixGrid decode_matrix_binary(std::string_view bytes) {
  constexpr std::size_t header = 8 + 4 + 4 + 1;
  if (bytes.size() < 8) throw IoError(IoErrorCode::Truncated, "file shorter than magic");
  if (std::memcmp(bytes.data(), kMatrixMagic.data(), 8) != 0)
    throw IoError(IoErrorCode::MagicMismatch, "magic is not AMFSHRK1");
  if (bytes.size() < header) throw IoError(IoErrorCode::Truncated, "incomplete header");
  std::uint32_t rows = 0, cols = 0;
  std::uint8_t tag = 0;
  std::memcpy(&rows, bytes.data() + 8, 4);
  std::memcpy(&cols, bytes.data() + 12, 4);
  std::memcpy(&tag, bytes.data() + 16, 1);
  if (tag > 1) throw IoError(IoErrorCode::BadHeader, "unknown field tag " + std::to_string(tag));
  if (rows == 0 || cols == 0) throw IoError(IoErrorCode::BadHeader, "zero dimension");
  const std::uint64_t entries = std::uint64_t{rows} * cols;
  if (entries > kMaxMatrixEntries)
    throw IoError(IoErrorCode::DimensionOverflow,
                  std::to_string(rows) + "x" + std::to_string(cols) + " exceeds entry limit");
  const std::uint64_t payload = entries * (tag ? 16u : 8u);
  const std::uint64_t available = bytes.size() - header;
  if (available < payload)
    throw IoError(IoErrorCode::Truncated, "expected " + std::to_string(payload) +
                                              " payload bytes, found " + std::to_string(available));
  if (available > payload) throw IoError(IoErrorCode::TrailingData, "bytes after payload");

  MatrixGrid g;
  g.field = tag ? Field::Complex : Field::Real;
  g.values.resize(rows, cols);
  const char* p = bytes.data() + header;
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) {
      double re = 0.0, im = 0.0;
      std::memcpy(&re, p, 8);
      p += 8;
      if (tag) {
        std::memcpy(&im, p, 8);
        p += 8;
      }
      g.values(i, j) = Complex(re, im);
    }
  return g;
}

enum class MatrixFormat { Text, Binary };

/// Binary iff the path ends in ".bin".
inline MatrixFormat format_for_path(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0 ? MatrixFormat::Binary
                                                                           : MatrixFormat::Text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrorCode::Open, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoErrorCode::Open, "cannot write '" + path + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError(IoErrorCode::Open, "write failed for '" + path + "'");
}

inline MatrixGrid read_matrix(const std::string& path) {
  const std::string data = read_file(path);
  if (format_for_path(path) == MatrixFormat::Binary) return decode_matrix_binary(data);
  return parse_matrix_text(data);
}

inline void write_matrix(const MatrixGrid& g, const std::string& path) {
  write_file(path, format_for_path(path) == MatrixFormat::Binary ? encode_matrix_binary(g)
                                                                 : format_matrix_text(g));
}

}  // namespace amfshrink
