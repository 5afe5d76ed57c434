#include "ozemu/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ozemu/error.hpp"

namespace ozemu {
namespace {

constexpr const char* kBanner = "%%MatrixMarket matrix array real general";

std::string lower(std::string s) {
  std::ranges::transform(s, s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double parse_double(const std::string& tok) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) throw Error(Errc::Io, "bad value '" + tok + "'");
  return v;
}

}  // namespace

void write_matrix_market(std::ostream& out, const DenseMatrix& m, const std::string& comment) {
  out << kBanner << '\n';
  if (!comment.empty()) out << "% " << comment << '\n';
  out << m.rows() << ' ' << m.cols() << '\n';
  char buf[64];
  for (double v : m.values()) {
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
    out << '\n';
  }
}

DenseMatrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::Io, "empty MatrixMarket stream");
  std::istringstream banner(lower(line));
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%matrixmarket" || object != "matrix") throw Error(Errc::Io, "missing MatrixMarket banner");
  if (format != "array" || field != "real" || symmetry != "general") {
    throw Error(Errc::Io, "only 'array real general' is supported");
  }
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '%') continue;
    break;
  }
  std::istringstream dims(line);
  long long rows = -1;
  long long cols = -1;
  if (!(dims >> rows >> cols) || rows < 0 || cols < 0) throw Error(Errc::Io, "bad size line '" + line + "'");

  DenseMatrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  std::string tok;
  for (double& v : m.values()) {
    if (!(in >> tok)) throw Error(Errc::Io, "truncated MatrixMarket data");
    v = parse_double(tok);
  }
  if (in >> tok) throw Error(Errc::Io, "trailing data after matrix values");
  return m;
}

void save_matrix_market(const std::string& path, const DenseMatrix& m, const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot open '" + path + "' for writing");
  write_matrix_market(out, m, comment);
  if (!out) throw Error(Errc::Io, "write to '" + path + "' failed");
}

DenseMatrix load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  return read_matrix_market(in);
}

}  // namespace ozemu
