#include "smart/tensor_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace smart {

ParseError::ParseError(int line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

void write_tensor(std::ostream& out, const Tensor& t) {
  out << t.rows() << ' ' << t.cols() << '\n';
  char buf[40];
  for (Index r = 0; r < t.rows(); ++r) {
    for (Index c = 0; c < t.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", t(r, c));
      if (c > 0) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

namespace {

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parse_value(const std::string& tok, int line) {
  // strtod accepts the inf/nan spellings that %.17g produces.
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw ParseError(line, "invalid number '" + tok + "'");
  return v;
}

long parse_dim(const std::string& tok, int line) {
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0' || v < 0) throw ParseError(line, "invalid dimension '" + tok + "'");
  return v;
}

}  // namespace

Tensor read_tensor(std::istream& in) {
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing header 'rows cols'");
  ++lineno;
  const auto head = tokens(line);
  if (head.size() != 2) throw ParseError(lineno, "header must be 'rows cols', got '" + line + "'");
  const long rows = parse_dim(head[0], lineno);
  const long cols = parse_dim(head[1], lineno);
  const long expected = rows * cols;

  Tensor t(rows, cols);
  long seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (const auto& tok : tokens(line)) {
      if (seen >= expected)
        throw ParseError(lineno, "extra value '" + tok + "': header " + std::to_string(rows) + " " +
                                     std::to_string(cols) + " expects " + std::to_string(expected) + " values");
      t(seen / cols, seen % cols) = parse_value(tok, lineno);
      ++seen;
    }
  }
  if (seen < expected)
    throw ParseError(lineno, "header " + std::to_string(rows) + " " + std::to_string(cols) + " expects " +
                                 std::to_string(expected) + " values, found " + std::to_string(seen) + " (" +
                                 std::to_string(expected - seen) + " missing)");
  return t;
}

void dump_tensor(const Tensor& t, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("dump_tensor: cannot open '" + path + "' for writing");
  write_tensor(f, t);
  if (!f) throw std::runtime_error("dump_tensor: write to '" + path + "' failed");
}

Tensor load_tensor(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_tensor: cannot open '" + path + "'");
  return read_tensor(f);
}

}  // namespace smart
