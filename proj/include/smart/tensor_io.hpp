#ifndef SMART_TENSOR_IO_HPP
#define SMART_TENSOR_IO_HPP

#include "smart/numeric.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace smart {

/// Malformed tensor text; the message starts with the offending line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

/// Line 1 "rows cols", then one line per row of space-separated values at 17 significant digits.
void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);

void dump_tensor(const Tensor& t, const std::string& path);
Tensor load_tensor(const std::string& path);

}  // namespace smart

#endif  // SMART_TENSOR_IO_HPP
