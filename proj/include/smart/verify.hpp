#ifndef SMART_VERIFY_HPP
#define SMART_VERIFY_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace smart {

/// One invariant: worst value measured over its instances, against a tolerance.
struct VerifyLine {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct VerifyOptions {
  /// Multiplies the analytic Hopfield gradient under test; 1 leaves it intact.
  double gradient_scale = 1.0;
  /// Instances per randomized check.
  int instances = 1000;
  unsigned long long seed = 20240601ULL;
};

struct VerifyReport {
  std::vector<VerifyLine> lines;
  bool passed() const;
  const VerifyLine* find(const std::string& name) const;
};

/// identity, gradient, descent, rfa, fusion, trainer; verify() runs them in this order.
const std::vector<std::string>& suite_names();
VerifyReport verify_suite(const std::string& name, const VerifyOptions& options = {});

VerifyReport verify(const VerifyOptions& options = {});

/// "PASS name measured=... tol=..." per line, then an overall line.
void print_report(std::ostream& out, const VerifyReport& report);

}  // namespace smart

#endif  // SMART_VERIFY_HPP
