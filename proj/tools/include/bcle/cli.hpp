#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bcle::cli {

enum ExitCode { kOk = 0, kValidation = 1, kNumeric = 2, kPartial = 3 };

// args without the program name. Nothing reaches `out` unless the command
// succeeds (or finishes partially).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// 17 significant digits, round-trip exact
std::string fmt17(double x);

struct SuiteReport {
  std::string name;
  long checks = 0;
  double maxResidual = 0;
  double tolerance = 0;
  bool passed = false;
  std::string worst;  // parameters of the worst check
};

std::vector<std::string> suite_names();
// perturb scales one side of every comparison by (1 + perturb)
SuiteReport run_suite(const std::string& name, double perturb = 0);

}  // namespace bcle::cli
