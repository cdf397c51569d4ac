#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace skle {

struct CriterionResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  double budget = 0.0;  // seconds
};

struct AcceptanceOptions {
  // Smaller ensembles for the statistical criteria; the tolerances are unchanged.
  bool quick = false;
  std::vector<std::string> only;  // criterion keys; empty runs all
};

struct Criterion {
  std::string key;
  std::string name;
  double budget;
  std::function<CriterionResult(const AcceptanceOptions&)> run;
};

const std::vector<Criterion>& acceptance_criteria();

// Runs the selected criteria, printing one PASS/FAIL line each as it completes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt, std::ostream& out);

}  // namespace skle
