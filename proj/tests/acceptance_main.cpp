#include <cstring>
#include <iostream>

#include "skle/acceptance.hpp"

int main(int argc, char** argv) {
  skle::AcceptanceOptions opt;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) opt.quick = true;
    else opt.only.emplace_back(argv[i]);
  }
  auto results = skle::run_acceptance(opt, std::cout);
  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::cout << results.size() - failed << "/" << results.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
