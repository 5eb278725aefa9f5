// Acceptance battery: one line per criterion, exit status 1 on any failure.
//
//   acceptance [fast|full] [criterion ids...]

#include <cstdlib>
#include <iostream>
#include <string>

#include "coalflow/acceptance.hpp"

int main(int argc, char** argv) {
  try {
    auto settings = coalflow::suite_settings(argc > 1 ? argv[1] : "full");
    if (argc > 2) {
      settings.criteria.clear();
      for (int i = 2; i < argc; ++i) settings.criteria.push_back(std::stoi(argv[i]));
    }
    std::cout << "suite " << settings.suite << ", seed " << settings.seed << "\n";
    bool all = true;
    for (int id : settings.criteria) {
      const auto result = coalflow::run_criterion(id, settings);
      std::cout << coalflow::summary_line(result) << std::endl;
      for (const auto& r : result.reports) {
        if (!r.pass()) std::cout << "    failed: " << r.to_json().dump() << std::endl;
      }
      all = all && result.pass();
    }
    return all ? EXIT_SUCCESS : EXIT_FAILURE;
  } catch (const std::exception& e) {
    std::cerr << "acceptance: " << e.what() << "\n";
    return EXIT_FAILURE;
  }
}
