#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "avtopo/topoloss.hpp"

namespace avtopo::verify {

/// Random arteriole/venule ground truth with crossings and uncertain pixels.
AVGroundTruth random_truth(std::uint64_t seed, Index rows, Index cols);

struct GradCheckOptions {
  int instances = 20;
  int size = 8;          ///< side of each random instance
  double h = 1e-5;       ///< central-difference step
  double min_grad = 1e-6;  ///< pixels with a smaller analytic gradient are skipped
  std::uint64_t seed = 5000;
  LossConfig config;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  long pixels = 0;  ///< gradients compared
  int instances = 0;
};

/// Analytic total-loss gradient against central differences on random
/// instances with distinct prediction values (so no pooling ties). Instances
/// alternate between the two gate states.
GradCheckReport gradient_check(const GradCheckOptions& options, int jobs = 1);

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Runs one command line (without the program name) and returns its exit code.
using CommandRunner =
    std::function<int(const std::vector<std::string>&, std::ostream&, std::ostream&)>;

struct AcceptanceOptions {
  std::vector<int> only;  ///< empty runs every criterion
  /// Needed by the determinism criterion, which fails without one.
  CommandRunner runner;
  /// Scratch space for the determinism criterion; a fresh directory under the
  /// system temp path when empty. Removed afterwards.
  std::filesystem::path work_dir;
};

/// Prints one "PASS"/"FAIL" line per criterion to `out` and the runtimes to
/// `err`. A criterion with a runtime limit fails when it runs over.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream& out,
                                            std::ostream& err);

/// Ids of all criteria in order.
std::vector<int> criterion_ids();

}  // namespace avtopo::verify
