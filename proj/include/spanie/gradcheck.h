// Central finite-difference verification of the analytic gradients on tiny
// random sentences and models.

#ifndef SPANIE_GRADCHECK_H_
#define SPANIE_GRADCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

#include "spanie/model.h"

namespace spanie {

struct GradCheckOptions {
  std::uint64_t seed = 1;
  bool use_syntax_feature = false;
  Activation activation = Activation::kRelu;
  // Dropout with a mask frozen across evaluations, so the dropout backward
  // path is checked too.
  double dropout = 0.3;
  double epsilon = 1e-6;
  double tolerance = 1e-5;
  // Denominator floor of the relative error, so gradients that are zero up
  // to rounding are compared absolutely.
  double floor = 1e-4;
};

struct GradCheckGroup {
  std::string model;  // "predicate" or "argument"
  std::string tensor;
  std::size_t checked = 0;
  // Coordinates whose perturbation flipped a ReLU on or off.
  std::size_t skipped = 0;
  double max_relative_error = 0.0;
  double max_abs_gradient = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  double max_relative_error = 0.0;
  bool passed = false;
};

// Checks every coordinate of every tensor of both a predicate and an argument
// model on one random sentence of 4 to 6 tokens.
GradCheckReport RunGradCheck(const GradCheckOptions &options);

double RelativeError(double analytic, double numeric, double floor);

}  // namespace spanie

#endif  // SPANIE_GRADCHECK_H_
