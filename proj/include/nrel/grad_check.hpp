#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nrel/params.hpp"
#include "nrel/tape.hpp"

namespace nrel {

/// Scalar-valued computation over a bound parameter set.
using LossFn = std::function<Var<double>(Tape<double>&, ParamBinder<double>&)>;

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor for the relative error, so coordinates whose true
  /// gradient is ~0 are judged on absolute error.
  double abs_floor = 1e-6;
  /// Empty means every non-frozen parameter.
  std::vector<std::string> names;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  bool passed = false;
};

/// Central finite differences on every coordinate, compared against one
/// reverse-mode pass. 64-bit only.
GradCheckReport grad_check(const LossFn& f, ParamSet<double>& params, const GradCheckOptions& opt = {});

double relative_error(double analytic, double numeric, double abs_floor);

}  // namespace nrel
