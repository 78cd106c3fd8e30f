#include "nrel/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace nrel {

double relative_error(double analytic, double numeric, double abs_floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), abs_floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double evaluate(const LossFn& f, const ParamSet<double>& params) {
  Tape<double> tape(false);
  ParamBinder<double> bind(tape, params);
  const double v = f(tape, bind).value()[0];
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
  return v;
}

}  // namespace

GradCheckReport grad_check(const LossFn& f, ParamSet<double>& params, const GradCheckOptions& opt) {
  Gradients<double> analytic(params);
  {
    Tape<double> tape(true);
    ParamBinder<double> bind(tape, params);
    auto loss = f(tape, bind);
    if (!std::isfinite(loss.value()[0])) throw NumericError("grad_check: non-finite loss");
    tape.backward(loss);
    bind.accumulate_into(analytic);
  }

  std::vector<std::size_t> selected;
  if (opt.names.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i)
      if (!params.entry(i).frozen) selected.push_back(i);
  } else {
    for (const auto& n : opt.names) selected.push_back(params.index_of(n));
  }

  GradCheckReport report;
  for (std::size_t pi : selected) {
    auto& value = params.entry(pi).value;
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double saved = value[k];
      value[k] = saved + opt.step;
      const double up = evaluate(f, params);
      value[k] = saved - opt.step;
      const double down = evaluate(f, params);
      value[k] = saved;
      const double numeric = (up - down) / (2.0 * opt.step);
      const double a = analytic.values[pi][k];
      const double err = relative_error(a, numeric, opt.abs_floor);
      ++report.coordinates;
      if (report.worst_param.empty() || err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_param = params.entry(pi).name;
        report.worst_index = k;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_error < opt.tolerance;
  return report;
}

}  // namespace nrel
