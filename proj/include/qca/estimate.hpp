#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qca {

enum class Method { closed_form, quadrature, monte_carlo, lattice_sum, series };

std::string_view to_string(Method m);

/// A numeric value with an absolute error bound and the method that produced it.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
  Method method = Method::closed_form;

  struct Breakdown {
    std::vector<double> per_term;        // contribution of term n (or shell, body count)
    std::vector<double> per_term_error;  // discretization or statistical error of term n
    double truncation_tail = 0.0;        // bound on everything beyond the last term
    double statistical = 0.0;            // Monte Carlo part of `error`, quoted at 3 sigma
    double discretization = 0.0;         // quadrature / grid part of `error`
  } breakdown;

  /// Set when the truncation tail exceeds the requested tolerance.
  bool tail_warning = false;
  std::string note;

  double lower() const { return value - error; }
  double upper() const { return value + error; }
};

}  // namespace qca
