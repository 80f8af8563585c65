#pragma once

#include <optional>
#include <string>
#include <vector>

namespace cgeig {

// One row of a convergence trace.
struct IterationRecord {
  int iter = 0;
  double theta = 0.0;
  std::optional<double> theta_err;     // theta - lambda1 when a reference is known
  double nu = 0.0;                     // |r|_2 / |x|_M
  std::optional<double> phi;           // |cos angle_M(a, x)| while augmentation is tracked
  std::optional<double> delta_lambda;  // |theta_i / theta_{i-1} - 1|^{1/2}
  std::optional<double> delta_phi;     // |phi_i / phi_{i-1} - 1|
  std::string event;                   // '|'-joined tokens, empty when nothing happened

  bool operator==(const IterationRecord&) const = default;
};

using ConvergenceHistory = std::vector<IterationRecord>;

}  // namespace cgeig
