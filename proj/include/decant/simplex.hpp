#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

namespace decant::simplex {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class UnboundedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleProblem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// maximize c'x  subject to  A x <= b,  lower <= x <= upper.
// Lower bounds must be finite; upper bounds may be kInf.
struct Problem {
  std::vector<double> c;
  std::vector<std::vector<double>> a;  // dense rows, each of size c.size()
  std::vector<double> b;
  std::vector<double> lower;
  std::vector<double> upper;
};

struct Solution {
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
};

struct Options {
  double tol = 1e-9;
  int max_iterations = 100000;
};

// Dense bounded-variable primal simplex. Nonbasic variables sit at one of
// their bounds; upper bounds are handled by bound flips rather than extra rows.
// A phase-1 pass with artificial variables runs only when the all-at-lower
// start violates some row. Bland's rule picks entering and leaving variables.
Solution maximize(const Problem& p, const Options& opt = {});

}  // namespace decant::simplex
