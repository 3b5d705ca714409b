#pragma once

#include <limits>
#include <string>
#include <vector>

#include "hbm/types.hpp"

namespace hbm {

enum class Stability { stable, unstable, unknown };
std::string to_string(Stability s);

struct TestValues {
  double fold = std::numeric_limits<double>::quiet_NaN();
  double branch_point = std::numeric_limits<double>::quiet_NaN();
  double neimark_sacker = std::numeric_limits<double>::quiet_NaN();
};

/// One converged periodic solution. `parameter` holds the second active
/// parameter on codim-2 curves and stays NaN on frequency branches.
struct BranchPoint {
  Vec z;
  double omega = 0.0;
  double parameter = std::numeric_limits<double>::quiet_NaN();
  Vec tangent;
  Stability stability = Stability::unknown;
  bool marginal = false;
  CVec floquet;
  TestValues tests;
  int iterations = 0;
  double residual_norm = 0.0;
};

enum class RunStatus { complete, partial };

struct Branch {
  std::vector<BranchPoint> points;
  RunStatus status = RunStatus::complete;
  std::string message;
};

}  // namespace hbm
