#pragma once

#include <limits>
#include <string>

#include "radopf/conic_program.hpp"

namespace radopf {

enum class SolveStatus {
  optimal,
  primal_infeasible,
  dual_infeasible,
  max_iters,
  numerical_failure
};

const char* to_string(SolveStatus status);

struct SolveOptions {
  double tol_feas = 1e-8;
  double tol_gap = 1e-8;
  int max_iters = 200;
  double static_reg = 1e-9;  ///< static regularization on the KKT system
  bool presolve = true;
  bool equilibrate = true;
  bool verbose = false;
};

/// Result of one solve. At status == optimal the KKT measures are
/// certified:
///   ||Ax-b|| / (1+||b||)    <= tol_feas
///   ||A'y+s-c|| / (1+||c||) <= tol_feas
///   x's / (1+|c'x|)         <= tol_gap
/// with x in K and s in K* within tol_feas. At max_iters the best iterate
/// is returned with its residuals so callers can decide whether it is
/// usable. For primal_infeasible, (y, s) is a Farkas ray: b'y = 1,
/// -A'y = s in K*. For dual_infeasible, x is an unbounded improving ray:
/// c'x = -1, A x ~ 0, x in K.
struct Solution {
  SolveStatus status = SolveStatus::numerical_failure;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd s;
  double primal_obj = std::numeric_limits<double>::quiet_NaN();
  double dual_obj = std::numeric_limits<double>::quiet_NaN();

  struct Residuals {
    double primal = std::numeric_limits<double>::quiet_NaN();
    double dual = std::numeric_limits<double>::quiet_NaN();
    double gap = std::numeric_limits<double>::quiet_NaN();
    bool x_in_cone = false;
    bool s_in_dual_cone = false;
  } residuals;

  int iterations = 0;
};

/// Homogeneous self-dual interior point method with Nesterov-Todd scaling
/// and Mehrotra predictor-corrector, preceded by presolve unless disabled.
/// Deterministic: identical inputs and options produce identical iterates.
Solution solve(const ConicProgram& p, const SolveOptions& opts = {});

}  // namespace radopf
