#pragma once

#include <string>
#include <vector>

#include "radopf/conic_program.hpp"

namespace radopf {

/// Explicit Lagrangian dual of a standard-form cone program, re-expressed
/// in the same standard min-form so it can be handed to the solver as an
/// independent problem. For the primal
///
///   min c'x  s.t.  A x = b, x in K
///
/// the dual is  max b'y  s.t.  c - A'y = s, s in K*,  encoded here as
///
///   min (-b)'y  over variables (y, s~)
///
/// with one equality row per primal variable. Nonnegative and second-order
/// blocks are self-dual, so s~ = s there. A rotated block (u w >= ||t||^2)
/// has dual cone {4 a b >= ||c||^2}; its slack is stored as s~ in a rotated
/// block again, with s = (s~_u/2, s~_w/2, s~_t) absorbed into the row
/// coefficients. The block layout of the dual therefore mirrors the
/// primal's block layout exactly.
struct DualProgram {
  ConicProgram program;

  struct VarOrigin {
    enum class Kind { eq_multiplier, cone_slack };
    Kind kind = Kind::eq_multiplier;
    int primal_row = -1;    // for eq_multiplier
    int primal_block = -1;  // for cone_slack
    int offset = -1;        // position inside the primal block
    double scale = 1.0;     // s = scale * s~ for this coordinate
  };
  std::vector<VarOrigin> mapping;  // one entry per dual variable

  /// Optimal value of the original (max-form) dual given the min-form
  /// objective the solver reports.
  double dual_objective_value(double min_form_objective) const {
    return -min_form_objective;
  }

  std::string to_json_string(int indent = -1) const;
};

DualProgram build_dual(const ConicProgram& p);

struct GapResult {
  double absolute = 0.0;  // primal_value - dual_value
  double relative = 0.0;  // absolute / max(1, |primal_value|)
};

/// Both values must be finite (throws std::invalid_argument otherwise);
/// failed solves are handled by the caller as a distinct status.
GapResult duality_gap(double primal_value, double dual_value);

}  // namespace radopf
