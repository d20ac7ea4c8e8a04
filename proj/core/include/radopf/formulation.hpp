#pragma once

#include <optional>
#include <string>
#include <vector>

#include "radopf/conic_program.hpp"
#include "radopf/network.hpp"

namespace radopf {

/// Objective over (p, v, l). `total_loss` is sum over branches of r * l;
/// `linear` takes explicit weights keyed by node/branch labels. Nonlinear
/// objectives are out of scope: the programs stay pure SOCPs.
struct ObjectiveSpec {
  enum class Kind { total_loss, linear };

  struct Term {
    enum class Role { node_p, node_v, branch_l };
    Role role = Role::node_p;
    std::string key;  ///< node label (node_p, node_v) or branch child label
    double weight = 0.0;
  };

  Kind kind = Kind::total_loss;
  std::vector<Term> terms;  // used when kind == linear

  static ObjectiveSpec loss() { return {}; }
  static ObjectiveSpec linear(std::vector<Term> terms) {
    return {Kind::linear, std::move(terms)};
  }

  std::string to_json_string(int indent = -1) const;
  static ObjectiveSpec from_json_string(const std::string& text);
};

/// Branch-flow quantities of a candidate operating point. Indexed like the
/// network: branch arrays by child-1, node arrays by node-1. Feasibility is
/// a property to evaluate (see residuals()), not one the type enforces.
struct PhysicalPoint {
  std::vector<double> P;  ///< active flow child->parent, per branch
  std::vector<double> Q;  ///< reactive flow, per branch
  std::vector<double> l;  ///< squared current, per branch
  std::vector<double> v;  ///< squared voltage, per non-root node
  std::vector<double> p;  ///< net active injection, per non-root node
  std::vector<double> q;  ///< net reactive injection, per non-root node
  double p0 = 0.0;
  double q0 = 0.0;
};

/// Point in the reformulation variables, per branch: tau >= 0 and beta.
struct ReformPoint {
  std::vector<double> tau;
  std::vector<double> beta;
};

/// Signed constraint evaluations of a PhysicalPoint against the branch flow
/// model. Equality entries are residuals (0 = satisfied); bound entries are
/// the amount outside the box (<= 0 means inside, with margin |value|);
/// cone_slack is v_i l_ij - |S_ij|^2 (>= 0 means the relaxed constraint
/// holds); recovery_gap is |l_ij - |S_ij|^2 / v_i|, the distance from the
/// original nonconvex equality, unset where v_i <= 0.
struct ResidualReport {
  std::vector<double> balance_p;       // per non-root node
  std::vector<double> balance_q;
  double root_balance_p = 0.0;
  double root_balance_q = 0.0;
  std::vector<double> voltage_drop;    // per branch
  std::vector<double> l_bound;         // per branch
  std::vector<double> v_bound;         // per non-root node
  std::vector<double> p_bound;
  std::vector<double> q_bound;
  std::vector<double> cone_slack;      // per branch
  std::vector<std::optional<double>> recovery_gap;  // per branch

  double max_equality_residual() const;
  double max_bound_violation() const;
  double min_cone_slack() const;
  double max_recovery_gap() const;  // NaN entries skipped
};

/// Margins of the reformulated constraint systems at a (tau, beta) point.
/// All entries are slacks: >= 0 means the constraint holds.
struct ReformMargins {
  std::vector<double> tau_lo;        // tau >= 0, per branch
  std::vector<double> tau_hi;       // |z|^2 lbar - tau, per branch
  std::vector<double> v_lo;          // path sum above v_min - v0, per node
  std::vector<double> v_hi;          // v_max - v0 above path sum, per node
  std::vector<double> p_lo;          // injection middle term vs p_min
  std::vector<double> p_hi;
  std::vector<double> q_lo;
  std::vector<double> q_hi;
  std::vector<double> cone_socp1;    // vhat_i tau - (tau-beta)^2, per branch
  std::vector<double> cone_socp2;    // vmin_i tau - (tau-beta)^2, per branch

  double min_affine() const;
  double min_cone_socp1() const;
  double min_cone_socp2() const;
  bool feasible_socp1(double tol) const;
  bool feasible_socp2(double tol) const;
};

/// Relaxed branch-flow SOCP over physical variables: branch flow equations
/// as equalities, boxes via nonnegative slacks, and one rotated cone
/// (v_i, l_ij, P_ij, Q_ij) per branch. The root voltage enters as the
/// constant v0.
ConicProgram build_opf_cr(const Network& net, const ObjectiveSpec& obj);

/// First auxiliary SOCP over (tau, beta): per branch a rotated cone
/// (vhat_i, tau, tau - beta) with vhat_i = v0 + path sum linked by an
/// equality row, plus the affine system in the path/children sums.
ConicProgram build_opf_socp1(const Network& net, const ObjectiveSpec& obj);

/// Second auxiliary SOCP: the cone row is tightened to
/// (tau - beta)^2 <= vmin_i tau, encoded as a rotated cone whose first
/// entry is vmin_i * tau (by equality) and second entry is pinned to 1.
ConicProgram build_opf_socp2(const Network& net, const ObjectiveSpec& obj);

/// Maps a reformulation point to physical quantities: S = z(tau-beta)/|z|^2,
/// l = tau/|z|^2, injections from the balance equations, voltages from the
/// path sums. Total on all inputs.
PhysicalPoint reform_to_physical(const Network& net, const ReformPoint& rp);

/// Evaluates a PhysicalPoint against the branch flow model constraints.
ResidualReport residuals(const Network& net, const PhysicalPoint& pt);

/// Evaluates the reformulated constraints at (tau, beta) for both auxiliary
/// programs at once (they share every affine row).
ReformMargins evaluate_reform_constraints(const Network& net,
                                          const ReformPoint& rp);

/// Objective value of `obj` at a physical point.
double objective_value(const Network& net, const ObjectiveSpec& obj,
                       const PhysicalPoint& pt);

/// Reads the physical quantities out of a build_opf_cr solution vector,
/// located through the program's variable name table.
PhysicalPoint extract_physical(const Network& net, const ConicProgram& program,
                               const Eigen::VectorXd& x);

/// Reads (tau, beta) out of a build_opf_socp1/2 solution vector.
ReformPoint extract_reform(const Network& net, const ConicProgram& program,
                           const Eigen::VectorXd& x);

}  // namespace radopf
