#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "radopf/conditions.hpp"
#include "radopf/dual.hpp"
#include "radopf/formulation.hpp"
#include "radopf/network.hpp"
#include "radopf/solver.hpp"

namespace radopf {

enum class Condition { c1, c2, c3 };

/// One field change applied by modify_network, old -> new.
struct ModLogEntry {
  std::string element;
  std::string field;
  double old_value = 0.0;
  double new_value = 0.0;
};

struct ModifiedNetwork {
  Network net;
  std::vector<ModLogEntry> log;  ///< empty when the input already complied
};

/// Minimal adjustment making the target condition hold:
///   c1: widen every injection box to include 0 with a strictly positive
///       top (case (iv) pattern), modeling added dispatchable DG
///   c2: same sign fix with p_min forced strictly negative, plus the
///       smallest multiplicative x adjustments making r/x non-increasing
///       from root to leaves (r preserved)
///   c3: mirror of c2 with non-decreasing ratios and q_min strictly
///       negative.
/// eps_g is the minimum strict bound opening.
ModifiedNetwork modify_network(const Network& net, Condition condition,
                               double eps_g = 1e-3);

enum class DgMode { dispatchable, fixed_injection };

/// Random DG draws: one (gp, gq) pair per node per instance, uniform in
/// the given ranges. Dispatchable DG widens the box top (p_max += gp);
/// fixed-injection DG shifts the whole box (both bounds += gp).
struct InstanceSpec {
  std::pair<double, double> dg_p_range{0.0, 0.05};
  std::pair<double, double> dg_q_range{0.0, 0.05};
  DgMode mode = DgMode::dispatchable;
  std::uint64_t seed = 1;
  int count = 0;
};

/// Deterministic under (base, spec): instance k consumes 2n draws in node
/// order. Every instance is revalidated; a violation raises
/// ValidationError naming the node.
std::vector<Network> generate_instances(const Network& base,
                                        const InstanceSpec& spec);

struct InstanceResult {
  int instance_id = 0;
  SolveStatus status_primal = SolveStatus::numerical_failure;
  SolveStatus status_dual = SolveStatus::numerical_failure;
  double primal_obj = std::numeric_limits<double>::quiet_NaN();
  double dual_obj = std::numeric_limits<double>::quiet_NaN();
  double abs_gap = std::numeric_limits<double>::quiet_NaN();
  double rel_gap = std::numeric_limits<double>::quiet_NaN();
  bool usable = false;          ///< both solves produced trustworthy values
  bool strong_duality = false;  ///< usable and rel_gap < threshold
};

struct GapStudyResult {
  double threshold = 1e-4;
  std::vector<InstanceResult> instances;
  int solved_count = 0;  ///< usable instances
  int failed_count = 0;  ///< tallied, never silently dropped
  double avg_gap = std::numeric_limits<double>::quiet_NaN();  ///< Avg-G
  double max_gap = std::numeric_limits<double>::quiet_NaN();  ///< G+
  int n_strong = 0;                                           ///< N_SD
  double r_strong = std::numeric_limits<double>::quiet_NaN(); ///< R_SD, in [0,1]
};

/// For each instance: build the relaxed SOCP, build its explicit dual,
/// solve BOTH as independent problems with the in-repo solver (no shared
/// state or warm start), and record the relative gap between the two
/// optimal values. Aggregates run over usable instances only; failures are
/// counted. `parallelism` >= 1 worker threads; aggregation is
/// order-independent.
GapStudyResult run_gap_study(const std::vector<Network>& instances,
                             const ObjectiveSpec& obj, double threshold,
                             int parallelism);

enum class ReportFormat { csv, json, table };

/// csv: one row per instance plus a '#'-prefixed summary block (header-only
/// when there are no instances). json: full structure, exact round-trip.
/// table: human-readable summary with the ratio printed as a percentage
/// with one decimal.
std::string emit_report(const GapStudyResult& result, ReportFormat format);

/// Inverse of emit_report(result, json), used for round-trip checks.
GapStudyResult gap_study_from_json(const std::string& text);

/// True when a solve's reported values are safe to use for gap
/// measurement: certified optimal, or iteration-capped with a primal
/// residual no worse than 1e-6 and the iterate inside its cones.
bool usable_solve(const Solution& sol);

}  // namespace radopf
