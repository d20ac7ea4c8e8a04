#pragma once

#include <optional>
#include <string>
#include <vector>

#include "radopf/formulation.hpp"
#include "radopf/network.hpp"

namespace radopf {

/// Outcome of the closed-form checks. Case flags follow the sign patterns
/// literally, strict vs. weak exactly as stated:
///   (i)   p_min <= 0 <= p_max  and  q_min <  0 <  q_max
///   (ii)  p_min <  0 <  p_max  and  q_min <= 0 <= q_max
///   (iii) p_min <  0 <= p_max  and  q_min <  0 <= q_max
///   (iv)  p_min <= 0 <  p_max  and  q_min <= 0 <  q_max
/// C2 needs non-increasing r/x ratios from root to leaves plus signs
/// p_min < 0 <= p_max, q_min <= 0 <= q_max at every node; C3 mirrors it
/// with non-decreasing ratios and the strict sign moved to q.
struct ConditionReport {
  struct NodeFlags {
    bool case_i = false;
    bool case_ii = false;
    bool case_iii = false;
    bool case_iv = false;
    bool c2_signs = false;
    bool c3_signs = false;
    bool any_case() const { return case_i || case_ii || case_iii || case_iv; }
  };

  /// One adjacent branch pair: `upper` is the parent-side branch (i,j) of
  /// node i, `lower` a child branch (k,i). Identified by child node ids.
  struct RatioPair {
    NodeId upper_child = -1;
    NodeId lower_child = -1;
    double upper_ratio = 0.0;  // r_ij / x_ij
    double lower_ratio = 0.0;  // r_ki / x_ki
    bool ok_c2 = false;        // upper >= lower
    bool ok_c3 = false;        // upper <= lower
  };

  std::vector<NodeFlags> nodes;       // per non-root node, index i-1
  std::vector<RatioPair> ratio_pairs;

  bool c1 = false;
  bool c2 = false;
  bool c3 = false;

  /// True when every node satisfies that particular C1 case (stronger than
  /// c1, which allows each node to pick its own case).
  bool c1_case_all[4] = {false, false, false, false};

  /// First violating element per failed condition, empty when passed.
  std::string c1_witness;
  std::string c2_witness;
  std::string c3_witness;

  std::string to_json_string(const Network& net, int indent = 2) const;
};

ConditionReport check_conditions(const Network& net);

/// Per-condition wrappers; each returns the full evaluation, the named
/// verdict is the one the caller asked about.
ConditionReport check_c1(const Network& net);
ConditionReport check_c2(const Network& net);
ConditionReport check_c3(const Network& net);

/// Which component of (delta_p, delta_q) the lambda recursion zeroes or
/// sign-constrains at each branch. Matches the proof's cases (a)-(d) and
/// thereby C1's cases (i)-(iv): delta_p_zero ~ (i), delta_q_zero ~ (ii),
/// both_nonpos ~ (iii), both_nonneg ~ (iv).
enum class SlaterTarget { delta_p_zero, delta_q_zero, both_nonpos, both_nonneg };

/// Explicit strictly feasible point of the tightened auxiliary SOCP,
/// following the constructive recipe: tau = |z|^2 lbar / mu, beta = lambda
/// tau, with lambda solved bottom-up so the targeted delta component
/// vanishes exactly.
struct SlaterCertificate {
  double mu = 0.0;
  std::vector<SlaterTarget> targets;  // per non-root node
  std::vector<double> lambda;         // per branch
  std::vector<double> delta_p;        // per branch
  std::vector<double> delta_q;        // per branch
  ReformPoint point;
  ReformMargins margins;              // evaluated at `point`
  std::vector<double> cone_margin_rel;  // cone_socp2 / (vmin tau), per branch

  double min_cone_margin_rel() const;
  double max_abs_targeted_delta() const;

  std::string to_json_string(const Network& net, int indent = 2) const;
};

SlaterCertificate construct_slater_point(const Network& net,
                                         SlaterTarget target, double mu);
SlaterCertificate construct_slater_point(
    const Network& net, const std::vector<SlaterTarget>& per_node_targets,
    double mu);

struct CertifyOptions {
  double mu_start = 10.0;
  double mu_max = 1e12;        // doubling schedule upper end
  double eps_strict = 1e-8;    // required relative cone margin
  double affine_tol = 1e-12;   // numeric slack for affine rows
};

struct CertifyResult {
  enum class Verdict {
    conditions_met,              // with certificate
    certificate_search_failed,   // conditions hold, mu search exhausted
    conditions_not_met
  };
  Verdict verdict = Verdict::conditions_not_met;
  std::optional<SlaterCertificate> certificate;
  ConditionReport report;
  std::string detail;

  std::string to_json_string(const Network& net, int indent = 2) const;
};

/// Runs the checkers, picks targets (per-node C1 case with preference
/// (iv), (iii), (ii), (i); then C2 -> delta_q_zero; then C3 ->
/// delta_p_zero) and searches mu over a doubling schedule until every cone
/// row is strictly slack and every affine row holds.
CertifyResult certify_strong_duality(const Network& net,
                                     const CertifyOptions& opts = {});

}  // namespace radopf
