#include "radopf/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace radopf {

ConditionReport check_conditions(const Network& net) {
  const int n = net.node_count();
  ConditionReport rep;
  rep.nodes.resize(n);

  bool all_cases[4] = {true, true, true, true};
  for (int i = 1; i <= n; ++i) {
    const NodeLimits& lm = net.limits(i);
    ConditionReport::NodeFlags& f = rep.nodes[i - 1];
    f.case_i = lm.p_min <= 0.0 && 0.0 <= lm.p_max && lm.q_min < 0.0 &&
               0.0 < lm.q_max;
    f.case_ii = lm.p_min < 0.0 && 0.0 < lm.p_max && lm.q_min <= 0.0 &&
                0.0 <= lm.q_max;
    f.case_iii = lm.p_min < 0.0 && 0.0 <= lm.p_max && lm.q_min < 0.0 &&
                 0.0 <= lm.q_max;
    f.case_iv = lm.p_min <= 0.0 && 0.0 < lm.p_max && lm.q_min <= 0.0 &&
                0.0 < lm.q_max;
    f.c2_signs = lm.p_min < 0.0 && 0.0 <= lm.p_max && lm.q_min <= 0.0 &&
                 0.0 <= lm.q_max;
    f.c3_signs = lm.p_min <= 0.0 && 0.0 <= lm.p_max && lm.q_min < 0.0 &&
                 0.0 <= lm.q_max;
    all_cases[0] &= f.case_i;
    all_cases[1] &= f.case_ii;
    all_cases[2] &= f.case_iii;
    all_cases[3] &= f.case_iv;
  }
  for (int k = 0; k < 4; ++k) rep.c1_case_all[k] = all_cases[k];

  rep.c1 = true;
  for (int i = 1; i <= n; ++i) {
    if (!rep.nodes[i - 1].any_case()) {
      rep.c1 = false;
      if (rep.c1_witness.empty()) rep.c1_witness = "node " + net.label(i);
    }
  }

  // Adjacent branch pairs: parent-side branch of node i vs. each child
  // branch (k,i).
  for (int i = 1; i <= n; ++i) {
    const Branch& upper = net.branch_of(i);
    for (NodeId k : net.children(i)) {
      const Branch& lower = net.branch_of(k);
      ConditionReport::RatioPair pair;
      pair.upper_child = i;
      pair.lower_child = k;
      pair.upper_ratio = upper.r / upper.x;
      pair.lower_ratio = lower.r / lower.x;
      pair.ok_c2 = pair.upper_ratio >= pair.lower_ratio;
      pair.ok_c3 = pair.upper_ratio <= pair.lower_ratio;
      rep.ratio_pairs.push_back(pair);
    }
  }

  auto pair_name = [&](const ConditionReport::RatioPair& p) {
    return "pair (" + net.label(p.upper_child) + "->" +
           net.label(net.parent(p.upper_child)) + ", " +
           net.label(p.lower_child) + "->" + net.label(p.upper_child) + ")";
  };

  rep.c2 = true;
  rep.c3 = true;
  for (const auto& pair : rep.ratio_pairs) {
    if (!pair.ok_c2) {
      rep.c2 = false;
      if (rep.c2_witness.empty()) rep.c2_witness = pair_name(pair);
    }
    if (!pair.ok_c3) {
      rep.c3 = false;
      if (rep.c3_witness.empty()) rep.c3_witness = pair_name(pair);
    }
  }
  for (int i = 1; i <= n; ++i) {
    if (!rep.nodes[i - 1].c2_signs) {
      rep.c2 = false;
      if (rep.c2_witness.empty()) rep.c2_witness = "node " + net.label(i);
    }
    if (!rep.nodes[i - 1].c3_signs) {
      rep.c3 = false;
      if (rep.c3_witness.empty()) rep.c3_witness = "node " + net.label(i);
    }
  }
  return rep;
}

ConditionReport check_c1(const Network& net) { return check_conditions(net); }
ConditionReport check_c2(const Network& net) { return check_conditions(net); }
ConditionReport check_c3(const Network& net) { return check_conditions(net); }

SlaterCertificate construct_slater_point(const Network& net,
                                         SlaterTarget target, double mu) {
  return construct_slater_point(
      net, std::vector<SlaterTarget>(net.node_count(), target), mu);
}

SlaterCertificate construct_slater_point(
    const Network& net, const std::vector<SlaterTarget>& per_node_targets,
    double mu) {
  const int n = net.node_count();
  if (static_cast<int>(per_node_targets.size()) != n) {
    throw std::invalid_argument("need one Slater target per non-root node");
  }
  if (!(mu >= 1.0)) {
    throw std::invalid_argument("mu must be >= 1");
  }

  SlaterCertificate cert;
  cert.mu = mu;
  cert.targets = per_node_targets;
  cert.lambda.assign(n, 0.0);
  cert.delta_p.assign(n, 0.0);
  cert.delta_q.assign(n, 0.0);
  cert.point.tau.assign(n, 0.0);
  cert.point.beta.assign(n, 0.0);

  // lambda couples each branch to its child branches only, so one pass in
  // reverse id order (children have larger ids) closes the recursion.
  // lambda_p / lambda_q are the values zeroing delta_p / delta_q; the
  // deltas are evaluated as differences against the chosen lambda so the
  // targeted component is an exact zero.
  for (int e = n - 1; e >= 0; --e) {
    const Branch& br = net.branches()[e];
    const NodeId i = br.child;
    double child_r = 0.0, child_x = 0.0;
    for (NodeId k : net.children(i)) {
      const Branch& bk = net.branches()[k - 1];
      child_r += cert.lambda[k - 1] * bk.r * bk.l_max;
      child_x += cert.lambda[k - 1] * bk.x * bk.l_max;
    }
    const double lambda_p = 1.0 + child_r / (br.r * br.l_max);
    const double lambda_q = 1.0 + child_x / (br.x * br.l_max);
    double lambda = lambda_p;
    switch (per_node_targets[e]) {
      case SlaterTarget::delta_p_zero: lambda = lambda_p; break;
      case SlaterTarget::delta_q_zero: lambda = lambda_q; break;
      case SlaterTarget::both_nonpos: lambda = std::max(lambda_p, lambda_q); break;
      case SlaterTarget::both_nonneg: lambda = std::min(lambda_p, lambda_q); break;
    }
    cert.lambda[e] = lambda;
    cert.delta_p[e] = lambda_p - lambda;
    cert.delta_q[e] = lambda_q - lambda;

    cert.point.tau[e] = br.z_abs2() * br.l_max / mu;
    cert.point.beta[e] = lambda * cert.point.tau[e];
  }

  cert.margins = evaluate_reform_constraints(net, cert.point);
  cert.cone_margin_rel.resize(n);
  for (int e = 0; e < n; ++e) {
    const double denom = net.limits(e + 1).v_min * cert.point.tau[e];
    cert.cone_margin_rel[e] = cert.margins.cone_socp2[e] / denom;
  }
  return cert;
}

double SlaterCertificate::min_cone_margin_rel() const {
  double m = std::numeric_limits<double>::infinity();
  for (double r : cone_margin_rel) m = std::min(m, r);
  return m;
}

double SlaterCertificate::max_abs_targeted_delta() const {
  double m = 0.0;
  for (size_t e = 0; e < lambda.size(); ++e) {
    switch (targets[e]) {
      case SlaterTarget::delta_p_zero:
        m = std::max(m, std::abs(delta_p[e]));
        break;
      case SlaterTarget::delta_q_zero:
        m = std::max(m, std::abs(delta_q[e]));
        break;
      case SlaterTarget::both_nonpos:
      case SlaterTarget::both_nonneg:
        // min/max of the two zeroing values: the nearer delta is exact zero
        m = std::max(m, std::min(std::abs(delta_p[e]), std::abs(delta_q[e])));
        break;
    }
  }
  return m;
}

namespace {

bool certificate_ok(const SlaterCertificate& cert, const CertifyOptions& opts) {
  if (cert.min_cone_margin_rel() <= opts.eps_strict) return false;
  return cert.margins.min_affine() >= -opts.affine_tol;
}

std::optional<std::vector<SlaterTarget>> c1_targets(
    const ConditionReport& rep) {
  std::vector<SlaterTarget> targets;
  targets.reserve(rep.nodes.size());
  for (const auto& f : rep.nodes) {
    // Preference (iv), (iii), (ii), (i): the one-sided cases leave the most
    // slack in the injection boxes at finite mu.
    if (f.case_iv) {
      targets.push_back(SlaterTarget::both_nonneg);
    } else if (f.case_iii) {
      targets.push_back(SlaterTarget::both_nonpos);
    } else if (f.case_ii) {
      targets.push_back(SlaterTarget::delta_q_zero);
    } else if (f.case_i) {
      targets.push_back(SlaterTarget::delta_p_zero);
    } else {
      return std::nullopt;
    }
  }
  return targets;
}

const char* target_name(SlaterTarget t) {
  switch (t) {
    case SlaterTarget::delta_p_zero: return "delta_p_zero";
    case SlaterTarget::delta_q_zero: return "delta_q_zero";
    case SlaterTarget::both_nonpos: return "both_nonpos";
    case SlaterTarget::both_nonneg: return "both_nonneg";
  }
  return "?";
}

}  // namespace

CertifyResult certify_strong_duality(const Network& net,
                                     const CertifyOptions& opts) {
  CertifyResult res;
  res.report = check_conditions(net);

  std::vector<std::pair<std::string, std::vector<SlaterTarget>>> candidates;
  if (res.report.c1) {
    if (auto t = c1_targets(res.report)) {
      candidates.emplace_back("C1 per-node cases", std::move(*t));
    }
  }
  if (res.report.c2) {
    candidates.emplace_back(
        "C2 (delta_q_zero)",
        std::vector<SlaterTarget>(net.node_count(),
                                  SlaterTarget::delta_q_zero));
  }
  if (res.report.c3) {
    candidates.emplace_back(
        "C3 (delta_p_zero)",
        std::vector<SlaterTarget>(net.node_count(),
                                  SlaterTarget::delta_p_zero));
  }

  if (candidates.empty()) {
    res.verdict = CertifyResult::Verdict::conditions_not_met;
    res.detail = "none of C1, C2, C3 holds";
    return res;
  }

  for (const auto& [name, targets] : candidates) {
    for (double mu = opts.mu_start; mu <= opts.mu_max; mu *= 2.0) {
      SlaterCertificate cert = construct_slater_point(net, targets, mu);
      if (certificate_ok(cert, opts)) {
        res.verdict = CertifyResult::Verdict::conditions_met;
        res.certificate = std::move(cert);
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%s, mu = %g", name.c_str(), mu);
        res.detail = buf;
        return res;
      }
    }
  }

  res.verdict = CertifyResult::Verdict::certificate_search_failed;
  res.detail = "mu schedule exhausted at mu_max without strict margins";
  return res;
}

std::string ConditionReport::to_json_string(const Network& net,
                                            int indent) const {
  using nlohmann::json;
  json nodes_json = json::array();
  for (size_t e = 0; e < nodes.size(); ++e) {
    const NodeFlags& f = nodes[e];
    nodes_json.push_back({{"id", net.label(static_cast<NodeId>(e) + 1)},
                          {"case_i", f.case_i},
                          {"case_ii", f.case_ii},
                          {"case_iii", f.case_iii},
                          {"case_iv", f.case_iv},
                          {"passes_c1", f.any_case()},
                          {"c2_signs", f.c2_signs},
                          {"c3_signs", f.c3_signs}});
  }
  json pairs_json = json::array();
  for (const RatioPair& p : ratio_pairs) {
    pairs_json.push_back({{"upper_child", net.label(p.upper_child)},
                          {"lower_child", net.label(p.lower_child)},
                          {"upper_ratio", p.upper_ratio},
                          {"lower_ratio", p.lower_ratio},
                          {"ok_c2", p.ok_c2},
                          {"ok_c3", p.ok_c3}});
  }
  json j{{"nodes", nodes_json},
         {"ratio_pairs", pairs_json},
         {"c1", c1},
         {"c2", c2},
         {"c3", c3},
         {"c1_case_all",
          {c1_case_all[0], c1_case_all[1], c1_case_all[2], c1_case_all[3]}},
         {"c1_witness", c1_witness},
         {"c2_witness", c2_witness},
         {"c3_witness", c3_witness}};
  return j.dump(indent);
}

std::string SlaterCertificate::to_json_string(const Network& net,
                                              int indent) const {
  using nlohmann::json;
  json branches = json::array();
  for (size_t e = 0; e < lambda.size(); ++e) {
    branches.push_back({{"child", net.label(static_cast<NodeId>(e) + 1)},
                        {"target", target_name(targets[e])},
                        {"lambda", lambda[e]},
                        {"delta_p", delta_p[e]},
                        {"delta_q", delta_q[e]},
                        {"tau", point.tau[e]},
                        {"beta", point.beta[e]},
                        {"cone_margin", margins.cone_socp2[e]},
                        {"cone_margin_rel", cone_margin_rel[e]}});
  }
  json j{{"mu", mu},
         {"branches", branches},
         {"min_cone_margin_rel", min_cone_margin_rel()},
         {"min_affine_margin", margins.min_affine()},
         {"max_abs_targeted_delta", max_abs_targeted_delta()}};
  return j.dump(indent);
}

std::string CertifyResult::to_json_string(const Network& net,
                                          int indent) const {
  using nlohmann::json;
  const char* verdict_name =
      verdict == Verdict::conditions_met ? "conditions_met"
      : verdict == Verdict::certificate_search_failed
          ? "certificate_search_failed"
          : "conditions_not_met";
  json j{{"verdict", verdict_name},
         {"detail", detail},
         {"report", json::parse(report.to_json_string(net, -1))}};
  if (certificate) {
    j["certificate"] = json::parse(certificate->to_json_string(net, -1));
  }
  return j.dump(indent);
}

}  // namespace radopf
