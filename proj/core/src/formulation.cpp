#include "radopf/formulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace radopf {

namespace {

// Labels mirror the input file, so dumped programs read naturally.
std::string tag(const std::string& base, const std::string& label) {
  return base + "[" + label + "]";
}

struct ObjectiveTerms {
  // weights resolved to interned ids; p0 handled separately
  std::vector<double> w_p, w_v, w_l;  // size n, indexed node-1 / branch e
  double w_p0 = 0.0;
};

ObjectiveTerms resolve_objective(const Network& net, const ObjectiveSpec& obj) {
  const int n = net.node_count();
  ObjectiveTerms t;
  t.w_p.assign(n, 0.0);
  t.w_v.assign(n, 0.0);
  t.w_l.assign(n, 0.0);
  if (obj.kind == ObjectiveSpec::Kind::total_loss) {
    for (int e = 0; e < n; ++e) t.w_l[e] = net.branches()[e].r;
    return t;
  }
  for (const auto& term : obj.terms) {
    const NodeId id = net.node_id(term.key);
    switch (term.role) {
      case ObjectiveSpec::Term::Role::node_p:
        if (id == 0) {
          t.w_p0 += term.weight;
        } else {
          t.w_p[id - 1] += term.weight;
        }
        break;
      case ObjectiveSpec::Term::Role::node_v:
        if (id == 0) {
          throw std::invalid_argument(
              "objective references the fixed root voltage v0");
        }
        t.w_v[id - 1] += term.weight;
        break;
      case ObjectiveSpec::Term::Role::branch_l:
        if (id == 0) {
          throw std::invalid_argument(
              "objective references branch by child label; root is not one");
        }
        t.w_l[id - 1] += term.weight;
        break;
    }
  }
  return t;
}

}  // namespace

ConicProgram build_opf_cr(const Network& net, const ObjectiveSpec& obj) {
  const int n = net.node_count();
  const auto& branches = net.branches();
  ProgramBuilder pb;

  // One rotated cone (v_i, l, P, Q) per branch; v_i is the child voltage.
  std::vector<int> v_of(n), l_of(n), P_of(n), Q_of(n);
  for (int e = 0; e < n; ++e) {
    const std::string& lbl = net.label(e + 1);
    const int start = pb.add_block(
        ConeKind::rsoc,
        {tag("v", lbl), tag("l", lbl), tag("P", lbl), tag("Q", lbl)});
    v_of[e] = start;
    l_of[e] = start + 1;
    P_of[e] = start + 2;
    Q_of[e] = start + 3;
  }

  std::vector<std::string> free_names;
  for (int i = 1; i <= n; ++i) free_names.push_back(tag("p", net.label(i)));
  for (int i = 1; i <= n; ++i) free_names.push_back(tag("q", net.label(i)));
  free_names.push_back("p0");
  free_names.push_back("q0");
  const int free_start = pb.add_block(ConeKind::free, free_names);
  auto p_of = [&](NodeId i) {
    return i == 0 ? free_start + 2 * n : free_start + (i - 1);
  };
  auto q_of = [&](NodeId i) {
    return i == 0 ? free_start + 2 * n + 1 : free_start + n + (i - 1);
  };

  std::vector<std::string> slack_names;
  for (int e = 0; e < n; ++e)
    slack_names.push_back(tag("sl_l_max", net.label(e + 1)));
  for (const char* base : {"sl_v_lo", "sl_v_hi", "sl_p_lo", "sl_p_hi",
                           "sl_q_lo", "sl_q_hi"}) {
    for (int i = 1; i <= n; ++i) slack_names.push_back(tag(base, net.label(i)));
  }
  const int sl = pb.add_block(ConeKind::nonneg, slack_names);
  auto sl_lmax = [&](int e) { return sl + e; };
  auto sl_vlo = [&](NodeId i) { return sl + n + (i - 1); };
  auto sl_vhi = [&](NodeId i) { return sl + 2 * n + (i - 1); };
  auto sl_plo = [&](NodeId i) { return sl + 3 * n + (i - 1); };
  auto sl_phi = [&](NodeId i) { return sl + 4 * n + (i - 1); };
  auto sl_qlo = [&](NodeId i) { return sl + 5 * n + (i - 1); };
  auto sl_qhi = [&](NodeId i) { return sl + 6 * n + (i - 1); };

  // Power balance at every non-root node:
  //   p_i - P_ij + sum_k (P_ki - r_ki l_ki) = 0, same with q/x.
  for (int i = 1; i <= n; ++i) {
    const int e = i - 1;
    std::vector<std::pair<int, double>> rp{{p_of(i), 1.0}, {P_of[e], -1.0}};
    std::vector<std::pair<int, double>> rq{{q_of(i), 1.0}, {Q_of[e], -1.0}};
    for (NodeId k : net.children(i)) {
      const Branch& bk = branches[k - 1];
      rp.push_back({P_of[k - 1], 1.0});
      rp.push_back({l_of[k - 1], -bk.r});
      rq.push_back({Q_of[k - 1], 1.0});
      rq.push_back({l_of[k - 1], -bk.x});
    }
    pb.add_row(tag("balance_p", net.label(i)), rp, 0.0);
    pb.add_row(tag("balance_q", net.label(i)), rq, 0.0);
  }

  // Root balance: p0 + sum_k (P_k0 - r l) = 0.
  {
    std::vector<std::pair<int, double>> rp{{p_of(0), 1.0}};
    std::vector<std::pair<int, double>> rq{{q_of(0), 1.0}};
    for (NodeId k : net.children(0)) {
      const Branch& bk = branches[k - 1];
      rp.push_back({P_of[k - 1], 1.0});
      rp.push_back({l_of[k - 1], -bk.r});
      rq.push_back({Q_of[k - 1], 1.0});
      rq.push_back({l_of[k - 1], -bk.x});
    }
    pb.add_row("balance_p0", rp, 0.0);
    pb.add_row("balance_q0", rq, 0.0);
  }

  // Voltage drop along each branch; the root side is the constant v0.
  for (int e = 0; e < n; ++e) {
    const Branch& br = branches[e];
    std::vector<std::pair<int, double>> row{{v_of[e], 1.0},
                                            {P_of[e], -2.0 * br.r},
                                            {Q_of[e], -2.0 * br.x},
                                            {l_of[e], br.z_abs2()}};
    double rhs = 0.0;
    if (br.parent == 0) {
      rhs = net.v0();
    } else {
      row.push_back({v_of[br.parent - 1], -1.0});
    }
    pb.add_row(tag("voltage_drop", net.label(br.child)), row, rhs);
  }

  for (int e = 0; e < n; ++e) {
    pb.add_row(tag("l_max", net.label(e + 1)),
               {{l_of[e], 1.0}, {sl_lmax(e), 1.0}}, branches[e].l_max);
  }
  for (int i = 1; i <= n; ++i) {
    const NodeLimits& lm = net.limits(i);
    const std::string& lbl = net.label(i);
    pb.add_row(tag("v_lo", lbl), {{v_of[i - 1], 1.0}, {sl_vlo(i), -1.0}},
               lm.v_min);
    pb.add_row(tag("v_hi", lbl), {{v_of[i - 1], 1.0}, {sl_vhi(i), 1.0}},
               lm.v_max);
    pb.add_row(tag("p_lo", lbl), {{p_of(i), 1.0}, {sl_plo(i), -1.0}},
               lm.p_min);
    pb.add_row(tag("p_hi", lbl), {{p_of(i), 1.0}, {sl_phi(i), 1.0}},
               lm.p_max);
    pb.add_row(tag("q_lo", lbl), {{q_of(i), 1.0}, {sl_qlo(i), -1.0}},
               lm.q_min);
    pb.add_row(tag("q_hi", lbl), {{q_of(i), 1.0}, {sl_qhi(i), 1.0}},
               lm.q_max);
  }

  const ObjectiveTerms terms = resolve_objective(net, obj);
  for (int e = 0; e < n; ++e) {
    if (terms.w_l[e] != 0.0) pb.add_objective(l_of[e], terms.w_l[e]);
    if (terms.w_v[e] != 0.0) pb.add_objective(v_of[e], terms.w_v[e]);
    if (terms.w_p[e] != 0.0) pb.add_objective(p_of(e + 1), terms.w_p[e]);
  }
  if (terms.w_p0 != 0.0) pb.add_objective(p_of(0), terms.w_p0);

  return pb.finish();
}

namespace {

enum class AuxKind { socp1, socp2 };

ConicProgram build_reform_program(const Network& net, const ObjectiveSpec& obj,
                                  AuxKind kind) {
  const int n = net.node_count();
  const auto& branches = net.branches();
  ProgramBuilder pb;

  // Cone blocks, one per branch.
  //   socp1: (vhat_i, w, t) with vhat_i w >= t^2, w = tau, t = tau - beta
  //   socp2: (u, one, t) with u = vmin_i tau, one pinned to 1
  std::vector<int> cone0(n), cone1(n), cone2(n);
  for (int e = 0; e < n; ++e) {
    const std::string& lbl = net.label(e + 1);
    const int start =
        kind == AuxKind::socp1
            ? pb.add_block(ConeKind::rsoc,
                           {tag("vhat", lbl), tag("w", lbl), tag("t", lbl)})
            : pb.add_block(ConeKind::rsoc, {tag("cone_u", lbl),
                                            tag("cone_one", lbl),
                                            tag("t", lbl)});
    cone0[e] = start;
    cone1[e] = start + 1;
    cone2[e] = start + 2;
  }

  std::vector<std::string> free_names;
  for (int e = 0; e < n; ++e) free_names.push_back(tag("beta", net.label(e + 1)));
  if (kind == AuxKind::socp2) {
    for (int e = 0; e < n; ++e)
      free_names.push_back(tag("vhat", net.label(e + 1)));
  }
  const int free_start = pb.add_block(ConeKind::free, free_names);
  auto beta_of = [&](int e) { return free_start + e; };
  // In socp1 the cone's first entry is the voltage expression itself.
  auto vhat_of = [&](int e) {
    return kind == AuxKind::socp1 ? cone0[e] : free_start + n + e;
  };

  std::vector<std::string> nn_names;
  for (int e = 0; e < n; ++e) nn_names.push_back(tag("tau", net.label(e + 1)));
  for (const char* base : {"sl_tau_max", "sl_v_lo", "sl_v_hi", "sl_p_lo",
                           "sl_p_hi", "sl_q_lo", "sl_q_hi"}) {
    for (int e = 0; e < n; ++e) nn_names.push_back(tag(base, net.label(e + 1)));
  }
  const int nn = pb.add_block(ConeKind::nonneg, nn_names);
  auto tau_of = [&](int e) { return nn + e; };
  auto slack_of = [&](int group, int e) { return nn + n * (group + 1) + e; };

  // vhat_i = v0 + sum over Gamma_i of (tau - 2 beta).
  for (int e = 0; e < n; ++e) {
    std::vector<std::pair<int, double>> row{{vhat_of(e), 1.0}};
    for (const Branch& f : net.path_to_root(e + 1)) {
      row.push_back({tau_of(f.child - 1), -1.0});
      row.push_back({beta_of(f.child - 1), 2.0});
    }
    pb.add_row(tag("vhat_link", net.label(e + 1)), row, net.v0());
  }

  for (int e = 0; e < n; ++e) {
    const std::string& lbl = net.label(e + 1);
    if (kind == AuxKind::socp1) {
      pb.add_row(tag("w_link", lbl), {{cone1[e], 1.0}, {tau_of(e), -1.0}}, 0.0);
    } else {
      pb.add_row(tag("cone_u_link", lbl),
                 {{cone0[e], 1.0}, {tau_of(e), -net.limits(e + 1).v_min}},
                 0.0);
      pb.add_row(tag("cone_one_pin", lbl), {{cone1[e], 1.0}}, 1.0);
    }
    pb.add_row(tag("t_link", lbl),
               {{cone2[e], 1.0}, {tau_of(e), -1.0}, {beta_of(e), 1.0}}, 0.0);
  }

  for (int e = 0; e < n; ++e) {
    pb.add_row(tag("tau_max", net.label(e + 1)),
               {{tau_of(e), 1.0}, {slack_of(0, e), 1.0}},
               branches[e].z_abs2() * branches[e].l_max);
  }

  // Voltage band through vhat: vmin <= vhat_i <= vmax.
  for (int e = 0; e < n; ++e) {
    const NodeLimits& lm = net.limits(e + 1);
    const std::string& lbl = net.label(e + 1);
    pb.add_row(tag("v_lo", lbl), {{vhat_of(e), 1.0}, {slack_of(1, e), -1.0}},
               lm.v_min);
    pb.add_row(tag("v_hi", lbl), {{vhat_of(e), 1.0}, {slack_of(2, e), 1.0}},
               lm.v_max);
  }

  // Injection windows in the substituted variables.
  for (int i = 1; i <= n; ++i) {
    const int e = i - 1;
    const Branch& br = branches[e];
    const NodeLimits& lm = net.limits(i);
    const double cr = br.r / br.z_abs2();
    const double cx = br.x / br.z_abs2();
    std::vector<std::pair<int, double>> pexpr{{tau_of(e), cr},
                                              {beta_of(e), -cr}};
    std::vector<std::pair<int, double>> qexpr{{tau_of(e), cx},
                                              {beta_of(e), -cx}};
    for (NodeId k : net.children(i)) {
      const Branch& bk = branches[k - 1];
      pexpr.push_back({beta_of(k - 1), bk.r / bk.z_abs2()});
      qexpr.push_back({beta_of(k - 1), bk.x / bk.z_abs2()});
    }
    const std::string& lbl = net.label(i);
    auto with_slack = [](std::vector<std::pair<int, double>> expr, int slack,
                         double coeff) {
      expr.push_back({slack, coeff});
      return expr;
    };
    pb.add_row(tag("p_lo", lbl), with_slack(pexpr, slack_of(3, e), -1.0),
               lm.p_min);
    pb.add_row(tag("p_hi", lbl), with_slack(pexpr, slack_of(4, e), 1.0),
               lm.p_max);
    pb.add_row(tag("q_lo", lbl), with_slack(qexpr, slack_of(5, e), -1.0),
               lm.q_min);
    pb.add_row(tag("q_hi", lbl), with_slack(qexpr, slack_of(6, e), 1.0),
               lm.q_max);
  }

  // Objective through the substitution: l = tau/|z|^2, v = vhat,
  // p_i = (r/|z|^2)(tau - beta) + children beta terms, and the root
  // injection is a pure children-beta sum.
  const ObjectiveTerms terms = resolve_objective(net, obj);
  for (int e = 0; e < n; ++e) {
    const Branch& br = branches[e];
    const double z2 = br.z_abs2();
    if (terms.w_l[e] != 0.0) pb.add_objective(tau_of(e), terms.w_l[e] / z2);
    if (terms.w_v[e] != 0.0) pb.add_objective(vhat_of(e), terms.w_v[e]);
    if (terms.w_p[e] != 0.0) {
      const double cr = br.r / z2;
      pb.add_objective(tau_of(e), terms.w_p[e] * cr);
      pb.add_objective(beta_of(e), -terms.w_p[e] * cr);
      for (NodeId k : net.children(e + 1)) {
        const Branch& bk = branches[k - 1];
        pb.add_objective(beta_of(k - 1), terms.w_p[e] * bk.r / bk.z_abs2());
      }
    }
  }
  if (terms.w_p0 != 0.0) {
    for (NodeId k : net.children(0)) {
      const Branch& bk = branches[k - 1];
      pb.add_objective(beta_of(k - 1), terms.w_p0 * bk.r / bk.z_abs2());
    }
  }

  return pb.finish();
}

}  // namespace

ConicProgram build_opf_socp1(const Network& net, const ObjectiveSpec& obj) {
  return build_reform_program(net, obj, AuxKind::socp1);
}

ConicProgram build_opf_socp2(const Network& net, const ObjectiveSpec& obj) {
  return build_reform_program(net, obj, AuxKind::socp2);
}

PhysicalPoint reform_to_physical(const Network& net, const ReformPoint& rp) {
  const int n = net.node_count();
  const auto& branches = net.branches();
  PhysicalPoint pt;
  pt.P.resize(n);
  pt.Q.resize(n);
  pt.l.resize(n);
  pt.v.resize(n);
  pt.p.resize(n);
  pt.q.resize(n);

  for (int e = 0; e < n; ++e) {
    const Branch& br = branches[e];
    const double z2 = br.z_abs2();
    const double tb = rp.tau[e] - rp.beta[e];
    pt.P[e] = br.r * tb / z2;
    pt.Q[e] = br.x * tb / z2;
    pt.l[e] = rp.tau[e] / z2;
  }

  // v_i = v0 + path sum of (tau - 2 beta); parents precede children in id
  // order, so one forward pass closes the recursion.
  for (int i = 1; i <= n; ++i) {
    const int e = i - 1;
    const double base = branches[e].parent == 0 ? net.v0()
                                                : pt.v[branches[e].parent - 1];
    pt.v[e] = base + rp.tau[e] - 2.0 * rp.beta[e];
  }

  for (int i = 1; i <= n; ++i) {
    const int e = i - 1;
    const Branch& br = branches[e];
    const double z2 = br.z_abs2();
    double p = br.r * (rp.tau[e] - rp.beta[e]) / z2;
    double q = br.x * (rp.tau[e] - rp.beta[e]) / z2;
    for (NodeId k : net.children(i)) {
      const Branch& bk = branches[k - 1];
      p += bk.r * rp.beta[k - 1] / bk.z_abs2();
      q += bk.x * rp.beta[k - 1] / bk.z_abs2();
    }
    pt.p[e] = p;
    pt.q[e] = q;
  }
  pt.p0 = 0.0;
  pt.q0 = 0.0;
  for (NodeId k : net.children(0)) {
    const Branch& bk = branches[k - 1];
    pt.p0 += bk.r * rp.beta[k - 1] / bk.z_abs2();
    pt.q0 += bk.x * rp.beta[k - 1] / bk.z_abs2();
  }
  return pt;
}

ResidualReport residuals(const Network& net, const PhysicalPoint& pt) {
  const int n = net.node_count();
  const auto& branches = net.branches();
  ResidualReport rep;
  rep.balance_p.resize(n);
  rep.balance_q.resize(n);
  rep.voltage_drop.resize(n);
  rep.l_bound.resize(n);
  rep.v_bound.resize(n);
  rep.p_bound.resize(n);
  rep.q_bound.resize(n);
  rep.cone_slack.resize(n);
  rep.recovery_gap.resize(n);

  for (int i = 1; i <= n; ++i) {
    const int e = i - 1;
    double rp = pt.p[e] - pt.P[e];
    double rq = pt.q[e] - pt.Q[e];
    for (NodeId k : net.children(i)) {
      const Branch& bk = branches[k - 1];
      rp += pt.P[k - 1] - bk.r * pt.l[k - 1];
      rq += pt.Q[k - 1] - bk.x * pt.l[k - 1];
    }
    rep.balance_p[e] = rp;
    rep.balance_q[e] = rq;
  }
  rep.root_balance_p = pt.p0;
  rep.root_balance_q = pt.q0;
  for (NodeId k : net.children(0)) {
    const Branch& bk = branches[k - 1];
    rep.root_balance_p += pt.P[k - 1] - bk.r * pt.l[k - 1];
    rep.root_balance_q += pt.Q[k - 1] - bk.x * pt.l[k - 1];
  }

  for (int e = 0; e < n; ++e) {
    const Branch& br = branches[e];
    const double vj = br.parent == 0 ? net.v0() : pt.v[br.parent - 1];
    rep.voltage_drop[e] = pt.v[e] - vj -
                          (2.0 * (br.r * pt.P[e] + br.x * pt.Q[e]) -
                           br.z_abs2() * pt.l[e]);
    rep.l_bound[e] = std::max(-pt.l[e], pt.l[e] - br.l_max);
    const double s2 = pt.P[e] * pt.P[e] + pt.Q[e] * pt.Q[e];
    rep.cone_slack[e] = pt.v[e] * pt.l[e] - s2;
    if (pt.v[e] > 0.0) {
      rep.recovery_gap[e] = std::abs(pt.l[e] - s2 / pt.v[e]);
    }
  }
  for (int i = 1; i <= n; ++i) {
    const NodeLimits& lm = net.limits(i);
    rep.v_bound[i - 1] =
        std::max(lm.v_min - pt.v[i - 1], pt.v[i - 1] - lm.v_max);
    rep.p_bound[i - 1] =
        std::max(lm.p_min - pt.p[i - 1], pt.p[i - 1] - lm.p_max);
    rep.q_bound[i - 1] =
        std::max(lm.q_min - pt.q[i - 1], pt.q[i - 1] - lm.q_max);
  }
  return rep;
}

double ResidualReport::max_equality_residual() const {
  double m = std::max(std::abs(root_balance_p), std::abs(root_balance_q));
  for (double r : balance_p) m = std::max(m, std::abs(r));
  for (double r : balance_q) m = std::max(m, std::abs(r));
  for (double r : voltage_drop) m = std::max(m, std::abs(r));
  return m;
}

double ResidualReport::max_bound_violation() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto* vec : {&l_bound, &v_bound, &p_bound, &q_bound}) {
    for (double r : *vec) m = std::max(m, r);
  }
  return m;
}

double ResidualReport::min_cone_slack() const {
  double m = std::numeric_limits<double>::infinity();
  for (double r : cone_slack) m = std::min(m, r);
  return m;
}

double ResidualReport::max_recovery_gap() const {
  double m = 0.0;
  for (const auto& g : recovery_gap) {
    if (g) m = std::max(m, *g);
  }
  return m;
}

ReformMargins evaluate_reform_constraints(const Network& net,
                                          const ReformPoint& rp) {
  const int n = net.node_count();
  const auto& branches = net.branches();
  ReformMargins m;
  m.tau_lo.resize(n);
  m.tau_hi.resize(n);
  m.v_lo.resize(n);
  m.v_hi.resize(n);
  m.p_lo.resize(n);
  m.p_hi.resize(n);
  m.q_lo.resize(n);
  m.q_hi.resize(n);
  m.cone_socp1.resize(n);
  m.cone_socp2.resize(n);

  std::vector<double> path_sum(n);
  for (int i = 1; i <= n; ++i) {
    const int e = i - 1;
    const double base =
        branches[e].parent == 0 ? 0.0 : path_sum[branches[e].parent - 1];
    path_sum[e] = base + rp.tau[e] - 2.0 * rp.beta[e];
  }

  for (int i = 1; i <= n; ++i) {
    const int e = i - 1;
    const Branch& br = branches[e];
    const NodeLimits& lm = net.limits(i);
    const double z2 = br.z_abs2();
    const double tb = rp.tau[e] - rp.beta[e];

    m.tau_lo[e] = rp.tau[e];
    m.tau_hi[e] = z2 * br.l_max - rp.tau[e];
    m.v_lo[e] = path_sum[e] - (lm.v_min - net.v0());
    m.v_hi[e] = (lm.v_max - net.v0()) - path_sum[e];

    double mid_p = br.r * tb / z2;
    double mid_q = br.x * tb / z2;
    for (NodeId k : net.children(i)) {
      const Branch& bk = branches[k - 1];
      mid_p += bk.r * rp.beta[k - 1] / bk.z_abs2();
      mid_q += bk.x * rp.beta[k - 1] / bk.z_abs2();
    }
    m.p_lo[e] = mid_p - lm.p_min;
    m.p_hi[e] = lm.p_max - mid_p;
    m.q_lo[e] = mid_q - lm.q_min;
    m.q_hi[e] = lm.q_max - mid_q;

    m.cone_socp1[e] = (net.v0() + path_sum[e]) * rp.tau[e] - tb * tb;
    m.cone_socp2[e] = lm.v_min * rp.tau[e] - tb * tb;
  }
  return m;
}

double ReformMargins::min_affine() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto* vec :
       {&tau_lo, &tau_hi, &v_lo, &v_hi, &p_lo, &p_hi, &q_lo, &q_hi}) {
    for (double r : *vec) m = std::min(m, r);
  }
  return m;
}

double ReformMargins::min_cone_socp1() const {
  double m = std::numeric_limits<double>::infinity();
  for (double r : cone_socp1) m = std::min(m, r);
  return m;
}

double ReformMargins::min_cone_socp2() const {
  double m = std::numeric_limits<double>::infinity();
  for (double r : cone_socp2) m = std::min(m, r);
  return m;
}

bool ReformMargins::feasible_socp1(double tol) const {
  return min_affine() >= -tol && min_cone_socp1() >= -tol;
}

bool ReformMargins::feasible_socp2(double tol) const {
  return min_affine() >= -tol && min_cone_socp2() >= -tol;
}

double objective_value(const Network& net, const ObjectiveSpec& obj,
                       const PhysicalPoint& pt) {
  const ObjectiveTerms terms = resolve_objective(net, obj);
  double val = terms.w_p0 * pt.p0;
  for (int e = 0; e < net.node_count(); ++e) {
    val += terms.w_l[e] * pt.l[e] + terms.w_v[e] * pt.v[e] +
           terms.w_p[e] * pt.p[e];
  }
  return val;
}

namespace {

std::map<std::string, int> name_index(const ConicProgram& program) {
  std::map<std::string, int> idx;
  for (int k = 0; k < program.num_vars(); ++k) idx[program.var_names[k]] = k;
  return idx;
}

int lookup(const std::map<std::string, int>& idx, const std::string& name) {
  auto it = idx.find(name);
  if (it == idx.end()) {
    throw std::invalid_argument("program has no variable '" + name + "'");
  }
  return it->second;
}

}  // namespace

PhysicalPoint extract_physical(const Network& net, const ConicProgram& program,
                               const Eigen::VectorXd& x) {
  const auto idx = name_index(program);
  const int n = net.node_count();
  PhysicalPoint pt;
  pt.P.resize(n);
  pt.Q.resize(n);
  pt.l.resize(n);
  pt.v.resize(n);
  pt.p.resize(n);
  pt.q.resize(n);
  for (int i = 1; i <= n; ++i) {
    const std::string& lbl = net.label(i);
    pt.v[i - 1] = x(lookup(idx, tag("v", lbl)));
    pt.l[i - 1] = x(lookup(idx, tag("l", lbl)));
    pt.P[i - 1] = x(lookup(idx, tag("P", lbl)));
    pt.Q[i - 1] = x(lookup(idx, tag("Q", lbl)));
    pt.p[i - 1] = x(lookup(idx, tag("p", lbl)));
    pt.q[i - 1] = x(lookup(idx, tag("q", lbl)));
  }
  pt.p0 = x(lookup(idx, "p0"));
  pt.q0 = x(lookup(idx, "q0"));
  return pt;
}

ReformPoint extract_reform(const Network& net, const ConicProgram& program,
                           const Eigen::VectorXd& x) {
  const auto idx = name_index(program);
  const int n = net.node_count();
  ReformPoint rp;
  rp.tau.resize(n);
  rp.beta.resize(n);
  for (int e = 0; e < n; ++e) {
    const std::string& lbl = net.label(e + 1);
    rp.tau[e] = x(lookup(idx, tag("tau", lbl)));
    rp.beta[e] = x(lookup(idx, tag("beta", lbl)));
  }
  return rp;
}

std::string ObjectiveSpec::to_json_string(int indent) const {
  using nlohmann::json;
  json j;
  if (kind == Kind::total_loss) {
    j["kind"] = "total_loss";
  } else {
    j["kind"] = "linear";
    json arr = json::array();
    for (const Term& t : terms) {
      const char* role = t.role == Term::Role::node_p   ? "p"
                         : t.role == Term::Role::node_v ? "v"
                                                        : "l";
      arr.push_back({{"role", role}, {"key", t.key}, {"weight", t.weight}});
    }
    j["terms"] = arr;
  }
  return j.dump(indent);
}

ObjectiveSpec ObjectiveSpec::from_json_string(const std::string& text) {
  using nlohmann::json;
  const json j = json::parse(text);
  ObjectiveSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "total_loss" || kind == "loss") {
    spec.kind = Kind::total_loss;
    return spec;
  }
  if (kind != "linear") {
    throw std::invalid_argument("objective kind must be total_loss or linear");
  }
  spec.kind = Kind::linear;
  for (const json& t : j.at("terms")) {
    Term term;
    const std::string role = t.at("role").get<std::string>();
    if (role == "p") {
      term.role = Term::Role::node_p;
    } else if (role == "v") {
      term.role = Term::Role::node_v;
    } else if (role == "l") {
      term.role = Term::Role::branch_l;
    } else {
      throw std::invalid_argument("objective term role must be p, v, or l");
    }
    term.key = t.at("key").is_string() ? t.at("key").get<std::string>()
                                       : std::to_string(t.at("key").get<long long>());
    term.weight = t.at("weight").get<double>();
    spec.terms.push_back(std::move(term));
  }
  return spec;
}

}  // namespace radopf
