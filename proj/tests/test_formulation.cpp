#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "radopf/cases.hpp"
#include "radopf/formulation.hpp"

using namespace radopf;
using namespace radopf::testing;

namespace {

int count_blocks(const ConicProgram& p, ConeKind kind) {
  int n = 0;
  for (const ConeBlock& blk : p.cones) n += blk.kind == kind;
  return n;
}

ReformPoint zeros(const Network& net) {
  return {std::vector<double>(net.node_count(), 0.0),
          std::vector<double>(net.node_count(), 0.0)};
}

}  // namespace

TEST_CASE("single-branch relaxation has the hand-counted shape") {
  const Network net = make_2bus(0.01, 0.02, 0.1, 0.05);
  const ConicProgram p = build_opf_cr(net, ObjectiveSpec::loss());

  // Hand count for n = 1: balance rows at node 1 (2) and the root (2),
  // one voltage drop row, and bound rows l_max (1), v (2), p (2), q (2).
  CHECK(p.num_rows() == 12);
  // Variables: one rotated cone (v, l, P, Q), free (p1, q1, p0, q0),
  // seven bound slacks.
  CHECK(p.num_vars() == 15);
  CHECK(count_blocks(p, ConeKind::rsoc) == 1);
  CHECK(count_blocks(p, ConeKind::free) == 1);
  CHECK(count_blocks(p, ConeKind::nonneg) == 1);
  CHECK(p.cones[0].dim == 4);
}

TEST_CASE("33-bus relaxation carries one rotated cone per branch") {
  const ConicProgram p = build_opf_cr(ieee33_network(), ObjectiveSpec::loss());
  CHECK(count_blocks(p, ConeKind::rsoc) == 32);
}

TEST_CASE("zero-load network admits the all-zeros flow at v0") {
  NodeLimits lm = wide_limits();
  lm.p_min = lm.p_max = lm.q_min = lm.q_max = 0.0;
  const Network net = make_chain({{0.01, 0.02}, {0.02, 0.01}}, lm);

  PhysicalPoint pt;
  const int n = net.node_count();
  pt.P.assign(n, 0.0);
  pt.Q.assign(n, 0.0);
  pt.l.assign(n, 0.0);
  pt.v.assign(n, net.v0());
  pt.p.assign(n, 0.0);
  pt.q.assign(n, 0.0);

  const ResidualReport rep = residuals(net, pt);
  CHECK(rep.max_equality_residual() == 0.0);
  CHECK(rep.max_bound_violation() <= 0.0);
  CHECK(rep.min_cone_slack() == 0.0);
  CHECK(rep.max_recovery_gap() == 0.0);
}

TEST_CASE("reform point maps to physical quantities by direct substitution") {
  const Network net = make_2bus(0.03, 0.04, 0.0, 0.0);  // |z|^2 = 0.0025
  SUBCASE("worked example") {
    ReformPoint rp{{0.0025}, {0.0}};
    const PhysicalPoint pt = reform_to_physical(net, rp);
    CHECK(pt.l[0] == doctest::Approx(1.0));
    CHECK(pt.P[0] == doctest::Approx(0.03));
    CHECK(pt.Q[0] == doctest::Approx(0.04));
  }
  SUBCASE("tau = 2 beta keeps every voltage at v0") {
    const Network chain =
        make_chain({{0.01, 0.02}, {0.02, 0.03}, {0.01, 0.01}});
    ReformPoint rp{{0.02, 0.04, 0.01}, {0.01, 0.02, 0.005}};
    const PhysicalPoint pt = reform_to_physical(chain, rp);
    for (double v : pt.v) CHECK(v == doctest::Approx(chain.v0()));
  }
  SUBCASE("beta = tau on a leaf branch zeroes the leaf injection") {
    ReformPoint rp{{0.001}, {0.001}};
    const PhysicalPoint pt = reform_to_physical(net, rp);
    CHECK(pt.p[0] == doctest::Approx(0.0));
    CHECK(pt.q[0] == doctest::Approx(0.0));
  }
}

TEST_CASE("substitution identity: voltage drop rows vanish at reform points") {
  std::mt19937_64 rng(11);
  const Network net = random_radial_network(3, 8);
  for (int trial = 0; trial < 50; ++trial) {
    ReformPoint rp = zeros(net);
    for (int e = 0; e < net.node_count(); ++e) {
      rp.tau[e] = u01(rng) * 0.01;
      rp.beta[e] = (u01(rng) - 0.5) * 0.01;
    }
    const PhysicalPoint pt = reform_to_physical(net, rp);
    const ResidualReport rep = residuals(net, pt);
    CHECK(rep.max_equality_residual() < 1e-12);
  }
}

TEST_CASE("cone tightness coincides with the recovery gap") {
  const Network net = make_2bus(0.03, 0.04, 0.0, 0.0);
  PhysicalPoint pt;
  pt.P = {0.03};
  pt.Q = {0.04};
  pt.v = {1.0};
  pt.p = {0.0};
  pt.q = {0.0};
  SUBCASE("tight cone, zero gap") {
    pt.l = {0.0025};  // exactly |S|^2 / v
    const ResidualReport rep = residuals(net, pt);
    CHECK(rep.cone_slack[0] == doctest::Approx(0.0));
    CHECK(*rep.recovery_gap[0] == doctest::Approx(0.0));
  }
  SUBCASE("slack cone, positive gap") {
    pt.l = {0.0035};
    const ResidualReport rep = residuals(net, pt);
    CHECK(rep.cone_slack[0] > 0.0);
    CHECK(*rep.recovery_gap[0] == doctest::Approx(rep.cone_slack[0] / pt.v[0]));
  }
  SUBCASE("nonpositive voltage leaves the gap undefined") {
    pt.v = {0.0};
    pt.l = {0.0025};
    const ResidualReport rep = residuals(net, pt);
    CHECK_FALSE(rep.recovery_gap[0].has_value());
  }
}

TEST_CASE("loss objective agrees between physical and reform coordinates") {
  std::mt19937_64 rng(5);
  const Network net = random_radial_network(9, 6);
  for (int trial = 0; trial < 20; ++trial) {
    ReformPoint rp = zeros(net);
    double loss_reform = 0.0;
    for (int e = 0; e < net.node_count(); ++e) {
      rp.tau[e] = u01(rng) * 0.02;
      rp.beta[e] = (u01(rng) - 0.5) * 0.02;
      const Branch& br = net.branches()[e];
      loss_reform += br.r * rp.tau[e] / br.z_abs2();
    }
    const double loss_physical =
        objective_value(net, ObjectiveSpec::loss(), reform_to_physical(net, rp));
    CHECK(loss_physical == doctest::Approx(loss_reform).epsilon(1e-12));
  }
}

TEST_CASE("auxiliary program margins reduce to the expected expressions") {
  SUBCASE("single branch: voltage band row is vmin-v0 <= tau-2beta <= vmax-v0") {
    const Network net = make_2bus(0.01, 0.02, 0.1, 0.05);
    ReformPoint rp{{0.004}, {0.001}};
    const ReformMargins m = evaluate_reform_constraints(net, rp);
    const double path = 0.004 - 0.002;
    CHECK(m.v_lo[0] ==
          doctest::Approx(path - (net.limits(1).v_min - net.v0())));
    CHECK(m.v_hi[0] ==
          doctest::Approx((net.limits(1).v_max - net.v0()) - path));
  }
  SUBCASE("chain: the node-2 band sums both branches") {
    const Network chain = make_chain({{0.01, 0.02}, {0.02, 0.01}});
    ReformPoint rp{{0.004, 0.002}, {0.001, 0.0005}};
    const ReformMargins m = evaluate_reform_constraints(chain, rp);
    const double path2 = (0.004 - 0.002) + (0.002 - 0.001);
    CHECK(m.v_lo[1] ==
          doctest::Approx(path2 - (chain.limits(2).v_min - chain.v0())));
  }
  SUBCASE("leaf injection windows have no children terms") {
    const Network net = make_2bus(0.03, 0.04, 0.0, 0.0);
    ReformPoint rp{{0.0025}, {0.0005}};
    const ReformMargins m = evaluate_reform_constraints(net, rp);
    const double mid_p = 0.03 * (0.0025 - 0.0005) / 0.0025;
    CHECK(m.p_lo[0] == doctest::Approx(mid_p - net.limits(1).p_min));
    CHECK(m.p_hi[0] == doctest::Approx(net.limits(1).p_max - mid_p));
  }
}

TEST_CASE("socp2 cone examples") {
  const Network net = make_2bus(0.01, 0.02, 0.1, 0.05);
  SUBCASE("beta = tau gives zero left side") {
    ReformPoint rp{{0.003}, {0.003}};
    const ReformMargins m = evaluate_reform_constraints(net, rp);
    CHECK(m.cone_socp2[0] == doctest::Approx(net.limits(1).v_min * 0.003));
  }
  SUBCASE("the origin satisfies the cone and tau rows with zero margins") {
    ReformPoint rp{{0.0}, {0.0}};
    const ReformMargins m = evaluate_reform_constraints(net, rp);
    CHECK(m.cone_socp2[0] == 0.0);
    CHECK(m.cone_socp1[0] == 0.0);
    CHECK(m.tau_lo[0] == 0.0);
    CHECK(m.tau_hi[0] > 0.0);
    // The fixed load keeps the origin outside the injection window, so
    // full feasibility is not implied.
    CHECK(m.p_hi[0] < 0.0);
  }
}

TEST_CASE("restriction chain holds on rejection-sampled points") {
  // Generous boxes keep the acceptance rate of the sampler high.
  NodeLimits lm;
  lm.v_min = 0.49;
  lm.v_max = 4.0;
  lm.p_min = -1.0;
  lm.p_max = 1.0;
  lm.q_min = -1.0;
  lm.q_max = 1.0;
  const Network net =
      make_chain({{0.05, 0.08}, {0.04, 0.03}, {0.06, 0.05}}, lm, 3.0);

  std::mt19937_64 rng(23);
  int accepted = 0;
  for (int attempt = 0; attempt < 5000 && accepted < 200; ++attempt) {
    ReformPoint rp = zeros(net);
    for (int e = 0; e < net.node_count(); ++e) {
      const Branch& br = net.branches()[e];
      rp.tau[e] = u01(rng) * br.z_abs2() * br.l_max;
      const double reach = std::sqrt(net.limits(e + 1).v_min * rp.tau[e]);
      rp.beta[e] = rp.tau[e] + (2.0 * u01(rng) - 1.0) * reach;
    }
    const ReformMargins m = evaluate_reform_constraints(net, rp);
    if (!m.feasible_socp2(0.0)) continue;
    ++accepted;

    CHECK(m.feasible_socp1(1e-9));
    const ResidualReport rep = residuals(net, reform_to_physical(net, rp));
    CHECK(rep.max_equality_residual() < 1e-9);
    CHECK(rep.max_bound_violation() < 1e-9);
    CHECK(rep.min_cone_slack() > -1e-9);
  }
  CHECK(accepted == 200);
}

TEST_CASE("objective spec JSON round-trips") {
  ObjectiveSpec spec = ObjectiveSpec::linear(
      {{ObjectiveSpec::Term::Role::node_p, "3", 1.5},
       {ObjectiveSpec::Term::Role::branch_l, "2", -0.25}});
  const ObjectiveSpec back =
      ObjectiveSpec::from_json_string(spec.to_json_string());
  CHECK(back.kind == ObjectiveSpec::Kind::linear);
  REQUIRE(back.terms.size() == 2);
  CHECK(back.terms[0].key == "3");
  CHECK(back.terms[1].weight == -0.25);
  CHECK(ObjectiveSpec::from_json_string(R"({"kind":"total_loss"})").kind ==
        ObjectiveSpec::Kind::total_loss);
}
