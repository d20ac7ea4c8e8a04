#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "radopf/cases.hpp"
#include "radopf/dual.hpp"
#include "radopf/formulation.hpp"
#include "radopf/presolve.hpp"
#include "radopf/solver.hpp"

using namespace radopf;
using namespace radopf::testing;

namespace {

ConicProgram soc_abs_example() {
  // min t  s.t.  (t, u) in a 2d second-order cone, u = 1  ->  t* = 1
  ProgramBuilder pb;
  const int blk = pb.add_block(ConeKind::soc, {"t", "u"});
  pb.add_row("pin_u", {{blk + 1, 1.0}}, 1.0);
  pb.set_objective(blk, 1.0);
  return pb.finish();
}

ConicProgram rsoc_amgm_example() {
  // min u + w  s.t.  (u, w, t) rotated with t = 1  ->  optimum 2 (AM-GM)
  ProgramBuilder pb;
  const int blk = pb.add_block(ConeKind::rsoc, {"u", "w", "t"});
  pb.add_row("pin_t", {{blk + 2, 1.0}}, 1.0);
  pb.set_objective(blk, 1.0);
  pb.set_objective(blk + 1, 1.0);
  return pb.finish();
}

}  // namespace

TEST_CASE("cone unit battery") {
  SUBCASE("second-order absolute value") {
    const Solution s = solve(soc_abs_example());
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.primal_obj == doctest::Approx(1.0).epsilon(1e-8));
  }
  SUBCASE("rotated AM-GM") {
    const Solution s = solve(rsoc_amgm_example());
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.primal_obj == doctest::Approx(2.0).epsilon(1e-8));
    // equality case u = w = 1
    CHECK(s.x(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(s.x(1) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("KKT measures are certified at optimal") {
  const ConicProgram p = build_opf_cr(make_2bus(0.01, 0.02, 0.1, 0.05),
                                      ObjectiveSpec::loss());
  const Solution s = solve(p);
  REQUIRE(s.status == SolveStatus::optimal);

  // Recompute the advertised measures independently.
  const double pres = (p.A * s.x - p.b).norm() / (1.0 + p.b.norm());
  const double dres =
      (p.A.transpose() * s.y + s.s - p.c).norm() / (1.0 + p.c.norm());
  const double gap = std::abs(s.x.dot(s.s)) / (1.0 + std::abs(p.c.dot(s.x)));
  CHECK(pres <= 1e-8);
  CHECK(dres <= 1e-8);
  CHECK(gap <= 1e-8);
  CHECK(p.in_cone(s.x, 1e-8));
  CHECK(p.in_dual_cone(s.s, 1e-8));
  CHECK(s.primal_obj == doctest::Approx(s.dual_obj).epsilon(1e-7));
}

TEST_CASE("two-bus loss optimum matches the nonconvex oracle") {
  const Network net = make_2bus(0.01, 0.02, 0.1, 0.05);
  const ConicProgram p = build_opf_cr(net, ObjectiveSpec::loss());
  const Solution s = solve(p);
  REQUIRE(s.status == SolveStatus::optimal);

  const double oracle = oracle_2bus_loss(net);
  REQUIRE(std::isfinite(oracle));
  // The relaxation can only go lower; with the loss objective it is exact.
  CHECK(s.primal_obj <= oracle + 1e-6);
  const PhysicalPoint pt = extract_physical(net, p, s.x);
  const ResidualReport rep = residuals(net, pt);
  if (rep.max_recovery_gap() < 1e-8) {
    CHECK(s.primal_obj == doctest::Approx(oracle).epsilon(1e-6));
  }
}

TEST_CASE("presolve") {
  SUBCASE("duplicate equality rows are dropped, optimum unchanged") {
    ProgramBuilder pb;
    const int x = pb.add_block(ConeKind::nonneg, 2, "x");
    pb.add_row("sum", {{x, 1.0}, {x + 1, 2.0}}, 3.0);
    pb.add_row("sum_again", {{x, 1.0}, {x + 1, 2.0}}, 3.0);
    pb.add_row("scaled_copy", {{x, 2.0}, {x + 1, 4.0}}, 6.0);
    pb.set_objective(x, 1.0);
    pb.set_objective(x + 1, 1.0);
    const ConicProgram p = pb.finish();

    const Presolved ps = presolve(p);
    REQUIRE_FALSE(ps.infeasible);
    CHECK(ps.program.num_rows() == 1);

    const Solution with = solve(p);
    SolveOptions raw;
    raw.presolve = false;
    const Solution without = solve(p, raw);
    REQUIRE(with.status == SolveStatus::optimal);
    REQUIRE(without.status == SolveStatus::optimal);
    CHECK(with.primal_obj == doctest::Approx(without.primal_obj).epsilon(1e-8));
    // min x1 + x2 st x1 + 2 x2 = 3: put everything on x2
    CHECK(with.primal_obj == doctest::Approx(1.5).epsilon(1e-7));
  }

  SUBCASE("0 = nonzero short-circuits as infeasible with a Farkas ray") {
    ProgramBuilder pb;
    const int x = pb.add_block(ConeKind::nonneg, 1, "x");
    pb.add_row("ok", {{x, 1.0}}, 1.0);
    pb.add_row("empty", {}, 1.0);
    const ConicProgram p = pb.finish();
    const Presolved ps = presolve(p);
    CHECK(ps.infeasible);
    const Solution s = solve(p);
    CHECK(s.status == SolveStatus::primal_infeasible);
    CHECK(p.b.dot(s.y) == doctest::Approx(1.0));
  }

  SUBCASE("parallel rows with different right sides are infeasible") {
    ProgramBuilder pb;
    const int x = pb.add_block(ConeKind::free, 1, "x");
    pb.add_row("a", {{x, 1.0}}, 1.0);
    pb.add_row("b", {{x, 2.0}}, 3.0);
    const ConicProgram p = pb.finish();
    const Presolved ps = presolve(p);
    CHECK(ps.infeasible);
    // The stored ray certifies: b'y > 0 while A'y = 0.
    REQUIRE(ps.farkas_y.size() == 2);
    CHECK(p.b.dot(ps.farkas_y) > 0.0);
    CHECK((p.A.transpose() * ps.farkas_y).norm() == doctest::Approx(0.0));
  }

  SUBCASE("singleton rows fix variables and recover duals") {
    // min x + y  s.t.  x = 2 (free), x + y = 5, y >= 0
    ProgramBuilder pb;
    const int x = pb.add_block(ConeKind::free, 1, "x");
    const int y = pb.add_block(ConeKind::nonneg, 1, "y");
    pb.add_row("fix_x", {{x, 1.0}}, 2.0);
    pb.add_row("link", {{x, 1.0}, {y, 1.0}}, 5.0);
    pb.set_objective(x, 1.0);
    pb.set_objective(y, 1.0);
    const ConicProgram p = pb.finish();

    const Presolved ps = presolve(p);
    REQUIRE_FALSE(ps.infeasible);
    CHECK(ps.program.num_vars() <= 1);

    const Solution s = solve(p);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.primal_obj == doctest::Approx(5.0).epsilon(1e-7));
    CHECK(s.x(0) == doctest::Approx(2.0));
    CHECK(s.x(1) == doctest::Approx(3.0).epsilon(1e-6));
    // dual feasibility incl. the reconstructed fixed-row multiplier
    CHECK((p.A.transpose() * s.y + s.s - p.c).norm() < 1e-7);
  }

  SUBCASE("equilibration pays off on a badly scaled program") {
    // Rows and columns spanning 8 orders of magnitude.
    ProgramBuilder pb;
    const int blk = pb.add_block(ConeKind::rsoc, {"u", "w", "t"});
    const int z = pb.add_block(ConeKind::nonneg, 1, "z");
    pb.add_row("pin", {{blk + 2, 1e6}}, 1e6);
    pb.add_row("mix", {{blk, 1e-4}, {z, 1e4}}, 1.0);
    pb.set_objective(blk, 1e3);
    pb.set_objective(blk + 1, 1e-3);
    const ConicProgram p = pb.finish();

    SolveOptions eq;
    SolveOptions raw;
    raw.equilibrate = false;
    const Solution s_eq = solve(p, eq);
    const Solution s_raw = solve(p, raw);
    REQUIRE(s_eq.status == SolveStatus::optimal);
    REQUIRE(s_raw.status == SolveStatus::optimal);
    CHECK(s_eq.primal_obj ==
          doctest::Approx(s_raw.primal_obj).epsilon(1e-7));
    CHECK(s_eq.iterations <= s_raw.iterations);
  }
}

TEST_CASE("determinism: identical runs produce identical iterates") {
  const ConicProgram p = build_opf_cr(make_2bus(0.01, 0.02, 0.08, 0.02),
                                      ObjectiveSpec::loss());
  const Solution a = solve(p);
  const Solution b = solve(p);
  REQUIRE(a.status == b.status);
  CHECK(a.iterations == b.iterations);
  CHECK((a.x - b.x).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.y - b.y).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("scale invariance of the argmin") {
  ConicProgram p = build_opf_cr(make_2bus(0.01, 0.02, 0.08, 0.02),
                                ObjectiveSpec::loss());
  const Solution base = solve(p);
  REQUIRE(base.status == SolveStatus::optimal);
  ConicProgram scaled = p;
  scaled.c *= 1000.0;
  const Solution s = solve(scaled);
  REQUIRE(s.status == SolveStatus::optimal);
  CHECK(s.primal_obj == doctest::Approx(1000.0 * base.primal_obj).epsilon(1e-6));
  CHECK(s.dual_obj == doctest::Approx(1000.0 * base.dual_obj).epsilon(1e-6));
  CHECK((s.x - base.x).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("native rotated cones agree with the second-order rewrite") {
  for (std::uint64_t seed : {4u, 9u, 14u}) {
    const Network net = random_radial_network(seed, 5);
    const ConicProgram p = build_opf_cr(net, ObjectiveSpec::loss());
    const ConicProgram q = rewrite_rotated_as_soc(p);
    const Solution sp = solve(p);
    const Solution sq = solve(q);
    if (sp.status == SolveStatus::optimal &&
        sq.status == SolveStatus::optimal) {
      CHECK(sp.primal_obj == doctest::Approx(sq.primal_obj).epsilon(1e-7));
    } else {
      CHECK(sp.status == sq.status);
    }
  }
}

TEST_CASE("infeasibility and unboundedness certificates") {
  SUBCASE("primal infeasible via the embedding") {
    // x >= 0 with x = -1; presolve disabled to exercise the HSD detection.
    ProgramBuilder pb;
    const int x = pb.add_block(ConeKind::nonneg, 1, "x");
    pb.add_row("fix", {{x, 1.0}}, -1.0);
    pb.set_objective(x, 1.0);
    SolveOptions opts;
    opts.presolve = false;
    const Solution s = solve(pb.finish(), opts);
    CHECK(s.status == SolveStatus::primal_infeasible);
  }
  SUBCASE("unbounded below reports dual infeasibility") {
    // min -x, x >= 0, no equalities binding it
    ProgramBuilder pb;
    const int x = pb.add_block(ConeKind::nonneg, 1, "x");
    const int y = pb.add_block(ConeKind::free, 1, "y");
    pb.add_row("unrelated", {{y, 1.0}}, 0.0);
    pb.set_objective(x, -1.0);
    SolveOptions opts;
    opts.presolve = false;
    const Solution s = solve(pb.finish(), opts);
    CHECK(s.status == SolveStatus::dual_infeasible);
  }
}

TEST_CASE("iteration cap reports max_iters with the best iterate") {
  const ConicProgram p = build_opf_cr(ieee33_network(), ObjectiveSpec::loss());
  SolveOptions opts;
  opts.max_iters = 1;
  const Solution s = solve(p, opts);
  CHECK(s.status == SolveStatus::max_iters);
  CHECK(s.x.size() == p.num_vars());
}

TEST_CASE("33-bus relaxation solves to certified optimality") {
  const ConicProgram p = build_opf_cr(ieee33_network(), ObjectiveSpec::loss());
  const Solution s = solve(p);
  REQUIRE(s.status == SolveStatus::optimal);
  CHECK(s.primal_obj > 0.0);     // losses are positive
  CHECK(s.primal_obj < 0.05);    // and small in per-unit terms
}
