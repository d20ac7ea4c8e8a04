#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "helpers.hpp"
#include "radopf/dual.hpp"
#include "radopf/solver.hpp"

using namespace radopf;
using radopf::testing::u01;

namespace {

ConicProgram lp_example() {
  // min x  s.t.  x = 1, x >= 0
  ProgramBuilder pb;
  const int x = pb.add_block(ConeKind::nonneg, 1, "x");
  pb.add_row("fix", {{x, 1.0}}, 1.0);
  pb.set_objective(x, 1.0);
  return pb.finish();
}

ConicProgram rsoc_example() {
  // min u + w  s.t.  (u, w, t) rotated, t = 1  -> optimum 2 at u = w = 1
  ProgramBuilder pb;
  const int blk = pb.add_block(ConeKind::rsoc, {"u", "w", "t"});
  pb.add_row("pin_t", {{blk + 2, 1.0}}, 1.0);
  pb.set_objective(blk, 1.0);
  pb.set_objective(blk + 1, 1.0);
  return pb.finish();
}

struct RandomConic {
  ConicProgram program;
  Eigen::VectorXd x0;       // strictly feasible primal point
  Eigen::VectorXd z0;       // strictly feasible point of the dual program
};

// Feasible-by-construction program: x0 interior to K, b = A x0; (y0, s0)
// interior to the dual, c = A'y0 + s0. Both sampling anchors are returned.
RandomConic random_conic(std::mt19937_64& rng) {
  ProgramBuilder pb;
  struct Blk {
    ConeKind kind;
    int start, dim;
  };
  std::vector<Blk> blocks;
  const int n_blocks = 2 + static_cast<int>(u01(rng) * 3);
  for (int k = 0; k < n_blocks; ++k) {
    const double pick = u01(rng);
    ConeKind kind = pick < 0.3   ? ConeKind::nonneg
                    : pick < 0.55 ? ConeKind::soc
                    : pick < 0.8  ? ConeKind::rsoc
                                  : ConeKind::free;
    int dim = kind == ConeKind::rsoc ? 3 + static_cast<int>(u01(rng) * 2)
              : kind == ConeKind::soc ? 2 + static_cast<int>(u01(rng) * 3)
                                      : 1 + static_cast<int>(u01(rng) * 3);
    const int start = pb.add_block(kind, dim, "b" + std::to_string(k));
    blocks.push_back({kind, start, dim});
  }
  const int n = pb.num_vars();
  const int m = std::max(1, n / 2);

  Eigen::VectorXd x0(n), s0(n);
  for (const Blk& blk : blocks) {
    switch (blk.kind) {
      case ConeKind::free:
        for (int d = 0; d < blk.dim; ++d) {
          x0(blk.start + d) = 2.0 * u01(rng) - 1.0;
          s0(blk.start + d) = 0.0;
        }
        break;
      case ConeKind::nonneg:
        for (int d = 0; d < blk.dim; ++d) {
          x0(blk.start + d) = 0.2 + u01(rng);
          s0(blk.start + d) = 0.2 + u01(rng);
        }
        break;
      case ConeKind::soc: {
        for (int d = 1; d < blk.dim; ++d) {
          x0(blk.start + d) = 2.0 * u01(rng) - 1.0;
          s0(blk.start + d) = 2.0 * u01(rng) - 1.0;
        }
        x0(blk.start) =
            x0.segment(blk.start + 1, blk.dim - 1).norm() + 0.2 + u01(rng);
        s0(blk.start) =
            s0.segment(blk.start + 1, blk.dim - 1).norm() + 0.2 + u01(rng);
        break;
      }
      case ConeKind::rsoc: {
        const double u = 0.3 + u01(rng), w = 0.3 + u01(rng);
        x0(blk.start) = u;
        x0(blk.start + 1) = w;
        double cap = std::sqrt(0.8 * u * w);
        for (int d = 2; d < blk.dim; ++d) {
          x0(blk.start + d) =
              (2.0 * u01(rng) - 1.0) * cap / std::sqrt(blk.dim - 2.0);
        }
        // dual cone: 4ab >= ||c||^2
        const double a = 0.3 + u01(rng), bb = 0.3 + u01(rng);
        s0(blk.start) = a;
        s0(blk.start + 1) = bb;
        cap = std::sqrt(3.5 * a * bb);
        for (int d = 2; d < blk.dim; ++d) {
          s0(blk.start + d) =
              (2.0 * u01(rng) - 1.0) * cap / std::sqrt(blk.dim - 2.0);
        }
        break;
      }
    }
  }

  Eigen::MatrixXd A(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = 2.0 * u01(rng) - 1.0;
  }
  Eigen::VectorXd y0(m);
  for (int i = 0; i < m; ++i) y0(i) = 2.0 * u01(rng) - 1.0;
  const Eigen::VectorXd b = A * x0;
  const Eigen::VectorXd c = A.transpose() * y0 + s0;

  for (int i = 0; i < m; ++i) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < n; ++j) row.push_back({j, A(i, j)});
    pb.add_row("r" + std::to_string(i), row, b(i));
  }
  for (int j = 0; j < n; ++j) pb.set_objective(j, c(j));

  RandomConic out{pb.finish(), x0, Eigen::VectorXd()};

  // Anchor for the dual program's variables (y, s~): rotated slacks store
  // the doubled first two coordinates.
  const DualProgram dual = build_dual(out.program);
  Eigen::VectorXd z0(dual.program.num_vars());
  z0.head(m) = y0;
  int zi = m;
  for (const Blk& blk : blocks) {
    if (blk.kind == ConeKind::free) continue;
    for (int d = 0; d < blk.dim; ++d) {
      const double scale = (blk.kind == ConeKind::rsoc && d < 2) ? 2.0 : 1.0;
      z0(zi++) = scale * s0(blk.start + d);
    }
  }
  out.z0 = z0;
  return out;
}

// Rejection-sample points satisfying Ax = b (kernel perturbations of an
// anchor) that remain inside the cones.
std::vector<Eigen::VectorXd> feasible_samples(const ConicProgram& p,
                                              const Eigen::VectorXd& anchor,
                                              std::mt19937_64& rng,
                                              int want) {
  const Eigen::MatrixXd A = Eigen::MatrixXd(p.A);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  const Eigen::MatrixXd N = lu.kernel();
  std::vector<Eigen::VectorXd> out{anchor};
  for (int attempt = 0; attempt < 200 && static_cast<int>(out.size()) < want;
       ++attempt) {
    Eigen::VectorXd v(N.cols());
    for (int k = 0; k < v.size(); ++k) v(k) = (2.0 * u01(rng) - 1.0) * 0.3;
    Eigen::VectorXd x = anchor + N * v;
    if (p.in_cone(x, 0.0)) out.push_back(std::move(x));
  }
  return out;
}

}  // namespace

TEST_CASE("textbook LP dual") {
  const ConicProgram p = lp_example();
  const DualProgram dual = build_dual(p);

  // max y s.t. y + s = 1, s >= 0  ->  y* = 1.
  REQUIRE(dual.program.num_vars() == 2);
  REQUIRE(dual.program.num_rows() == 1);
  const Solution ds = solve(dual.program);
  REQUIRE(ds.status == SolveStatus::optimal);
  CHECK(dual.dual_objective_value(ds.primal_obj) == doctest::Approx(1.0));

  // Mapping table: one multiplier, one slack.
  REQUIRE(dual.mapping.size() == 2);
  CHECK(dual.mapping[0].kind == DualProgram::VarOrigin::Kind::eq_multiplier);
  CHECK(dual.mapping[1].kind == DualProgram::VarOrigin::Kind::cone_slack);
}

TEST_CASE("bidual agrees with the primal on a sample SOCP") {
  const ConicProgram p = rsoc_example();
  const Solution ps = solve(p);
  REQUIRE(ps.status == SolveStatus::optimal);
  CHECK(ps.primal_obj == doctest::Approx(2.0).epsilon(1e-7));

  const ConicProgram bidual = build_dual(build_dual(p).program).program;
  const Solution bs = solve(bidual);
  REQUIRE(bs.status == SolveStatus::optimal);
  CHECK(bs.primal_obj == doctest::Approx(ps.primal_obj).epsilon(1e-7));
}

TEST_CASE("dual-of-dual preserves the coned block layout") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const RandomConic rc = random_conic(rng);
    const ConicProgram dd = build_dual(build_dual(rc.program).program).program;
    std::vector<ConeBlock> coned_p, coned_dd;
    for (const ConeBlock& blk : rc.program.cones) {
      if (blk.kind != ConeKind::free) coned_p.push_back(blk);
    }
    for (const ConeBlock& blk : dd.cones) {
      if (blk.kind != ConeKind::free) coned_dd.push_back(blk);
    }
    REQUIRE(coned_p.size() == coned_dd.size());
    for (size_t k = 0; k < coned_p.size(); ++k) {
      CHECK(coned_p[k].kind == coned_dd[k].kind);
      CHECK(coned_p[k].dim == coned_dd[k].dim);
    }
  }
}

TEST_CASE("weak duality on rejection-sampled feasible points") {
  std::mt19937_64 rng(17);
  int programs = 0;
  while (programs < 50) {
    const RandomConic rc = random_conic(rng);
    const DualProgram dual = build_dual(rc.program);

    REQUIRE(rc.program.in_cone(rc.x0, 1e-12));
    REQUIRE((rc.program.A * rc.x0 - rc.program.b).norm() < 1e-9);
    REQUIRE(dual.program.in_cone(rc.z0, 1e-12));
    REQUIRE((dual.program.A * rc.z0 - dual.program.b).norm() < 1e-9);

    const auto xs = feasible_samples(rc.program, rc.x0, rng, 6);
    const auto zs = feasible_samples(dual.program, rc.z0, rng, 6);
    for (const auto& x : xs) {
      const double primal_value = rc.program.c.dot(x);
      for (const auto& z : zs) {
        const double dual_value = -dual.program.c.dot(z);  // = b'y
        CHECK(dual_value <=
              primal_value + 1e-6 * std::max(1.0, std::abs(primal_value)));
      }
    }
    ++programs;
  }
}

TEST_CASE("duality_gap arithmetic and threshold semantics") {
  SUBCASE("equal values") {
    const GapResult g = duality_gap(10.0, 10.0);
    CHECK(g.absolute == 0.0);
    CHECK(g.relative == 0.0);
  }
  SUBCASE("worst-case original-network scale") {
    const GapResult g = duality_gap(1.0, 0.9301);
    CHECK(g.relative == doctest::Approx(6.99e-2));
  }
  SUBCASE("tiny gap classifies as strong under 1e-4") {
    const GapResult g = duality_gap(0.0, -1e-5);
    CHECK(g.absolute == doctest::Approx(1e-5));
    CHECK(g.relative == doctest::Approx(1e-5));
    CHECK(g.relative < 1e-4);
  }
  SUBCASE("non-finite inputs are rejected") {
    CHECK_THROWS_AS(
        duality_gap(std::numeric_limits<double>::infinity(), 0.0),
        std::invalid_argument);
  }
}

TEST_CASE("solved primal/dual pairs respect the gap sign") {
  const ConicProgram p = rsoc_example();
  const DualProgram dual = build_dual(p);
  const Solution ps = solve(p);
  const Solution ds = solve(dual.program);
  REQUIRE(ps.status == SolveStatus::optimal);
  REQUIRE(ds.status == SolveStatus::optimal);
  const double dual_value = dual.dual_objective_value(ds.primal_obj);
  const GapResult g = duality_gap(ps.primal_obj, dual_value);
  CHECK(g.absolute >= -1e-6);
  CHECK(g.relative < 1e-6);
}
