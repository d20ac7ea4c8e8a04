#include "radopf/dual.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace radopf {

DualProgram build_dual(const ConicProgram& p) {
  p.check_consistency();
  const int n = p.num_vars();
  const int m = p.num_rows();

  DualProgram dual;
  ProgramBuilder pb;

  // Multipliers y, one per primal row.
  std::vector<std::string> y_names;
  y_names.reserve(m);
  for (int i = 0; i < m; ++i) y_names.push_back("y[" + p.row_names[i] + "]");
  const int y_start = pb.add_block(ConeKind::free, y_names);
  for (int i = 0; i < m; ++i) {
    pb.set_objective(y_start + i, -p.b(i));
    dual.mapping.push_back({DualProgram::VarOrigin::Kind::eq_multiplier, i,
                            -1, -1, 1.0});
  }

  // Dual slack blocks mirror the primal coned blocks.
  // slack_var[j] is the s~ variable paired with primal variable j (or -1
  // for free primal variables); slack_scale[j] the coefficient it enters
  // its row with.
  std::vector<int> slack_var(n, -1);
  std::vector<double> slack_scale(n, 1.0);
  {
    int off = 0;
    for (size_t k = 0; k < p.cones.size(); ++k) {
      const ConeBlock& blk = p.cones[k];
      if (blk.kind != ConeKind::free) {
        std::vector<std::string> names;
        names.reserve(blk.dim);
        for (int d = 0; d < blk.dim; ++d) {
          names.push_back("s[" + p.var_names[off + d] + "]");
        }
        const int start = pb.add_block(blk.kind, names);
        for (int d = 0; d < blk.dim; ++d) {
          slack_var[off + d] = start + d;
          // Rotated dual cone {4ab >= ||c||^2} stored as a rotated block:
          // the first two coordinates enter halved.
          slack_scale[off + d] =
              (blk.kind == ConeKind::rsoc && d < 2) ? 0.5 : 1.0;
          dual.mapping.push_back({DualProgram::VarOrigin::Kind::cone_slack,
                                  -1, static_cast<int>(k), d,
                                  slack_scale[off + d]});
        }
      }
      off += blk.dim;
    }
  }

  // One dual feasibility row per primal variable: (A'y)_j [+ s_j] = c_j.
  // Iterate columns of A directly (column-major storage).
  for (int j = 0; j < n; ++j) {
    std::vector<std::pair<int, double>> row;
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, j); it; ++it) {
      row.push_back({y_start + static_cast<int>(it.row()), it.value()});
    }
    if (slack_var[j] >= 0) {
      row.push_back({slack_var[j], slack_scale[j]});
    }
    pb.add_row("dual[" + p.var_names[j] + "]", row, p.c(j));
  }

  dual.program = pb.finish();
  return dual;
}

GapResult duality_gap(double primal_value, double dual_value) {
  if (!std::isfinite(primal_value) || !std::isfinite(dual_value)) {
    throw std::invalid_argument(
        "duality_gap requires finite primal and dual values");
  }
  GapResult g;
  g.absolute = primal_value - dual_value;
  g.relative = g.absolute / std::max(1.0, std::abs(primal_value));
  return g;
}

std::string DualProgram::to_json_string(int indent) const {
  using nlohmann::json;
  json mapping_json = json::array();
  for (const VarOrigin& origin : mapping) {
    if (origin.kind == VarOrigin::Kind::eq_multiplier) {
      mapping_json.push_back(
          {{"kind", "eq_multiplier"}, {"primal_row", origin.primal_row}});
    } else {
      mapping_json.push_back({{"kind", "cone_slack"},
                              {"primal_block", origin.primal_block},
                              {"offset", origin.offset},
                              {"scale", origin.scale}});
    }
  }
  json j{{"program", json::parse(program.to_json_string(-1))},
         {"mapping", mapping_json}};
  return j.dump(indent);
}

}  // namespace radopf
