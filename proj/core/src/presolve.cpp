#include "radopf/presolve.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace radopf {

namespace {

struct WorkRow {
  std::vector<std::pair<int, double>> entries;  // (col, val), sorted by col
  double b = 0.0;
  bool dropped = false;
};

enum class VarClass { free_var, nonneg, cone_member };

}  // namespace

Presolved presolve(const ConicProgram& p, const PresolveOptions& opts) {
  p.check_consistency();
  const int n = p.num_vars();
  const int m = p.num_rows();

  Presolved out;

  std::vector<VarClass> var_class(n);
  {
    int off = 0;
    for (const ConeBlock& blk : p.cones) {
      for (int d = 0; d < blk.dim; ++d) {
        var_class[off + d] = blk.kind == ConeKind::free  ? VarClass::free_var
                             : blk.kind == ConeKind::nonneg ? VarClass::nonneg
                                                            : VarClass::cone_member;
      }
      off += blk.dim;
    }
  }

  std::vector<WorkRow> rows(m);
  std::vector<std::vector<int>> col_rows(n);
  for (int col = 0; col < p.A.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, col); it; ++it) {
      if (it.value() == 0.0) continue;
      rows[it.row()].entries.push_back({col, it.value()});
      col_rows[col].push_back(static_cast<int>(it.row()));
    }
  }
  for (int i = 0; i < m; ++i) {
    std::sort(rows[i].entries.begin(), rows[i].entries.end());
    rows[i].b = p.b(i);
  }

  std::vector<bool> var_fixed(n, false);
  std::vector<double> fixed_value(n, 0.0);

  auto declare_infeasible = [&](const std::string& reason,
                                const Eigen::VectorXd& ray) {
    out.infeasible = true;
    out.infeasible_reason = reason;
    out.farkas_y = ray;
  };

  auto active_entries = [&](const WorkRow& row) {
    std::vector<std::pair<int, double>> act;
    for (const auto& [col, val] : row.entries) {
      if (!var_fixed[col]) act.push_back({col, val});
    }
    return act;
  };

  // Structural passes: zero rows, exact duplicates, singleton fixing.
  // Substitution of a fixed variable can create new zero or singleton
  // rows, so repeat until stable.
  bool changed = true;
  while (changed && !out.infeasible) {
    changed = false;

    // Zero and singleton rows.
    for (int i = 0; i < m && !out.infeasible; ++i) {
      WorkRow& row = rows[i];
      if (row.dropped) continue;
      const auto act = active_entries(row);
      const double zero_tol = 1e-11 * std::max(1.0, std::abs(p.b(i)));
      if (act.empty()) {
        if (std::abs(row.b) <= zero_tol) {
          row.dropped = true;
          changed = true;
        } else {
          Eigen::VectorXd ray = Eigen::VectorXd::Zero(m);
          ray(i) = row.b > 0 ? 1.0 : -1.0;
          declare_infeasible("row '" + p.row_names[i] +
                                 "' reduces to 0 = " + std::to_string(row.b),
                             ray);
        }
        continue;
      }
      if (act.size() == 1) {
        const auto [col, coeff] = act[0];
        if (var_class[col] == VarClass::cone_member) continue;
        const double value = row.b / coeff;
        if (var_class[col] == VarClass::nonneg && value < -zero_tol) {
          declare_infeasible("row '" + p.row_names[i] + "' pins nonnegative '" +
                                 p.var_names[col] + "' to " +
                                 std::to_string(value),
                             Eigen::VectorXd());
          continue;
        }
        var_fixed[col] = true;
        fixed_value[col] =
            var_class[col] == VarClass::nonneg ? std::max(value, 0.0) : value;
        out.fixed.push_back({col, fixed_value[col], i, coeff,
                             var_class[col] == VarClass::nonneg});
        row.dropped = true;
        for (int r : col_rows[col]) {
          if (rows[r].dropped || r == i) continue;
          for (const auto& [c2, v2] : rows[r].entries) {
            if (c2 == col) rows[r].b -= v2 * fixed_value[col];
          }
        }
        changed = true;
      }
    }
    if (out.infeasible) break;

    // Exact duplicates: normalize by the first active coefficient and
    // compare patterns bitwise.
    std::map<std::vector<std::pair<int, double>>, int> seen;
    for (int i = 0; i < m; ++i) {
      WorkRow& row = rows[i];
      if (row.dropped) continue;
      auto act = active_entries(row);
      if (act.empty()) continue;
      const double lead = act[0].second;
      for (auto& [col, val] : act) val /= lead;
      auto [it, fresh] = seen.emplace(std::move(act), i);
      if (fresh) continue;
      const int first = it->second;
      const double first_lead = active_entries(rows[first])[0].second;
      const double scale = lead / first_lead;  // row i = scale * row first
      if (std::abs(row.b - scale * rows[first].b) <=
          1e-11 * std::max({1.0, std::abs(row.b), std::abs(scale * rows[first].b)})) {
        row.dropped = true;
        changed = true;
      } else {
        Eigen::VectorXd ray = Eigen::VectorXd::Zero(m);
        const double diff = scale * rows[first].b - row.b;
        const double sgn = diff > 0 ? 1.0 : -1.0;
        ray(first) = sgn * scale;
        ray(i) = -sgn;
        declare_infeasible("rows '" + p.row_names[first] + "' and '" +
                               p.row_names[i] +
                               "' are parallel with different right-hand sides",
                           ray);
        break;
      }
    }
  }

  if (out.infeasible) {
    out.program = p;
    return out;
  }

  // Rebuild the reduced program.
  std::vector<int> new_col(n, -1);
  for (int j = 0; j < n; ++j) {
    if (!var_fixed[j]) {
      new_col[j] = static_cast<int>(out.var_map.size());
      out.var_map.push_back(j);
    }
  }
  std::vector<int> new_row(m, -1);
  for (int i = 0; i < m; ++i) {
    if (!rows[i].dropped) {
      new_row[i] = static_cast<int>(out.row_map.size());
      out.row_map.push_back(i);
    }
  }
  const int nr = static_cast<int>(out.var_map.size());
  const int mr = static_cast<int>(out.row_map.size());

  ConicProgram q;
  q.c.resize(nr);
  q.b.resize(mr);
  q.var_names.resize(nr);
  q.row_names.resize(mr);
  for (int j = 0; j < nr; ++j) {
    q.c(j) = p.c(out.var_map[j]);
    q.var_names[j] = p.var_names[out.var_map[j]];
  }
  for (int i = 0; i < mr; ++i) {
    q.b(i) = rows[out.row_map[i]].b;
    q.row_names[i] = p.row_names[out.row_map[i]];
  }
  {
    int off = 0;
    for (const ConeBlock& blk : p.cones) {
      int kept = 0;
      for (int d = 0; d < blk.dim; ++d) {
        if (!var_fixed[off + d]) ++kept;
      }
      if (kept > 0) q.cones.push_back({blk.kind, kept});
      off += blk.dim;
    }
  }
  {
    std::vector<Eigen::Triplet<double>> triplets;
    for (int i = 0; i < m; ++i) {
      if (rows[i].dropped) continue;
      for (const auto& [col, val] : rows[i].entries) {
        if (!var_fixed[col]) {
          triplets.emplace_back(new_row[i], new_col[col], val);
        }
      }
    }
    q.A.resize(mr, nr);
    q.A.setFromTriplets(triplets.begin(), triplets.end());
    q.A.makeCompressed();
  }

  // Ruiz equilibration; all columns of one soc/rsoc block share a scale.
  out.row_scale = Eigen::VectorXd::Ones(mr);
  out.col_scale = Eigen::VectorXd::Ones(nr);
  if (opts.equilibrate && mr > 0 && nr > 0) {
    std::vector<int> block_of(nr);
    std::vector<bool> block_uniform;
    {
      int off = 0, k = 0;
      for (const ConeBlock& blk : q.cones) {
        block_uniform.push_back(blk.kind == ConeKind::soc ||
                                blk.kind == ConeKind::rsoc);
        for (int d = 0; d < blk.dim; ++d) block_of[off + d] = k;
        off += blk.dim;
        ++k;
      }
    }
    for (int iter = 0; iter < opts.ruiz_iters; ++iter) {
      Eigen::VectorXd rmax = Eigen::VectorXd::Zero(mr);
      Eigen::VectorXd cmax = Eigen::VectorXd::Zero(nr);
      for (int col = 0; col < q.A.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(q.A, col); it;
             ++it) {
          const double a = std::abs(it.value());
          rmax(it.row()) = std::max(rmax(it.row()), a);
          cmax(col) = std::max(cmax(col), a);
        }
      }
      // Collapse cone blocks to one shared column factor.
      std::vector<double> block_max(q.cones.size(), 0.0);
      for (int j = 0; j < nr; ++j) {
        block_max[block_of[j]] = std::max(block_max[block_of[j]], cmax(j));
      }
      for (int j = 0; j < nr; ++j) {
        if (block_uniform[block_of[j]]) cmax(j) = block_max[block_of[j]];
      }
      auto factor = [](double v) { return v > 1e-12 ? 1.0 / std::sqrt(v) : 1.0; };
      Eigen::VectorXd dr = rmax.unaryExpr(factor);
      Eigen::VectorXd dc = cmax.unaryExpr(factor);
      for (int col = 0; col < q.A.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(q.A, col); it;
             ++it) {
          it.valueRef() *= dr(it.row()) * dc(col);
        }
      }
      out.row_scale = out.row_scale.cwiseProduct(dr);
      out.col_scale = out.col_scale.cwiseProduct(dc);
    }
    q.b = q.b.cwiseProduct(out.row_scale);
    q.c = q.c.cwiseProduct(out.col_scale);
  }

  q.check_consistency();
  out.program = std::move(q);
  return out;
}

void Presolved::recover(const ConicProgram& original,
                        const Eigen::VectorXd& x_red,
                        const Eigen::VectorXd& y_red,
                        const Eigen::VectorXd& s_red, Eigen::VectorXd& x,
                        Eigen::VectorXd& y, Eigen::VectorXd& s,
                        bool as_ray) const {
  const int n = original.num_vars();
  const int m = original.num_rows();
  x = Eigen::VectorXd::Zero(n);
  y = Eigen::VectorXd::Zero(m);
  s = Eigen::VectorXd::Zero(n);

  for (size_t j = 0; j < var_map.size(); ++j) {
    x(var_map[j]) = col_scale(j) * x_red(j);
    s(var_map[j]) = s_red(j) / col_scale(j);
  }
  for (size_t i = 0; i < row_map.size(); ++i) {
    y(row_map[i]) = row_scale(i) * y_red(i);
  }
  if (!as_ray) {
    for (const FixedVar& f : fixed) x(f.var) = f.value;
  }

  // Multipliers of the fixing rows, walked backwards so every later row's
  // multiplier is already known when an earlier column references it.
  for (auto it = fixed.rbegin(); it != fixed.rend(); ++it) {
    double rest = as_ray ? 0.0 : original.c(it->var);
    for (Eigen::SparseMatrix<double>::InnerIterator a(original.A, it->var); a;
         ++a) {
      if (static_cast<int>(a.row()) != it->row) rest -= a.value() * y(a.row());
    }
    // rest = c_j - sum of other rows; want s_j = rest - coeff * y_row with
    // s_j = 0 when the variable is free or strictly positive, and
    // max(0, rest) when a nonnegative variable sits at its bound.
    double s_target = 0.0;
    if (it->nonneg && (as_ray || it->value == 0.0)) {
      s_target = std::max(0.0, rest);
    }
    y(it->row) = (rest - s_target) / it->coeff;
    s(it->var) = s_target;
  }
}

}  // namespace radopf
