#pragma once

#include <optional>
#include <string>
#include <vector>

#include "radopf/conic_program.hpp"

namespace radopf {

struct PresolveOptions {
  bool equilibrate = true;
  int ruiz_iters = 3;
};

/// Result of the cheap structural clean-up that runs ahead of the interior
/// point method: exactly dependent (duplicated) equality rows are dropped,
/// zero rows are checked for consistency, variables pinned by singleton
/// rows are substituted out (free and nonnegative coordinates only; cone
/// block members are never touched), and the remaining system is Ruiz
/// equilibrated with one shared column scale per second-order/rotated
/// block so cone membership is preserved.
struct Presolved {
  ConicProgram program;

  bool infeasible = false;
  std::string infeasible_reason;
  /// Exact Farkas ray for the original program when infeasibility was
  /// detected from inconsistent rows (b'y > 0, A'y = 0); empty otherwise.
  Eigen::VectorXd farkas_y;

  std::vector<int> var_map;  ///< reduced var index -> original var index
  std::vector<int> row_map;  ///< reduced row index -> original row index

  struct FixedVar {
    int var = -1;      ///< original variable index
    double value = 0.0;
    int row = -1;      ///< original row that pinned it
    double coeff = 0.0;
    bool nonneg = false;
  };
  /// In fixing order; recovery walks it backwards.
  std::vector<FixedVar> fixed;

  Eigen::VectorXd row_scale;  ///< y_original = row_scale .* y_reduced
  Eigen::VectorXd col_scale;  ///< x_original = col_scale .* x_reduced

  /// Maps a reduced-space solution back onto the original program,
  /// reconstructing multipliers for dropped rows and dual slacks for fixed
  /// variables. With as_ray = true the inputs are treated as an
  /// (in)feasibility certificate: fixed coordinates map to 0 and the
  /// fixing-row multipliers solve against a zero objective.
  void recover(const ConicProgram& original, const Eigen::VectorXd& x_red,
               const Eigen::VectorXd& y_red, const Eigen::VectorXd& s_red,
               Eigen::VectorXd& x, Eigen::VectorXd& y, Eigen::VectorXd& s,
               bool as_ray = false) const;
};

Presolved presolve(const ConicProgram& p, const PresolveOptions& opts = {});

}  // namespace radopf
