#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <string>
#include <vector>

namespace radopf {

/// Cone block kinds for the variable partition of a standard-form program.
///
///   free(d)      x in R^d
///   nonneg(d)    x >= 0 componentwise
///   soc(d>=2)    x0 >= ||x_1..d-1||
///   rsoc(d>=3)   x0 * x1 >= ||x_2..d-1||^2, x0 >= 0, x1 >= 0
enum class ConeKind { free, nonneg, soc, rsoc };

struct ConeBlock {
  ConeKind kind = ConeKind::free;
  int dim = 0;
};

/// Standard-form cone program
///
///   min  c'x   s.t.  A x = b,   x in K,
///
/// where K is the product of `cones` over a partition of the variables in
/// order. Name tables carry semantic labels for every variable and row so
/// programs stay auditable after assembly.
struct ConicProgram {
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  std::vector<ConeBlock> cones;
  std::vector<std::string> var_names;
  std::vector<std::string> row_names;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(b.size()); }

  /// Offset of the first variable of block k.
  int block_start(int k) const;

  /// Sum of block dims == num_vars, name table sizes match, every block
  /// dimension is admissible. Throws std::invalid_argument otherwise.
  void check_consistency() const;

  /// Componentwise membership test x in K with tolerance `tol` on the cone
  /// inequalities (scaled by the block's magnitude).
  bool in_cone(const Eigen::VectorXd& x, double tol) const;

  /// Membership of a dual slack in K*: zero on free blocks, nonneg and soc
  /// self-dual, rotated blocks against {4ab >= ||c||^2}.
  bool in_dual_cone(const Eigen::VectorXd& s, double tol) const;

  /// Equality residual A x - b.
  Eigen::VectorXd equality_residual(const Eigen::VectorXd& x) const;

  /// Serializes to the documented JSON dump (c, A triplets, b, cone layout,
  /// name tables) used for debugging and external cross-checks.
  std::string to_json_string(int indent = -1) const;
  static ConicProgram from_json_string(const std::string& text);
};

/// Incremental builder so module code never touches triplets directly.
class ProgramBuilder {
 public:
  /// Appends a block of `dim` variables, returns the first index.
  int add_block(ConeKind kind, int dim, const std::string& name_prefix);
  int add_block(ConeKind kind, const std::vector<std::string>& names);

  /// Appends one equality row `sum coeff_k x_k = rhs`, returns its index.
  int add_row(const std::string& name,
              const std::vector<std::pair<int, double>>& entries, double rhs);

  void set_objective(int var, double coeff);
  void add_objective(int var, double coeff);

  int num_vars() const { return n_vars_; }
  int num_rows() const { return static_cast<int>(rhs_.size()); }

  ConicProgram finish();

 private:
  int n_vars_ = 0;
  std::vector<ConeBlock> cones_;
  std::vector<std::string> var_names_;
  std::vector<std::string> row_names_;
  std::vector<Eigen::Triplet<double>> triplets_;
  std::vector<double> rhs_;
  std::vector<double> obj_;
};

/// Rewrites every rotated block into a plain second-order block by the
/// change of coordinates (u', w', t') = ((u+w)/sqrt2, (u-w)/sqrt2, sqrt2 t);
/// columns of A and entries of c are substituted accordingly, so the program
/// is equivalent with identical optimal value. Used to cross-check the
/// native rotated-cone path.
ConicProgram rewrite_rotated_as_soc(const ConicProgram& p);

}  // namespace radopf
