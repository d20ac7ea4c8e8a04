#include "radopf/conic_program.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace radopf {

int ConicProgram::block_start(int k) const {
  int off = 0;
  for (int i = 0; i < k; ++i) off += cones[i].dim;
  return off;
}

void ConicProgram::check_consistency() const {
  int total = 0;
  for (const ConeBlock& blk : cones) {
    if (blk.dim <= 0) throw std::invalid_argument("cone block with dim <= 0");
    if (blk.kind == ConeKind::soc && blk.dim < 2) {
      throw std::invalid_argument("second-order block needs dim >= 2");
    }
    if (blk.kind == ConeKind::rsoc && blk.dim < 3) {
      throw std::invalid_argument("rotated block needs dim >= 3");
    }
    total += blk.dim;
  }
  if (total != num_vars()) {
    throw std::invalid_argument("cone dims do not cover the variables");
  }
  if (A.rows() != num_rows() || A.cols() != num_vars()) {
    throw std::invalid_argument("A shape does not match c/b");
  }
  if (static_cast<int>(var_names.size()) != num_vars() ||
      static_cast<int>(row_names.size()) != num_rows()) {
    throw std::invalid_argument("name table size mismatch");
  }
}

bool ConicProgram::in_cone(const Eigen::VectorXd& x, double tol) const {
  int off = 0;
  for (const ConeBlock& blk : cones) {
    const auto seg = x.segment(off, blk.dim);
    const double scale = std::max(1.0, seg.cwiseAbs().maxCoeff());
    switch (blk.kind) {
      case ConeKind::free:
        break;
      case ConeKind::nonneg:
        if (seg.minCoeff() < -tol * scale) return false;
        break;
      case ConeKind::soc:
        if (seg(0) - seg.tail(blk.dim - 1).norm() < -tol * scale) return false;
        break;
      case ConeKind::rsoc: {
        if (seg(0) < -tol * scale || seg(1) < -tol * scale) return false;
        const double slack =
            seg(0) * seg(1) - seg.tail(blk.dim - 2).squaredNorm();
        if (slack < -tol * scale * scale) return false;
        break;
      }
    }
    off += blk.dim;
  }
  return true;
}

bool ConicProgram::in_dual_cone(const Eigen::VectorXd& s, double tol) const {
  int off = 0;
  for (const ConeBlock& blk : cones) {
    const auto seg = s.segment(off, blk.dim);
    const double scale = std::max(1.0, seg.cwiseAbs().maxCoeff());
    switch (blk.kind) {
      case ConeKind::free:
        if (seg.cwiseAbs().maxCoeff() > tol * scale) return false;
        break;
      case ConeKind::nonneg:
        if (seg.minCoeff() < -tol * scale) return false;
        break;
      case ConeKind::soc:
        if (seg(0) - seg.tail(blk.dim - 1).norm() < -tol * scale) return false;
        break;
      case ConeKind::rsoc: {
        if (seg(0) < -tol * scale || seg(1) < -tol * scale) return false;
        const double slack =
            4.0 * seg(0) * seg(1) - seg.tail(blk.dim - 2).squaredNorm();
        if (slack < -tol * scale * scale) return false;
        break;
      }
    }
    off += blk.dim;
  }
  return true;
}

Eigen::VectorXd ConicProgram::equality_residual(const Eigen::VectorXd& x) const {
  return A * x - b;
}

int ProgramBuilder::add_block(ConeKind kind, int dim,
                              const std::string& name_prefix) {
  std::vector<std::string> names;
  names.reserve(dim);
  for (int k = 0; k < dim; ++k) {
    names.push_back(dim == 1 ? name_prefix
                             : name_prefix + "[" + std::to_string(k) + "]");
  }
  return add_block(kind, names);
}

int ProgramBuilder::add_block(ConeKind kind,
                              const std::vector<std::string>& names) {
  const int start = n_vars_;
  cones_.push_back({kind, static_cast<int>(names.size())});
  for (const auto& name : names) var_names_.push_back(name);
  n_vars_ += static_cast<int>(names.size());
  obj_.resize(n_vars_, 0.0);
  return start;
}

int ProgramBuilder::add_row(const std::string& name,
                            const std::vector<std::pair<int, double>>& entries,
                            double rhs) {
  const int row = num_rows();
  for (const auto& [col, coeff] : entries) {
    if (col < 0 || col >= n_vars_) {
      throw std::invalid_argument("row '" + name + "' references variable " +
                                  std::to_string(col) + " out of range");
    }
    if (coeff != 0.0) triplets_.emplace_back(row, col, coeff);
  }
  rhs_.push_back(rhs);
  row_names_.push_back(name);
  return row;
}

void ProgramBuilder::set_objective(int var, double coeff) {
  obj_.at(var) = coeff;
}

void ProgramBuilder::add_objective(int var, double coeff) {
  obj_.at(var) += coeff;
}

ConicProgram ProgramBuilder::finish() {
  ConicProgram p;
  p.c = Eigen::Map<const Eigen::VectorXd>(obj_.data(), n_vars_);
  p.b = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), rhs_.size());
  p.A.resize(static_cast<int>(rhs_.size()), n_vars_);
  p.A.setFromTriplets(triplets_.begin(), triplets_.end());
  p.A.makeCompressed();
  p.cones = cones_;
  p.var_names = var_names_;
  p.row_names = row_names_;
  p.check_consistency();
  return p;
}

namespace {

const char* kind_name(ConeKind k) {
  switch (k) {
    case ConeKind::free: return "free";
    case ConeKind::nonneg: return "nonneg";
    case ConeKind::soc: return "soc";
    case ConeKind::rsoc: return "rsoc";
  }
  return "?";
}

ConeKind kind_from_name(const std::string& s) {
  if (s == "free") return ConeKind::free;
  if (s == "nonneg") return ConeKind::nonneg;
  if (s == "soc") return ConeKind::soc;
  if (s == "rsoc") return ConeKind::rsoc;
  throw std::invalid_argument("unknown cone kind '" + s + "'");
}

}  // namespace

std::string ConicProgram::to_json_string(int indent) const {
  using nlohmann::json;
  json j;
  j["c"] = std::vector<double>(c.data(), c.data() + c.size());
  j["b"] = std::vector<double>(b.data(), b.data() + b.size());
  json triplets = json::array();
  for (int col = 0; col < A.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, col); it; ++it) {
      triplets.push_back({it.row(), it.col(), it.value()});
    }
  }
  j["A"] = {{"rows", num_rows()}, {"cols", num_vars()}, {"entries", triplets}};
  json cones_json = json::array();
  for (const ConeBlock& blk : cones) {
    cones_json.push_back({{"kind", kind_name(blk.kind)}, {"dim", blk.dim}});
  }
  j["cones"] = cones_json;
  j["var_names"] = var_names;
  j["row_names"] = row_names;
  return j.dump(indent);
}

ConicProgram ConicProgram::from_json_string(const std::string& text) {
  using nlohmann::json;
  const json j = json::parse(text);
  ConicProgram p;
  const auto c = j.at("c").get<std::vector<double>>();
  const auto b = j.at("b").get<std::vector<double>>();
  p.c = Eigen::Map<const Eigen::VectorXd>(c.data(), c.size());
  p.b = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
  const json& aj = j.at("A");
  p.A.resize(aj.at("rows").get<int>(), aj.at("cols").get<int>());
  std::vector<Eigen::Triplet<double>> triplets;
  for (const json& t : aj.at("entries")) {
    triplets.emplace_back(t.at(0).get<int>(), t.at(1).get<int>(),
                          t.at(2).get<double>());
  }
  p.A.setFromTriplets(triplets.begin(), triplets.end());
  for (const json& blk : j.at("cones")) {
    p.cones.push_back({kind_from_name(blk.at("kind").get<std::string>()),
                       blk.at("dim").get<int>()});
  }
  p.var_names = j.at("var_names").get<std::vector<std::string>>();
  p.row_names = j.at("row_names").get<std::vector<std::string>>();
  p.check_consistency();
  return p;
}

ConicProgram rewrite_rotated_as_soc(const ConicProgram& p) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  // Column substitution per rotated block:
  //   u = (y0 + y1)/sqrt2, w = (y0 - y1)/sqrt2, t = y_tail/sqrt2
  // with (y0, y1, y_tail) in a plain second-order cone.
  ConicProgram q = p;
  Eigen::SparseMatrix<double> A = p.A;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(A.nonZeros() * 2);

  std::vector<int> block_of(p.num_vars());
  std::vector<int> offset_in_block(p.num_vars());
  std::vector<int> block_starts(p.cones.size());
  {
    int off = 0;
    for (size_t k = 0; k < p.cones.size(); ++k) {
      block_starts[k] = off;
      for (int d = 0; d < p.cones[k].dim; ++d) {
        block_of[off + d] = static_cast<int>(k);
        offset_in_block[off + d] = d;
      }
      off += p.cones[k].dim;
    }
  }
  auto is_rsoc_col = [&](int col) {
    return p.cones[block_of[col]].kind == ConeKind::rsoc;
  };

  for (int col = 0; col < A.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, col); it; ++it) {
      if (!is_rsoc_col(col)) {
        triplets.emplace_back(it.row(), col, it.value());
        continue;
      }
      const int start = block_starts[block_of[col]];
      const int d = offset_in_block[col];
      if (d == 0) {  // u column -> (y0 + y1)/sqrt2
        triplets.emplace_back(it.row(), start, it.value() * inv_sqrt2);
        triplets.emplace_back(it.row(), start + 1, it.value() * inv_sqrt2);
      } else if (d == 1) {  // w column -> (y0 - y1)/sqrt2
        triplets.emplace_back(it.row(), start, it.value() * inv_sqrt2);
        triplets.emplace_back(it.row(), start + 1, -it.value() * inv_sqrt2);
      } else {  // t column -> y_d/sqrt2
        triplets.emplace_back(it.row(), col, it.value() * inv_sqrt2);
      }
    }
  }
  q.A.setZero();
  q.A.setFromTriplets(triplets.begin(), triplets.end());

  q.c = Eigen::VectorXd::Zero(p.num_vars());
  for (int col = 0; col < p.num_vars(); ++col) {
    const double v = p.c(col);
    if (v == 0.0) continue;
    if (!is_rsoc_col(col)) {
      q.c(col) += v;
      continue;
    }
    const int start = block_starts[block_of[col]];
    const int d = offset_in_block[col];
    if (d == 0) {
      q.c(start) += v * inv_sqrt2;
      q.c(start + 1) += v * inv_sqrt2;
    } else if (d == 1) {
      q.c(start) += v * inv_sqrt2;
      q.c(start + 1) -= v * inv_sqrt2;
    } else {
      q.c(col) += v * inv_sqrt2;
    }
  }

  for (size_t k = 0; k < q.cones.size(); ++k) {
    if (q.cones[k].kind == ConeKind::rsoc) {
      q.cones[k].kind = ConeKind::soc;
      const int start = block_starts[k];
      q.var_names[start] = p.var_names[start] + "+" + p.var_names[start + 1];
      q.var_names[start + 1] =
          p.var_names[start] + "-" + p.var_names[start + 1];
    }
  }
  q.check_consistency();
  return q;
}

}  // namespace radopf
