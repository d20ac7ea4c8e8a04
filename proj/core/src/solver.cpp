#include "radopf/solver.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "radopf/presolve.hpp"

namespace radopf {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::primal_infeasible: return "primal_infeasible";
    case SolveStatus::dual_infeasible: return "dual_infeasible";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "?";
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// The method works on the embedded form
//
//   min c'x  s.t.  A x = b,  G x + s = 0,  s in C = R+^n_lp x SOC x ...
//
// Nonnegative coordinates become unit selector rows of G; second-order
// blocks become identity selector rows; a rotated block (u, w, t) maps
// through the orthogonal-ish transform ((u+w)/sqrt2, (u-w)/sqrt2, sqrt2 t)
// onto one second-order cone, so the kernel only ever sees nonnegative and
// second-order cones while the outer program keeps its rotated blocks.
struct InternalForm {
  Eigen::SparseMatrix<double> A;  // p x n
  Eigen::SparseMatrix<double> G;  // m x n
  Eigen::VectorXd b, c;
  int n = 0, p = 0, m = 0;
  int n_lp = 0;
  std::vector<int> soc_dims;
};

InternalForm to_internal(const ConicProgram& q) {
  InternalForm f;
  f.n = q.num_vars();
  f.p = q.num_rows();
  f.A = q.A;
  f.b = q.b;
  f.c = q.c;

  const double is2 = 1.0 / std::sqrt(2.0);
  const double s2 = std::sqrt(2.0);
  std::vector<Eigen::Triplet<double>> g;
  int row = 0;
  int off = 0;
  for (const ConeBlock& blk : q.cones) {  // nonnegative rows first
    if (blk.kind == ConeKind::nonneg) {
      for (int d = 0; d < blk.dim; ++d) g.emplace_back(row++, off + d, -1.0);
    }
    off += blk.dim;
  }
  f.n_lp = row;
  off = 0;
  for (const ConeBlock& blk : q.cones) {
    if (blk.kind == ConeKind::soc) {
      for (int d = 0; d < blk.dim; ++d) g.emplace_back(row + d, off + d, -1.0);
      f.soc_dims.push_back(blk.dim);
      row += blk.dim;
    } else if (blk.kind == ConeKind::rsoc) {
      g.emplace_back(row, off, -is2);
      g.emplace_back(row, off + 1, -is2);
      g.emplace_back(row + 1, off, -is2);
      g.emplace_back(row + 1, off + 1, is2);
      for (int d = 2; d < blk.dim; ++d) g.emplace_back(row + d, off + d, -s2);
      f.soc_dims.push_back(blk.dim);
      row += blk.dim;
    }
    off += blk.dim;
  }
  f.m = row;
  f.G.resize(f.m, f.n);
  f.G.setFromTriplets(g.begin(), g.end());
  f.G.makeCompressed();
  return f;
}

struct IpmSettings {
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  double feastol_inacc = 1e-4;
  double abstol_inacc = 5e-5;
  double reltol_inacc = 5e-5;
  double gamma = 0.99;
  double stepmin = 1e-6;
  double stepmax = 0.999;
  double sigmamin = 1e-4;
  double sigmamax = 0.9999;
  double deltastat = 1e-9;
  double linsysacc = 1e-14;
  double irerrfact = 6.0;
  double safeguard = 500.0;
  int nitref = 9;
  int maxit = 200;
  bool verbose = false;
};

struct SocScaling {
  int dim = 0;
  double eta = 0.0;
  double eta_sq = 0.0;
  double a = 0.0;
  Eigen::VectorXd q;
  Eigen::MatrixXd W2;  // eta^2 * Wbar^2, dense
};

struct Info {
  double pcost = kNan, dcost = kNan;
  double gap = kNan, mu = kNan, kapovert = kNan;
  std::optional<double> relgap, pinfres, dinfres;
  double pres = kNan, dres = kNan;
  double step = 0.0, sigma = 0.0;
  int iter = 0;
};

struct Iterate {
  Eigen::VectorXd x, y, z, s, lambda;
  double tau = 1.0, kap = 1.0;
  double cx = 0.0, by = 0.0, hz = 0.0;
  Info i;
};

class Ipm {
 public:
  enum class Exit { optimal, primal_infeasible, dual_infeasible, maxit, numerics };
  enum class StopReason { converged, maxit, numerics };
  struct Outcome {
    Exit code = Exit::numerics;
    StopReason reason = StopReason::numerics;
    bool reduced_accuracy = false;
  };

  // Accepts the candidate (x, y, s) in the reduced program's coordinates;
  // returns true when it meets the caller's (original-space) optimality
  // demands. Termination is driven by this check, so a claimed optimum is
  // verified by construction.
  using Verifier = std::function<bool(
      const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&)>;

  Ipm(const InternalForm& f, const IpmSettings& st) : f_(f), st_(st) {
    delta_ = st_.deltastat;
    At_ = f_.A.transpose();
    Gt_ = f_.G.transpose();
    lp_v_.resize(f_.n_lp);
    lp_w_.resize(f_.n_lp);
    socs_.resize(f_.soc_dims.size());
    for (size_t k = 0; k < f_.soc_dims.size(); ++k) {
      socs_[k].dim = f_.soc_dims[k];
      socs_[k].q.resize(socs_[k].dim - 1);
      socs_[k].W2.resize(socs_[k].dim, socs_[k].dim);
    }
    w_.x.setZero(f_.n);
    w_.y.setZero(f_.p);
    w_.z.setZero(f_.m);
    w_.s.setZero(f_.m);
    w_.lambda.setZero(f_.m);
    resx0_ = std::max(1.0, f_.c.norm());
    resy0_ = std::max(1.0, f_.b.norm());
    resz0_ = 1.0;  // h = 0
    dim_K_ = f_.n + f_.p + f_.m;
    build_static_triplets();
  }

  void set_verifier(Verifier v) { verify_ = std::move(v); }

  Outcome run();

  const Iterate& iterate() const { return w_; }
  int iterations() const { return w_.i.iter; }

 private:
  void build_static_triplets();
  bool factor_kkt(bool initialize);
  int solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx,
                Eigen::VectorXd& dy, Eigen::VectorXd& dz, bool initialize);
  bool update_scalings();
  void scale(const Eigen::VectorXd& z, Eigen::VectorXd& out) const;
  void scale2add(const Eigen::VectorXd& v, Eigen::VectorXd& out,
                 bool identity) const;
  void conic_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                     Eigen::VectorXd& out) const;
  void conic_division(const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                      Eigen::VectorXd& out) const;
  void bring_to_cone(const Eigen::VectorXd& r, Eigen::VectorXd& out) const;
  double line_search(const Eigen::VectorXd& lambda, const Eigen::VectorXd& ds,
                     const Eigen::VectorXd& dz, double tau, double dtau,
                     double kap, double dkap) const;
  void compute_residuals();
  void update_statistics();
  Exit check_exit(bool reduced) const;
  double iterate_score(const Info& info) const;

  InternalForm f_;
  IpmSettings st_;
  Verifier verify_;
  Eigen::SparseMatrix<double> At_, Gt_;

  Eigen::VectorXd lp_v_, lp_w_;
  std::vector<SocScaling> socs_;

  Iterate w_, best_;
  bool have_best_ = false;

  int dim_K_ = 0;
  std::vector<Eigen::Triplet<double>> static_triplets_;
  Eigen::SparseMatrix<double> K_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt_;
  bool analyzed_ = false;
  double delta_ = 0.0;

  // residual work vectors
  Eigen::VectorXd rx_, ry_, rz_;
  double hresx_ = 0.0, hresy_ = 0.0, hresz_ = 0.0;
  double rt_ = 0.0;
  double nx_ = 0.0, ny_ = 0.0, nz_ = 0.0, ns_ = 0.0;
  double resx0_ = 1.0, resy0_ = 1.0, resz0_ = 1.0;
};

void Ipm::build_static_triplets() {
  static_triplets_.clear();
  // Lower triangle of
  //   [ dI  A'  G' ]
  //   [ A  -dI  0  ]
  //   [ G   0  -W2-dI ]
  // The W2 part is appended per iteration.
  for (int j = 0; j < f_.n; ++j) static_triplets_.emplace_back(j, j, delta_);
  for (int col = 0; col < f_.A.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(f_.A, col); it; ++it) {
      static_triplets_.emplace_back(f_.n + it.row(), it.col(), it.value());
    }
  }
  for (int i = 0; i < f_.p; ++i) {
    static_triplets_.emplace_back(f_.n + i, f_.n + i, -delta_);
  }
  for (int col = 0; col < f_.G.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(f_.G, col); it; ++it) {
      static_triplets_.emplace_back(f_.n + f_.p + it.row(), it.col(),
                                    it.value());
    }
  }
}

bool Ipm::factor_kkt(bool initialize) {
  std::vector<Eigen::Triplet<double>> trip = static_triplets_;
  const int zoff = f_.n + f_.p;
  for (int r = 0; r < f_.n_lp; ++r) {
    const double v = initialize ? 1.0 : lp_v_(r);
    trip.emplace_back(zoff + r, zoff + r, -v - delta_);
  }
  int row = f_.n_lp;
  for (const SocScaling& sc : socs_) {
    for (int a = 0; a < sc.dim; ++a) {
      for (int b = 0; b <= a; ++b) {
        double v = initialize ? (a == b ? 1.0 : 0.0) : sc.W2(a, b);
        if (a == b) v += delta_;
        trip.emplace_back(zoff + row + a, zoff + row + b, -v);
      }
    }
    row += sc.dim;
  }

  K_.resize(dim_K_, dim_K_);
  K_.setFromTriplets(trip.begin(), trip.end());
  if (!analyzed_) {
    ldlt_.analyzePattern(K_);
    analyzed_ = true;
  }
  ldlt_.factorize(K_);
  return ldlt_.info() == Eigen::Success;
}

int Ipm::solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx,
                   Eigen::VectorXd& dy, Eigen::VectorXd& dz, bool initialize) {
  Eigen::VectorXd sol = ldlt_.solve(rhs);
  const double threshold =
      (1.0 + rhs.lpNorm<Eigen::Infinity>()) * st_.linsysacc;

  double prev_err = kInf;
  Eigen::VectorXd best_sol = sol;
  int k_ref = 0;
  for (; k_ref <= st_.nitref; ++k_ref) {
    // Residual against the unregularized system.
    const auto dxs = sol.head(f_.n);
    const auto dys = sol.segment(f_.n, f_.p);
    const auto dzs = sol.tail(f_.m);
    Eigen::VectorXd ex = rhs.head(f_.n) - Gt_ * dzs;
    if (f_.p > 0) ex -= At_ * dys;
    Eigen::VectorXd ey = rhs.segment(f_.n, f_.p);
    if (f_.p > 0) ey -= f_.A * dxs;
    Eigen::VectorXd ez = rhs.tail(f_.m) - f_.G * dxs;
    scale2add(dzs, ez, initialize);  // ez += W2 dz

    double err = std::max(ex.lpNorm<Eigen::Infinity>(),
                          ez.size() > 0 ? ez.lpNorm<Eigen::Infinity>() : 0.0);
    if (f_.p > 0) err = std::max(err, ey.lpNorm<Eigen::Infinity>());

    if (err < prev_err) {
      best_sol = sol;
    } else {
      sol = best_sol;
      --k_ref;
      break;
    }
    if (err < threshold || k_ref == st_.nitref ||
        (k_ref > 0 && prev_err < st_.irerrfact * err)) {
      break;
    }
    prev_err = err;

    Eigen::VectorXd e(dim_K_);
    e << ex, ey, ez;
    sol += ldlt_.solve(e);
  }

  dx = sol.head(f_.n);
  dy = sol.segment(f_.n, f_.p);
  dz = sol.tail(f_.m);
  return k_ref;
}

void Ipm::scale2add(const Eigen::VectorXd& v, Eigen::VectorXd& out,
                    bool identity) const {
  if (identity) {
    out += v;
    return;
  }
  out.head(f_.n_lp) += lp_v_.cwiseProduct(v.head(f_.n_lp));
  int row = f_.n_lp;
  for (const SocScaling& sc : socs_) {
    out.segment(row, sc.dim).noalias() += sc.W2 * v.segment(row, sc.dim);
    row += sc.dim;
  }
}

bool Ipm::update_scalings() {
  for (int r = 0; r < f_.n_lp; ++r) {
    if (w_.s(r) <= 0.0 || w_.z(r) <= 0.0) return false;
  }
  lp_v_ = w_.s.head(f_.n_lp).cwiseQuotient(w_.z.head(f_.n_lp));
  lp_w_ = lp_v_.cwiseSqrt();

  int row = f_.n_lp;
  for (SocScaling& sc : socs_) {
    const auto sseg = w_.s.segment(row, sc.dim);
    const auto zseg = w_.z.segment(row, sc.dim);
    const double sres =
        sseg(0) * sseg(0) - sseg.tail(sc.dim - 1).squaredNorm();
    const double zres =
        zseg(0) * zseg(0) - zseg.tail(sc.dim - 1).squaredNorm();
    if (sres <= 0.0 || zres <= 0.0 || sseg(0) <= 0.0 || zseg(0) <= 0.0) {
      return false;
    }
    const double snorm = std::sqrt(sres);
    const double znorm = std::sqrt(zres);
    const Eigen::VectorXd skbar = sseg / snorm;
    const Eigen::VectorXd zkbar = zseg / znorm;
    sc.eta_sq = snorm / znorm;
    sc.eta = std::sqrt(sc.eta_sq);

    double gamma = std::sqrt(0.5 * (1.0 + skbar.dot(zkbar)));
    sc.a = (0.5 / gamma) * (skbar(0) + zkbar(0));
    sc.q = (0.5 / gamma) * (skbar.tail(sc.dim - 1) - zkbar.tail(sc.dim - 1));
    const double wq = sc.q.squaredNorm();

    const double cc = 1.0 + sc.a + wq / (1.0 + sc.a);
    const double dd = 1.0 + 2.0 / (1.0 + sc.a) + wq / std::pow(1.0 + sc.a, 2);

    // Dense Wbar^2 = [[a^2+wq, cc q'], [cc q, I + dd q q']], scaled eta^2.
    sc.W2(0, 0) = sc.a * sc.a + wq;
    for (int i = 1; i < sc.dim; ++i) {
      sc.W2(0, i) = cc * sc.q(i - 1);
      sc.W2(i, 0) = sc.W2(0, i);
      for (int j = 1; j <= i; ++j) {
        const double v =
            (i == j ? 1.0 : 0.0) + dd * sc.q(i - 1) * sc.q(j - 1);
        sc.W2(i, j) = v;
        sc.W2(j, i) = v;
      }
    }
    sc.W2 *= sc.eta_sq;
    row += sc.dim;
  }
  scale(w_.z, w_.lambda);
  return true;
}

void Ipm::scale(const Eigen::VectorXd& z, Eigen::VectorXd& out) const {
  out.head(f_.n_lp) = lp_w_.cwiseProduct(z.head(f_.n_lp));
  int row = f_.n_lp;
  for (const SocScaling& sc : socs_) {
    const auto zseg = z.segment(row, sc.dim);
    const double zeta = sc.q.dot(zseg.tail(sc.dim - 1));
    const double factor = zseg(0) + zeta / (1.0 + sc.a);
    out(row) = sc.eta * (sc.a * zseg(0) + zeta);
    out.segment(row + 1, sc.dim - 1) =
        sc.eta * (zseg.tail(sc.dim - 1) + factor * sc.q);
    row += sc.dim;
  }
}

void Ipm::conic_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                        Eigen::VectorXd& out) const {
  out.head(f_.n_lp) = u.head(f_.n_lp).cwiseProduct(v.head(f_.n_lp));
  int row = f_.n_lp;
  for (const SocScaling& sc : socs_) {
    const auto useg = u.segment(row, sc.dim);
    const auto vseg = v.segment(row, sc.dim);
    out(row) = useg.dot(vseg);
    out.segment(row + 1, sc.dim - 1) =
        useg(0) * vseg.tail(sc.dim - 1) + vseg(0) * useg.tail(sc.dim - 1);
    row += sc.dim;
  }
}

void Ipm::conic_division(const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                         Eigen::VectorXd& out) const {
  out.head(f_.n_lp) = w.head(f_.n_lp).cwiseQuotient(u.head(f_.n_lp));
  int row = f_.n_lp;
  for (const SocScaling& sc : socs_) {
    const auto useg = u.segment(row, sc.dim);
    const auto wseg = w.segment(row, sc.dim);
    const double u0 = useg(0);
    const double w0 = wseg(0);
    const double rho = u0 * u0 - useg.tail(sc.dim - 1).squaredNorm();
    const double zeta = useg.tail(sc.dim - 1).dot(wseg.tail(sc.dim - 1));
    const double factor = (zeta / u0 - w0) / rho;
    out(row) = (u0 * w0 - zeta) / rho;
    out.segment(row + 1, sc.dim - 1) =
        factor * useg.tail(sc.dim - 1) + wseg.tail(sc.dim - 1) / u0;
    row += sc.dim;
  }
}

void Ipm::bring_to_cone(const Eigen::VectorXd& r, Eigen::VectorXd& out) const {
  double alpha = -0.99;
  for (int i = 0; i < f_.n_lp; ++i) {
    if (r(i) <= 0.0 && -r(i) > alpha) alpha = -r(i);
  }
  int row = f_.n_lp;
  for (const SocScaling& sc : socs_) {
    const double cres = r(row) - r.segment(row + 1, sc.dim - 1).norm();
    if (cres <= 0.0 && -cres > alpha) alpha = -cres;
    row += sc.dim;
  }
  alpha += 1.0;
  out = r;
  out.head(f_.n_lp).array() += alpha;
  row = f_.n_lp;
  for (const SocScaling& sc : socs_) {
    out(row) += alpha;
    row += sc.dim;
  }
}

double Ipm::line_search(const Eigen::VectorXd& lambda,
                        const Eigen::VectorXd& ds, const Eigen::VectorXd& dz,
                        double tau, double dtau, double kap,
                        double dkap) const {
  const double eps = 1e-13;
  double alpha = 2.0;
  if (f_.n_lp > 0) {
    const double rhomin =
        (ds.head(f_.n_lp).cwiseQuotient(lambda.head(f_.n_lp))).minCoeff();
    const double sigmamin =
        (dz.head(f_.n_lp).cwiseQuotient(lambda.head(f_.n_lp))).minCoeff();
    if (-sigmamin > -rhomin) {
      alpha = sigmamin < 0.0 ? 1.0 / (-sigmamin) : 1.0 / eps;
    } else {
      alpha = rhomin < 0.0 ? 1.0 / (-rhomin) : 1.0 / eps;
    }
  }

  const double tau_step = -tau / dtau;
  const double kap_step = -kap / dkap;
  if (tau_step > 0.0 && tau_step < alpha) alpha = tau_step;
  if (kap_step > 0.0 && kap_step < alpha) alpha = kap_step;

  int row = f_.n_lp;
  for (const SocScaling& sc : socs_) {
    const double lk0 = lambda(row);
    const auto lk1 = lambda.segment(row + 1, sc.dim - 1);
    const double lknorm2 = lk0 * lk0 - lk1.squaredNorm();
    if (lknorm2 <= 0.0) {
      row += sc.dim;
      continue;
    }
    const double lknorm = std::sqrt(lknorm2);
    const double lknorminv = 1.0 / lknorm;
    const Eigen::VectorXd lkbar = lambda.segment(row, sc.dim) / lknorm;

    const auto dsk = ds.segment(row, sc.dim);
    const auto dzk = dz.segment(row, sc.dim);
    const double lkbar_ds =
        lkbar(0) * dsk(0) - lkbar.tail(sc.dim - 1).dot(dsk.tail(sc.dim - 1));
    const double lkbar_dz =
        lkbar(0) * dzk(0) - lkbar.tail(sc.dim - 1).dot(dzk.tail(sc.dim - 1));

    double factor = (lkbar_ds + dsk(0)) / (lkbar(0) + 1.0);
    const double rho0 = lknorminv * lkbar_ds;
    const double rhotail =
        (lknorminv *
         (dsk.tail(sc.dim - 1) - factor * lkbar.tail(sc.dim - 1)))
            .norm();
    const double rhonorm = rhotail - rho0;

    factor = (lkbar_dz + dzk(0)) / (lkbar(0) + 1.0);
    const double sig0 = lknorminv * lkbar_dz;
    const double sigtail =
        (lknorminv *
         (dzk.tail(sc.dim - 1) - factor * lkbar.tail(sc.dim - 1)))
            .norm();
    const double signorm = sigtail - sig0;

    const double conic_step = std::max({0.0, rhonorm, signorm});
    if (conic_step != 0.0) alpha = std::min(alpha, 1.0 / conic_step);
    row += sc.dim;
  }
  return std::clamp(alpha, st_.stepmin, st_.stepmax);
}

void Ipm::compute_residuals() {
  rx_ = -(Gt_ * w_.z);
  if (f_.p > 0) rx_ -= At_ * w_.y;
  hresx_ = rx_.norm();
  rx_ -= w_.tau * f_.c;

  if (f_.p > 0) {
    ry_ = f_.A * w_.x;
    hresy_ = ry_.norm();
    ry_ -= w_.tau * f_.b;
  } else {
    ry_.resize(0);
    hresy_ = 0.0;
  }

  rz_ = w_.s + f_.G * w_.x;
  hresz_ = rz_.norm();
  // h = 0, so rz needs no tau shift

  w_.cx = f_.c.dot(w_.x);
  w_.by = f_.p > 0 ? f_.b.dot(w_.y) : 0.0;
  w_.hz = 0.0;
  rt_ = w_.kap + w_.cx + w_.by + w_.hz;

  nx_ = w_.x.norm();
  ny_ = w_.y.norm();
  nz_ = w_.z.norm();
  ns_ = w_.s.norm();
}

void Ipm::update_statistics() {
  Info& i = w_.i;
  i.gap = w_.s.dot(w_.z);
  i.mu = (i.gap + w_.kap * w_.tau) /
         (static_cast<double>(f_.n_lp + socs_.size()) + 1.0);
  i.kapovert = w_.kap / w_.tau;
  i.pcost = w_.cx / w_.tau;
  i.dcost = -(w_.hz + w_.by) / w_.tau;

  if (i.pcost < 0.0) {
    i.relgap = i.gap / (-i.pcost);
  } else if (i.dcost > 0.0) {
    i.relgap = i.gap / i.dcost;
  } else {
    i.relgap.reset();
  }

  const double nry =
      f_.p > 0 ? ry_.norm() / std::max(resy0_ + nx_, 1.0) : 0.0;
  const double nrz = rz_.norm() / std::max(resz0_ + nx_ + ns_, 1.0);
  i.pres = std::max(nry, nrz) / w_.tau;
  i.dres = rx_.norm() / std::max(resx0_ + ny_ + nz_, 1.0) / w_.tau;

  i.pinfres.reset();
  i.dinfres.reset();
  if ((w_.hz + w_.by) / std::max(ny_ + nz_, 1.0) < -st_.reltol) {
    i.pinfres = hresx_ / std::max(ny_ + nz_, 1.0);
  }
  if (w_.cx / std::max(nx_, 1.0) < -st_.reltol) {
    i.dinfres = std::max(hresy_ / std::max(nx_, 1.0),
                         hresz_ / std::max(nx_ + ns_, 1.0));
  }

  if (st_.verbose) {
    std::printf(
        "%3d  %+5.3e %+5.3e  %+2.0e  %2.0e %2.0e  %2.0e  %2.0e  %6.4f\n",
        i.iter, i.pcost, i.dcost, i.gap, i.pres, i.dres, i.kapovert, i.mu,
        i.step);
  }
}

Ipm::Exit Ipm::check_exit(bool reduced) const {
  const double feastol = reduced ? st_.feastol_inacc : st_.feastol;
  const double abstol = reduced ? st_.abstol_inacc : st_.abstol;
  const double reltol = reduced ? st_.reltol_inacc : st_.reltol;
  const Info& i = w_.i;

  if ((-w_.cx > 0.0 || -w_.by - w_.hz >= -abstol) && i.pres < feastol &&
      i.dres < feastol &&
      (i.gap < abstol || (i.relgap && *i.relgap < reltol))) {
    return Exit::optimal;
  }
  if (i.dinfres && *i.dinfres < feastol && w_.tau < w_.kap) {
    return Exit::dual_infeasible;
  }
  if (i.pinfres && *i.pinfres < feastol && w_.tau < w_.kap) {
    return Exit::primal_infeasible;
  }
  if (w_.tau < feastol && w_.kap < feastol && i.pinfres &&
      *i.pinfres < feastol) {
    return Exit::primal_infeasible;
  }
  return Exit::maxit;  // meaning: not converged yet
}

double Ipm::iterate_score(const Info& i) const {
  if (std::isnan(i.pcost) || std::isnan(i.pres) || std::isnan(i.dres) ||
      i.gap < 0.0) {
    return kInf;
  }
  return std::max(i.pres, i.dres) + std::max(i.mu, 0.0);
}

Ipm::Outcome Ipm::run() {
  Outcome out;

  if (!factor_kkt(true)) {
    out.code = Exit::numerics;
    out.reason = StopReason::numerics;
    return out;
  }

  // Initialization: xhat minimizing ||Gx|| over Ax=b, then shift the
  // slack/multiplier into the cone interior.
  Eigen::VectorXd rhs1 = Eigen::VectorXd::Zero(dim_K_);
  rhs1.segment(f_.n, f_.p) = f_.b;
  Eigen::VectorXd dx1(f_.n), dy1(f_.p), dz1(f_.m);
  solve_kkt(rhs1, dx1, dy1, dz1, true);
  w_.x = dx1;
  bring_to_cone(-dz1, w_.s);

  Eigen::VectorXd rhs2 = Eigen::VectorXd::Zero(dim_K_);
  rhs2.head(f_.n) = -f_.c;
  Eigen::VectorXd dx2(f_.n), dy2(f_.p), dz2(f_.m);
  solve_kkt(rhs2, dx2, dy2, dz2, true);
  w_.y = dy2;
  bring_to_cone(dz2, w_.z);

  w_.tau = 1.0;
  w_.kap = 1.0;

  rhs1.head(f_.n) = -f_.c;  // from now on rhs1 = [-c; b; 0]

  double pres_prev = kInf;
  Eigen::VectorXd W_dz(f_.m), ds_by_W(f_.m), ds1(f_.m), ds2(f_.m), dsfin(f_.m);

  for (w_.i.iter = 0; w_.i.iter <= st_.maxit; ++w_.i.iter) {
    compute_residuals();
    update_statistics();

    // Caller-level optimality first: a verified iterate always wins.
    if (verify_ && w_.tau > 1e-12) {
      const Eigen::VectorXd xc = w_.x / w_.tau;
      const Eigen::VectorXd yc = -w_.y / w_.tau;
      const Eigen::VectorXd sc = -(Gt_ * w_.z) / w_.tau;
      if (verify_(xc, yc, sc)) {
        out.code = Exit::optimal;
        out.reason = StopReason::converged;
        return out;
      }
    }

    // Safeguard: back off to the best iterate on a blow-up.
    if (w_.i.iter > 0 &&
        (w_.i.pres > st_.safeguard * pres_prev || w_.i.gap < 0.0)) {
      if (have_best_) w_ = best_;
      const Exit reduced = check_exit(true);
      out.code = reduced == Exit::maxit ? Exit::numerics : reduced;
      out.reason = StopReason::numerics;
      out.reduced_accuracy = true;
      return out;
    }
    pres_prev = w_.i.pres;

    const Exit code = check_exit(false);
    if (code == Exit::primal_infeasible || code == Exit::dual_infeasible) {
      out.code = code;
      out.reason = StopReason::converged;
      return out;
    }
    if (code == Exit::optimal) {
      if (!verify_) {
        out.code = code;
        out.reason = StopReason::converged;
        return out;
      }
      // The embedding converged at the internal tolerances but the caller
      // is not satisfied yet: tighten and keep polishing.
      st_.feastol = std::max(st_.feastol / 10.0, 1e-13);
      st_.abstol = std::max(st_.abstol / 10.0, 1e-13);
      st_.reltol = std::max(st_.reltol / 10.0, 1e-13);
    }

    if (w_.i.iter > 0 && w_.i.step == st_.stepmin * st_.gamma) {
      if (have_best_ && iterate_score(best_.i) < iterate_score(w_.i)) {
        w_ = best_;
      }
      const Exit reduced = check_exit(true);
      out.code = reduced == Exit::maxit ? Exit::numerics : reduced;
      out.reason = StopReason::numerics;
      out.reduced_accuracy = true;
      return out;
    }
    if (w_.i.iter == st_.maxit) {
      if (have_best_ && iterate_score(best_.i) < iterate_score(w_.i)) {
        w_ = best_;
      }
      const Exit reduced = check_exit(true);
      out.code = reduced == Exit::maxit ? Exit::maxit : reduced;
      out.reason = StopReason::maxit;
      out.reduced_accuracy = true;
      return out;
    }
    if (std::isnan(w_.i.pcost)) {
      if (have_best_) w_ = best_;
      const Exit reduced = check_exit(true);
      out.code = reduced == Exit::maxit ? Exit::numerics : reduced;
      out.reason = StopReason::numerics;
      out.reduced_accuracy = true;
      return out;
    }

    if (!have_best_ || iterate_score(w_.i) < iterate_score(best_.i)) {
      best_ = w_;
      have_best_ = true;
    }

    if (!update_scalings()) {
      if (have_best_) w_ = best_;
      out.code = Exit::numerics;
      out.reason = StopReason::numerics;
      return out;
    }

    bool factored = factor_kkt(false);
    for (int retry = 0; !factored && retry < 2; ++retry) {
      delta_ *= 100.0;
      build_static_triplets();
      factored = factor_kkt(false);
    }
    if (!factored) {
      if (have_best_) w_ = best_;
      out.code = Exit::numerics;
      out.reason = StopReason::numerics;
      return out;
    }

    solve_kkt(rhs1, dx1, dy1, dz1, false);
    const double dtau_denom =
        w_.kap / w_.tau - f_.c.dot(dx1) - f_.b.dot(dy1);

    // Affine (predictor) direction.
    rhs2.head(f_.n) = rx_;
    rhs2.segment(f_.n, f_.p) = -ry_;
    rhs2.tail(f_.m) = w_.s - rz_;
    solve_kkt(rhs2, dx2, dy2, dz2, false);

    const double dtauaff =
        (rt_ - w_.kap + f_.c.dot(dx2) + f_.b.dot(dy2)) / dtau_denom;
    dz2 += dtauaff * dz1;
    scale(dz2, W_dz);
    ds_by_W = -W_dz - w_.lambda;
    const double dkapaff = -w_.kap - w_.kap / w_.tau * dtauaff;

    const double step_aff =
        line_search(w_.lambda, ds_by_W, W_dz, w_.tau, dtauaff, w_.kap, dkapaff);
    const double sigma = std::clamp(std::pow(1.0 - step_aff, 3),
                                    st_.sigmamin, st_.sigmamax);
    w_.i.sigma = sigma;

    // Combined (corrector) direction.
    conic_product(w_.lambda, w_.lambda, ds1);
    conic_product(ds_by_W, W_dz, ds2);
    const double sigmamu = sigma * w_.i.mu;
    ds1 += ds2;
    ds1.head(f_.n_lp).array() -= sigmamu;
    {
      int row = f_.n_lp;
      for (const SocScaling& sc : socs_) {
        ds1(row) -= sigmamu;
        row += sc.dim;
      }
    }
    conic_division(w_.lambda, ds1, ds_by_W);  // ds_by_W = lambda \ ds
    scale(ds_by_W, ds1);                      // ds1 = W (lambda \ ds)

    const double one_minus_sigma = 1.0 - sigma;
    rhs2.head(f_.n) = one_minus_sigma * rx_;
    rhs2.segment(f_.n, f_.p) = -one_minus_sigma * ry_;
    rhs2.tail(f_.m) = -one_minus_sigma * rz_ + ds1;
    solve_kkt(rhs2, dx2, dy2, dz2, false);

    const double bkap = w_.kap * w_.tau + dkapaff * dtauaff - sigmamu;
    const double dtau = (one_minus_sigma * rt_ - bkap / w_.tau +
                         f_.c.dot(dx2) + f_.b.dot(dy2)) /
                        dtau_denom;
    dx2 += dtau * dx1;
    dy2 += dtau * dy1;
    dz2 += dtau * dz1;

    scale(dz2, W_dz);
    ds_by_W = -(ds_by_W + W_dz);
    const double dkap = -(bkap + w_.kap * dtau) / w_.tau;

    w_.i.step = st_.gamma * line_search(w_.lambda, ds_by_W, W_dz, w_.tau,
                                        dtau, w_.kap, dkap);
    scale(ds_by_W, dsfin);  // ds = W (W \ ds)

    w_.x += w_.i.step * dx2;
    w_.y += w_.i.step * dy2;
    w_.z += w_.i.step * dz2;
    w_.s += w_.i.step * dsfin;
    w_.kap += w_.i.step * dkap;
    w_.tau += w_.i.step * dtau;
  }

  out.code = Exit::maxit;
  out.reason = StopReason::maxit;
  return out;
}

Presolved identity_presolve(const ConicProgram& p) {
  Presolved ps;
  ps.program = p;
  ps.var_map.resize(p.num_vars());
  for (int j = 0; j < p.num_vars(); ++j) ps.var_map[j] = j;
  ps.row_map.resize(p.num_rows());
  for (int i = 0; i < p.num_rows(); ++i) ps.row_map[i] = i;
  ps.row_scale = Eigen::VectorXd::Ones(p.num_rows());
  ps.col_scale = Eigen::VectorXd::Ones(p.num_vars());
  return ps;
}

}  // namespace

Solution solve(const ConicProgram& p, const SolveOptions& opts) {
  p.check_consistency();

  Solution sol;
  sol.x = Eigen::VectorXd::Zero(p.num_vars());
  sol.y = Eigen::VectorXd::Zero(p.num_rows());
  sol.s = Eigen::VectorXd::Zero(p.num_vars());

  Presolved ps;
  if (opts.presolve) {
    PresolveOptions popts;
    popts.equilibrate = opts.equilibrate;
    ps = presolve(p, popts);
  } else {
    ps = identity_presolve(p);
  }
  if (ps.infeasible) {
    sol.status = SolveStatus::primal_infeasible;
    if (ps.farkas_y.size() == p.num_rows() && ps.farkas_y.size() > 0) {
      const double by = p.b.dot(ps.farkas_y);
      if (by > 0.0) {
        sol.y = ps.farkas_y / by;
        sol.s = -(p.A.transpose() * sol.y);
      }
    }
    return sol;
  }

  const InternalForm f = to_internal(ps.program);
  IpmSettings st;
  st.deltastat = opts.static_reg;
  st.maxit = opts.max_iters;
  st.verbose = opts.verbose;

  Ipm ipm(f, st);
  const double bnorm = p.b.norm();
  const double cnorm = p.c.norm();
  ipm.set_verifier([&](const Eigen::VectorXd& xr, const Eigen::VectorXd& yr,
                       const Eigen::VectorXd& sr) {
    Eigen::VectorXd x, y, s;
    ps.recover(p, xr, yr, sr, x, y, s);
    if ((p.A * x - p.b).norm() > opts.tol_feas * (1.0 + bnorm)) return false;
    if ((p.A.transpose() * y + s - p.c).norm() >
        opts.tol_feas * (1.0 + cnorm)) {
      return false;
    }
    if (std::abs(x.dot(s)) > opts.tol_gap * (1.0 + std::abs(p.c.dot(x)))) {
      return false;
    }
    return p.in_cone(x, opts.tol_feas) && p.in_dual_cone(s, opts.tol_feas);
  });
  const Ipm::Outcome outcome = ipm.run();
  const Iterate& w = ipm.iterate();
  sol.iterations = ipm.iterations();

  if (outcome.code == Ipm::Exit::primal_infeasible ||
      outcome.code == Ipm::Exit::dual_infeasible) {
    // Map the certificate ray back to the original space.
    Eigen::VectorXd x_red = w.x;
    Eigen::VectorXd y_red = -w.y;
    Eigen::VectorXd s_red = -(f.G.transpose() * w.z);
    Eigen::VectorXd x, y, s;
    ps.recover(p, x_red, y_red, s_red, x, y, s, /*as_ray=*/true);
    if (outcome.code == Ipm::Exit::primal_infeasible) {
      sol.status = SolveStatus::primal_infeasible;
      const double by = p.b.dot(y);
      if (by > 0.0) {
        sol.y = y / by;
        sol.s = s / by;
      } else {
        sol.y = y;
        sol.s = s;
      }
    } else {
      sol.status = SolveStatus::dual_infeasible;
      const double cx = p.c.dot(x);
      sol.x = cx < 0.0 ? Eigen::VectorXd(x / -cx) : x;
    }
    return sol;
  }

  // Recover the (possibly best-effort) primal-dual pair.
  const double tau = w.tau > 0.0 ? w.tau : 1.0;
  Eigen::VectorXd x_red = w.x / tau;
  Eigen::VectorXd y_red = -w.y / tau;
  Eigen::VectorXd s_red = -(f.G.transpose() * w.z) / tau;
  ps.recover(p, x_red, y_red, s_red, sol.x, sol.y, sol.s);

  sol.primal_obj = p.c.dot(sol.x);
  sol.dual_obj = p.b.dot(sol.y);

  const double bnorm = p.b.norm();
  const double cnorm = p.c.norm();
  sol.residuals.primal = (p.A * sol.x - p.b).norm() / (1.0 + bnorm);
  sol.residuals.dual =
      (p.A.transpose() * sol.y + sol.s - p.c).norm() / (1.0 + cnorm);
  sol.residuals.gap =
      std::abs(sol.x.dot(sol.s)) / (1.0 + std::abs(sol.primal_obj));
  sol.residuals.x_in_cone = p.in_cone(sol.x, opts.tol_feas);
  sol.residuals.s_in_dual_cone = p.in_dual_cone(sol.s, opts.tol_feas);

  const bool verified = sol.residuals.primal <= opts.tol_feas &&
                        sol.residuals.dual <= opts.tol_feas &&
                        sol.residuals.gap <= opts.tol_gap &&
                        sol.residuals.x_in_cone &&
                        sol.residuals.s_in_dual_cone;

  if (verified) {
    sol.status = SolveStatus::optimal;
  } else if (outcome.reason == Ipm::StopReason::maxit) {
    sol.status = SolveStatus::max_iters;
  } else if (outcome.reason == Ipm::StopReason::converged) {
    // Converged internally but failed the stricter outer check.
    sol.status = SolveStatus::max_iters;
  } else {
    sol.status = SolveStatus::numerical_failure;
  }
  return sol;
}

}  // namespace radopf
