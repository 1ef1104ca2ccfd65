#include "monopf/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "monopf/errors.hpp"

namespace monopf {

const char* to_string(ConicStatus status) noexcept {
  switch (status) {
    case ConicStatus::optimal: return "optimal";
    case ConicStatus::near_optimal: return "near_optimal";
    case ConicStatus::infeasible: return "infeasible";
    case ConicStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

void ConicProblem::validate() const {
  if (num_vars < 0) throw ContractViolation("negative variable count");
  if (objective.size() != num_vars) throw ContractViolation("objective length differs from variable count");
  for (const auto& eq : equalities) {
    for (const auto& [v, c] : eq.terms) {
      if (v < 0 || v >= num_vars) throw ContractViolation("equality references an unknown variable");
    }
  }
  for (const auto& b : blocks) {
    if (b.dim <= 0) throw ContractViolation("PSD block with non-positive dimension");
    if (b.basis.size() != 0 && (b.basis.cols() != b.dim || b.basis.rows() < b.dim)) {
      throw ContractViolation("block basis of '" + b.label + "' has the wrong shape");
    }
    for (const auto& e : b.entries) {
      if (e.var >= num_vars) throw ContractViolation("block entry references an unknown variable");
      if (e.row < 0 || e.col >= b.raw_dim() || e.row > e.col) {
        throw ContractViolation("block entry outside the upper triangle of block '" + b.label + "'");
      }
    }
  }
}

int ConicProblem::total_psd_dim() const {
  int n = 0;
  for (const auto& b : blocks) n += b.dim;
  return n;
}

int ConicProblem::max_block_dim() const {
  int n = 0;
  for (const auto& b : blocks) n = std::max(n, b.dim);
  return n;
}

Matrix ConicProblem::block_value(std::size_t k, const Vector& y) const {
  const auto& b = blocks.at(k);
  Matrix F = Matrix::Zero(b.raw_dim(), b.raw_dim());
  for (const auto& e : b.entries) {
    const double v = e.var < 0 ? e.value : e.value * y[e.var];
    F(e.row, e.col) += v;
    if (e.row != e.col) F(e.col, e.row) += v;
  }
  if (b.basis.size() == 0) return F;
  return b.basis.transpose() * F * b.basis;
}

bool ResidualReport::within(double tol) const {
  return primal_equality <= tol && primal_cone <= tol && dual_equality <= tol && dual_cone <= tol && gap <= tol;
}

namespace {

double min_eig(const Matrix& M) {
  if (M.rows() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly).eigenvalues()[0];
}

struct Coef {
  int row, col;
  double value;
};

// Block data regrouped per variable for the Schur complement.
struct BlockData {
  int dim = 0;
  int raw = 0;
  Matrix B;  // empty for the identity
  Matrix C;  // reduced
  std::vector<int> vars;                  // global ids
  std::vector<std::vector<Coef>> coefs;   // per local var
};

struct Scaling {
  Matrix G;      // W = G G'
  Matrix Ginv;
  Vector lam;    // scaled point: G' S G = G^-1 X G^-T = diag(lam)
  Matrix W;
};

class IpmSolver {
 public:
  IpmSolver(const ConicProblem& p, const ConicOptions& o) : prob_(p), opts_(o), m_(p.num_vars) {
    for (const auto& b : p.blocks) {
      BlockData d;
      d.dim = b.dim;
      d.raw = b.raw_dim();
      d.B = b.basis;
      d.C = Matrix::Zero(d.raw, d.raw);
      std::vector<int> local(static_cast<std::size_t>(m_), -1);
      for (const auto& e : b.entries) {
        if (e.var < 0) {
          d.C(e.row, e.col) += e.value;
          if (e.row != e.col) d.C(e.col, e.row) += e.value;
          continue;
        }
        int& l = local[static_cast<std::size_t>(e.var)];
        if (l < 0) {
          l = static_cast<int>(d.vars.size());
          d.vars.push_back(e.var);
          d.coefs.emplace_back();
        }
        d.coefs[static_cast<std::size_t>(l)].push_back({e.row, e.col, e.value});
      }
      if (d.B.size() != 0) d.C = d.B.transpose() * d.C * d.B;
      nu_ += b.dim;
      blocks_.push_back(std::move(d));
    }
    setup_equalities();
  }

  ConicSolution run();

 private:
  // Keeps a maximal independent subset of the equality rows.
  void setup_equalities() {
    const auto p = static_cast<Eigen::Index>(prob_.equalities.size());
    Matrix At = Matrix::Zero(m_, p);
    Vector rhs(p);
    for (Eigen::Index r = 0; r < p; ++r) {
      for (const auto& [v, c] : prob_.equalities[static_cast<std::size_t>(r)].terms) At(v, r) += c;
      rhs[r] = prob_.equalities[static_cast<std::size_t>(r)].rhs;
    }
    if (p == 0) {
      A_ = Matrix::Zero(0, m_);
      b_ = Vector::Zero(0);
      return;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(At);
    qr.setThreshold(1e-10);
    const auto rank = qr.rank();
    const auto& perm = qr.colsPermutation().indices();
    A_.resize(rank, m_);
    b_.resize(rank);
    for (Eigen::Index r = 0; r < rank; ++r) {
      kept_.push_back(static_cast<int>(perm[r]));
      A_.row(r) = At.col(perm[r]).transpose();
      b_[r] = rhs[perm[r]];
    }
    std::sort(kept_.begin(), kept_.end());
    for (Eigen::Index r = 0; r < rank; ++r) {
      A_.row(r) = At.col(kept_[static_cast<std::size_t>(r)]).transpose();
      b_[r] = rhs[kept_[static_cast<std::size_t>(r)]];
    }
    dropped_ = static_cast<int>(p - rank);
    if (dropped_ > 0) {
      const Vector ls = At.transpose().completeOrthogonalDecomposition().solve(rhs);
      inconsistent_ = (At.transpose() * ls - rhs).norm() > 1e-9 * (1.0 + rhs.norm());
    }
  }

  Matrix apply(std::size_t k, const Vector& y) const {
    const auto& d = blocks_[k];
    Matrix M = Matrix::Zero(d.raw, d.raw);
    for (std::size_t l = 0; l < d.vars.size(); ++l) {
      const double yv = y[d.vars[l]];
      if (yv == 0.0) continue;
      for (const auto& c : d.coefs[l]) {
        M(c.row, c.col) += c.value * yv;
        if (c.row != c.col) M(c.col, c.row) += c.value * yv;
      }
    }
    if (d.B.size() == 0) return M;
    return d.B.transpose() * M * d.B;
  }

  // Lifts a reduced matrix to raw coordinates.
  Matrix lift(std::size_t k, const Matrix& M) const {
    const auto& d = blocks_[k];
    if (d.B.size() == 0) return M;
    return d.B * M * d.B.transpose();
  }

  void adjoint_add(std::size_t k, const Matrix& Mr, Vector& out) const {
    const auto& d = blocks_[k];
    const Matrix M = lift(k, Mr);
    for (std::size_t l = 0; l < d.vars.size(); ++l) {
      double s = 0.0;
      for (const auto& c : d.coefs[l]) s += c.value * (c.row == c.col ? M(c.row, c.row) : 2.0 * M(c.row, c.col));
      out[d.vars[l]] += s;
    }
  }

  static bool nt_scaling(const Matrix& X, const Matrix& S, Scaling& sc) {
    const Eigen::LLT<Matrix> lx(X), ls(S);
    if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
    const Matrix LX = lx.matrixL();
    const Matrix LS = ls.matrixL();
    const Eigen::JacobiSVD<Matrix> svd(LX.transpose() * LS, Eigen::ComputeFullU);
    sc.lam = svd.singularValues();
    if (sc.lam.minCoeff() <= 0.0) return false;
    const Vector isq = sc.lam.cwiseSqrt().cwiseInverse();
    sc.G = LX * svd.matrixU() * isq.asDiagonal();
    // G^-1 = Lambda^{1/2} U' LX^-1
    const Matrix LXinv = lx.matrixL().solve(Matrix::Identity(X.rows(), X.cols()));
    sc.Ginv = sc.lam.cwiseSqrt().asDiagonal() * svd.matrixU().transpose() * LXinv;
    sc.W = sc.G * sc.G.transpose();
    return true;
  }

  // H = sum_k A_k^*(W_k A_k(.) W_k), lower triangle filled.
  void form_schur(Matrix& H, const std::vector<Scaling>& sc) const {
    H.setZero();
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& d = blocks_[k];
      const Matrix W = lift(k, sc[k].W);
      Matrix T(d.raw, d.raw);
      for (std::size_t i = 0; i < d.vars.size(); ++i) {
        T.setZero();
        for (const auto& c : d.coefs[i]) {
          if (c.row == c.col) {
            T.noalias() += c.value * W.col(c.row) * W.row(c.row);
          } else {
            T.noalias() += c.value * (W.col(c.row) * W.row(c.col) + W.col(c.col) * W.row(c.row));
          }
        }
        const int gi = d.vars[i];
        for (std::size_t j = 0; j < d.vars.size(); ++j) {
          const int gj = d.vars[j];
          if (gj < gi) continue;
          double s = 0.0;
          for (const auto& c : d.coefs[j]) s += c.value * (c.row == c.col ? T(c.row, c.row) : 2.0 * T(c.row, c.col));
          H(gj, gi) += s;
        }
      }
    }
  }

  // Solves H dy - A' dl = g, A dy = rp using the factored H.
  void solve_kkt(const Eigen::LLT<Eigen::Ref<Matrix>>& llt, const Matrix& HinvAt, const Eigen::LDLT<Matrix>& schurA,
                 const Vector& g, const Vector& rp, Vector& dy, Vector& dl) const {
    const Vector Hg = llt.solve(g);
    if (A_.rows() > 0) {
      dl = schurA.solve(rp - A_ * Hg);
      dy = Hg + HinvAt * dl;
    } else {
      dl = Vector::Zero(0);
      dy = Hg;
    }
  }

  static double max_step(const Scaling& sc, const Matrix& D) {
    // largest a with diag(lam) + a D >= 0
    const Vector isq = sc.lam.cwiseSqrt().cwiseInverse();
    const Matrix M = isq.asDiagonal() * D * isq.asDiagonal();
    const double e = min_eig(M);
    return e >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / e;
  }

  const ConicProblem& prob_;
  ConicOptions opts_;
  int m_;
  int nu_ = 0;
  std::vector<BlockData> blocks_;
  Matrix A_;
  Vector b_;
  std::vector<int> kept_;
  int dropped_ = 0;
  bool inconsistent_ = false;
};

ConicSolution IpmSolver::run() {
  ConicSolution sol;
  if (inconsistent_) {
    sol.status = ConicStatus::infeasible;
    sol.message = "linear equalities are inconsistent";
    sol.y = Vector::Zero(m_);
    sol.lambda = Vector::Zero(static_cast<Eigen::Index>(prob_.equalities.size()));
    return sol;
  }
  const std::size_t nb = blocks_.size();
  const Vector& c = prob_.objective;
  Vector y = Vector::Zero(m_);
  Vector lam = Vector::Zero(A_.rows());
  std::vector<Matrix> X(nb), S(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    X[k] = Matrix::Identity(blocks_[k].dim, blocks_[k].dim);
    S[k] = Matrix::Identity(blocks_[k].dim, blocks_[k].dim);
  }
  double normC = 0.0;
  for (const auto& d : blocks_) normC += d.C.squaredNorm();
  normC = std::sqrt(normC);
  const double normb = b_.norm(), normc = c.norm();

  Matrix H(m_, m_);
  std::vector<Scaling> sc(nb);
  double best_score = std::numeric_limits<double>::infinity();
  ConicSolution best;
  int stall = 0;

  auto snapshot = [&](ConicSolution& s, const ResidualReport& rep, int it) {
    s.y = y;
    s.lambda = Vector::Zero(static_cast<Eigen::Index>(prob_.equalities.size()));
    for (std::size_t r = 0; r < kept_.size(); ++r) s.lambda[kept_[r]] = lam[static_cast<Eigen::Index>(r)];
    s.X = X;
    s.S = S;
    s.residuals = rep;
    s.primal_objective = rep.primal_objective;
    s.dual_objective = rep.dual_objective;
    s.iterations = it;
  };
  int no_progress = 0;
  auto fail = [&](const char* why) {
    best.mu_trace = std::move(sol.mu_trace);
    if (best_score <= opts_.near_tol) {
      best.status = ConicStatus::near_optimal;
      best.message = std::string("reduced accuracy, ") + why;
    } else {
      best.status = ConicStatus::numerical_failure;
      best.message = why;
    }
    return best;
  };

  for (int it = 0;; ++it) {
    // residuals
    const Vector rp = b_ - A_ * y;
    std::vector<Matrix> Rs(nb);
    Vector rd = c;
    if (A_.rows() > 0) rd -= A_.transpose() * lam;
    double nRs = 0.0, xs = 0.0, cx = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      Rs[k] = blocks_[k].C + apply(k, y) - S[k];
      nRs += Rs[k].squaredNorm();
      adjoint_add(k, -X[k], rd);
      xs += (X[k].cwiseProduct(S[k])).sum();
      cx += (blocks_[k].C.cwiseProduct(X[k])).sum();
    }
    nRs = std::sqrt(nRs);
    const double mu = nu_ > 0 ? xs / nu_ : 0.0;
    ResidualReport rep;
    rep.primal_equality = rp.norm() / (1.0 + normb);
    rep.primal_cone = nRs / (1.0 + normC);
    rep.dual_equality = rd.norm() / (1.0 + normc);
    rep.primal_objective = c.dot(y);
    rep.dual_objective = (A_.rows() > 0 ? b_.dot(lam) : 0.0) - cx;
    rep.gap = std::abs(rep.primal_objective - rep.dual_objective) /
              (1.0 + std::abs(rep.primal_objective) + std::abs(rep.dual_objective));
    sol.mu_trace.push_back(mu);
    if (opts_.verbose) {
      std::fprintf(stderr, "%3d pobj %+.9e dobj %+.9e pinf %.2e %.2e dinf %.2e gap %.2e mu %.2e\n", it,
                   rep.primal_objective, rep.dual_objective, rep.primal_equality, rep.primal_cone,
                   rep.dual_equality, rep.gap, mu);
    }
    const double score = std::max({rep.primal_equality, rep.primal_cone, rep.dual_equality, rep.gap});
    no_progress = score < 0.5 * best_score ? 0 : no_progress + 1;
    if (score < best_score) {
      best_score = score;
      snapshot(best, rep, it);
    }
    if (score <= opts_.tol) {
      snapshot(sol, rep, it);
      sol.status = ConicStatus::optimal;
      sol.message = "converged";
      break;
    }
    // divergence of the dual iterates with a growing dual objective: primal infeasible
    double nX = 0.0;
    for (const auto& Xk : X) nX = std::max(nX, Xk.norm());
    if (nX > 1e10 && rep.dual_objective > 1e8 * (1.0 + std::abs(rep.primal_objective))) {
      snapshot(sol, rep, it);
      sol.status = ConicStatus::infeasible;
      sol.message = "dual iterates diverge with unbounded dual objective";
      return sol;
    }
    if (it >= opts_.max_iterations || stall >= 5) {
      return fail(stall >= 5 ? "stalled before reaching tolerance" : "iteration cap reached");
    }
    if (no_progress >= 10 && best_score <= opts_.near_tol) return fail("no progress in ten iterations");
    if (no_progress >= 20) return fail("no progress in twenty iterations");

    // scaling and Schur complement
    bool ok = true;
    for (std::size_t k = 0; k < nb && ok; ++k) ok = nt_scaling(X[k], S[k], sc[k]);
    if (!ok) return fail("lost positive definiteness");
    const auto tf0 = std::chrono::steady_clock::now();
    form_schur(H, sc);
    const auto tf1 = std::chrono::steady_clock::now();
    double reg = 0.0;
    const double dmax = m_ > 0 ? H.diagonal().cwiseAbs().maxCoeff() : 1.0;
    Eigen::LLT<Eigen::Ref<Matrix>> llt(H);
    while (m_ > 0 && llt.info() != Eigen::Success) {
      reg = reg == 0.0 ? 1e-13 * std::max(dmax, 1.0) : reg * 100.0;
      if (reg > 1e-4 * std::max(dmax, 1.0)) break;
      form_schur(H, sc);
      H.diagonal() += Vector::Constant(m_, reg);
      llt.compute(H);
    }
    if (m_ > 0 && llt.info() != Eigen::Success) return fail("Schur complement factorization failed");
    if (opts_.verbose) {
      const auto tf2 = std::chrono::steady_clock::now();
      std::fprintf(stderr, "    schur form %.2fs factor %.2fs reg %.1e\n",
                   std::chrono::duration<double>(tf1 - tf0).count(), std::chrono::duration<double>(tf2 - tf1).count(), reg);
    }
    Matrix HinvAt;
    Eigen::LDLT<Matrix> schurA;
    if (A_.rows() > 0) {
      HinvAt = llt.solve(A_.transpose());
      schurA.compute(A_ * HinvAt);
    }

    auto direction = [&](const std::vector<Matrix>& Rc, Vector& dy, Vector& dl, std::vector<Matrix>& dS,
                         std::vector<Matrix>& dX) {
      Vector g = -rd;
      for (std::size_t k = 0; k < nb; ++k) adjoint_add(k, Rc[k] - sc[k].W * Rs[k] * sc[k].W, g);
      solve_kkt(llt, HinvAt, schurA, g, rp, dy, dl);
      // iterative refinement against the unfactored operator
      double last = std::numeric_limits<double>::infinity();
      for (int pass = 0; pass < 4; ++pass) {
        Vector rg = g + (A_.rows() > 0 ? Vector(A_.transpose() * dl) : Vector::Zero(m_));
        for (std::size_t k = 0; k < nb; ++k) adjoint_add(k, -(sc[k].W * apply(k, dy) * sc[k].W), rg);
        const Vector rpp = rp - A_ * dy;
        const double err = std::max(rg.norm(), rpp.norm());
        if (!(err < 0.5 * last) || err <= 1e-15 * (1.0 + g.norm())) break;
        last = err;
        Vector cy, cl;
        solve_kkt(llt, HinvAt, schurA, rg, rpp, cy, cl);
        dy += cy;
        if (A_.rows() > 0) dl += cl;
      }
      for (std::size_t k = 0; k < nb; ++k) {
        dS[k] = apply(k, dy) + Rs[k];
        dX[k] = Rc[k] - sc[k].W * dS[k] * sc[k].W;
        dX[k] = 0.5 * (dX[k] + dX[k].transpose());
      }
    };
    auto steps = [&](const std::vector<Matrix>& dS, const std::vector<Matrix>& dX, double& ap, double& ad,
                     std::vector<Matrix>* dxs, std::vector<Matrix>* dss) {
      ap = ad = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nb; ++k) {
        const Matrix ds = sc[k].G.transpose() * dS[k] * sc[k].G;
        const Matrix dx = sc[k].Ginv * dX[k] * sc[k].Ginv.transpose();
        ap = std::min(ap, max_step(sc[k], 0.5 * (ds + ds.transpose())));
        ad = std::min(ad, max_step(sc[k], 0.5 * (dx + dx.transpose())));
        if (dxs) (*dxs)[k] = dx;
        if (dss) (*dss)[k] = ds;
      }
    };

    // predictor
    std::vector<Matrix> Rc(nb), dS(nb), dX(nb), dxa(nb), dsa(nb);
    for (std::size_t k = 0; k < nb; ++k) Rc[k] = -X[k];
    Vector dy, dl;
    direction(Rc, dy, dl, dS, dX);
    double ap = 0.0, ad = 0.0;
    steps(dS, dX, ap, ad, &dxa, &dsa);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double mu_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k) mu_aff += ((X[k] + ad * dX[k]).cwiseProduct(S[k] + ap * dS[k])).sum();
    mu_aff /= nu_;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    // corrector in the scaled space
    for (std::size_t k = 0; k < nb; ++k) {
      const auto& l = sc[k].lam;
      const Matrix prod = dxa[k] * dsa[k];
      Matrix rhs = -0.5 * (prod + prod.transpose());
      for (Eigen::Index i = 0; i < l.size(); ++i) rhs(i, i) += sigma * mu - l[i] * l[i];
      Matrix Z(l.size(), l.size());
      for (Eigen::Index i = 0; i < l.size(); ++i) {
        for (Eigen::Index j = 0; j < l.size(); ++j) Z(i, j) = 2.0 * rhs(i, j) / (l[i] + l[j]);
      }
      Rc[k] = sc[k].G * Z * sc[k].G.transpose();
    }
    direction(Rc, dy, dl, dS, dX);
    steps(dS, dX, ap, ad, nullptr, nullptr);
    ap = std::min(1.0, opts_.step_fraction * ap);
    ad = std::min(1.0, opts_.step_fraction * ad);
    stall = (ap < 1e-8 && ad < 1e-8) ? stall + 1 : 0;
    if (opts_.verbose) std::fprintf(stderr, "    sigma %.2e ap %.3e ad %.3e\n", sigma, ap, ad);

    // shorten the step if rounding leaves an iterate without a Cholesky factor
    std::vector<Matrix> Sn(nb), Xn(nb);
    for (int trial = 0;; ++trial) {
      bool pd = true;
      for (std::size_t k = 0; k < nb && pd; ++k) {
        Sn[k] = S[k] + ap * dS[k];
        Sn[k] = 0.5 * (Sn[k] + Sn[k].transpose());
        Xn[k] = X[k] + ad * dX[k];
        Xn[k] = 0.5 * (Xn[k] + Xn[k].transpose());
        pd = Eigen::LLT<Matrix>(Sn[k]).info() == Eigen::Success && Eigen::LLT<Matrix>(Xn[k]).info() == Eigen::Success;
      }
      if (pd) break;
      if (trial == 8) return fail("lost positive definiteness");
      ap *= 0.5;
      ad *= 0.5;
    }
    y += ap * dy;
    if (A_.rows() > 0) lam += ad * dl;
    S.swap(Sn);
    X.swap(Xn);
  }
  return sol;
}

}  // namespace

ConicSolution solve_conic(const ConicProblem& problem, const ConicOptions& opts) {
  problem.validate();
  if (problem.max_block_dim() > opts.max_block_dim || problem.total_psd_dim() > opts.max_total_dim ||
      problem.num_vars > opts.max_vars) {
    throw CapacityError("problem exceeds the embedded solver limits (block " + std::to_string(problem.max_block_dim()) +
                        ", total " + std::to_string(problem.total_psd_dim()) + ", vars " +
                        std::to_string(problem.num_vars) + "); export it for an external solver");
  }
  IpmSolver solver(problem, opts);
  return solver.run();
}

ResidualReport verify_solution(const ConicProblem& problem, const ConicSolution& sol) {
  ResidualReport rep;
  const Vector& y = sol.y;
  const Eigen::Index m = problem.num_vars;
  if (y.size() != m) throw ContractViolation("solution vector length differs from the problem");

  Vector dual_res = problem.objective;
  double beq = 0.0;
  for (std::size_t r = 0; r < problem.equalities.size(); ++r) {
    const auto& eq = problem.equalities[r];
    double ay = 0.0;
    for (const auto& [v, c] : eq.terms) ay += c * y[v];
    rep.primal_equality = std::max(rep.primal_equality, std::abs(ay - eq.rhs));
    const double l = r < static_cast<std::size_t>(sol.lambda.size()) ? sol.lambda[static_cast<Eigen::Index>(r)] : 0.0;
    for (const auto& [v, c] : eq.terms) dual_res[v] -= c * l;
    beq += eq.rhs * l;
  }
  double cx = 0.0;
  for (std::size_t k = 0; k < problem.blocks.size(); ++k) {
    const auto& b = problem.blocks[k];
    rep.primal_cone = std::max(rep.primal_cone, std::max(0.0, -min_eig(problem.block_value(k, y))));
    if (k >= sol.X.size()) continue;
    const Matrix& Xr = sol.X[k];
    rep.dual_cone = std::max(rep.dual_cone, std::max(0.0, -min_eig(Xr)));
    const Matrix X = b.basis.size() == 0 ? Xr : Matrix(b.basis * Xr * b.basis.transpose());
    for (const auto& e : b.entries) {
      const double w = e.row == e.col ? X(e.row, e.row) : X(e.row, e.col) + X(e.col, e.row);
      if (e.var < 0) {
        cx += e.value * w;
      } else {
        dual_res[e.var] -= e.value * w;
      }
    }
  }
  rep.dual_equality = m > 0 ? dual_res.cwiseAbs().maxCoeff() : 0.0;
  rep.primal_objective = m > 0 ? problem.objective.dot(y) : 0.0;
  rep.dual_objective = beq - cx;
  rep.gap = std::abs(rep.primal_objective - rep.dual_objective) /
            (1.0 + std::abs(rep.primal_objective) + std::abs(rep.dual_objective));
  return rep;
}

// Grammar (one record per line, '#' starts a comment):
//   monopf-conic 1
//   vars <m>
//   blocks <count> <dim_1> ... <dim_count>
//   equalities <count>
//   c <var> <value>
//   eq <row> <var> <value>           var = -1 gives the right-hand side
//   psd <block> <var> <row> <col> <value>   var = -1 gives the constant term
//   label <block> <text>
//   basis <block> <raw_dim>           block is B' F B with B raw_dim x dim
//   pb <block> <row> <col> <value>    entry of B
//   end
void write_problem(std::ostream& out, const ConicProblem& p) {
  p.validate();
  char buf[128];
  out << "monopf-conic 1\n";
  out << "vars " << p.num_vars << "\n";
  out << "blocks " << p.blocks.size();
  for (const auto& b : p.blocks) out << ' ' << b.dim;
  out << "\nequalities " << p.equalities.size() << "\n";
  for (Eigen::Index v = 0; v < p.objective.size(); ++v) {
    if (p.objective[v] == 0.0) continue;
    std::snprintf(buf, sizeof buf, "c %ld %.17g\n", static_cast<long>(v), p.objective[v]);
    out << buf;
  }
  for (std::size_t r = 0; r < p.equalities.size(); ++r) {
    for (const auto& [v, c] : p.equalities[r].terms) {
      std::snprintf(buf, sizeof buf, "eq %zu %d %.17g\n", r, v, c);
      out << buf;
    }
    if (p.equalities[r].rhs != 0.0) {
      std::snprintf(buf, sizeof buf, "eq %zu -1 %.17g\n", r, p.equalities[r].rhs);
      out << buf;
    }
  }
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    if (!p.blocks[k].label.empty()) out << "label " << k << ' ' << p.blocks[k].label << "\n";
    const auto& B = p.blocks[k].basis;
    if (B.size() != 0) {
      out << "basis " << k << ' ' << B.rows() << "\n";
      for (Eigen::Index r = 0; r < B.rows(); ++r) {
        for (Eigen::Index c = 0; c < B.cols(); ++c) {
          if (B(r, c) == 0.0) continue;
          std::snprintf(buf, sizeof buf, "pb %zu %ld %ld %.17g\n", k, static_cast<long>(r), static_cast<long>(c), B(r, c));
          out << buf;
        }
      }
    }
    for (const auto& e : p.blocks[k].entries) {
      std::snprintf(buf, sizeof buf, "psd %zu %d %d %d %.17g\n", k, e.var, e.row, e.col, e.value);
      out << buf;
    }
  }
  out << "end\n";
}

ConicProblem read_problem(std::istream& in) {
  ConicProblem p;
  std::string line;
  int line_no = 0;
  bool header = false, ended = false;
  auto fail = [&](const std::string& msg) { throw ParseError("conic problem: " + msg, line_no); };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (!header) {
      int version = 0;
      if (tag != "monopf-conic" || !(ls >> version) || version != 1) fail("missing 'monopf-conic 1' header");
      header = true;
      continue;
    }
    if (tag == "vars") {
      if (!(ls >> p.num_vars) || p.num_vars < 0) fail("bad variable count");
      p.objective = Vector::Zero(p.num_vars);
    } else if (tag == "blocks") {
      std::size_t n = 0;
      if (!(ls >> n)) fail("bad block count");
      p.blocks.resize(n);
      for (auto& b : p.blocks) {
        if (!(ls >> b.dim)) fail("missing block dimension");
      }
    } else if (tag == "equalities") {
      std::size_t n = 0;
      if (!(ls >> n)) fail("bad equality count");
      p.equalities.resize(n);
    } else if (tag == "c") {
      long v = 0;
      double val = 0.0;
      if (!(ls >> v >> val) || v < 0 || v >= p.num_vars) fail("bad objective entry");
      p.objective[v] = val;
    } else if (tag == "eq") {
      std::size_t r = 0;
      int v = 0;
      double val = 0.0;
      if (!(ls >> r >> v >> val) || r >= p.equalities.size()) fail("bad equality entry");
      if (v < 0) {
        p.equalities[r].rhs = val;
      } else {
        p.equalities[r].terms.emplace_back(v, val);
      }
    } else if (tag == "psd") {
      std::size_t k = 0;
      BlockEntry e;
      if (!(ls >> k >> e.var >> e.row >> e.col >> e.value) || k >= p.blocks.size()) fail("bad block entry");
      p.blocks[k].entries.push_back(e);
    } else if (tag == "basis") {
      std::size_t k = 0;
      long raw = 0;
      if (!(ls >> k >> raw) || k >= p.blocks.size() || raw < p.blocks[k].dim) fail("bad basis record");
      p.blocks[k].basis = Matrix::Zero(raw, p.blocks[k].dim);
    } else if (tag == "pb") {
      std::size_t k = 0;
      long r = 0, c = 0;
      double v = 0.0;
      if (!(ls >> k >> r >> c >> v) || k >= p.blocks.size()) fail("bad basis entry");
      auto& B = p.blocks[k].basis;
      if (r < 0 || c < 0 || r >= B.rows() || c >= B.cols()) fail("basis entry outside the declared basis");
      B(r, c) = v;
    } else if (tag == "label") {
      std::size_t k = 0;
      if (!(ls >> k) || k >= p.blocks.size()) fail("bad label");
      std::getline(ls >> std::ws, p.blocks[k].label);
    } else if (tag == "end") {
      ended = true;
      break;
    } else {
      fail("unknown record '" + tag + "'");
    }
  }
  if (!header) throw ParseError("conic problem: empty input");
  if (!ended) throw ParseError("conic problem: missing 'end'", line_no);
  p.validate();
  return p;
}

}  // namespace monopf
