#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gaitplan {

/// Raised when the simplex cannot reach a verdict (cycling cap, numerical breakdown).
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense LP constraint set:  A_eq x = b_eq,  A_in x <= b_in,  lower <= x <= upper.
/// Bounds may be +-infinity.
struct LinearProgram {
  int n_vars = 0;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  explicit LinearProgram(int n = 0)
      : n_vars(n), A_eq(0, n), b_eq(0), A_in(0, n), b_in(0),
        lower(Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity())),
        upper(Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity())) {}

  void check_shape() const {
    if (A_eq.cols() != n_vars || A_in.cols() != n_vars || lower.size() != n_vars || upper.size() != n_vars ||
        A_eq.rows() != b_eq.size() || A_in.rows() != b_in.size())
      throw std::invalid_argument("LinearProgram: inconsistent dimensions");
  }
};

struct SimplexOptions {
  double feasibility_tol = 1e-6;
  double pivot_tol = 1e-9;
  double cost_tol = 1e-10;
  int bland_after = -1;     // iterations before switching to Bland's rule; <0 picks 2*(rows+cols)
  int max_iterations = -1;  // <0 picks 50*(rows+cols)
};

struct PhaseOneResult {
  bool feasible = false;
  double infeasibility = 0.0;  // remaining artificial mass, row-scaled units
  int iterations = 0;
  Eigen::VectorXd point;       // last primal iterate
};

namespace detail {

/// Bounded-variable primal simplex on a dense tableau, minimizing the sum of
/// artificial variables. Rows are equilibrated to unit max coefficient.
class PhaseOneSimplex {
 public:
  PhaseOneSimplex(const LinearProgram& lp, const SimplexOptions& opt) : lp_(lp), opt_(opt) {}

  PhaseOneResult run() {
    lp_.check_shape();
    PhaseOneResult res;
    for (int j = 0; j < lp_.n_vars; ++j)
      if (lp_.lower[j] > lp_.upper[j] || std::isnan(lp_.lower[j]) || std::isnan(lp_.upper[j])) {
        res.infeasibility = std::numeric_limits<double>::infinity();
        res.point = Eigen::VectorXd::Zero(lp_.n_vars);
        return res;
      }
    setup();
    if (constant_row_violated()) {
      res.infeasibility = artificial_mass();
      res.point = primal_point();
      return res;
    }
    const int bland_after = opt_.bland_after >= 0 ? opt_.bland_after : 2 * (m_ + n_cols_);
    const int max_iter = opt_.max_iterations >= 0 ? opt_.max_iterations : 50 * (m_ + n_cols_) + 100;

    int iter = 0;
    while (artificial_mass() > opt_.feasibility_tol * 1e-3) {
      if (iter >= max_iter) throw SolverFailure("phase-I simplex hit its iteration cap");
      const bool bland = iter >= bland_after;
      int dir = 0;
      const int q = choose_entering(bland, dir);
      if (q < 0) break;  // optimal: artificial mass cannot be reduced further
      step(q, dir, bland);
      ++iter;
    }
    res.iterations = iter;
    res.point = primal_point();
    res.infeasibility = artificial_mass();
    res.feasible = res.infeasibility <= opt_.feasibility_tol && verify(res.point);
    if (res.infeasibility <= opt_.feasibility_tol && !res.feasible)
      throw SolverFailure("phase-I optimum does not satisfy the constraints within tolerance");
    return res;
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  void setup() {
    const int m_eq = static_cast<int>(lp_.A_eq.rows());
    const int m_in = static_cast<int>(lp_.A_in.rows());
    n_ = lp_.n_vars;
    m_ = m_eq + m_in;
    n_cols_ = n_ + m_in;
    m_eq_ = m_eq;

    lo_.resize(n_cols_);
    hi_.resize(n_cols_);
    val_.assign(n_cols_, 0.0);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = lp_.lower[j];
      hi_[j] = lp_.upper[j];
      val_[j] = std::isfinite(lo_[j]) ? lo_[j] : (std::isfinite(hi_[j]) ? hi_[j] : 0.0);
    }
    for (int j = n_; j < n_cols_; ++j) {
      lo_[j] = 0.0;
      hi_[j] = kInf;
    }
    T_.assign(static_cast<std::size_t>(m_) * n_cols_, 0.0);
    beta_.assign(m_, 0.0);
    basis_.assign(m_, -1);
    artificial_.assign(m_, false);
    is_basic_.assign(n_cols_, false);
    scale_.assign(m_, 1.0);
    b_.assign(m_, 0.0);
    row_nonzeros_.assign(m_, 0);

    for (int i = 0; i < m_; ++i) {
      const bool eq = i < m_eq;
      const auto row = eq ? lp_.A_eq.row(i) : lp_.A_in.row(i - m_eq);
      const double rhs = eq ? lp_.b_eq[i] : lp_.b_in[i - m_eq];
      const double amax = row.cwiseAbs().maxCoeff();
      const double s = amax > 0.0 ? 1.0 / amax : 1.0;
      scale_[i] = s;
      b_[i] = s * rhs;
      double resid = b_[i];
      for (int j = 0; j < n_; ++j) {
        const double a = s * row[j];
        rowp(i)[j] = a;
        if (a != 0.0) {
          resid -= a * val_[j];
          ++row_nonzeros_[i];
        }
      }
      if (!eq) rowp(i)[n_ + (i - m_eq)] = 1.0;

      if (!eq && resid >= 0.0) {
        basis_[i] = n_ + (i - m_eq);
        is_basic_[basis_[i]] = true;
        beta_[i] = resid;
      } else {
        artificial_[i] = true;
        beta_[i] = std::abs(resid);
        if (resid < 0.0) {
          double* r = rowp(i);
          for (int j = 0; j < n_cols_; ++j) r[j] = -r[j];
        }
      }
    }
    // Reduced costs of the artificial-sum objective.
    d_.assign(n_cols_, 0.0);
    for (int i = 0; i < m_; ++i)
      if (artificial_[i]) {
        const double* r = rowp(i);
        for (int j = 0; j < n_cols_; ++j) d_[j] -= r[j];
      }
  }

  // A row without coefficients decides feasibility on its own.
  bool constant_row_violated() const {
    for (int i = 0; i < m_; ++i) {
      if (row_nonzeros_[i] > 0) continue;
      const double allow = opt_.feasibility_tol * std::max(1.0, std::abs(b_[i]));
      if (i < m_eq_ ? std::abs(b_[i]) > allow : b_[i] < -allow) return true;
    }
    return false;
  }

  double* rowp(int i) { return T_.data() + static_cast<std::size_t>(i) * n_cols_; }

  double artificial_mass() const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i)
      if (artificial_[i]) s += beta_[i];
    return s;
  }

  int choose_entering(bool bland, int& dir) const {
    int best = -1;
    double best_score = 0.0;
    for (int j = 0; j < n_cols_; ++j) {
      if (is_basic_[j]) continue;
      const double d = d_[j];
      int dj = 0;
      if (d < -opt_.cost_tol && val_[j] < hi_[j]) dj = +1;
      else if (d > opt_.cost_tol && val_[j] > lo_[j]) dj = -1;
      if (dj == 0) continue;
      if (bland) {
        dir = dj;
        return j;
      }
      if (std::abs(d) > best_score) {
        best_score = std::abs(d);
        best = j;
        dir = dj;
      }
    }
    return best;
  }

  double basic_lo(int i) const { return artificial_[i] ? 0.0 : lo_[basis_[i]]; }
  double basic_hi(int i) const { return artificial_[i] ? kInf : hi_[basis_[i]]; }

  void step(int q, int dir, bool bland) {
    // Harris two-pass ratio test.
    const double tol = opt_.feasibility_tol * 1e-3;
    double relaxed = kInf;
    for (int i = 0; i < m_; ++i) {
      const double a = T_[static_cast<std::size_t>(i) * n_cols_ + q];
      if (std::abs(a) <= opt_.pivot_tol) continue;
      const double rate = -dir * a;
      double lim;
      if (rate < 0.0) lim = (beta_[i] - basic_lo(i) + tol) / -rate;
      else {
        const double h = basic_hi(i);
        if (!std::isfinite(h)) continue;
        lim = (h - beta_[i] + tol) / rate;
      }
      relaxed = std::min(relaxed, lim);
    }
    const double own = dir > 0 ? hi_[q] - val_[q] : val_[q] - lo_[q];

    int leave = -1;
    double t = kInf;
    if (std::isfinite(relaxed)) {
      double best_piv = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = T_[static_cast<std::size_t>(i) * n_cols_ + q];
        if (std::abs(a) <= opt_.pivot_tol) continue;
        const double rate = -dir * a;
        double lim;
        if (rate < 0.0) lim = (beta_[i] - basic_lo(i)) / -rate;
        else {
          const double h = basic_hi(i);
          if (!std::isfinite(h)) continue;
          lim = (h - beta_[i]) / rate;
        }
        if (lim > relaxed) continue;
        const bool better = bland ? (leave < 0 || leave_key(i) < leave_key(leave)) : std::abs(a) > best_piv;
        if (better) {
          best_piv = std::abs(a);
          leave = i;
          t = std::max(lim, 0.0);
        }
      }
    }
    if (own <= t) {
      if (!std::isfinite(own)) throw SolverFailure("phase-I problem reported unbounded");
      move(q, dir, own);
      return;
    }
    if (leave < 0) throw SolverFailure("phase-I ratio test found no blocking row");
    move(q, dir, t);

    // Leaving variable settles on the bound it reached.
    const double rate = -dir * T_[static_cast<std::size_t>(leave) * n_cols_ + q];
    if (artificial_[leave]) {
      artificial_[leave] = false;
    } else {
      const int out = basis_[leave];
      is_basic_[out] = false;
      val_[out] = rate < 0.0 ? lo_[out] : hi_[out];
    }
    beta_[leave] = val_[q];
    basis_[leave] = q;
    is_basic_[q] = true;
    pivot(leave, q);
  }

  // Bland order: artificial rows first, then by column index.
  int leave_key(int i) const { return artificial_[i] ? i - m_ : basis_[i]; }

  void move(int q, int dir, double t) {
    if (t == 0.0) return;
    const double delta = dir * t;
    val_[q] += delta;
    for (int i = 0; i < m_; ++i) {
      const double a = T_[static_cast<std::size_t>(i) * n_cols_ + q];
      if (a != 0.0) beta_[i] -= a * delta;
    }
    for (int i = 0; i < m_; ++i)
      if (artificial_[i] && beta_[i] < 0.0) beta_[i] = 0.0;
  }

  void pivot(int r, int q) {
    double* pr = rowp(r);
    const double inv = 1.0 / pr[q];
    nz_.clear();
    for (int j = 0; j < n_cols_; ++j) {
      if (pr[j] != 0.0) {
        pr[j] *= inv;
        nz_.push_back(j);
      }
    }
    pr[q] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* pi = rowp(i);
      const double f = pi[q];
      if (f == 0.0) continue;
      for (int j : nz_) pi[j] -= f * pr[j];
      pi[q] = 0.0;
    }
    const double f = d_[q];
    if (f != 0.0) {
      for (int j : nz_) d_[j] -= f * pr[j];
      d_[q] = 0.0;
    }
  }

  Eigen::VectorXd primal_point() const {
    std::vector<double> v = val_;
    for (int i = 0; i < m_; ++i)
      if (!artificial_[i] && basis_[i] >= 0) v[basis_[i]] = beta_[i];
    Eigen::VectorXd x(n_);
    for (int j = 0; j < n_; ++j) x[j] = v[j];
    return x;
  }

  bool verify(const Eigen::VectorXd& x) const {
    const double tol = opt_.feasibility_tol;
    for (int j = 0; j < n_; ++j)
      if (x[j] < lp_.lower[j] - tol * std::max(1.0, std::abs(lp_.lower[j])) ||
          x[j] > lp_.upper[j] + tol * std::max(1.0, std::abs(lp_.upper[j])))
        return false;
    for (int i = 0; i < m_; ++i) {
      const bool eq = i < m_eq_;
      const double lhs = scale_[i] * (eq ? lp_.A_eq.row(i).dot(x) : lp_.A_in.row(i - m_eq_).dot(x));
      const double slack = b_[i] - lhs;
      const double allow = tol * std::max(1.0, std::abs(b_[i]));
      if (eq ? std::abs(slack) > allow : slack < -allow) return false;
    }
    return true;
  }

  const LinearProgram& lp_;
  SimplexOptions opt_;
  int n_ = 0, m_ = 0, m_eq_ = 0, n_cols_ = 0;
  std::vector<double> T_, beta_, lo_, hi_, val_, d_, scale_, b_;
  std::vector<int> basis_, nz_, row_nonzeros_;
  std::vector<bool> artificial_, is_basic_;
};

}  // namespace detail

/// Phase-I feasibility solve. Throws SolverFailure on numerical breakdown.
inline PhaseOneResult solve_phase_one(const LinearProgram& lp, const SimplexOptions& options = {}) {
  return detail::PhaseOneSimplex(lp, options).run();
}

/// True iff some point satisfies every constraint of lp within tolerance.
inline bool lp_feasible(const LinearProgram& lp, double tolerance = 1e-6) {
  SimplexOptions opt;
  opt.feasibility_tol = tolerance;
  return solve_phase_one(lp, opt).feasible;
}

}  // namespace gaitplan
