#include "rieszlab/lp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rieszlab::lp {

void Problem::add_column(double c, const std::vector<int>& r, const std::vector<double>& v) {
  for (std::size_t i = 0; i < r.size(); ++i) {
    row_index.push_back(r[i]);
    value.push_back(v[i]);
  }
  col_start.push_back(row_index.size());
  cost.push_back(c);
}

double Solution::certificate() const { return std::max({primal_residual, dual_infeasibility, complementarity}); }

namespace {

class Simplex {
 public:
  explicit Simplex(const Problem& p) : p_(p), m_(p.rows), n_(p.cols()) {
    b_ = Eigen::VectorXd::Map(p.b.data(), m_);
    sign_.assign(m_, 1.0);
    for (int i = 0; i < m_; ++i)
      if (b_[i] < 0.0) {
        sign_[i] = -1.0;
        b_[i] = -b_[i];
      }
    cmax_ = 1.0;
    for (double c : p.cost) cmax_ = std::max(cmax_, std::abs(c));
    head_.resize(m_);
    basic_.assign(n_ + m_, 0);
    for (int i = 0; i < m_; ++i) {
      head_[i] = static_cast<long>(n_) + i;
      basic_[n_ + i] = 1;
    }
    binv_ = Eigen::MatrixXd::Identity(m_, m_);
    xb_ = b_;
  }

  Solution run() {
    Solution sol;
    Status st = iterate(true);
    double infeas = 0.0;
    for (int i = 0; i < m_; ++i)
      if (head_[i] >= static_cast<long>(n_)) infeas += xb_[i];
    if (st != Status::Optimal || infeas > 1e-9 * std::max(1.0, b_.lpNorm<1>())) {
      sol.status = st == Status::IterationLimit ? st : Status::Infeasible;
      sol.iterations = iters_;
      return sol;
    }
    drive_out_artificials();
    st = iterate(false);
    if (st == Status::Optimal) {
      refactor();
      st = iterate(false);  // polish after a fresh factorization
    }
    sol.status = st;
    sol.iterations = iters_;
    sol.x.assign(n_, 0.0);
    for (int i = 0; i < m_; ++i)
      if (head_[i] < static_cast<long>(n_)) sol.x[head_[i]] = std::max(0.0, xb_[i]);
    const Eigen::VectorXd y = duals(false);
    sol.duals.resize(m_);
    for (int i = 0; i < m_; ++i) sol.duals[i] = y[i] * sign_[i];
    certify(sol, y);
    return sol;
  }

 private:
  double cost(std::size_t j, bool phase1) const {
    if (j >= n_) return phase1 ? 1.0 : 0.0;
    return phase1 ? 0.0 : p_.cost[j];
  }

  Eigen::VectorXd duals(bool phase1) const {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost(head_[i], phase1);
    return binv_.transpose() * cb;
  }

  double reduced_cost(std::size_t j, const Eigen::VectorXd& y, bool phase1) const {
    double rc = cost(j, phase1);
    for (std::size_t k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) {
      const int r = p_.row_index[k];
      rc -= sign_[r] * p_.value[k] * y[r];
    }
    return rc;
  }

  Eigen::VectorXd column(std::size_t j) const {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(m_);
    if (j >= n_) return binv_.col(static_cast<int>(j - n_));
    for (std::size_t k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) {
      const int r = p_.row_index[k];
      d += (sign_[r] * p_.value[k]) * binv_.col(r);
    }
    return d;
  }

  void refactor() {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      const std::size_t j = head_[i];
      if (j >= n_) {
        B(j - n_, i) = 1.0;
        continue;
      }
      for (std::size_t k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) {
        const int r = p_.row_index[k];
        B(r, i) += sign_[r] * p_.value[k];
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    binv_ = lu.inverse();
    xb_ = binv_ * b_;
    for (int i = 0; i < m_; ++i)
      if (xb_[i] < 0.0 && xb_[i] > -1e-10) xb_[i] = 0.0;
    since_refactor_ = 0;
  }

  void pivot(int row, std::size_t j, const Eigen::VectorXd& d) {
    const double piv = d[row];
    const double theta = std::max(0.0, xb_[row] / piv);
    xb_ -= theta * d;
    xb_[row] = theta;
    binv_.row(row) /= piv;
    for (int i = 0; i < m_; ++i)
      if (i != row && d[i] != 0.0) binv_.row(i) -= d[i] * binv_.row(row);
    basic_[head_[row]] = 0;
    head_[row] = static_cast<long>(j);
    basic_[j] = 1;
    ++iters_;
    if (++since_refactor_ >= 64) refactor();
  }

  Status iterate(bool phase1) {
    const double tol = 1e-11 * (phase1 ? 1.0 : cmax_);
    const long limit = 200000 + 50 * static_cast<long>(n_ + m_);
    int degenerate = 0;
    while (iters_ < limit) {
      const Eigen::VectorXd y = duals(phase1);
      const bool bland = degenerate > 40;
      long enter = -1;
      double best = -tol;
      for (std::size_t j = 0; j < n_; ++j) {
        if (basic_[j]) continue;
        const double rc = reduced_cost(j, y, phase1);
        if (rc < best) {
          enter = static_cast<long>(j);
          if (bland) break;
          best = rc;
        }
      }
      if (enter < 0) return Status::Optimal;
      const Eigen::VectorXd d = column(enter);
      // Harris ratio test
      const double piv_tol = 1e-9;
      const double feas_tol = 1e-12;
      double theta_max = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i)
        if (d[i] > piv_tol) theta_max = std::min(theta_max, (xb_[i] + feas_tol) / d[i]);
      if (!std::isfinite(theta_max)) return Status::Unbounded;
      int row = -1;
      for (int i = 0; i < m_; ++i) {
        if (d[i] <= piv_tol || xb_[i] / d[i] > theta_max) continue;
        if (row < 0) {
          row = i;
          continue;
        }
        if (bland ? head_[i] < head_[row] : d[i] > d[row]) row = i;
      }
      const double theta = std::max(0.0, xb_[row] / d[row]);
      degenerate = theta <= 1e-14 ? degenerate + 1 : 0;
      pivot(row, enter, d);
    }
    return Status::IterationLimit;
  }

  void drive_out_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (head_[i] < static_cast<long>(n_)) continue;
      const Eigen::RowVectorXd rho = binv_.row(i);
      for (std::size_t j = 0; j < n_; ++j) {
        if (basic_[j]) continue;
        double v = 0.0;
        for (std::size_t k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) {
          const int r = p_.row_index[k];
          v += sign_[r] * p_.value[k] * rho[r];
        }
        if (std::abs(v) > 1e-7) {
          const Eigen::VectorXd d = column(j);
          xb_[i] = 0.0;
          pivot(i, j, d);
          break;
        }
      }
    }
    refactor();
  }

  void certify(Solution& sol, const Eigen::VectorXd& y) const {
    Eigen::VectorXd ax = Eigen::VectorXd::Zero(m_);
    double obj = 0.0, comp = 0.0;
    double dual_inf = 0.0, compl_ = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      const double xj = sol.x[j];
      if (xj != 0.0) {
        for (std::size_t k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) {
          const int r = p_.row_index[k];
          ax[r] += sign_[r] * p_.value[k] * xj;
        }
        // Neumaier summation of the objective
        const double t = obj + p_.cost[j] * xj;
        comp += std::abs(obj) >= std::abs(p_.cost[j] * xj) ? (obj - t) + p_.cost[j] * xj : (p_.cost[j] * xj - t) + obj;
        obj = t;
      }
      const double rc = reduced_cost(j, y, false);
      dual_inf = std::max(dual_inf, -rc / cmax_);
      compl_ = std::max(compl_, xj * std::abs(rc) / cmax_);
    }
    sol.objective = obj + comp;
    sol.primal_residual = (ax - b_).lpNorm<Eigen::Infinity>();
    sol.dual_infeasibility = std::max(0.0, dual_inf);
    sol.complementarity = compl_;
  }

  const Problem& p_;
  int m_;
  std::size_t n_;
  Eigen::VectorXd b_;
  std::vector<double> sign_;
  double cmax_;
  std::vector<long> head_;
  std::vector<char> basic_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
  long iters_ = 0;
  int since_refactor_ = 0;
};

}  // namespace

Solution solve(const Problem& p) {
  if (static_cast<int>(p.b.size()) != p.rows) throw std::invalid_argument("lp: right-hand side size mismatch");
  if (p.rows == 0) {
    Solution s;
    s.status = Status::Optimal;
    s.x.assign(p.cols(), 0.0);
    return s;
  }
  Simplex simplex(p);
  return simplex.run();
}

}  // namespace rieszlab::lp
