#include "decant/simplex.hpp"

#include <cmath>
#include <string>

#include "decant/errors.hpp"

namespace decant::simplex {

namespace {

// Tableau over columns [structural | slack | artificial]. Row i expresses the
// basic variable basis[i] in terms of the nonbasic ones.
class Tableau {
 public:
  Tableau(const Problem& p, double tol) : tol_(tol) {
    n_ = p.c.size();
    m_ = p.b.size();
    x_.assign(n_ + m_, 0.0);
    lo_.assign(n_ + m_, 0.0);
    hi_.assign(n_ + m_, kInf);
    for (std::size_t j = 0; j < n_; ++j) {
      lo_[j] = p.lower[j];
      hi_[j] = p.upper[j];
      x_[j] = lo_[j];
    }

    // Row residuals with structurals at their lower bounds give slack values.
    std::vector<double> slack(m_);
    std::size_t n_art = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      double s = p.b[i];
      for (std::size_t j = 0; j < n_; ++j) s -= p.a[i][j] * lo_[j];
      slack[i] = s;
      if (s < -tol_) ++n_art;
    }
    cols_ = n_ + m_ + n_art;
    x_.resize(cols_, 0.0);
    lo_.resize(cols_, 0.0);
    hi_.resize(cols_, kInf);
    t_.assign(m_, std::vector<double>(cols_, 0.0));
    basis_.assign(m_, 0);
    std::size_t art = n_ + m_;
    for (std::size_t i = 0; i < m_; ++i) {
      if (slack[i] >= -tol_) {
        for (std::size_t j = 0; j < n_; ++j) t_[i][j] = p.a[i][j];
        t_[i][n_ + i] = 1.0;
        basis_[i] = n_ + i;
        x_[n_ + i] = std::max(slack[i], 0.0);
      } else {
        // a x + s - r = b with r >= 0 basic; the row is negated so the basic
        // column is +1.
        for (std::size_t j = 0; j < n_; ++j) t_[i][j] = -p.a[i][j];
        t_[i][n_ + i] = -1.0;
        t_[i][art] = 1.0;
        basis_[i] = art;
        x_[n_ + i] = 0.0;
        x_[art] = -slack[i];
        artificials_.push_back(art);
        ++art;
      }
    }
    basic_.assign(cols_, 0);
    for (std::size_t b : basis_) basic_[b] = 1;
  }

  bool has_artificials() const { return !artificials_.empty(); }

  // Runs simplex iterations for objective `cost` (length cols_). Returns the
  // number of iterations.
  int optimize(const std::vector<double>& cost, int max_iter) {
    std::vector<double> d = reduced_costs(cost);
    int it = 0;
    for (; it < max_iter; ++it) {
      // Bland: lowest-index improving column.
      std::size_t q = cols_;
      int dir = 0;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (basic_[j] || hi_[j] - lo_[j] <= tol_) continue;
        const bool at_lo = x_[j] == lo_[j];
        if (d[j] > tol_ && at_lo) {
          q = j;
          dir = +1;
          break;
        }
        if (d[j] < -tol_ && !at_lo) {
          q = j;
          dir = -1;
          break;
        }
      }
      if (q == cols_) return it;

      // Ratio test. Moving x_q by dir*theta changes basic row i by
      // -dir*theta*t[i][q]. Without a blocking row the move is a bound flip.
      double theta = hi_[q] - lo_[q];
      std::size_t leave_row = m_;
      for (std::size_t i = 0; i < m_; ++i) {
        const double alpha = dir * t_[i][q];
        if (std::abs(alpha) <= tol_) continue;
        const std::size_t bv = basis_[i];
        double limit;
        if (alpha > 0) {
          limit = (x_[bv] - lo_[bv]) / alpha;
        } else {
          if (hi_[bv] == kInf) continue;
          limit = (hi_[bv] - x_[bv]) / -alpha;
        }
        limit = std::max(limit, 0.0);
        const bool tie = std::abs(limit - theta) <= tol_;
        if (limit < theta - tol_ || (tie && leave_row == m_) ||
            (tie && bv < basis_[leave_row])) {
          theta = std::min(limit, theta);
          leave_row = i;
        }
      }
      if (theta == kInf) throw UnboundedError("simplex: objective is unbounded");

      for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] -= dir * theta * t_[i][q];
      x_[q] += dir * theta;
      if (leave_row == m_) {
        // Bound flip, basis unchanged.
        x_[q] = dir > 0 ? hi_[q] : lo_[q];
        continue;
      }
      const std::size_t out = basis_[leave_row];
      const double alpha = dir * t_[leave_row][q];
      x_[out] = alpha > 0 ? lo_[out] : hi_[out];
      pivot(leave_row, q, d);
    }
    throw std::runtime_error("simplex: iteration limit reached");
  }

  // Pins artificials at zero so phase 2 can never move them.
  void retire_artificials() {
    for (std::size_t a : artificials_) {
      lo_[a] = 0.0;
      hi_[a] = 0.0;
    }
  }

  double artificial_sum() const {
    double s = 0.0;
    for (std::size_t a : artificials_) s += x_[a];
    return s;
  }

  std::size_t cols() const { return cols_; }
  std::size_t n() const { return n_; }
  const std::vector<double>& values() const { return x_; }
  const std::vector<std::size_t>& artificials() const { return artificials_; }

 private:
  std::vector<double> reduced_costs(const std::vector<double>& cost) const {
    std::vector<double> d = cost;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < cols_; ++j) d[j] -= cb * t_[i][j];
    }
    return d;
  }

  void pivot(std::size_t r, std::size_t q, std::vector<double>& d) {
    const double piv = t_[r][q];
    for (auto& v : t_[r]) v /= piv;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = t_[i][q];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < cols_; ++j) t_[i][j] -= f * t_[r][j];
      t_[i][q] = 0.0;
    }
    const double fd = d[q];
    if (fd != 0.0) {
      for (std::size_t j = 0; j < cols_; ++j) d[j] -= fd * t_[r][j];
      d[q] = 0.0;
    }
    basic_[basis_[r]] = 0;
    basic_[q] = 1;
    basis_[r] = q;
  }

  double tol_;
  std::size_t n_ = 0, m_ = 0, cols_ = 0;
  std::vector<std::vector<double>> t_;
  std::vector<std::size_t> basis_;
  std::vector<char> basic_;
  std::vector<double> x_, lo_, hi_;
  std::vector<std::size_t> artificials_;
};

void check_shapes(const Problem& p) {
  const std::size_t n = p.c.size();
  if (p.lower.size() != n || p.upper.size() != n || p.a.size() != p.b.size()) {
    throw ContractError("simplex: inconsistent problem dimensions");
  }
  for (const auto& row : p.a) {
    if (row.size() != n) throw ContractError("simplex: constraint row has wrong width");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(p.lower[j])) throw ContractError("simplex: lower bounds must be finite");
    if (p.upper[j] < p.lower[j]) {
      throw InfeasibleProblem("simplex: variable " + std::to_string(j) + " has upper < lower");
    }
  }
}

}  // namespace

Solution maximize(const Problem& p, const Options& opt) {
  check_shapes(p);
  Tableau tab(p, opt.tol);
  Solution sol;
  if (tab.has_artificials()) {
    std::vector<double> phase1(tab.cols(), 0.0);
    for (std::size_t a : tab.artificials()) phase1[a] = -1.0;
    sol.iterations += tab.optimize(phase1, opt.max_iterations);
    if (tab.artificial_sum() > opt.tol * 10) {
      throw InfeasibleProblem("simplex: no point satisfies all constraints");
    }
    tab.retire_artificials();
  }
  std::vector<double> cost(tab.cols(), 0.0);
  for (std::size_t j = 0; j < p.c.size(); ++j) cost[j] = p.c[j];
  sol.iterations += tab.optimize(cost, opt.max_iterations);

  sol.x.assign(tab.values().begin(), tab.values().begin() + static_cast<std::ptrdiff_t>(tab.n()));
  for (std::size_t j = 0; j < sol.x.size(); ++j) sol.objective += p.c[j] * sol.x[j];
  return sol;
}

}  // namespace decant::simplex
