#pragma once

// Bounded-variable primal revised simplex with an explicit dense basis
// inverse. Internal to the solver module.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "rdao/linear_model.hpp"

namespace rdao::detail {

using Clock = std::chrono::steady_clock;

enum class LpOutcome { optimal, infeasible, unbounded, limit };

/// Column-compressed copy of a LinearModel's rows.
struct LpData {
  int m = 0;
  int n = 0;
  std::vector<int> start;  // size n + 1
  std::vector<int> index;
  std::vector<double> value;
  VectorXd cost, lower, upper, rhs;
  std::vector<Sense> sense;
  double rhs_scale = 1.0;

  static LpData from_model(const LinearModel& model) {
    LpData d;
    d.m = model.num_constraints();
    d.n = model.num_variables();
    std::vector<int> count(static_cast<std::size_t>(d.n) + 1, 0);
    for (const Constraint& c : model.constraints())
      for (const Term& t : c.terms) ++count[static_cast<std::size_t>(t.col) + 1];
    d.start.assign(count.begin(), count.end());
    for (int j = 0; j < d.n; ++j) d.start[j + 1] += d.start[j];
    d.index.resize(static_cast<std::size_t>(d.start[d.n]));
    d.value.resize(d.index.size());
    std::vector<int> fill(d.start.begin(), d.start.end() - 1);
    d.rhs.resize(d.m);
    int r = 0;
    for (const Constraint& c : model.constraints()) {
      for (const Term& t : c.terms) {
        const int pos = fill[t.col]++;
        d.index[pos] = r;
        d.value[pos] = t.coef;
      }
      d.rhs[r] = c.rhs;
      d.sense.push_back(c.sense);
      ++r;
    }
    d.cost = model.objective();
    d.lower.resize(d.n);
    d.upper.resize(d.n);
    for (int j = 0; j < d.n; ++j) {
      d.lower[j] = model.variables()[j].lower;
      d.upper[j] = model.variables()[j].upper;
    }
    d.rhs_scale = std::max(1.0, d.m > 0 ? d.rhs.cwiseAbs().maxCoeff() : 1.0);
    return d;
  }
};

enum class VarState : unsigned char { basic, lower, upper, zero };

/// Basis snapshot: the basic column of every row plus every column's state.
struct Basis {
  std::vector<int> basic;
  std::vector<VarState> state;
};

template <typename Scalar>
class BoundedSimplex {
 public:
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  /// `lower` / `upper` override the structural bounds of `data`.
  BoundedSimplex(const LpData& data, const VectorXd& lower,
                 const VectorXd& upper, Clock::time_point deadline)
      : d_(data), deadline_(deadline) {
    m_ = d_.m;
    n_ = d_.n;
    total_ = n_ + 2 * m_;
    lo_.resize(total_);
    hi_.resize(total_);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = static_cast<Scalar>(lower[j]);
      hi_[j] = static_cast<Scalar>(upper[j]);
    }
    art_sign_.assign(static_cast<std::size_t>(m_), Scalar(1));
    for (int r = 0; r < m_; ++r) {
      const int s = n_ + r;
      switch (d_.sense[r]) {
        case Sense::less_equal: lo_[s] = 0; hi_[s] = inf(); break;
        case Sense::greater_equal: lo_[s] = -inf(); hi_[s] = 0; break;
        case Sense::equal: lo_[s] = 0; hi_[s] = 0; break;
      }
      lo_[n_ + m_ + r] = 0;
      hi_[n_ + m_ + r] = 0;
    }
  }

  LpOutcome solve() {
    for (int j = 0; j < n_; ++j)
      if (lo_[j] > hi_[j] + feas_tol()) return LpOutcome::infeasible;
    initialize();
    cost_ = Vec::Zero(total_);
    bool need_phase1 = false;
    for (int r = 0; r < m_; ++r)
      if (hi_[n_ + m_ + r] > 0) {
        cost_[n_ + m_ + r] = 1;
        need_phase1 = true;
      }
    if (need_phase1) {
      const LpOutcome o = iterate();
      if (o == LpOutcome::limit) return o;
      Scalar infeas = 0;
      for (int r = 0; r < m_; ++r) infeas += x_[n_ + m_ + r];
      if (infeas > Scalar(1e-8) * Scalar(d_.rhs_scale)) return LpOutcome::infeasible;
      drive_out_artificials();
    }
    cost_ = Vec::Zero(total_);
    for (int j = 0; j < n_; ++j) cost_[j] = static_cast<Scalar>(d_.cost[j]);
    const LpOutcome o = iterate();
    if (o == LpOutcome::optimal) {
      refresh_primal();
      compute_duals();
    }
    return o;
  }

  /// Tightens the bounds of a structural column in place.
  void set_bounds(int j, double lower, double upper) {
    lo_[j] = static_cast<Scalar>(lower);
    hi_[j] = static_cast<Scalar>(upper);
  }

  Basis basis() const { return {basis_, state_}; }

  /// Installs a basis from an earlier solve of the same data; the inverse is
  /// refactored from scratch.
  void load_basis(const Basis& b) {
    basis_ = b.basic;
    state_ = b.state;
    x_ = Vec::Zero(total_);
    for (int r = 0; r < m_; ++r) {
      lo_[n_ + m_ + r] = 0;
      hi_[n_ + m_ + r] = 0;
    }
    cost_ = Vec::Zero(total_);
    for (int j = 0; j < n_; ++j) cost_[j] = static_cast<Scalar>(d_.cost[j]);
    binv_ = Mat::Identity(m_, m_);
    warm_ = true;
  }

  /// Re-optimizes after bound changes from the current (or loaded) basis with
  /// the dual simplex, finishing with primal iterations. Returns nothing when
  /// the basis is unusable and a cold solve is needed.
  std::optional<LpOutcome> resolve() {
    for (int j = 0; j < n_; ++j)
      if (lo_[j] > hi_[j] + feas_tol()) return LpOutcome::infeasible;
    for (int j = 0; j < total_; ++j) {
      if (state_[j] == State::basic) continue;
      const Scalar v = state_[j] == State::lower ? lo_[j]
                       : state_[j] == State::upper ? hi_[j] : Scalar(0);
      if (!std::isfinite(static_cast<double>(v))) return std::nullopt;
      x_[j] = v;
    }
    refresh_primal(warm_);
    warm_ = false;
    if (!x_.allFinite()) return std::nullopt;
    // Restore dual feasibility by bound flips.
    Vec cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
    pi_.noalias() = binv_.transpose() * cb;
    bool flipped = false;
    for (int j = 0; j < total_; ++j) {
      const State s = state_[j];
      if (s == State::basic || lo_[j] == hi_[j]) continue;
      const Scalar dj = reduced_cost(j);
      if ((s == State::lower && dj < -opt_tol()) || (s == State::upper && dj > opt_tol()) ||
          (s == State::zero && std::abs(dj) > opt_tol())) {
        const bool to_upper = dj < 0;
        const Scalar v = to_upper ? hi_[j] : lo_[j];
        if (!std::isfinite(static_cast<double>(v))) return std::nullopt;
        state_[j] = to_upper ? State::upper : State::lower;
        x_[j] = v;
        flipped = true;
      }
    }
    if (flipped) refresh_primal();

    const long cap = 20L * (m_ + n_) + 100;
    long local = 0;
    while (true) {
      if ((iterations_ & 15) == 0 && Clock::now() > deadline_) return LpOutcome::limit;
      if (local > cap) return std::nullopt;
      if (local > 0 && local % 64 == 0) refresh_primal();
      int r = -1;
      Scalar worst = 0;
      for (int i = 0; i < m_; ++i) {
        const int bj = basis_[i];
        const Scalar below = lo_[bj] - x_[bj], above = x_[bj] - hi_[bj];
        const Scalar tol = feas_tol() * std::max(Scalar(1), std::abs(x_[bj]));
        const Scalar v = std::max(below, above);
        if (v > tol && v > worst) {
          worst = v;
          r = i;
        }
      }
      if (r < 0) break;
      const int leaving = basis_[r];
      const bool to_lower = x_[leaving] < lo_[leaving];
      for (int i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
      pi_.noalias() = binv_.transpose() * cb;
      const Vec rho = binv_.row(r).transpose();
      // Harris two-pass dual ratio test over columns that can move x_leaving
      // toward its violated bound.
      std::vector<std::pair<int, Scalar>> cand;
      Scalar relaxed = inf();
      for (int j = 0; j < total_; ++j) {
        const State s = state_[j];
        if (s == State::basic || lo_[j] == hi_[j]) continue;
        Scalar a = 0;
        for_column(j, [&](int row, Scalar v) { a += rho[row] * v; });
        if (std::abs(a) <= piv_tol()) continue;
        // x_leaving moves by -a per unit increase of x_j.
        const bool inc_ok = s == State::lower || s == State::zero;
        const bool dec_ok = s == State::upper || s == State::zero;
        const bool want_inc = to_lower ? a < 0 : a > 0;
        if (!(want_inc ? inc_ok : dec_ok)) continue;
        const Scalar dj = reduced_cost(j);
        const Scalar mag = want_inc ? std::max(dj, Scalar(0)) : std::max(-dj, Scalar(0));
        relaxed = std::min(relaxed, (mag + opt_tol()) / std::abs(a));
        cand.emplace_back(j, a);
      }
      if (cand.empty()) return LpOutcome::infeasible;
      int q = -1;
      Scalar best_abs = 0;
      for (const auto& [j, a] : cand) {
        const Scalar dj = reduced_cost(j);
        if (std::abs(dj) / std::abs(a) > relaxed) continue;
        if (std::abs(a) > best_abs) {
          best_abs = std::abs(a);
          q = j;
        }
      }
      if (q < 0) return std::nullopt;
      const Vec alpha = column_ftran(q);
      if (std::abs(alpha[r]) <= piv_tol()) return std::nullopt;
      const Scalar target = to_lower ? lo_[leaving] : hi_[leaving];
      const Scalar theta = (x_[leaving] - target) / alpha[r];
      for (int i = 0; i < m_; ++i) x_[basis_[i]] -= alpha[i] * theta;
      x_[q] += theta;
      x_[leaving] = target;
      state_[leaving] = to_lower ? State::lower : State::upper;
      pivot(r, q, alpha);
      ++iterations_;
      ++local;
    }
    const LpOutcome o = iterate();
    if (o == LpOutcome::optimal) {
      refresh_primal();
      compute_duals();
    }
    return o;
  }

  VectorXd primal() const {
    VectorXd x(n_);
    for (int j = 0; j < n_; ++j) x[j] = static_cast<double>(x_[j]);
    return x;
  }
  VectorXd duals() const { return pi_.template cast<double>(); }
  long iterations() const { return iterations_; }

 private:
  using State = VarState;

  static Scalar inf() { return std::numeric_limits<Scalar>::infinity(); }
  static Scalar feas_tol() { return Scalar(1e-9); }
  static Scalar opt_tol() { return Scalar(1e-9); }
  static Scalar piv_tol() { return Scalar(1e-9); }

  template <typename F>
  void for_column(int j, F&& f) const {
    if (j < n_) {
      for (int p = d_.start[j]; p < d_.start[j + 1]; ++p)
        f(d_.index[p], static_cast<Scalar>(d_.value[p]));
    } else if (j < n_ + m_) {
      f(j - n_, Scalar(1));
    } else {
      f(j - n_ - m_, art_sign_[j - n_ - m_]);
    }
  }

  Scalar nonbasic_value(int j) const {
    if (std::isfinite(static_cast<double>(lo_[j]))) return lo_[j];
    if (std::isfinite(static_cast<double>(hi_[j]))) return hi_[j];
    return 0;
  }

  State nonbasic_state(int j) const {
    if (std::isfinite(static_cast<double>(lo_[j]))) return State::lower;
    if (std::isfinite(static_cast<double>(hi_[j]))) return State::upper;
    return State::zero;
  }

  void initialize() {
    x_ = Vec::Zero(total_);
    state_.assign(static_cast<std::size_t>(total_), State::lower);
    basis_.assign(static_cast<std::size_t>(m_), 0);
    for (int j = 0; j < n_; ++j) {
      x_[j] = nonbasic_value(j);
      state_[j] = nonbasic_state(j);
    }
    Vec resid = d_.rhs.template cast<Scalar>();
    for (int j = 0; j < n_; ++j)
      if (x_[j] != 0) for_column(j, [&](int r, Scalar a) { resid[r] -= a * x_[j]; });
    binv_ = Mat::Identity(m_, m_);
    for (int r = 0; r < m_; ++r) {
      const int s = n_ + r, art = n_ + m_ + r;
      const Scalar v = resid[r];
      if (v >= lo_[s] - feas_tol() && v <= hi_[s] + feas_tol()) {
        basis_[r] = s;
        state_[s] = State::basic;
        x_[s] = v;
        state_[art] = State::lower;
      } else {
        const Scalar at = v < lo_[s] ? lo_[s] : hi_[s];
        x_[s] = at;
        state_[s] = at == lo_[s] ? State::lower : State::upper;
        art_sign_[r] = v - at >= 0 ? Scalar(1) : Scalar(-1);
        hi_[art] = inf();
        x_[art] = std::abs(v - at);
        basis_[r] = art;
        state_[art] = State::basic;
        binv_(r, r) = art_sign_[r];
      }
    }
  }

  void compute_duals() {
    Vec cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
    pi_.noalias() = binv_.transpose() * cb;
  }

  // Recomputes basic values from the nonbasic ones and refactors the inverse
  // when the residual shows drift.
  void refresh_primal(bool force_refactor = false) {
    Vec rhs = d_.rhs.template cast<Scalar>();
    for (int j = 0; j < total_; ++j)
      if (state_[j] != State::basic && x_[j] != 0)
        for_column(j, [&](int r, Scalar a) { rhs[r] -= a * x_[j]; });
    Vec xb = binv_ * rhs;
    Vec check = Vec::Zero(m_);
    for (int i = 0; i < m_; ++i)
      for_column(basis_[i], [&](int r, Scalar a) { check[r] += a * xb[i]; });
    const Scalar err = m_ > 0 ? (check - rhs).cwiseAbs().maxCoeff() : Scalar(0);
    if (force_refactor || err > Scalar(1e-9) * Scalar(d_.rhs_scale)) {
      Mat b = Mat::Zero(m_, m_);
      for (int i = 0; i < m_; ++i)
        for_column(basis_[i], [&](int r, Scalar a) { b(r, i) = a; });
      binv_ = b.partialPivLu().inverse();
      xb = binv_ * rhs;
    }
    for (int i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
  }

  void drive_out_artificials() {
    for (int i = 0; i < m_; ++i) {
      const int bj = basis_[i];
      if (bj < n_ + m_) continue;
      const Vec rho = binv_.row(i).transpose();
      int best = -1;
      Scalar best_abs = Scalar(1e-7);
      for (int j = 0; j < n_ + m_; ++j) {
        if (state_[j] == State::basic) continue;
        Scalar a = 0;
        for_column(j, [&](int r, Scalar v) { a += rho[r] * v; });
        if (std::abs(a) > best_abs) {
          best_abs = std::abs(a);
          best = j;
        }
      }
      if (best < 0) continue;  // redundant row: artificial stays basic at 0
      Vec alpha = column_ftran(best);
      pivot(i, best, alpha);
      state_[bj] = State::lower;
      x_[bj] = 0;
    }
    for (int r = 0; r < m_; ++r) {
      lo_[n_ + m_ + r] = 0;
      hi_[n_ + m_ + r] = 0;
      if (state_[n_ + m_ + r] != State::basic) x_[n_ + m_ + r] = 0;
    }
    refresh_primal();
  }

  Vec column_ftran(int j) const {
    Vec alpha = Vec::Zero(m_);
    for_column(j, [&](int r, Scalar a) { alpha.noalias() += a * binv_.col(r); });
    return alpha;
  }

  void pivot(int r, int q, const Vec& alpha) {
    const Scalar ar = alpha[r];
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> row = binv_.row(r) / ar;
    binv_.noalias() -= alpha * row;
    binv_.row(r) = row;
    basis_[r] = q;
    state_[q] = State::basic;
  }

  LpOutcome iterate() {
    const long bland_after = 10L * (m_ + n_);
    long local = 0;
    Vec cb(m_);
    Vec d(total_);
    while (true) {
      if ((iterations_ & 15) == 0 && Clock::now() > deadline_) return LpOutcome::limit;
      if (local > 0 && local % 64 == 0) refresh_primal();
      const bool bland = local >= bland_after;
      for (int i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
      pi_.noalias() = binv_.transpose() * cb;

      int q = -1;
      int dir = 0;
      Scalar best = 0;
      for (int j = 0; j < total_; ++j) {
        const State s = state_[j];
        if (s == State::basic || lo_[j] == hi_[j]) continue;
        Scalar dj = cost_[j];
        for_column(j, [&](int r, Scalar a) { dj -= pi_[r] * a; });
        int dj_dir = 0;
        if ((s == State::lower || s == State::zero) && dj < -opt_tol()) dj_dir = 1;
        else if ((s == State::upper || s == State::zero) && dj > opt_tol()) dj_dir = -1;
        if (dj_dir == 0) continue;
        if (bland) {
          q = j;
          dir = dj_dir;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          q = j;
          dir = dj_dir;
        }
      }
      if (q < 0) return LpOutcome::optimal;

      const Vec alpha = column_ftran(q);
      // Harris two-pass ratio test (textbook pass in Bland mode).
      Scalar relaxed = inf();
      for (int i = 0; i < m_; ++i) {
        const Scalar delta = -dir * alpha[i];
        const int bj = basis_[i];
        if (delta < -piv_tol() && std::isfinite(static_cast<double>(lo_[bj])))
          relaxed = std::min(relaxed, (x_[bj] - lo_[bj] + (bland ? 0 : feas_tol())) / -delta);
        else if (delta > piv_tol() && std::isfinite(static_cast<double>(hi_[bj])))
          relaxed = std::min(relaxed, (hi_[bj] - x_[bj] + (bland ? 0 : feas_tol())) / delta);
      }
      int leave = -1;
      Scalar step = inf();
      Scalar leave_abs = 0;
      for (int i = 0; i < m_; ++i) {
        const Scalar delta = -dir * alpha[i];
        const int bj = basis_[i];
        Scalar ratio = inf();
        if (delta < -piv_tol() && std::isfinite(static_cast<double>(lo_[bj])))
          ratio = (x_[bj] - lo_[bj]) / -delta;
        else if (delta > piv_tol() && std::isfinite(static_cast<double>(hi_[bj])))
          ratio = (hi_[bj] - x_[bj]) / delta;
        else
          continue;
        ratio = std::max(ratio, Scalar(0));
        if (ratio > relaxed) continue;
        const bool better =
            bland ? (leave < 0 || ratio < step ||
                     (ratio == step && basis_[i] < basis_[leave]))
                  : std::abs(delta) > leave_abs;
        if (better) {
          leave = i;
          step = ratio;
          leave_abs = std::abs(delta);
        }
      }
      const Scalar flip = hi_[q] - lo_[q];
      const bool bounded_flip = std::isfinite(static_cast<double>(flip)) && flip <= step;
      if (leave < 0 && !bounded_flip) return LpOutcome::unbounded;
      if (bounded_flip) step = flip;

      for (int i = 0; i < m_; ++i) x_[basis_[i]] -= dir * alpha[i] * step;
      x_[q] += dir * step;
      ++iterations_;
      ++local;
      if (bounded_flip) {
        state_[q] = dir > 0 ? State::upper : State::lower;
        x_[q] = dir > 0 ? hi_[q] : lo_[q];
        continue;
      }
      const int out = basis_[leave];
      const Scalar delta = -dir * alpha[leave];
      if (delta < 0) {
        x_[out] = lo_[out];
        state_[out] = State::lower;
      } else {
        x_[out] = hi_[out];
        state_[out] = State::upper;
      }
      pivot(leave, q, alpha);
    }
  }

  Scalar reduced_cost(int j) const {
    Scalar dj = cost_[j];
    for_column(j, [&](int r, Scalar a) { dj -= pi_[r] * a; });
    return dj;
  }

  const LpData& d_;
  Clock::time_point deadline_;
  bool warm_ = false;
  int m_ = 0, n_ = 0, total_ = 0;
  Vec lo_, hi_, x_, cost_, pi_;
  std::vector<Scalar> art_sign_;
  std::vector<State> state_;
  std::vector<int> basis_;
  Mat binv_;
  long iterations_ = 0;
};

}  // namespace rdao::detail
