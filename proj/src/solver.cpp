#include <fmt/format.h>

#include "rdao/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <memory>
#include <fstream>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>

#include "simplex.hpp"

namespace rdao {

namespace {

using detail::Clock;
using detail::LpData;
using detail::LpOutcome;

// Dense basis inverse beyond this many rows would need gigabytes.
constexpr int kMaxDenseRows = 6000;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Clock::time_point deadline_after(double seconds) {
  const double capped = std::min(seconds, 1e7);
  return Clock::now() + std::chrono::duration_cast<Clock::duration>(
                            std::chrono::duration<double>(capped));
}

void check_size(const LinearModel& model) {
  if (model.num_constraints() > kMaxDenseRows)
    throw ConfigError(fmt::format(
        "model has {} rows; the built-in dense solver handles at most {} "
        "(set {} to delegate to an external solver)",
        model.num_constraints(), kMaxDenseRows, kExternalSolverEnv));
}

struct LpRun {
  LpOutcome outcome;
  VectorXd x;
  VectorXd duals;
  double objective = kInf;
  long iterations = 0;
};

LpRun run_lp(const LpData& data, const VectorXd& lo, const VectorXd& hi,
             Clock::time_point deadline) {
  detail::BoundedSimplex<double> lp(data, lo, hi, deadline);
  LpRun out;
  out.outcome = lp.solve();
  out.iterations = lp.iterations();
  if (out.outcome == LpOutcome::optimal) {
    out.x = lp.primal();
    out.duals = lp.duals();
    out.objective = data.cost.dot(out.x);
  }
  return out;
}

SolveStatus to_status(LpOutcome o) {
  switch (o) {
    case LpOutcome::optimal: return SolveStatus::optimal;
    case LpOutcome::infeasible: return SolveStatus::infeasible;
    case LpOutcome::unbounded: return SolveStatus::unbounded;
    case LpOutcome::limit: return SolveStatus::limit;
  }
  return SolveStatus::limit;
}

const char* external_command() {
  const char* cmd = std::getenv(kExternalSolverEnv);
  return (cmd != nullptr && *cmd != '\0') ? cmd : nullptr;
}

}  // namespace

void SolveOptions::validate() const {
  if (!(time_limit > 0.0)) throw ConfigError("time limit must be positive");
  if (!(rel_gap_target >= 0.0)) throw ConfigError("gap target must be nonnegative");
  if (node_limit && *node_limit < 1) throw ConfigError("node limit must be positive");
}

double relative_gap(double objective, double bound) {
  if (!std::isfinite(objective)) return kInf;
  if (!std::isfinite(bound)) return kInf;
  return std::max(0.0, objective - bound) / std::max(std::abs(objective), 1e-9);
}

std::string Violation::describe() const {
  if (row >= 0)
    return fmt::format("row {} ({}): slack {:.6g}, violation {:.6g}", row + 1,
                       name.empty() ? "unnamed" : name, slack, magnitude);
  return fmt::format("column {} ({}): {} by {:.6g}", col + 1,
                     name.empty() ? "unnamed" : name,
                     slack < 0 ? "outside bounds or not integral" : "ok", magnitude);
}

WarmStartRejected::WarmStartRejected(std::vector<Violation> v)
    : Error([&] {
        std::string msg = fmt::format("warm start rejected: {} violation(s)", v.size());
        for (std::size_t i = 0; i < std::min<std::size_t>(v.size(), 5); ++i)
          msg += "\n  " + v[i].describe();
        return msg;
      }()),
      violations_(std::move(v)) {}

std::vector<Violation> validate_assignment(const LinearModel& model,
                                           const VectorXd& x, double tol) {
  model.validate();
  if (x.size() != model.num_variables())
    throw ShapeError(fmt::format("assignment has {} entries, model has {} columns",
                                 x.size(), model.num_variables()));
  std::vector<Violation> out;
  const auto& vars = model.variables();
  for (int j = 0; j < model.num_variables(); ++j) {
    const Variable& v = vars[j];
    double viol = 0.0;
    if (!std::isfinite(x[j])) viol = kInf;
    else if (x[j] < v.lower) viol = v.lower - x[j];
    else if (x[j] > v.upper) viol = x[j] - v.upper;
    if (v.kind == VarKind::binary)
      viol = std::max(viol, std::abs(x[j] - std::round(x[j])));
    if (viol > tol) out.push_back({-1, j, v.name, -viol, viol});
  }
  const auto& rows = model.constraints();
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    const Constraint& c = rows[r];
    double lhs = 0.0;
    for (const Term& t : c.terms) lhs += t.coef * x[t.col];
    double slack = 0.0;
    switch (c.sense) {
      case Sense::less_equal: slack = c.rhs - lhs; break;
      case Sense::greater_equal: slack = lhs - c.rhs; break;
      case Sense::equal: slack = -std::abs(lhs - c.rhs); break;
    }
    const double scale = std::max(1.0, std::abs(c.rhs));
    if (!(slack >= -tol * scale)) out.push_back({r, -1, c.name, slack, -slack});
  }
  return out;
}

SolveResult solve_lp_builtin(const LinearModel& model, const SolveOptions& options) {
  options.validate();
  model.validate();
  if (model.num_binaries() > 0)
    throw ConfigError("solve_lp called on a model with binary variables");
  check_size(model);
  const auto t0 = Clock::now();
  const LpData data = LpData::from_model(model);
  const LpRun run = run_lp(data, data.lower, data.upper, deadline_after(options.time_limit));
  SolveResult res;
  res.report.status = to_status(run.outcome);
  res.report.iterations = run.iterations;
  res.report.nodes = 1;
  if (run.outcome == LpOutcome::optimal) {
    res.assignment = run.x;
    res.duals = run.duals;
    res.report.objective = run.objective;
    res.report.best_bound = run.objective;
    res.report.gap = 0.0;
    res.report.incumbents.push_back({seconds_since(t0), run.objective});
  }
  res.report.seconds = seconds_since(t0);
  return res;
}

namespace {

struct BoundChange {
  int col;
  double lower;
  double upper;
};

struct Node {
  double bound;
  long id;
  int depth;
  std::vector<BoundChange> changes;
  std::shared_ptr<const detail::Basis> basis;  // parent's optimal basis
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const LinearModel& model, const SolveOptions& options)
      : model_(model), opt_(options), data_(LpData::from_model(model)) {
    for (int j = 0; j < data_.n; ++j)
      if (model.variables()[j].kind == VarKind::binary) binaries_.push_back(j);
    if (!opt_.branch_priority.empty() &&
        static_cast<int>(opt_.branch_priority.size()) != data_.n)
      throw ConfigError("branch priority needs one entry per column");
  }

  SolveResult run() {
    t0_ = Clock::now();
    deadline_ = deadline_after(opt_.time_limit);
    if (opt_.warm_start) {
      auto v = validate_assignment(model_, *opt_.warm_start, 1e-6);
      if (!v.empty()) throw WarmStartRejected(std::move(v));
      VectorXd ws = *opt_.warm_start;
      for (int j : binaries_) ws[j] = std::round(ws[j]);
      accept(ws, data_.cost.dot(*opt_.warm_start), -kInf);
    }

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    open.push({-kInf, next_id_++, 0, {}, nullptr});
    bool limited = false;
    bool unbounded = false;
    std::optional<Node> dive;

    while (dive || !open.empty()) {
      if (Clock::now() > deadline_ || (opt_.node_limit && nodes_ >= *opt_.node_limit)) {
        limited = true;
        break;
      }
      Node node;
      const bool from_dive = dive.has_value();
      if (dive) {
        node = std::move(*dive);
        dive.reset();
      } else {
        node = open.top();
        open.pop();
      }
      if (pruned(node.bound)) continue;
      update_bound(open, node.bound);

      ++nodes_;
      const LpRun lp = solve_node(node, from_dive);
      if (lp.outcome == LpOutcome::limit) {
        limited = true;
        open.push(node);
        break;
      }
      if (lp.outcome == LpOutcome::infeasible) continue;
      if (lp.outcome == LpOutcome::unbounded) {
        unbounded = true;
        break;
      }
      if (pruned(lp.objective)) continue;

      int branch = -1;
      double best_frac = 2.0;
      int best_prio = std::numeric_limits<int>::min();
      for (int j : binaries_) {
        const double v = lp.x[j];
        const double frac = v - std::floor(v);
        if (frac <= opt_.integrality_tol || frac >= 1.0 - opt_.integrality_tol) continue;
        const double dist = std::abs(frac - 0.5);
        const int prio = priority(j);
        if (prio > best_prio || (prio == best_prio && dist < best_frac)) {
          best_prio = prio;
          best_frac = dist;
          branch = j;
        }
      }
      if (branch < 0) {
        VectorXd sol = lp.x;
        for (int j : binaries_) sol[j] = std::round(sol[j]);
        accept(sol, lp.objective, current_bound(open, lp.objective));
        continue;
      }
      auto basis = std::make_shared<const detail::Basis>(lp_->basis());
      Node down{lp.objective, next_id_++, node.depth + 1, node.changes, basis};
      down.changes.push_back({branch, 0.0, 0.0});
      Node up{lp.objective, next_id_++, node.depth + 1, node.changes, basis};
      up.changes.push_back({branch, 1.0, 1.0});
      const bool prefer_up = lp.x[branch] >= 0.5;
      open.push(prefer_up ? std::move(down) : std::move(up));
      dive = prefer_up ? std::move(up) : std::move(down);
    }

    SolveResult res;
    SolveReport& rep = res.report;
    rep.nodes = nodes_;
    rep.iterations = iterations_;
    rep.incumbents = incumbents_;
    rep.objective = best_obj_;
    if (unbounded && !has_incumbent()) {
      rep.status = SolveStatus::unbounded;
    } else if (limited || unbounded) {
      double b = best_obj_;
      if (dive) b = std::min(b, dive->bound);
      if (!open.empty()) b = std::min(b, open.top().bound);
      bound_ = std::max(bound_, std::min(b, best_obj_));
      rep.status = SolveStatus::limit;
    } else if (has_incumbent()) {
      bound_ = std::max(bound_, std::min(best_obj_, pruned_min_));
      rep.status = relative_gap(best_obj_, bound_) <= 1e-9 ? SolveStatus::optimal
                                                           : SolveStatus::feasible;
      if (rep.status == SolveStatus::optimal) bound_ = best_obj_;
    } else {
      rep.status = SolveStatus::infeasible;
    }
    rep.best_bound = bound_;
    rep.gap = has_incumbent() ? relative_gap(best_obj_, bound_) : kInf;
    if (has_incumbent()) res.assignment = best_x_;
    rep.seconds = seconds_since(t0_);
    return res;
  }

 private:
  bool has_incumbent() const { return std::isfinite(best_obj_); }

  int priority(int j) const {
    return opt_.branch_priority.empty() ? 0 : opt_.branch_priority[j];
  }

  // Node LP: re-optimize from the live simplex of the previous node (any
  // basis stays dual feasible after bound changes), falling back to the
  // parent's stored basis and finally to a cold start.
  LpRun solve_node(const Node& node, bool from_dive) {
    std::optional<LpOutcome> outcome;
    const long before = lp_ ? lp_->iterations() : 0;
    if (lp_ && (!from_dive || !node.changes.empty())) {
      if (from_dive) {
        const BoundChange& c = node.changes.back();
        lp_->set_bounds(c.col, c.lower, c.upper);
      } else {
        for (int j : binaries_) lp_->set_bounds(j, data_.lower[j], data_.upper[j]);
        for (const BoundChange& c : node.changes) lp_->set_bounds(c.col, c.lower, c.upper);
      }
      outcome = lp_->resolve();
      iterations_ += lp_->iterations() - before;
    }
    if (!outcome) {
      VectorXd lo = data_.lower, hi = data_.upper;
      for (const BoundChange& c : node.changes) {
        lo[c.col] = c.lower;
        hi[c.col] = c.upper;
      }
      if (node.basis) {
        lp_ = std::make_unique<detail::BoundedSimplex<double>>(data_, lo, hi, deadline_);
        lp_->load_basis(*node.basis);
        outcome = lp_->resolve();
        iterations_ += lp_->iterations();
      }
      if (!outcome) {
        lp_ = std::make_unique<detail::BoundedSimplex<double>>(data_, lo, hi, deadline_);
        outcome = lp_->solve();
        iterations_ += lp_->iterations();
      }
    }
    LpRun out;
    out.outcome = *outcome;
    if (out.outcome == LpOutcome::optimal) {
      out.x = lp_->primal();
      out.objective = data_.cost.dot(out.x);
    } else {
      lp_.reset();
    }
    return out;
  }

  // True when a subtree with this bound cannot improve the incumbent by more
  // than the tolerance; remembers the smallest such bound for the final gap.
  bool pruned(double bound) {
    if (!has_incumbent()) return false;
    const double tol = std::max(1e-9 * std::max(1.0, std::abs(best_obj_)),
                                opt_.rel_gap_target * std::abs(best_obj_));
    if (bound < best_obj_ - tol) return false;
    pruned_min_ = std::min(pruned_min_, bound);
    return true;
  }

  double current_bound(
      const std::priority_queue<Node, std::vector<Node>, NodeOrder>& open,
      double fallback) const {
    return open.empty() ? fallback : std::min(fallback, open.top().bound);
  }

  void update_bound(
      const std::priority_queue<Node, std::vector<Node>, NodeOrder>& open,
      double node_bound) {
    double b = node_bound;
    if (!open.empty()) b = std::min(b, open.top().bound);
    if (has_incumbent()) b = std::min(b, best_obj_);
    if (b > bound_) bound_ = b;
  }

  void accept(const VectorXd& x, double obj, double bound) {
    if (has_incumbent() && obj >= best_obj_) return;
    best_obj_ = obj;
    best_x_ = x;
    const double t = seconds_since(t0_);
    incumbents_.push_back({t, obj});
    if (bound > bound_) bound_ = std::min(bound, obj);
    if (opt_.log_incumbents && opt_.incumbent_log != nullptr)
      *opt_.incumbent_log << fmt::format("{:.6f}\t{:.17g}\t{:.17g}\t{:.6f}\n", t, obj,
                                         bound_, 100.0 * relative_gap(obj, bound_));
  }

  const LinearModel& model_;
  SolveOptions opt_;
  LpData data_;
  std::unique_ptr<detail::BoundedSimplex<double>> lp_;
  std::vector<int> binaries_;
  Clock::time_point t0_, deadline_;
  long nodes_ = 0, iterations_ = 0, next_id_ = 0;
  double best_obj_ = kInf;
  double bound_ = -kInf;
  double pruned_min_ = kInf;
  VectorXd best_x_;
  std::vector<Incumbent> incumbents_;
};

}  // namespace

SolveResult solve_mip_builtin(const LinearModel& model, const SolveOptions& options) {
  options.validate();
  model.validate();
  check_size(model);
  if (model.num_binaries() == 0 && !options.warm_start) return solve_lp_builtin(model, options);
  return BranchAndBound(model, options).run();
}

SolveResult solve_external(const LinearModel& model, const std::string& command,
                           const SolveOptions& options) {
  options.validate();
  namespace fs = std::filesystem;
  std::random_device rd;
  const fs::path dir = fs::temp_directory_path() /
                       fmt::format("rdao-ext-{:x}", (std::uint64_t(rd()) << 32) | rd());
  fs::create_directories(dir);
  const fs::path lp = dir / "model.lp", sol = dir / "solution.txt";
  {
    std::ofstream out(lp);
    write_lp(out, model);
  }
  const auto t0 = Clock::now();
  const std::string cmd = fmt::format("{} '{}' '{}'", command, lp.string(), sol.string());
  const int rc = std::system(cmd.c_str());
  SolveResult res;
  res.report.external = true;
  std::ifstream in(sol);
  if (rc != 0 || !in) {
    fs::remove_all(dir);
    throw StateError(fmt::format("external solver command failed (exit {})", rc));
  }
  std::string status;
  in >> status;
  if (status == "optimal") res.report.status = SolveStatus::optimal;
  else if (status == "feasible") res.report.status = SolveStatus::feasible;
  else if (status == "infeasible") res.report.status = SolveStatus::infeasible;
  else if (status == "unbounded") res.report.status = SolveStatus::unbounded;
  else if (status == "limit") res.report.status = SolveStatus::limit;
  else {
    fs::remove_all(dir);
    throw FormatError("external solver reported unknown status '" + status + "'");
  }
  double obj = kInf;
  if (in >> obj) {
    VectorXd x(model.num_variables());
    int j = 0;
    for (; j < x.size() && (in >> x[j]); ++j) {}
    if (j == x.size()) {
      res.assignment = x;
      res.report.objective = model.objective_value(x);
      res.report.best_bound = res.report.status == SolveStatus::optimal
                                  ? res.report.objective
                                  : -kInf;
      res.report.gap = relative_gap(res.report.objective, res.report.best_bound);
      res.report.incumbents.push_back({seconds_since(t0), res.report.objective});
    }
  }
  res.report.seconds = seconds_since(t0);
  fs::remove_all(dir);
  return res;
}

SolveResult solve_lp(const LinearModel& model, const SolveOptions& options) {
  if (const char* cmd = external_command()) {
    if (model.num_binaries() > 0)
      throw ConfigError("solve_lp called on a model with binary variables");
    return solve_external(model, cmd, options);
  }
  return solve_lp_builtin(model, options);
}

SolveResult solve_mip(const LinearModel& model, const SolveOptions& options) {
  if (const char* cmd = external_command()) {
    if (options.warm_start) {
      auto v = validate_assignment(model, *options.warm_start, 1e-6);
      if (!v.empty()) throw WarmStartRejected(std::move(v));
    }
    return solve_external(model, cmd, options);
  }
  return solve_mip_builtin(model, options);
}

}  // namespace rdao
