#pragma once

// LP and MIP solving: a bounded-variable revised simplex and a
// branch-and-bound layer with warm starts, incumbent logging and limits.

#include <iosfwd>
#include <optional>
#include <vector>

#include "rdao/robust_lp.hpp"

namespace rdao {

struct SolveOptions {
  double time_limit = 3600.0;  // seconds, wall clock
  double rel_gap_target = 0.0;
  std::optional<VectorXd> warm_start;
  std::optional<long> node_limit;
  bool log_incumbents = false;
  /// Receives `time_s<TAB>objective<TAB>bound<TAB>gap` lines when
  /// log_incumbents is set.
  std::ostream* incumbent_log = nullptr;
  double feasibility_tol = 1e-7;
  double integrality_tol = 1e-6;
  /// Per-column branching priority (higher first; ties go to the most
  /// fractional). Empty means uniform.
  std::vector<int> branch_priority;

  /// Throws ConfigError when time_limit <= 0 or rel_gap_target < 0.
  void validate() const;
};

struct Incumbent {
  double time = 0.0;
  double objective = 0.0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::infeasible;
  double objective = kInf;   // z (incumbent)
  double best_bound = -kInf;
  /// (z - bound) / max(|z|, 1e-9) as a fraction; infinite without incumbent.
  double gap = kInf;
  std::vector<Incumbent> incumbents;
  long nodes = 0;
  long iterations = 0;
  double seconds = 0.0;
  bool external = false;

  bool has_solution() const {
    return status == SolveStatus::optimal || status == SolveStatus::feasible ||
           (status == SolveStatus::limit && !incumbents.empty());
  }
};

struct SolveResult {
  SolveReport report;
  VectorXd assignment;  // empty when no solution
  VectorXd duals;       // row duals for LPs solved to optimality
};

/// Name of the environment variable that switches to an external solver
/// command. It is invoked as `<cmd> <model.lp> <solution.txt>` and must write
/// the status on the first line, the objective on the second and one value
/// per column after that.
inline constexpr const char* kExternalSolverEnv = "RDAO_EXTERNAL_SOLVER";

/// Throws ConfigError if the model has binaries.
SolveResult solve_lp(const LinearModel& model, const SolveOptions& options = {});
/// Throws WarmStartRejected when options.warm_start violates the model.
SolveResult solve_mip(const LinearModel& model, const SolveOptions& options = {});

/// Built-in solvers, ignoring the external-solver switch.
SolveResult solve_lp_builtin(const LinearModel& model, const SolveOptions& options);
SolveResult solve_mip_builtin(const LinearModel& model, const SolveOptions& options);
/// Runs the configured external command on an LP export of the model.
SolveResult solve_external(const LinearModel& model, const std::string& command,
                           const SolveOptions& options);

struct Violation {
  int row = -1;  // -1: variable bound or integrality
  int col = -1;  // set for bound / integrality violations
  std::string name;
  double slack = 0.0;      // signed: negative means violated
  double magnitude = 0.0;  // |violation|
  std::string describe() const;
};

/// Every row, bound and integrality condition violated by more than `tol`
/// (absolute, scaled by max(1, |rhs|) for rows).
std::vector<Violation> validate_assignment(const LinearModel& model,
                                           const VectorXd& assignment,
                                           double tol = 1e-6);

class WarmStartRejected : public Error {
 public:
  explicit WarmStartRejected(std::vector<Violation> v);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// (z - bound) / max(|z|, 1e-9).
double relative_gap(double objective, double bound);

}  // namespace rdao
