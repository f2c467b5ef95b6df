#pragma once

// Sparse row-oriented description of a (mixed-integer) linear program:
// minimize c'x subject to rows a'x {<=,=,>=} rhs and lb <= x <= ub.

#include <fmt/format.h>

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "rdao/core.hpp"

namespace rdao {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { continuous, binary };
enum class Sense { less_equal, equal, greater_equal };

struct Variable {
  std::string name;
  VarKind kind = VarKind::continuous;
  double lower = 0.0;
  double upper = kInf;
};

struct Term {
  int col = 0;
  double coef = 0.0;
};

struct Constraint {
  std::vector<Term> terms;
  Sense sense = Sense::greater_equal;
  double rhs = 0.0;
  std::string name;
};

struct SizeReport {
  long rows = 0;
  long variables = 0;
  long binaries = 0;

  friend bool operator==(const SizeReport&, const SizeReport&) = default;
};

/// With `structure_only` set the model records variables and row counts but
/// drops coefficients and names; builders consult stores_terms() to skip the
/// work of generating them. Used for size reports of full-scale instances.
class LinearModel {
 public:
  explicit LinearModel(bool structure_only = false)
      : structure_only_(structure_only) {}

  bool stores_terms() const { return !structure_only_; }

  int add_variable(std::string name, VarKind kind, double lower, double upper);
  int add_constraint(std::vector<Term> terms, Sense sense, double rhs,
                     std::string name);
  /// Adds `coef` to the objective coefficient of `col`.
  void add_objective(int col, double coef);

  /// Formats a label only when terms are stored.
  template <typename... Args>
  std::string label(fmt::format_string<Args...> f, Args&&... args) const {
    if (structure_only_) return {};
    return fmt::format(f, std::forward<Args>(args)...);
  }

  int num_variables() const { return static_cast<int>(variables_.size()); }
  int num_constraints() const { return num_rows_; }
  int num_binaries() const { return num_binaries_; }
  SizeReport size() const {
    return {num_rows_, static_cast<long>(variables_.size()), num_binaries_};
  }

  const std::vector<Variable>& variables() const { return variables_; }
  std::vector<Variable>& variables() { return variables_; }
  const std::vector<Constraint>& constraints() const { return rows_; }
  const VectorXd& objective() const { return objective_; }

  double objective_value(const VectorXd& x) const { return objective_.dot(x); }

  /// Throws StateError on a structure-only model, FormatError if a row
  /// references a missing column or holds a non-finite coefficient.
  void validate() const;

 private:
  bool structure_only_ = false;
  int num_rows_ = 0;
  int num_binaries_ = 0;
  std::vector<Variable> variables_;
  std::vector<Constraint> rows_;
  VectorXd objective_;
};

/// Writes the model in CPLEX LP format (Minimize / Subject To / Bounds /
/// Binaries / End). Names are sanitized to [A-Za-z0-9_]; unnamed entities are
/// written as x<col> and c<row>.
void write_lp(std::ostream& out, const LinearModel& model);
/// Name under which write_lp emits column `col`.
std::string lp_column_name(const LinearModel& model, int col);

/// key = value text form of a size report.
std::string format_size_report(const SizeReport& s);

}  // namespace rdao
