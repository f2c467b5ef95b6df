#include <fmt/format.h>

#include "rdao/linear_model.hpp"

#include <cmath>
#include <ostream>

namespace rdao {

int LinearModel::add_variable(std::string name, VarKind kind, double lower,
                              double upper) {
  if (kind == VarKind::binary) {
    ++num_binaries_;
    lower = std::max(lower, 0.0);
    upper = std::min(upper, 1.0);
  }
  variables_.push_back({std::move(name), kind, lower, upper});
  if (!structure_only_) {
    objective_.conservativeResize(static_cast<Index>(variables_.size()));
    objective_[objective_.size() - 1] = 0.0;
  }
  return static_cast<int>(variables_.size()) - 1;
}

int LinearModel::add_constraint(std::vector<Term> terms, Sense sense,
                                double rhs, std::string name) {
  if (!structure_only_)
    rows_.push_back({std::move(terms), sense, rhs, std::move(name)});
  return num_rows_++;
}

void LinearModel::add_objective(int col, double coef) {
  if (structure_only_) return;
  objective_[col] += coef;
}

void LinearModel::validate() const {
  if (structure_only_)
    throw StateError("structure-only model carries no coefficients");
  const int n = num_variables();
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    for (const Term& t : rows_[r].terms) {
      if (t.col < 0 || t.col >= n)
        throw FormatError(fmt::format("row {} references missing column {}", r,
                                      t.col));
      if (!std::isfinite(t.coef))
        throw FormatError(fmt::format("row {} has non-finite coefficient", r));
    }
    if (!std::isfinite(rows_[r].rhs))
      throw FormatError(fmt::format("row {} has non-finite rhs", r));
  }
  if (!objective_.allFinite())
    throw FormatError("objective has non-finite coefficients");
}

namespace {

std::string sanitize(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_';
    out.push_back(ok ? c : '_');
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::string number(double v) { return fmt::format("{:.17g}", v); }

void write_terms(std::ostream& out, const LinearModel& model,
                 const std::vector<Term>& terms) {
  if (terms.empty()) {
    out << " 0 " << lp_column_name(model, 0);
    return;
  }
  int on_line = 0;
  for (const Term& t : terms) {
    out << (t.coef < 0 ? " - " : " + ") << number(std::abs(t.coef)) << ' '
        << lp_column_name(model, t.col);
    if (++on_line % 8 == 0) out << "\n   ";
  }
}

}  // namespace

std::string lp_column_name(const LinearModel& model, int col) {
  const std::string s = sanitize(model.variables()[col].name);
  // Column index suffix keeps names unique after sanitizing.
  return s.empty() ? fmt::format("x{}", col) : fmt::format("{}_{}", s, col);
}

void write_lp(std::ostream& out, const LinearModel& model) {
  model.validate();
  out << "\\ " << model.num_variables() << " variables, "
      << model.num_constraints() << " constraints, " << model.num_binaries()
      << " binaries\n";
  out << "Minimize\n obj:";
  std::vector<Term> obj;
  for (int j = 0; j < model.num_variables(); ++j)
    if (model.objective()[j] != 0.0) obj.push_back({j, model.objective()[j]});
  write_terms(out, model, obj);
  out << "\nSubject To\n";
  const auto& rows = model.constraints();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string n = sanitize(rows[r].name);
    out << ' ' << (n.empty() ? fmt::format("c{}", r) : fmt::format("{}_{}", n, r))
        << ':';
    write_terms(out, model, rows[r].terms);
    switch (rows[r].sense) {
      case Sense::less_equal: out << " <= "; break;
      case Sense::equal: out << " = "; break;
      case Sense::greater_equal: out << " >= "; break;
    }
    out << number(rows[r].rhs) << '\n';
  }
  out << "Bounds\n";
  for (int j = 0; j < model.num_variables(); ++j) {
    const Variable& v = model.variables()[j];
    if (v.kind == VarKind::binary) continue;
    const std::string name = lp_column_name(model, j);
    const bool lo_inf = std::isinf(v.lower);
    const bool hi_inf = std::isinf(v.upper);
    if (lo_inf && hi_inf) {
      out << ' ' << name << " free\n";
    } else if (v.lower == v.upper) {
      out << ' ' << name << " = " << number(v.lower) << '\n';
    } else {
      out << ' ' << (lo_inf ? std::string("-inf") : number(v.lower)) << " <= "
          << name << " <= " << (hi_inf ? std::string("+inf") : number(v.upper))
          << '\n';
    }
  }
  if (model.num_binaries() > 0) {
    out << "Binaries\n";
    for (int j = 0; j < model.num_variables(); ++j)
      if (model.variables()[j].kind == VarKind::binary)
        out << ' ' << lp_column_name(model, j) << '\n';
  }
  out << "End\n";
}

std::string format_size_report(const SizeReport& s) {
  return fmt::format("constraints = {}\nvariables = {}\nbinaries = {}\n",
                     s.rows, s.variables, s.binaries);
}

}  // namespace rdao
