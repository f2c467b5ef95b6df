#include <fmt/format.h>

#include "rdao/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace rdao {

VectorXd voxel_doses(const VectorXd& fluence, const VectorXd& p,
                     const DoseTensord& dose) {
  if (fluence.size() != dose.num_beamlets() || p.size() != dose.num_phases())
    throw ShapeError("fluence or proportions do not match the dose tensor");
  VectorXd out(dose.num_voxels());
  for (Index v = 0; v < dose.num_voxels(); ++v)
    out[v] = fluence.dot(dose.voxel(v) * p);
  return out;
}

namespace {

int underdosed(const VectorXd& doses, const StructureSet& s) {
  int n = 0;
  for (std::size_t t = 0; t < s.target_voxels.size(); ++t)
    if (doses[s.target_voxels[t]] < s.prescription[static_cast<Index>(t)] - kUnderdoseTol)
      ++n;
  return n;
}

}  // namespace

EvaluationReport evaluate_plan(const FluencePlan& plan, const DoseTensord& dose,
                               const StructureSet& structures, const VectorXd& p_real) {
  structures.validate(dose.num_voxels());
  if (std::abs(p_real.sum() - 1.0) > 1e-9 || (p_real.array() < 0.0).any())
    throw ConfigError("realized proportions must form a probability vector");
  EvaluationReport r;
  r.realized_p = p_real;
  r.apertures_used = plan.apertures_used();
  const VectorXd d = voxel_doses(plan.aggregate_fluence(), p_real, dose);
  if (!structures.target_voxels.empty()) {
    r.t_min = std::numeric_limits<double>::infinity();
    r.t_max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (int v : structures.target_voxels) {
      r.t_min = std::min(r.t_min, d[v]);
      r.t_max = std::max(r.t_max, d[v]);
      sum += d[v];
    }
    r.t_ave = sum / static_cast<double>(structures.target_voxels.size());
    // The mean of floating-point sums can drift a hair outside [min, max].
    r.t_ave = std::clamp(r.t_ave, r.t_min, r.t_max);
  }
  double hsum = 0.0;
  std::size_t hcount = 0;
  for (const auto& h : structures.healthy) {
    StructureStats s{h.name, 0.0, 0.0};
    for (int v : h.voxels) {
      s.ave += d[v];
      s.max = std::max(s.max, d[v]);
    }
    hsum += s.ave;
    hcount += h.voxels.size();
    if (!h.voxels.empty()) s.ave /= static_cast<double>(h.voxels.size());
    r.h_max = std::max(r.h_max, s.max);
    r.healthy.push_back(std::move(s));
  }
  r.h_ave = hcount > 0 ? hsum / static_cast<double>(hcount) : 0.0;
  r.underdosed_voxels = underdosed(d, structures);
  r.underdose = r.underdosed_voxels > 0;
  return r;
}

int count_vertex_underdose(const FluencePlan& plan, const DoseTensord& dose,
                           const StructureSet& structures, const UncertaintySet& u) {
  const VectorXd w = plan.aggregate_fluence();
  int n = 0;
  for (const VectorXd& p : u.vertices())
    if (underdosed(voxel_doses(w, p, dose), structures) > 0) ++n;
  return n;
}

Normalization normalize_plan(const FluencePlan& plan, const DoseTensord& dose,
                             const StructureSet& structures, const VectorXd& p,
                             bool robust) {
  const auto& targets = structures.target_voxels;
  if (targets.empty()) throw StateError("cannot normalize without target voxels");
  const VectorXd d = voxel_doses(plan.aggregate_fluence(), p, dose);
  std::vector<double> td;
  for (int v : targets) td.push_back(d[v]);
  std::sort(td.begin(), td.end());
  Normalization out;
  out.reference = robust ? td.front() : structures.prescription.maxCoeff();
  const std::size_t idx =
      static_cast<std::size_t>(std::floor(0.05 * static_cast<double>(td.size() - 1)));
  const double d5 = td[idx];
  if (!(d5 > 0.0) || !(out.reference > 0.0))
    throw StateError("cannot normalize a plan that delivers no target dose");
  const double level = 0.95 * out.reference;
  double factor = level / d5;
  // Round-off in the rescaled plan may leave the binding voxel a few ulps
  // short of the level; nudge the factor up until it is reached.
  for (int tries = 0; tries < 64; ++tries) {
    out.plan = plan.scaled(factor);
    const VectorXd ds = voxel_doses(out.plan.aggregate_fluence(), p, dose);
    std::vector<double> ts;
    for (int v : targets) ts.push_back(ds[v]);
    std::nth_element(ts.begin(), ts.begin() + static_cast<std::ptrdiff_t>(idx), ts.end());
    const double got = ts[idx];
    if (got >= level) break;
    factor = std::max(std::nextafter(factor, std::numeric_limits<double>::infinity()),
                      factor * (level / got));
  }
  out.factor = factor;
  return out;
}

DvhCurve::DvhCurve(std::string structure, std::vector<double> doses)
    : structure_(std::move(structure)), doses_(std::move(doses)) {
  std::sort(doses_.begin(), doses_.end());
}

double DvhCurve::volume_fraction(double threshold) const {
  if (doses_.empty()) return 0.0;
  const auto it = std::lower_bound(doses_.begin(), doses_.end(), threshold);
  return static_cast<double>(doses_.end() - it) / static_cast<double>(doses_.size());
}

void DvhCurve::write_csv(std::ostream& out) const {
  out << "dose_gy,fraction\n";
  out << fmt::format("{:.6g},{:.6g}\n", 0.0, doses_.empty() ? 0.0 : volume_fraction(0.0));
  for (std::size_t i = 0; i < doses_.size(); ++i) {
    if (i > 0 && doses_[i] == doses_[i - 1]) continue;
    if (doses_[i] <= 0.0) continue;
    out << fmt::format("{:.6g},{:.6g}\n", doses_[i], volume_fraction(doses_[i]));
  }
}

std::vector<DvhCurve> dvh(const FluencePlan& plan, const DoseTensord& dose,
                          const StructureSet& structures, const VectorXd& p_real) {
  const VectorXd d = voxel_doses(plan.aggregate_fluence(), p_real, dose);
  std::vector<DvhCurve> out;
  auto collect = [&](const std::vector<int>& ids) {
    std::vector<double> v;
    v.reserve(ids.size());
    for (int id : ids) v.push_back(d[id]);
    return v;
  };
  out.emplace_back("target", collect(structures.target_voxels));
  for (const auto& h : structures.healthy) out.emplace_back(h.name, collect(h.voxels));
  return out;
}

void write_report(std::ostream& out, const EvaluationReport& r) {
  auto line = [&](const std::string& k, double v) {
    out << k << " = " << fmt::format("{:.6g}", v) << '\n';
  };
  line("t_min", r.t_min);
  line("t_ave", r.t_ave);
  line("t_max", r.t_max);
  line("h_ave", r.h_ave);
  line("h_max", r.h_max);
  for (const auto& h : r.healthy) {
    line("h_ave." + h.name, h.ave);
    line("h_max." + h.name, h.max);
  }
  out << "realized_p = ";
  for (Index i = 0; i < r.realized_p.size(); ++i)
    out << (i ? "," : "") << fmt::format("{:.6g}", r.realized_p[i]);
  out << '\n';
  line("normalization_factor", r.normalization_factor);
  out << "apertures_used = " << r.apertures_used << '\n';
  out << "underdose = " << (r.underdose ? "true" : "false") << '\n';
  out << "underdosed_voxels = " << r.underdosed_voxels << '\n';
  if (r.vertex_underdose >= 0)
    out << "vertex_underdose = " << r.vertex_underdose << '\n';
}

}  // namespace rdao
