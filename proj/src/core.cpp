#include "rdao/core.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

namespace rdao {

void BeamGeometry::validate() const {
  if (num_angles < 1 || num_rows < 1 || num_cols < 1 || num_apertures < 1)
    throw ConfigError(fmt::format(
        "beam geometry counts must be >= 1 (angles={}, rows={}, cols={}, "
        "apertures={})",
        num_angles, num_rows, num_cols, num_apertures));
}

int beamlet_index(const BeamletCoord& c, const BeamGeometry& geom) {
  if (c.row < 1 || c.row > geom.num_rows)
    throw RangeError(
        fmt::format("row {} outside [1, {}]", c.row, geom.num_rows));
  if (c.col < 1 || c.col > geom.num_cols)
    throw RangeError(
        fmt::format("column {} outside [1, {}]", c.col, geom.num_cols));
  if (c.angle < 1 || c.angle > geom.num_angles)
    throw RangeError(
        fmt::format("angle {} outside [1, {}]", c.angle, geom.num_angles));
  return (c.angle - 1) * geom.beamlets_per_angle() +
         geom.num_cols * (c.row - 1) + c.col;
}

BeamletCoord beamlet_coord(int id, const BeamGeometry& geom) {
  if (id < 1 || id > geom.num_beamlets())
    throw RangeError(
        fmt::format("beamlet {} outside [1, {}]", id, geom.num_beamlets()));
  const int offset = id - 1;
  const int angle = offset / geom.beamlets_per_angle();
  const int local = offset % geom.beamlets_per_angle();
  return {local / geom.num_cols + 1, local % geom.num_cols + 1, angle + 1};
}

StructureSet StructureSet::uniform(std::vector<int> targets,
                                   std::vector<HealthyStructure> healthy,
                                   double dose_gy) {
  StructureSet s;
  s.prescription = VectorXd::Constant(static_cast<Index>(targets.size()),
                                      dose_gy);
  s.target_voxels = std::move(targets);
  s.healthy = std::move(healthy);
  return s;
}

std::size_t StructureSet::num_healthy_voxels() const {
  std::size_t n = 0;
  for (const auto& h : healthy) n += h.voxels.size();
  return n;
}

void StructureSet::validate(Index num_voxels) const {
  if (prescription.size() != static_cast<Index>(target_voxels.size()))
    throw ShapeError(fmt::format(
        "{} prescriptions for {} target voxels", prescription.size(),
        target_voxels.size()));
  std::vector<char> seen(static_cast<std::size_t>(num_voxels), 0);
  auto mark = [&](int v, const std::string& where) {
    if (v < 0 || v >= num_voxels)
      throw RangeError(fmt::format("voxel {} in {} outside [0, {})", v, where,
                                   num_voxels));
    if (seen[static_cast<std::size_t>(v)])
      throw ConfigError(
          fmt::format("voxel {} appears in more than one structure", v));
    seen[static_cast<std::size_t>(v)] = 1;
  };
  for (int v : target_voxels) mark(v, "target");
  for (const auto& h : healthy)
    for (int v : h.voxels) mark(v, h.name);
  for (Index t = 0; t < prescription.size(); ++t)
    if (!(prescription[t] > 0.0))
      throw ConfigError(fmt::format(
          "prescription for target voxel {} must be positive", target_voxels[t]));
}

// ---------------------------------------------------------------------------

UncertaintySet::UncertaintySet(VectorXd nominal, VectorXd lower_dev,
                               VectorXd upper_dev)
    : nominal_(std::move(nominal)),
      lower_dev_(std::move(lower_dev)),
      upper_dev_(std::move(upper_dev)) {
  const Index n = nominal_.size();
  if (n < 1) throw ConfigError("uncertainty set needs at least one phase");
  if (lower_dev_.size() != n || upper_dev_.size() != n)
    throw ShapeError("deviation vectors must match the nominal length");
  if ((nominal_.array() < 0.0).any() || (nominal_.array() > 1.0).any())
    throw ConfigError("nominal proportions must lie in [0, 1]");
  if (std::abs(nominal_.sum() - 1.0) > 1e-12)
    throw ConfigError(
        fmt::format("nominal proportions sum to {:.17g}, not 1", nominal_.sum()));
  if ((lower_dev_.array() < 0.0).any() || (upper_dev_.array() < 0.0).any())
    throw ConfigError("deviations must be nonnegative");
  if (lower().sum() > 1.0 + 1e-12 || upper().sum() < 1.0 - 1e-12)
    throw InfeasibleSetError("uncertainty set is empty");
}

UncertaintySet UncertaintySet::singleton(VectorXd nominal) {
  const Index n = nominal.size();
  return UncertaintySet(std::move(nominal), VectorXd::Zero(n),
                        VectorXd::Zero(n));
}

UncertaintySet UncertaintySet::symmetric(VectorXd nominal, double dev) {
  const Index n = nominal.size();
  return UncertaintySet(std::move(nominal), VectorXd::Constant(n, dev),
                        VectorXd::Constant(n, dev));
}

VectorXd UncertaintySet::lower() const {
  return (nominal_ - lower_dev_).cwiseMax(0.0);
}

VectorXd UncertaintySet::upper() const {
  return (nominal_ + upper_dev_).cwiseMin(1.0);
}

bool UncertaintySet::is_singleton() const {
  return (upper() - lower()).maxCoeff() <= 0.0;
}

bool UncertaintySet::contains(const VectorXd& p, double tol) const {
  if (p.size() != num_phases()) return false;
  if (std::abs(p.sum() - 1.0) > tol) return false;
  return ((p - lower()).array() >= -tol).all() &&
         ((upper() - p).array() >= -tol).all();
}

std::vector<VectorXd> UncertaintySet::vertices() const {
  // Every vertex of {lo <= p <= hi, 1'p = 1} has at most one coordinate
  // strictly between its bounds.
  const Index n = num_phases();
  const VectorXd lo = lower();
  const VectorXd hi = upper();
  std::vector<VectorXd> out;
  auto push_unique = [&](const VectorXd& p) {
    for (const auto& q : out)
      if ((q - p).cwiseAbs().maxCoeff() <= 1e-14) return;
    out.push_back(p);
  };
  const std::uint64_t patterns = std::uint64_t{1} << (n - 1);
  for (Index free = 0; free < n; ++free) {
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
      VectorXd p(n);
      double rest = 0.0;
      int bit = 0;
      for (Index i = 0; i < n; ++i) {
        if (i == free) continue;
        p[i] = ((mask >> bit) & 1U) ? hi[i] : lo[i];
        rest += p[i];
        ++bit;
      }
      p[free] = 1.0 - rest;
      if (p[free] >= lo[free] - 1e-13 && p[free] <= hi[free] + 1e-13) {
        p[free] = std::clamp(p[free], lo[free], hi[free]);
        push_unique(p);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

bool is_robust(Variant v) {
  return v == Variant::rfmo || v == Variant::rdao || v == Variant::rdao_c;
}

bool is_dao(Variant v) {
  return v != Variant::fmo && v != Variant::rfmo;
}

bool has_continuity(Variant v) {
  return v == Variant::dao_c || v == Variant::rdao_c;
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::fmo: return "FMO";
    case Variant::rfmo: return "RFMO";
    case Variant::dao: return "DAO";
    case Variant::dao_c: return "DAO-C";
    case Variant::rdao: return "RDAO";
    case Variant::rdao_c: return "RDAO-C";
  }
  return "?";
}

std::string to_string(Allocation a) {
  return a == Allocation::decision_based ? "decision-based" : "preallocated";
}

std::string to_string(Symmetry s) {
  switch (s) {
    case Symmetry::none: return "none";
    case Symmetry::global_sort: return "global-sort";
    case Symmetry::per_angle_sort: return "per-angle-sort";
    case Symmetry::two_angle_sort: return "two-angle-sort";
  }
  return "?";
}

namespace {

std::string normalized(std::string s) {
  for (char& c : s) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c == '_') c = '-';
  }
  return s;
}

}  // namespace

Variant parse_variant(const std::string& s) {
  const std::string n = normalized(s);
  for (Variant v : {Variant::fmo, Variant::rfmo, Variant::dao, Variant::dao_c,
                    Variant::rdao, Variant::rdao_c})
    if (normalized(to_string(v)) == n) return v;
  throw ConfigError("unknown model variant '" + s + "'");
}

Allocation parse_allocation(const std::string& s) {
  const std::string n = normalized(s);
  if (n == "decision-based" || n == "decision") return Allocation::decision_based;
  if (n == "preallocated") return Allocation::preallocated;
  throw ConfigError("unknown allocation mode '" + s + "'");
}

Symmetry parse_symmetry(const std::string& s) {
  const std::string n = normalized(s);
  for (Symmetry m : {Symmetry::none, Symmetry::global_sort,
                     Symmetry::per_angle_sort, Symmetry::two_angle_sort})
    if (to_string(m) == n) return m;
  throw ConfigError("unknown symmetry mode '" + s + "'");
}

Symmetry default_symmetry(const BeamGeometry& geom, Allocation allocation) {
  if (allocation == Allocation::preallocated) return Symmetry::per_angle_sort;
  return geom.num_angles == 2 ? Symmetry::two_angle_sort
                              : Symmetry::global_sort;
}

void PlanningConfig::validate(const BeamGeometry& geom) const {
  geom.validate();
  if (!(weight_target >= 0.0) || !(weight_healthy >= 0.0))
    throw ConfigError("objective weights must be nonnegative");
  if (big_m && !(*big_m > 0.0))
    throw ConfigError("big-M must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ConfigError(fmt::format("alpha {} outside [0, 1]", alpha));
  if (symmetry == Symmetry::two_angle_sort && geom.num_angles != 2)
    throw ConfigError("two-angle sort requires exactly two beam angles");
  if (symmetry == Symmetry::per_angle_sort &&
      allocation != Allocation::preallocated)
    throw ConfigError(
        "per-angle sort is incompatible with decision-based allocation");
  if (allocation == Allocation::preallocated) {
    const auto m = allocation_matrix(geom);
    if (static_cast<int>(m.size()) != geom.num_apertures)
      throw ConfigError("preallocation matrix needs one row per aperture");
    for (const auto& row : m) {
      if (static_cast<int>(row.size()) != geom.num_angles)
        throw ConfigError("preallocation matrix needs one column per angle");
      int sum = 0;
      for (int e : row) {
        if (e != 0 && e != 1)
          throw ConfigError("preallocation entries must be 0 or 1");
        sum += e;
      }
      if (sum != 1)
        throw ConfigError("each aperture must be preallocated to one angle");
    }
  }
}

std::vector<std::vector<int>> PlanningConfig::allocation_matrix(
    const BeamGeometry& geom) const {
  if (!preallocation.empty()) return preallocation;
  std::vector<std::vector<int>> m(
      static_cast<std::size_t>(geom.num_apertures),
      std::vector<int>(static_cast<std::size_t>(geom.num_angles), 0));
  const int per = std::max(1, geom.apertures_per_angle());
  for (int a = 0; a < geom.num_apertures; ++a)
    m[static_cast<std::size_t>(a)]
     [static_cast<std::size_t>(std::min(a / per, geom.num_angles - 1))] = 1;
  return m;
}

void Problem::validate() const {
  if (dose == nullptr) throw StateError("problem has no dose tensor");
  geometry.validate();
  if (dose->num_beamlets() != geometry.num_beamlets())
    throw ShapeError(fmt::format("dose tensor has {} beamlets, geometry has {}",
                                 dose->num_beamlets(), geometry.num_beamlets()));
  if (dose->num_phases() != uncertainty.num_phases())
    throw ShapeError(fmt::format(
        "dose tensor has {} phases, uncertainty set has {}",
        dose->num_phases(), uncertainty.num_phases()));
  structures.validate(dose->num_voxels());
}

VectorXd objective_weights(const StructureSet& s, Index num_voxels,
                           const PlanningConfig& config) {
  VectorXd w = VectorXd::Zero(num_voxels);
  if (!s.target_voxels.empty()) {
    const double c = config.weight_target /
                     static_cast<double>(s.target_voxels.size());
    for (int v : s.target_voxels) w[v] = c;
  }
  for (const auto& h : s.healthy) {
    if (h.voxels.empty()) continue;
    const double c =
        config.weight_healthy / static_cast<double>(h.voxels.size());
    for (int v : h.voxels) w[v] = c;
  }
  return w;
}

double dose_to_voxel(Index v, const VectorXd& fluence, const VectorXd& p,
                     const DoseTensord& dose) {
  if (fluence.size() != dose.num_beamlets() || p.size() != dose.num_phases())
    throw ShapeError(fmt::format(
        "fluence length {} / phase vector length {} do not match tensor "
        "({} beamlets, {} phases)",
        fluence.size(), p.size(), dose.num_beamlets(), dose.num_phases()));
  if (v < 0 || v >= dose.num_voxels())
    throw RangeError(fmt::format("voxel {} outside [0, {})", v, dose.num_voxels()));
  return p.dot(phase_doses(dose, v, fluence));
}

VectorXd worst_case_proportions(const VectorXd& phase_dose,
                                const UncertaintySet& u) {
  const Index n = u.num_phases();
  if (phase_dose.size() != n)
    throw ShapeError("phase dose length does not match uncertainty set");
  if (n <= 6) {
    const auto verts = u.vertices();
    if (verts.empty()) throw InfeasibleSetError("uncertainty set is empty");
    const VectorXd* best = &verts.front();
    double best_val = std::numeric_limits<double>::infinity();
    for (const auto& p : verts) {
      const double val = p.dot(phase_dose);
      if (val < best_val) {
        best_val = val;
        best = &p;
      }
    }
    return *best;
  }
  // Continuous knapsack: start at the lower bounds and hand the remaining
  // mass to the cheapest phases first.
  VectorXd p = u.lower();
  const VectorXd hi = u.upper();
  double remaining = 1.0 - p.sum();
  if (remaining < -1e-12 || hi.sum() < 1.0 - 1e-12)
    throw InfeasibleSetError("uncertainty set is empty");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return phase_dose[a] < phase_dose[b];
  });
  for (Index i : order) {
    if (remaining <= 0.0) break;
    const double add = std::min(remaining, hi[i] - p[i]);
    p[i] += add;
    remaining -= add;
  }
  return p;
}

double worst_case_dose(Index v, const VectorXd& fluence,
                       const UncertaintySet& u, const DoseTensord& dose) {
  if (fluence.size() != dose.num_beamlets() ||
      u.num_phases() != dose.num_phases())
    throw ShapeError("fluence or uncertainty set does not match tensor");
  if (v < 0 || v >= dose.num_voxels())
    throw RangeError(fmt::format("voxel {} outside [0, {})", v, dose.num_voxels()));
  const VectorXd d = phase_doses(dose, v, fluence);
  return worst_case_proportions(d, u).dot(d);
}

}  // namespace rdao
