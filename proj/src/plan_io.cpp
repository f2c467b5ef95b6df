#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "rdao/plan.hpp"

namespace rdao {

bool Aperture::empty() const {
  return std::none_of(rows.begin(), rows.end(),
                      [](const RowWindow& w) { return w.has_value(); });
}

int Aperture::open_beamlets() const {
  int n = 0;
  for (const auto& w : rows)
    if (w) n += w->second - w->first + 1;
  return n;
}

FluencePlan FluencePlan::empty(const BeamGeometry& geom) {
  FluencePlan p;
  p.geometry = geom;
  p.apertures.resize(static_cast<std::size_t>(geom.num_apertures));
  for (auto& a : p.apertures) a.rows.resize(static_cast<std::size_t>(geom.num_rows));
  return p;
}

VectorXd FluencePlan::aperture_fluence(int a) const {
  const Aperture& ap = apertures.at(static_cast<std::size_t>(a));
  VectorXd w = VectorXd::Zero(geometry.num_beamlets());
  for (int q = 0; q < static_cast<int>(ap.rows.size()); ++q) {
    if (!ap.rows[q]) continue;
    for (int k = ap.rows[q]->first; k <= ap.rows[q]->second; ++k)
      w[geometry.beamlet(q, k, ap.angle)] = ap.intensity;
  }
  return w;
}

VectorXd FluencePlan::aggregate_fluence() const {
  VectorXd w = VectorXd::Zero(geometry.num_beamlets());
  for (int a = 0; a < static_cast<int>(apertures.size()); ++a)
    w += aperture_fluence(a);
  return w;
}

double FluencePlan::aperture_total(int a) const {
  const Aperture& ap = apertures.at(static_cast<std::size_t>(a));
  return ap.intensity * ap.open_beamlets();
}

FluencePlan FluencePlan::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor))
    throw RangeError("plan scale factor must be positive and finite");
  FluencePlan p = *this;
  for (auto& a : p.apertures) a.intensity *= factor;
  return p;
}

int FluencePlan::apertures_used() const {
  return static_cast<int>(std::count_if(
      apertures.begin(), apertures.end(),
      [](const Aperture& a) { return !a.empty() && a.intensity > 0.0; }));
}

std::string to_string(IssueKind k) {
  switch (k) {
    case IssueKind::shape: return "shape";
    case IssueKind::angle: return "angle";
    case IssueKind::uniformity: return "uniformity";
    case IssueKind::island: return "island";
    case IssueKind::vertical: return "vertical";
    case IssueKind::horizontal: return "horizontal";
  }
  return "?";
}

namespace {

void check_continuity(const std::vector<RowWindow>& rows, int a,
                      std::vector<DeliverabilityIssue>& out) {
  int first_active = -1, last_active = -1;
  for (int q = 0; q < static_cast<int>(rows.size()); ++q)
    if (rows[q]) {
      if (first_active < 0) first_active = q;
      last_active = q;
    }
  if (first_active < 0) return;
  for (int q = first_active; q <= last_active; ++q)
    if (!rows[q])
      out.push_back({IssueKind::vertical, a, q,
                     fmt::format("aperture {}: row {} is closed inside the "
                                 "active block", a + 1, q + 1)});
  for (int q = first_active + 1; q <= last_active; ++q) {
    if (!rows[q] || !rows[q - 1]) continue;
    const int lo = std::max(rows[q]->first, rows[q - 1]->first);
    const int hi = std::min(rows[q]->second, rows[q - 1]->second);
    if (lo > hi)
      out.push_back({IssueKind::horizontal, a, q,
                     fmt::format("aperture {}: rows {} and {} share no column",
                                 a + 1, q, q + 1)});
  }
}

}  // namespace

std::vector<DeliverabilityIssue> check_deliverability(const FluencePlan& plan,
                                                      bool continuity) {
  std::vector<DeliverabilityIssue> out;
  const BeamGeometry& g = plan.geometry;
  if (static_cast<int>(plan.apertures.size()) != g.num_apertures)
    out.push_back({IssueKind::shape, -1, -1,
                   fmt::format("plan has {} apertures, geometry allows {}",
                               plan.apertures.size(), g.num_apertures)});
  for (int a = 0; a < static_cast<int>(plan.apertures.size()); ++a) {
    const Aperture& ap = plan.apertures[a];
    if (ap.angle < 0 || ap.angle >= g.num_angles)
      out.push_back({IssueKind::shape, a, -1,
                     fmt::format("aperture {}: angle {} out of range", a + 1,
                                 ap.angle + 1)});
    if (!std::isfinite(ap.intensity) || ap.intensity < 0.0)
      out.push_back({IssueKind::shape, a, -1,
                     fmt::format("aperture {}: invalid intensity {}", a + 1,
                                 ap.intensity)});
    if (static_cast<int>(ap.rows.size()) != g.num_rows) {
      out.push_back({IssueKind::shape, a, -1,
                     fmt::format("aperture {}: {} row records for {} rows",
                                 a + 1, ap.rows.size(), g.num_rows)});
      continue;
    }
    bool windows_ok = true;
    for (int q = 0; q < g.num_rows; ++q) {
      const auto& w = ap.rows[q];
      if (w && !(0 <= w->first && w->first <= w->second && w->second < g.num_cols)) {
        windows_ok = false;
        out.push_back({IssueKind::shape, a, q,
                       fmt::format("aperture {}: row {} window [{}, {}] invalid",
                                   a + 1, q + 1, w->first + 1, w->second + 1)});
      }
    }
    if (continuity && windows_ok) check_continuity(ap.rows, a, out);
  }
  return out;
}

std::vector<DeliverabilityIssue> check_intensity_maps(
    const std::vector<VectorXd>& maps, const BeamGeometry& g, bool continuity,
    double tol) {
  std::vector<DeliverabilityIssue> out;
  const int per = g.beamlets_per_angle();
  for (int a = 0; a < static_cast<int>(maps.size()); ++a) {
    const VectorXd& w = maps[a];
    if (w.size() != g.num_beamlets()) {
      out.push_back({IssueKind::shape, a, -1,
                     fmt::format("aperture {}: map has {} entries", a + 1, w.size())});
      continue;
    }
    if ((w.array() < -tol).any() || !w.allFinite())
      out.push_back({IssueKind::shape, a, -1,
                     fmt::format("aperture {}: negative or non-finite intensity",
                                 a + 1)});
    std::vector<int> angles;
    double ref = -1.0;
    bool uniform = true;
    for (int b = 0; b < w.size(); ++b) {
      if (w[b] <= tol) continue;
      const int th = b / per;
      if (angles.empty() || angles.back() != th) angles.push_back(th);
      if (ref < 0) ref = w[b];
      else if (std::abs(w[b] - ref) > tol * std::max(1.0, ref)) uniform = false;
    }
    if (angles.size() > 1)
      out.push_back({IssueKind::angle, a, -1,
                     fmt::format("aperture {}: intensity on {} angles", a + 1,
                                 angles.size())});
    if (!uniform)
      out.push_back({IssueKind::uniformity, a, -1,
                     fmt::format("aperture {}: open beamlets differ in intensity",
                                 a + 1)});
    for (int th : angles) {
      std::vector<RowWindow> rows(static_cast<std::size_t>(g.num_rows));
      for (int q = 0; q < g.num_rows; ++q) {
        int first = -1, last = -1, count = 0;
        for (int k = 0; k < g.num_cols; ++k)
          if (w[g.beamlet(q, k, th)] > tol) {
            if (first < 0) first = k;
            last = k;
            ++count;
          }
        if (first < 0) continue;
        rows[q] = std::make_pair(first, last);
        if (count != last - first + 1)
          out.push_back({IssueKind::island, a, q,
                         fmt::format("aperture {}: row {} of angle {} has a gap",
                                     a + 1, q + 1, th + 1)});
      }
      if (continuity) check_continuity(rows, a, out);
    }
  }
  return out;
}

void write_plan(std::ostream& out, const FluencePlan& plan) {
  const BeamGeometry& g = plan.geometry;
  out << g.num_angles << ' ' << g.num_rows << ' ' << g.num_cols << ' '
      << plan.apertures.size() << '\n';
  for (const Aperture& ap : plan.apertures) {
    out << ap.angle + 1 << ' ' << fmt::format("{}", ap.intensity) << '\n';
    for (const auto& w : ap.rows) {
      if (w) out << w->first + 1 << ' ' << w->second + 1 << '\n';
      else out << "- -\n";
    }
  }
}

FluencePlan read_plan(std::istream& in) {
  FluencePlan plan;
  BeamGeometry& g = plan.geometry;
  std::size_t n = 0;
  if (!(in >> g.num_angles >> g.num_rows >> g.num_cols >> n))
    throw FormatError("plan header must be `angles rows cols apertures`");
  g.num_apertures = static_cast<int>(n);
  try {
    g.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("plan header: ") + e.what());
  }
  for (std::size_t a = 0; a < n; ++a) {
    Aperture ap;
    std::string intensity;
    if (!(in >> ap.angle >> intensity))
      throw FormatError(fmt::format("aperture {}: missing `angle intensity`", a + 1));
    try {
      std::size_t used = 0;
      ap.intensity = std::stod(intensity, &used);
      if (used != intensity.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError(fmt::format("aperture {}: bad intensity '{}'", a + 1, intensity));
    }
    if (ap.angle < 1 || ap.angle > g.num_angles)
      throw FormatError(fmt::format("aperture {}: angle {} out of range", a + 1, ap.angle));
    --ap.angle;
    for (int q = 0; q < g.num_rows; ++q) {
      std::string s1, s2;
      if (!(in >> s1 >> s2))
        throw FormatError(fmt::format("aperture {}: missing row {}", a + 1, q + 1));
      if (s1 == "-" && s2 == "-") {
        ap.rows.emplace_back();
        continue;
      }
      int first = 0, last = 0;
      try {
        first = std::stoi(s1);
        last = std::stoi(s2);
      } catch (const std::exception&) {
        throw FormatError(fmt::format("aperture {}: bad row {} window", a + 1, q + 1));
      }
      if (first < 1 || first > last || last > g.num_cols)
        throw FormatError(fmt::format("aperture {}: row {} window [{}, {}] invalid",
                                      a + 1, q + 1, first, last));
      ap.rows.emplace_back(std::make_pair(first - 1, last - 1));
    }
    plan.apertures.push_back(std::move(ap));
  }
  std::string extra;
  if (in >> extra) throw FormatError("trailing content after the last aperture");
  return plan;
}

void save_plan(const std::string& path, const FluencePlan& plan) {
  std::ofstream out(path);
  if (!out) throw NotFoundError("cannot write plan file " + path);
  write_plan(out, plan);
}

FluencePlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("plan file not found: " + path);
  return read_plan(in);
}

void write_fluence_csv(std::ostream& out, const VectorXd& fluence,
                       const BeamGeometry& g, int angle) {
  if (fluence.size() != g.num_beamlets())
    throw ShapeError("fluence length does not match the geometry");
  for (int q = 0; q < g.num_rows; ++q) {
    for (int k = 0; k < g.num_cols; ++k) {
      if (k) out << ',';
      out << fmt::format("{}", fluence[g.beamlet(q, k, angle)]);
    }
    out << '\n';
  }
}

void write_fluence_pgm(std::ostream& out, const VectorXd& fluence,
                       const BeamGeometry& g, int angle, bool log_scale) {
  if (fluence.size() != g.num_beamlets())
    throw ShapeError("fluence length does not match the geometry");
  auto level = [&](double v) {
    v = std::max(0.0, v);
    return log_scale ? std::log10(1.0 + v) : v;
  };
  double top = 0.0;
  for (int b = angle * g.beamlets_per_angle();
       b < (angle + 1) * g.beamlets_per_angle(); ++b)
    top = std::max(top, level(fluence[b]));
  out << "P5\n" << g.num_cols << ' ' << g.num_rows << "\n255\n";
  for (int q = 0; q < g.num_rows; ++q)
    for (int k = 0; k < g.num_cols; ++k) {
      const double v = level(fluence[g.beamlet(q, k, angle)]);
      const int px = top > 0.0 ? static_cast<int>(std::lround(255.0 * v / top)) : 0;
      out.put(static_cast<char>(static_cast<unsigned char>(px)));
    }
}

}  // namespace rdao
