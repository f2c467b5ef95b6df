#include "rdao/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

namespace rdao {

static_assert(std::endian::native == std::endian::little,
              "the tensor format is little-endian; add byte swapping for this host");

namespace {

constexpr char kMagic[4] = {'R', 'D', 'T', '1'};
constexpr const char* kFormat = "rdao-dataset-1";
constexpr double kPi = 3.14159265358979323846;

// Uniform double in [0, 1) from the top 53 bits; portable across standard
// libraries, unlike std::uniform_real_distribution.
double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Point {
  double x, y, z;
};

std::string join(const VectorXd& v) {
  std::string s;
  for (Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt::format("{}", v[i]);
  return s;
}

VectorXd parse_reals(const std::string& key, const std::string& s) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw FormatError(fmt::format("manifest key '{}': bad number '{}'", key, item));
    }
  }
  return Eigen::Map<VectorXd>(vals.data(), static_cast<Index>(vals.size()));
}

int parse_int(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size() || v < 0 || v > (1L << 31) - 1) throw std::invalid_argument(s);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw FormatError(fmt::format("manifest key '{}': bad integer '{}'", key, s));
  }
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void PhantomSpec::validate() const {
  geometry.validate();
  if (num_target_voxels < 1) throw ConfigError("phantom needs at least one target voxel");
  if (num_healthy_voxels < 0) throw ConfigError("healthy voxel count must be nonnegative");
  if (num_phases < 1) throw ConfigError("phantom needs at least one phase");
  if (!(motion_amplitude >= 0.0 && motion_amplitude <= 1.0))
    throw ConfigError("motion amplitude must lie in [0, 1]");
  if (!(prescription > 0.0)) throw ConfigError("prescription must be positive");
}

Dataset generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const BeamGeometry& g = spec.geometry;
  std::mt19937_64 rng(spec.seed);
  const double nq = g.num_rows, nk = g.num_cols;
  // Target ellipsoid, slightly off-centre.
  const double az = std::max(0.5, 0.3 * nq), axy = std::max(0.5, 0.3 * nk);
  const Point centre{(unit(rng) - 0.5) * 0.1 * nk, (unit(rng) - 0.5) * 0.1 * nk,
                     (unit(rng) - 0.5) * 0.1 * nq};
  auto sample = [&](double r_lo, double r_hi) {
    while (true) {
      const double x = (2 * unit(rng) - 1) * r_hi, y = (2 * unit(rng) - 1) * r_hi,
                   z = (2 * unit(rng) - 1) * r_hi;
      const double r = std::sqrt(x * x + y * y + z * z);
      if (r >= r_lo && r <= r_hi)
        return Point{centre.x + x * axy, centre.y + y * axy, centre.z + z * az};
    }
  };
  std::vector<Point> pts;
  for (int i = 0; i < spec.num_target_voxels; ++i) pts.push_back(sample(0.0, 1.0));
  for (int i = 0; i < spec.num_healthy_voxels; ++i) pts.push_back(sample(1.15, 1.8));

  const int nv = static_cast<int>(pts.size());
  const int ni = spec.num_phases;
  Dataset out;
  out.geometry = g;
  out.dose = DoseTensord(nv, g.num_beamlets(), ni);
  const double sigma2 = 2.0 * 0.8 * 0.8;
  const double mu = 0.02;
  const double reach = 2.0 * std::max(nq, nk);
  for (int i = 0; i < ni; ++i) {
    const double shift =
        ni > 1 ? spec.motion_amplitude * nq * (double(i) / (ni - 1) - 0.5) : 0.0;
    for (int th = 0; th < g.num_angles; ++th) {
      const double phi = kPi * th / g.num_angles;
      const double c = std::cos(phi), s = std::sin(phi);
      for (int v = 0; v < nv; ++v) {
        const Point& p = pts[v];
        const double zr = p.z + shift;
        const double u = p.x * c + p.y * s;
        const double depth = -p.x * s + p.y * c + reach;
        const double atten = std::exp(-mu * depth);
        for (int q = 0; q < g.num_rows; ++q) {
          const double dz = zr - (q + 0.5 - nq / 2);
          for (int k = 0; k < g.num_cols; ++k) {
            const double du = u - (k + 0.5 - nk / 2);
            double d = atten * std::exp(-(dz * dz + du * du) / sigma2);
            if (d < 1e-8) d = 0.0;
            out.dose(v, g.beamlet(q, k, th), i) = d;
          }
        }
      }
    }
  }
  std::vector<int> targets(static_cast<std::size_t>(spec.num_target_voxels));
  for (int t = 0; t < spec.num_target_voxels; ++t) targets[t] = t;
  std::vector<HealthyStructure> healthy;
  if (spec.num_healthy_voxels > 0) {
    HealthyStructure h{"healthy", {}};
    for (int v = spec.num_target_voxels; v < nv; ++v) h.voxels.push_back(v);
    healthy.push_back(std::move(h));
  }
  out.structures = StructureSet::uniform(std::move(targets), std::move(healthy),
                                         spec.prescription);
  if (ni == 5) {
    VectorXd p(5);
    p << 0.125, 0.125, 0.125, 0.125, 0.5;
    out.nominal_p = p;
  }
  out.extras["seed"] = std::to_string(spec.seed);
  out.extras["motion_amplitude"] = fmt::format("{}", spec.motion_amplitude);
  return out;
}

PhantomSpec adversarial_phantom_spec() {
  PhantomSpec s;
  s.seed = 20240607;
  s.geometry = {2, 6, 5, 6};
  s.num_target_voxels = 16;
  s.num_healthy_voxels = 24;
  s.num_phases = 5;
  s.motion_amplitude = 0.4;
  return s;
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string DatasetManifest::checksum_hex() const {
  return fmt::format("{:016x}", checksum);
}

DatasetManifest save_dataset(const std::string& dir, const Dataset& data) {
  namespace fs = std::filesystem;
  data.geometry.validate();
  data.dose.validate();
  if (data.dose.num_beamlets() != data.geometry.num_beamlets())
    throw ShapeError("dose tensor beamlets do not match the geometry");
  data.structures.validate(data.dose.num_voxels());
  // Voxel ids must follow the targets-then-healthy convention.
  int expect = 0;
  for (int v : data.structures.target_voxels)
    if (v != expect++) throw FormatError("target voxels must be ids 0..n-1 in order");
  for (const auto& h : data.structures.healthy)
    for (int v : h.voxels)
      if (v != expect++)
        throw FormatError("healthy voxels must follow the targets in order");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw NotFoundError("cannot create dataset directory " + dir);

  DatasetManifest m;
  m.geometry = data.geometry;
  m.num_voxels = static_cast<int>(data.dose.num_voxels());
  m.num_targets = static_cast<int>(data.structures.target_voxels.size());
  for (const auto& h : data.structures.healthy)
    m.healthy.emplace_back(h.name, static_cast<int>(h.voxels.size()));
  m.num_phases = static_cast<int>(data.dose.num_phases());
  m.prescription = data.structures.prescription;
  m.nominal_p = data.nominal_p;
  m.extras = data.extras;

  std::string bytes(16 + sizeof(double) * static_cast<std::size_t>(data.dose.values().size()), '\0');
  std::memcpy(bytes.data(), kMagic, 4);
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(data.dose.num_voxels()),
                                 static_cast<std::uint32_t>(data.dose.num_beamlets()),
                                 static_cast<std::uint32_t>(data.dose.num_phases())};
  std::memcpy(bytes.data() + 4, dims, sizeof dims);
  std::memcpy(bytes.data() + 16, data.dose.data(), bytes.size() - 16);
  m.checksum = fnv1a64(bytes.data(), bytes.size());
  {
    std::ofstream out(fs::path(dir) / m.tensor_path, std::ios::binary);
    if (!out) throw NotFoundError("cannot write tensor file in " + dir);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }

  std::ofstream out(fs::path(dir) / "manifest.txt");
  if (!out) throw NotFoundError("cannot write manifest in " + dir);
  out << "format = " << kFormat << '\n';
  out << "num_angles = " << m.geometry.num_angles << '\n';
  out << "num_rows = " << m.geometry.num_rows << '\n';
  out << "num_cols = " << m.geometry.num_cols << '\n';
  out << "num_apertures = " << m.geometry.num_apertures << '\n';
  out << "num_voxels = " << m.num_voxels << '\n';
  out << "num_beamlets = " << m.geometry.num_beamlets() << '\n';
  out << "num_phases = " << m.num_phases << '\n';
  out << "num_targets = " << m.num_targets << '\n';
  out << "healthy = ";
  for (std::size_t i = 0; i < m.healthy.size(); ++i)
    out << (i ? "," : "") << m.healthy[i].first << ':' << m.healthy[i].second;
  out << '\n';
  const bool uniform = m.prescription.size() > 0 &&
                       (m.prescription.array() == m.prescription[0]).all();
  out << "prescription = "
      << (uniform ? fmt::format("{}", m.prescription[0]) : join(m.prescription)) << '\n';
  if (m.nominal_p) out << "nominal_p = " << join(*m.nominal_p) << '\n';
  for (const auto& [k, v] : m.extras) out << k << " = " << v << '\n';
  out << "tensor_path = " << m.tensor_path << '\n';
  out << "checksum = " << m.checksum_hex() << '\n';
  return m;
}

DatasetManifest read_manifest(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path path = fs::path(dir) / "manifest.txt";
  std::ifstream in(path);
  if (!in) throw NotFoundError("manifest not found: " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(fmt::format("manifest line {}: expected key = value", lineno));
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto take = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("manifest is missing key '" + key + "'");
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  DatasetManifest m;
  if (take("format") != kFormat) throw FormatError("unsupported dataset format");
  m.geometry.num_angles = parse_int("num_angles", take("num_angles"));
  m.geometry.num_rows = parse_int("num_rows", take("num_rows"));
  m.geometry.num_cols = parse_int("num_cols", take("num_cols"));
  m.geometry.num_apertures = parse_int("num_apertures", take("num_apertures"));
  try {
    m.geometry.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("manifest geometry: ") + e.what());
  }
  m.num_voxels = parse_int("num_voxels", take("num_voxels"));
  if (parse_int("num_beamlets", take("num_beamlets")) != m.geometry.num_beamlets())
    throw FormatError("num_beamlets disagrees with the beam geometry");
  m.num_phases = parse_int("num_phases", take("num_phases"));
  m.num_targets = parse_int("num_targets", take("num_targets"));
  const std::string healthy = take("healthy");
  std::stringstream hs(healthy);
  std::string item;
  int total = m.num_targets;
  while (std::getline(hs, item, ',')) {
    const auto colon = item.rfind(':');
    if (colon == std::string::npos || colon == 0)
      throw FormatError("healthy entries must be name:count");
    const int n = parse_int("healthy", item.substr(colon + 1));
    m.healthy.emplace_back(item.substr(0, colon), n);
    total += n;
  }
  if (total > m.num_voxels)
    throw FormatError("structure voxel counts exceed num_voxels");
  m.prescription = parse_reals("prescription", take("prescription"));
  if (m.prescription.size() == 1 && m.num_targets != 1)
    m.prescription = VectorXd::Constant(m.num_targets, m.prescription[0]);
  if (m.prescription.size() != m.num_targets)
    throw FormatError("prescription count does not match num_targets");
  if (kv.count("nominal_p")) {
    m.nominal_p = parse_reals("nominal_p", take("nominal_p"));
    if (m.nominal_p->size() != m.num_phases)
      throw FormatError("nominal_p length does not match num_phases");
  }
  m.tensor_path = take("tensor_path");
  const std::string sum = take("checksum");
  try {
    std::size_t used = 0;
    m.checksum = std::stoull(sum, &used, 16);
    if (used != sum.size()) throw std::invalid_argument(sum);
  } catch (const std::exception&) {
    throw FormatError("manifest checksum is not hexadecimal");
  }
  m.extras = kv;
  return m;
}

Dataset load_dataset(const std::string& dir, const LoadOptions& options) {
  namespace fs = std::filesystem;
  if (options.keep_every < 1) throw ConfigError("keep_every must be at least 1");
  if (!(options.healthy_cutoff >= 0.0)) throw ConfigError("healthy cutoff must be >= 0");
  const DatasetManifest m = read_manifest(dir);
  const fs::path tpath = fs::path(dir) / m.tensor_path;
  std::ifstream in(tpath, std::ios::binary);
  if (!in) throw NotFoundError("tensor file not found: " + tpath.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (fnv1a64(bytes.data(), bytes.size()) != m.checksum)
    throw CorruptionError("tensor checksum does not match the manifest");
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("tensor file has no valid header");
  std::uint32_t dims[3];
  std::memcpy(dims, bytes.data() + 4, sizeof dims);
  if (int(dims[0]) != m.num_voxels || int(dims[1]) != m.geometry.num_beamlets() ||
      int(dims[2]) != m.num_phases)
    throw FormatError(fmt::format(
        "tensor dims {}x{}x{} disagree with manifest {}x{}x{}", dims[0], dims[1],
        dims[2], m.num_voxels, m.geometry.num_beamlets(), m.num_phases));
  const std::size_t count = std::size_t(dims[0]) * dims[1] * dims[2];
  if (bytes.size() != 16 + count * sizeof(double))
    throw CorruptionError("tensor file length does not match its header");

  Dataset d;
  d.geometry = m.geometry;
  d.nominal_p = m.nominal_p;
  d.extras = m.extras;
  d.dose = DoseTensord(m.num_voxels, m.geometry.num_beamlets(), m.num_phases);
  std::memcpy(d.dose.data(), bytes.data() + 16, count * sizeof(double));
  d.dose.validate();

  std::vector<int> targets;
  std::vector<double> presc;
  for (int t = 0; t < m.num_targets; ++t)
    if (t % options.keep_every == 0) {
      targets.push_back(t);
      presc.push_back(m.prescription[t]);
    }
  d.structures.target_voxels = std::move(targets);
  d.structures.prescription =
      Eigen::Map<VectorXd>(presc.data(), static_cast<Index>(presc.size()));
  int next = m.num_targets;
  for (const auto& [name, n] : m.healthy) {
    HealthyStructure h{name, {}};
    for (int v = next; v < next + n; ++v)
      if (!(d.dose.values().row(v).sum() < options.healthy_cutoff)) h.voxels.push_back(v);
    next += n;
    d.structures.healthy.push_back(std::move(h));
  }
  d.structures.validate(d.dose.num_voxels());
  return d;
}

}  // namespace rdao
