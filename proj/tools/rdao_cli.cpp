// rdao: command-line front end for phantom generation, model sizing, CPG
// planning, MIP solving and plan evaluation.

#include <fmt/format.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rdao/cpg.hpp"
#include "rdao/dataset.hpp"
#include "rdao/evaluate.hpp"

#ifndef RDAO_VERSION
#define RDAO_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace rdao;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kInfeasible = 4, kLimit = 5 };

class UsageError : public Error {
 public:
  using Error::Error;
};
class LimitError : public Error {
 public:
  using Error::Error;
};

struct ModelFlags {
  std::string variant = "rdao";
  double weight_target = 0.7;
  double weight_healthy = 0.3;
  double dev = 0.1;
  double alpha = 0.4;
  std::string symmetry = "auto";
  std::string allocation = "decision_based";
  std::optional<double> big_m;

  void add(CLI::App* c, bool with_alpha) {
    c->add_option("--variant", variant, "fmo, rfmo, dao, dao-c, rdao or rdao-c")
        ->capture_default_str();
    c->add_option("--weight-target", weight_target, "objective weight c_T")->capture_default_str();
    c->add_option("--weight-healthy", weight_healthy, "objective weight c_H")
        ->capture_default_str();
    c->add_option("--dev", dev, "symmetric deviation of the breathing proportions")
        ->capture_default_str();
    c->add_option("--symmetry", symmetry, "auto, none, global-sort, per-angle-sort, two-angle-sort")
        ->capture_default_str();
    c->add_option("--allocation", allocation, "decision-based or preallocated")
        ->capture_default_str();
    c->add_option("--big-m", big_m, "uniformity big-M (default: data-driven)");
    if (with_alpha)
      c->add_option("--alpha", alpha, "surrogate min-max weight")->capture_default_str();
  }

  PlanningConfig config(const BeamGeometry& g) const {
    PlanningConfig c;
    c.variant = parse_variant(variant);
    c.weight_target = weight_target;
    c.weight_healthy = weight_healthy;
    c.alpha = alpha;
    c.allocation = parse_allocation(allocation);
    c.symmetry = symmetry == "auto" ? default_symmetry(g, c.allocation) : parse_symmetry(symmetry);
    c.big_m = big_m;
    return c;
  }

  json snapshot(const PlanningConfig& c) const {
    json j = {{"variant", to_string(c.variant)},
              {"weight_target", c.weight_target},
              {"weight_healthy", c.weight_healthy},
              {"dev", dev},
              {"alpha", c.alpha},
              {"symmetry", to_string(c.symmetry)},
              {"allocation", to_string(c.allocation)}};
    if (c.big_m) j["big_m"] = *c.big_m;
    return j;
  }
};

struct DataFlags {
  std::string dir;
  int keep_every = 1;
  double healthy_cutoff = 0.0;

  void add(CLI::App* c) {
    c->add_option("--dataset", dir, "dataset directory")->required();
    c->add_option("--keep-every", keep_every, "keep every n-th target voxel")
        ->capture_default_str();
    c->add_option("--healthy-cutoff", healthy_cutoff,
                  "drop healthy voxels whose total dose coefficient is below this")
        ->capture_default_str();
  }
};

/// Loaded dataset plus the problem view over it.
struct Loaded {
  Dataset data;
  Problem problem;
  std::string checksum;
};

VectorXd nominal_of(const Dataset& d) {
  if (d.nominal_p) return *d.nominal_p;
  const Index n = d.dose.num_phases();
  if (n == 5) {
    VectorXd p(5);
    p << 0.125, 0.125, 0.125, 0.125, 0.5;
    return p;
  }
  return VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

std::unique_ptr<Loaded> load(const DataFlags& f, double dev) {
  auto out = std::make_unique<Loaded>();
  out->data = load_dataset(f.dir, {f.keep_every, f.healthy_cutoff});
  out->checksum = read_manifest(f.dir).checksum_hex();
  out->problem.dose = &out->data.dose;
  out->problem.structures = out->data.structures;
  out->problem.geometry = out->data.geometry;
  out->problem.uncertainty = UncertaintySet::symmetric(nominal_of(out->data), dev);
  return out;
}

std::ofstream open_out(const std::string& path) {
  if (path.empty()) throw UsageError("missing output path");
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw NotFoundError("cannot write " + path);
  return out;
}

void export_lp(const std::string& path, const LinearModel& model) {
  if (path.empty()) return;
  auto out = open_out(path);
  write_lp(out, model);
}

/// Run manifest bookkeeping shared by every command.
struct Run {
  std::string command;
  std::vector<std::string> argv;
  std::string manifest_path;
  json config = json::object();
  json outputs = json::array();
  std::optional<std::string> checksum;
  std::optional<std::uint64_t> seed;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const std::string& fallback) const {
    const std::string path = manifest_path.empty() ? fallback : manifest_path;
    json j = {{"command", command},   {"arguments", argv},
              {"config", config},     {"outputs", outputs},
              {"version", RDAO_VERSION},
              {"wall_time_s", std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                             start).count()}};
    j["dataset_checksum"] = checksum ? json(*checksum) : json(nullptr);
    j["seed"] = seed ? json(*seed) : json(nullptr);
    auto out = open_out(path);
    out << j.dump(2) << '\n';
  }
};

void write_fluence_maps(const std::string& dir, const VectorXd& w, const BeamGeometry& g,
                        bool log_scale, Run& run) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  for (int th = 0; th < g.num_angles; ++th) {
    const std::string base = fmt::format("{}/fluence_angle{}", dir, th + 1);
    {
      auto out = open_out(base + ".csv");
      write_fluence_csv(out, w, g, th);
    }
    std::ofstream pgm(base + ".pgm", std::ios::binary);
    if (!pgm) throw NotFoundError("cannot write " + base + ".pgm");
    write_fluence_pgm(pgm, w, g, th, log_scale);
    run.outputs.push_back(base + ".csv");
    run.outputs.push_back(base + ".pgm");
  }
}

// ---- phantom ---------------------------------------------------------------

struct PhantomCmd {
  std::string out;
  PhantomSpec spec;
  std::optional<int> rows, cols;
  bool adversarial = false;

  void add(CLI::App* c) {
    c->add_option("--out", out, "dataset directory to create")->required();
    c->add_option("--seed", spec.seed, "random seed")->capture_default_str();
    c->add_option("--angles", spec.geometry.num_angles, "beam angles")->default_val(2);
    c->add_option("--rows", rows, "beam rows per angle");
    c->add_option("--cols", cols, "beam columns per angle");
    c->add_option("--apertures", spec.geometry.num_apertures, "aperture budget")->default_val(6);
    c->add_option("--targets", spec.num_target_voxels, "target voxels")->capture_default_str();
    c->add_option("--healthy", spec.num_healthy_voxels, "healthy voxels")->capture_default_str();
    c->add_option("--phases", spec.num_phases, "breathing phases")->capture_default_str();
    c->add_option("--amplitude", spec.motion_amplitude, "motion amplitude (fraction of height)")
        ->capture_default_str();
    c->add_option("--prescription", spec.prescription, "target dose in Gy")
        ->capture_default_str();
    c->add_flag("--adversarial", adversarial,
                "use the pinned phantom on which nominal plans underdose");
  }

  int run(Run& r) {
    if (adversarial) {
      spec = adversarial_phantom_spec();
    } else {
      if (!rows || !cols) throw UsageError("phantom needs --rows and --cols (or --adversarial)");
      spec.geometry.num_rows = *rows;
      spec.geometry.num_cols = *cols;
    }
    const Dataset d = generate_phantom(spec);
    const DatasetManifest m = save_dataset(out, d);
    r.seed = spec.seed;
    r.checksum = m.checksum_hex();
    r.config = {{"angles", spec.geometry.num_angles},     {"rows", spec.geometry.num_rows},
                {"cols", spec.geometry.num_cols},         {"apertures", spec.geometry.num_apertures},
                {"targets", spec.num_target_voxels},      {"healthy", spec.num_healthy_voxels},
                {"phases", spec.num_phases},              {"amplitude", spec.motion_amplitude},
                {"prescription", spec.prescription}};
    r.outputs.push_back(out);
    std::cout << fmt::format("dataset = {}\nvoxels = {}\nbeamlets = {}\nphases = {}\nchecksum = {}\n",
                             out, m.num_voxels, m.geometry.num_beamlets(), m.num_phases,
                             m.checksum_hex());
    r.write((fs::path(out) / "run_manifest.json").string());
    return kOk;
  }
};

// ---- size ------------------------------------------------------------------

struct SizeCmd {
  std::string variant = "all";
  std::string patient, dataset;
  std::optional<int> angles, rows, cols, targets, phases, apertures;
  std::string symmetry = "auto", allocation = "decision_based";

  void add(CLI::App* c) {
    c->add_option("--variant", variant, "model variant or `all`")->capture_default_str();
    c->add_option("--patient", patient, "clinical geometry A-E")
        ->check(CLI::IsMember({"A", "B", "C", "D", "E"}));
    c->add_option("--dataset", dataset, "take dimensions from a dataset manifest");
    c->add_option("--angles", angles, "beam angles (default 2)");
    c->add_option("--rows", rows, "beam rows");
    c->add_option("--cols", cols, "beam columns");
    c->add_option("--targets", targets, "target voxels");
    c->add_option("--phases", phases, "breathing phases (default 5)");
    c->add_option("--apertures", apertures, "aperture budget (default 6)");
    c->add_option("--symmetry", symmetry, "symmetry mode")->capture_default_str();
    c->add_option("--allocation", allocation, "allocation mode")->capture_default_str();
  }

  int run(Run& r) {
    struct Dims {
      int rows, cols, targets;
    };
    static const std::map<std::string, Dims> kClinical = {{"A", {46, 26, 2296}},
                                                          {"B", {40, 19, 1050}},
                                                          {"C", {46, 23, 3168}},
                                                          {"D", {44, 22, 1779}},
                                                          {"E", {36, 25, 2190}}};
    BeamGeometry g{2, 0, 0, 6};
    int nt = 0, ni = 5;
    if (!patient.empty()) {
      const Dims& d = kClinical.at(patient);
      g.num_rows = d.rows;
      g.num_cols = d.cols;
      nt = d.targets;
    } else if (!dataset.empty()) {
      const DatasetManifest m = read_manifest(dataset);
      g = m.geometry;
      nt = m.num_targets;
      ni = m.num_phases;
      r.checksum = m.checksum_hex();
    } else {
      if (!rows || !cols || !targets)
        throw UsageError("size needs --patient, --dataset or --rows/--cols/--targets");
    }
    if (angles) g.num_angles = *angles;
    if (rows) g.num_rows = *rows;
    if (cols) g.num_cols = *cols;
    if (apertures) g.num_apertures = *apertures;
    if (targets) nt = *targets;
    if (phases) ni = *phases;
    g.validate();

    std::vector<Variant> list;
    if (variant == "all")
      list = {Variant::fmo, Variant::dao, Variant::dao_c,
              Variant::rfmo, Variant::rdao, Variant::rdao_c};
    else
      list = {parse_variant(variant)};
    PlanningConfig cfg;
    cfg.allocation = parse_allocation(allocation);
    cfg.symmetry =
        symmetry == "auto" ? default_symmetry(g, cfg.allocation) : parse_symmetry(symmetry);
    r.config = {{"angles", g.num_angles},   {"rows", g.num_rows},
                {"cols", g.num_cols},       {"apertures", g.num_apertures},
                {"targets", nt},            {"phases", ni},
                {"symmetry", to_string(cfg.symmetry)},
                {"allocation", to_string(cfg.allocation)}};
    if (!patient.empty()) r.config["patient"] = patient;
    for (Variant v : list) {
      cfg.variant = v;
      const SizeReport s = size_report(v, g, nt, ni, cfg);
      if (list.size() > 1) std::cout << "[" << to_string(v) << "]\n";
      std::cout << format_size_report(s);
      r.config["sizes"][to_string(v)] = {s.rows, s.variables, s.binaries};
    }
    r.write("rdao.size.run.json");
    return kOk;
  }
};

// ---- cpg -------------------------------------------------------------------

struct CpgCmd {
  DataFlags data;
  ModelFlags model;
  std::string out, report, fluence_dir, lp;
  bool log_scale = false;

  void add(CLI::App* c) {
    data.add(c);
    model.add(c, true);
    c->add_option("--out", out, "plan file to write")->required();
    c->add_option("--report", report, "bounds report (default: stdout only)");
    c->add_option("--fluence-dir", fluence_dir, "write per-angle fluence CSV and PGM here");
    c->add_flag("--log-scale", log_scale, "log10 scale for the PGM maps");
    c->add_option("--export-lp", lp, "write the step-one fluence model in LP format");
  }

  int run(Run& r) {
    auto in = load(data, model.dev);
    const PlanningConfig cfg = model.config(in->problem.geometry);
    r.checksum = in->checksum;
    r.config = model.snapshot(cfg);
    if (cfg.alpha == 0.0)
      std::cerr << "warning: alpha = 0 removes the min-max term; the surrogate is plain fluence "
                   "map optimization and the filled plan may be far from it\n";
    if (!lp.empty())
      export_lp(lp, is_robust(cfg.variant) ? build_rfmo(in->problem, cfg)
                                           : build_fmo(in->problem, cfg));
    const CpgResult res = run_cpg(in->problem, cfg);
    save_plan(out, res.plan);
    // Re-read the written plan and check it again.
    const FluencePlan back = load_plan(out);
    const auto issues = check_deliverability(back, has_continuity(cfg.variant));
    const std::string text = fmt::format(
        "z_lower = {:.10g}\nz_cpg = {:.10g}\ngap = {:.6g}\nsurrogate_objective = {:.10g}\n"
        "apertures_used = {}\ndeliverable = {}\n",
        res.z_lower, res.z_cpg, res.gap(), res.surrogate.objective, back.apertures_used(),
        issues.empty() ? "true" : "false");
    std::cout << text;
    for (const auto& i : issues) std::cerr << "issue: " << i.message << '\n';
    if (!report.empty()) {
      auto o = open_out(report);
      o << text;
      r.outputs.push_back(report);
    }
    write_fluence_maps(fluence_dir, back.aggregate_fluence(), back.geometry, log_scale, r);
    r.outputs.push_back(out);
    r.config["z_lower"] = res.z_lower;
    r.config["z_cpg"] = res.z_cpg;
    r.write(out + ".cpg.run.json");
    return issues.empty() ? kOk : kData;
  }
};

// ---- solve -----------------------------------------------------------------

struct SolveCmd {
  DataFlags data;
  ModelFlags model;
  std::string warm = "none", out, log, lp, fluence_dir;
  double time_limit = 3600.0, gap = 0.0;
  std::optional<long> node_limit;
  bool no_priority = false;

  void add(CLI::App* c) {
    data.add(c);
    model.add(c, true);
    c->add_option("--warm", warm, "warm start: none or cpg")
        ->check(CLI::IsMember({"none", "cpg"}))
        ->capture_default_str();
    c->add_option("--time-limit", time_limit, "seconds")->capture_default_str();
    c->add_option("--gap", gap, "relative gap target")->capture_default_str();
    c->add_option("--node-limit", node_limit, "branch-and-bound node limit");
    c->add_flag("--no-priority", no_priority, "branch on the most fractional binary only");
    c->add_option("--out", out, "plan file (DAO variants)");
    c->add_option("--fluence-dir", fluence_dir, "write per-angle fluence CSV and PGM here");
    c->add_option("--incumbent-log", log, "tab-separated incumbent log");
    c->add_option("--export-lp", lp, "write the assembled model in LP format");
  }

  int run(Run& r) {
    auto in = load(data, model.dev);
    PlanningConfig cfg = model.config(in->problem.geometry);
    r.checksum = in->checksum;
    const bool dao = is_dao(cfg.variant);
    if (dao && out.empty()) throw UsageError("DAO variants need --out for the plan");

    SolveOptions so;
    so.time_limit = time_limit;
    so.rel_gap_target = gap;
    so.node_limit = node_limit;
    std::ofstream log_file;
    if (!log.empty()) {
      log_file = open_out(log);
      so.log_incumbents = true;
      so.incumbent_log = &log_file;
      r.outputs.push_back(log);
    }

    std::optional<CpgResult> cpg;
    if (warm == "cpg") {
      if (!dao) throw UsageError("--warm cpg needs a DAO variant");
      cpg = run_cpg(in->problem, cfg);
      if (!cfg.big_m) cfg.big_m = covering_big_m(in->problem, cpg->plan);
    }
    const ModelInstance mi = assemble(cfg.variant, in->problem, cfg);
    r.config = model.snapshot(mi.config);
    r.config["warm"] = warm;
    r.config["time_limit"] = time_limit;
    export_lp(lp, mi.model);
    if (cpg) so.warm_start = generate_warm_start(cpg->plan, mi, in->problem);
    if (dao && !no_priority) so.branch_priority = branch_priorities(mi);

    const SolveResult res = dao ? solve_mip(mi.model, so) : solve_lp(mi.model, so);
    const SolveReport& rep = res.report;
    std::cout << fmt::format("status = {}\n", to_string(rep.status));
    if (cpg) std::cout << fmt::format("z_cpg = {:.10g}\n", cpg->z_cpg);
    if (!rep.has_solution()) {
      r.config["status"] = to_string(rep.status);
      r.write((out.empty() ? std::string("rdao") : out) + ".solve.run.json");
      if (rep.status == SolveStatus::infeasible) throw ModelInfeasibleError("model is infeasible");
      if (rep.status == SolveStatus::unbounded) throw StateError("model is unbounded");
      throw LimitError("limit reached without an incumbent");
    }
    std::cout << fmt::format(
        "objective = {:.10g}\nbest_bound = {:.10g}\ngap = {:.6g}\nnodes = {}\n"
        "iterations = {}\nseconds = {:.3f}\nincumbents = {}\n",
        rep.objective, rep.best_bound, rep.gap, rep.nodes, rep.iterations, rep.seconds,
        rep.incumbents.size());
    if (!rep.incumbents.empty())
      std::cout << fmt::format("first_incumbent = {:.10g}\n", rep.incumbents.front().objective);

    VectorXd fluence;
    if (dao) {
      const DecodedPlan dp = decode_plan(mi, res.assignment);
      save_plan(out, dp.plan);
      r.outputs.push_back(out);
      fluence = dp.plan.aggregate_fluence();
      const auto issues = check_deliverability(dp.plan, has_continuity(cfg.variant));
      std::cout << "deliverable = " << (issues.empty() ? "true" : "false") << '\n';
    } else {
      fluence = extract_fluence(mi.layout, rep.status, res.assignment);
    }
    write_fluence_maps(fluence_dir, fluence, in->problem.geometry, false, r);
    r.config["status"] = to_string(rep.status);
    r.config["objective"] = rep.objective;
    r.write((out.empty() ? std::string("rdao") : out) + ".solve.run.json");
    return kOk;
  }
};

// ---- evaluate --------------------------------------------------------------

VectorXd parse_vector(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("bad number in vector: '" + tok + "'");
    }
  }
  return Eigen::Map<VectorXd>(v.data(), static_cast<Index>(v.size()));
}

struct EvaluateCmd {
  DataFlags data;
  std::string plan_path, p_real, report, dvh_dir, normalized_out;
  double dev = 0.1;
  bool normalize = false, robust = false;

  void add(CLI::App* c) {
    data.add(c);
    c->add_option("--plan", plan_path, "plan file")->required();
    c->add_option("--p-real", p_real, "realized proportions, comma separated (default nominal)");
    c->add_option("--dev", dev, "deviation for the vertex check")->capture_default_str();
    c->add_flag("--normalize", normalize, "apply 95/95 normalization first");
    c->add_flag("--robust", robust,
                "robust plan: normalize to its own minimum dose and count underdosed vertices");
    c->add_option("--report", report, "report file (default: stdout only)");
    c->add_option("--dvh-dir", dvh_dir, "write one DVH CSV per structure here");
    c->add_option("--normalized-plan", normalized_out, "write the normalized plan");
  }

  int run(Run& r) {
    auto in = load(data, dev);
    r.checksum = in->checksum;
    FluencePlan plan = load_plan(plan_path);
    if (!(plan.geometry == in->problem.geometry))
      throw ShapeError("plan geometry does not match the dataset");
    for (const auto& i : check_deliverability(plan, false))
      std::cerr << "issue: " << i.message << '\n';
    const VectorXd nominal = in->problem.uncertainty.nominal();
    const VectorXd p = p_real.empty() ? nominal : parse_vector(p_real);
    if (p.size() != nominal.size())
      throw UsageError(fmt::format("--p-real needs {} entries", nominal.size()));
    double factor = 1.0;
    if (normalize) {
      const Normalization n =
          normalize_plan(plan, in->data.dose, in->data.structures, nominal, robust);
      plan = n.plan;
      factor = n.factor;
      if (!normalized_out.empty()) {
        save_plan(normalized_out, plan);
        r.outputs.push_back(normalized_out);
      }
    }
    EvaluationReport rep = evaluate_plan(plan, in->data.dose, in->data.structures, p);
    rep.normalization_factor = factor;
    if (robust)
      rep.vertex_underdose = count_vertex_underdose(plan, in->data.dose, in->data.structures,
                                                    in->problem.uncertainty);
    std::ostringstream text;
    write_report(text, rep);
    std::cout << text.str();
    if (!report.empty()) {
      auto o = open_out(report);
      o << text.str();
      r.outputs.push_back(report);
    }
    if (!dvh_dir.empty()) {
      fs::create_directories(dvh_dir);
      for (const DvhCurve& c : dvh(plan, in->data.dose, in->data.structures, p)) {
        const std::string path = fmt::format("{}/dvh_{}.csv", dvh_dir, c.structure());
        auto o = open_out(path);
        c.write_csv(o);
        r.outputs.push_back(path);
      }
    }
    r.config = {{"plan", plan_path}, {"p_real", std::vector<double>(p.data(), p.data() + p.size())},
                {"dev", dev},        {"normalize", normalize},
                {"robust", robust}};
    r.write((report.empty() ? plan_path : report) + ".evaluate.run.json");
    return kOk;
  }
};

int code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const InfeasibleSetError*>(&e))
    return kUsage;
  if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const CorruptionError*>(&e) ||
      dynamic_cast<const NotFoundError*>(&e) || dynamic_cast<const ShapeError*>(&e) ||
      dynamic_cast<const RangeError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e))
    return kData;
  if (dynamic_cast<const ModelInfeasibleError*>(&e) ||
      dynamic_cast<const WarmStartRejected*>(&e))
    return kInfeasible;
  if (dynamic_cast<const LimitError*>(&e)) return kLimit;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust direct aperture optimization for step-and-shoot IMRT"};
  app.set_version_flag("--version", RDAO_VERSION);
  app.require_subcommand(1);
  Run run;
  for (int i = 0; i < argc; ++i) run.argv.emplace_back(argv[i]);
  app.add_option("--manifest", run.manifest_path, "where to write the run manifest");

  PhantomCmd phantom;
  SizeCmd size;
  CpgCmd cpg;
  SolveCmd solve;
  EvaluateCmd evaluate;
  auto* c_phantom = app.add_subcommand("phantom", "generate a seeded synthetic dataset");
  auto* c_size = app.add_subcommand("size", "report model sizes");
  auto* c_cpg = app.add_subcommand("cpg", "run the candidate plan generation heuristic");
  auto* c_solve = app.add_subcommand("solve", "solve a fluence or aperture model");
  auto* c_eval = app.add_subcommand("evaluate", "score a plan");
  phantom.add(c_phantom);
  size.add(c_size);
  cpg.add(c_cpg);
  solve.add(c_solve);
  evaluate.add(c_eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (c_phantom->parsed()) return run.command = "phantom", phantom.run(run);
    if (c_size->parsed()) return run.command = "size", size.run(run);
    if (c_cpg->parsed()) return run.command = "cpg", cpg.run(run);
    if (c_solve->parsed()) return run.command = "solve", solve.run(run);
    if (c_eval->parsed()) return run.command = "evaluate", evaluate.run(run);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code_for(e);
  }
  return kUsage;
}
