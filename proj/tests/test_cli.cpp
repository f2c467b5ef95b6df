#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace rdao;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "rdao_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result cli(const std::string& args) {
  const std::string cmd =
      "cd '" + workdir().string() + "' && '" RDAO_CLI "' " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// key = value lines of a report.
std::map<std::string, std::string> keys(const std::string& text) {
  std::map<std::string, std::string> m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("phantom command") {
  const auto a = cli("phantom --out b7 --seed 7 --rows 5 --cols 4 --targets 10 --healthy 12");
  REQUIRE(a.code == 0);
  const auto b = cli("phantom --out b7again --seed 7 --rows 5 --cols 4 --targets 10 --healthy 12");
  CHECK(keys(a.out)["checksum"] == keys(b.out)["checksum"]);
  CHECK(keys(a.out)["beamlets"] == "40");
  CHECK(cli("phantom --out missing --seed 7").code == 2);
  CHECK(cli("phantom").code == 2);
  const auto manifest = nlohmann::json::parse(slurp(workdir() / "b7" / "run_manifest.json"));
  CHECK(manifest["command"] == "phantom");
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["dataset_checksum"] == keys(a.out)["checksum"]);
  CHECK(manifest.contains("wall_time_s"));
  CHECK(manifest.contains("version"));
}

TEST_CASE("size command") {
  const auto r = cli("size --patient B --variant dao");
  REQUIRE(r.code == 0);
  CHECK(r.out == "constraints = 54838\nvariables = 36498\nbinaries = 27372\n");
  CHECK(keys(cli("size --patient B --variant rdao-c").out)["constraints"] == "80248");
  CHECK(keys(cli("size --patient A --variant fmo").out)["binaries"] == "0");
  CHECK(cli("size --patient B --variant nope").code == 2);
  CHECK(cli("size --patient Z").code == 2);
  CHECK(cli("size").code == 2);
}

TEST_CASE("cpg, solve and evaluate pipeline") {
  REQUIRE(cli("phantom --out p3 --seed 3 --rows 4 --cols 4 --apertures 2 --targets 6 --healthy 8")
              .code == 0);
  const auto c = cli("cpg --dataset p3 --variant rdao --out cpg.txt --fluence-dir maps --log-scale");
  REQUIRE(c.code == 0);
  auto k = keys(c.out);
  CHECK(std::stod(k["z_cpg"]) >= std::stod(k["z_lower"]));
  CHECK(k.count("gap") == 1);
  CHECK(k["deliverable"] == "true");
  CHECK(fs::exists(workdir() / "maps" / "fluence_angle2.pgm"));
  CHECK(fs::exists(workdir() / "cpg.txt.cpg.run.json"));

  // Same flags, same bytes.
  REQUIRE(cli("cpg --dataset p3 --variant rdao --out cpg2.txt").code == 0);
  CHECK(slurp(workdir() / "cpg.txt") == slurp(workdir() / "cpg2.txt"));
  CHECK(cli("cpg --dataset p3 --variant rdao --alpha 0 --out cpg0.txt").code == 0);
  CHECK(cli("cpg --dataset p3 --alpha 1.5 --out bad.txt").code == 2);

  const auto s = cli("solve --dataset p3 --variant rdao --warm cpg --time-limit 3 --out sol.txt "
                     "--incumbent-log inc.tsv --export-lp model.lp");
  REQUIRE(s.code == 0);
  k = keys(s.out);
  CHECK(k["first_incumbent"] == k["z_cpg"]);
  CHECK(std::stod(k["objective"]) <= std::stod(k["z_cpg"]) + 1e-9);
  CHECK(slurp(workdir() / "model.lp").rfind("\\ ", 0) == 0);
  CHECK(slurp(workdir() / "inc.tsv").find('\t') != std::string::npos);

  const auto e = cli("evaluate --dataset p3 --plan sol.txt --p-real 0.025,0.025,0.125,0.225,0.6 "
                     "--normalize --dvh-dir dvh --report eval.txt");
  REQUIRE(e.code == 0);
  k = keys(e.out);
  CHECK(k.count("t_min") == 1);
  CHECK(k.count("normalization_factor") == 1);
  CHECK(fs::exists(workdir() / "dvh" / "dvh_target.csv"));
  CHECK(fs::exists(workdir() / "eval.txt.evaluate.run.json"));
  CHECK(cli("evaluate --dataset p3 --plan sol.txt --p-real 0.5,0.5").code == 2);
  CHECK(cli("evaluate --dataset p3 --plan nowhere.txt").code == 3);
}

TEST_CASE("solve without a warm start matches enumeration") {
  REQUIRE(cli("phantom --out tiny --seed 4 --rows 3 --cols 3 --apertures 2 --targets 4 "
              "--healthy 2 --amplitude 0.2")
              .code == 0);
  const auto r = cli("solve --dataset tiny --variant dao --big-m 2000 --out tiny.txt");
  REQUIRE(r.code == 0);
  auto k = keys(r.out);
  CHECK(k["status"] == "optimal");
  const Dataset d = load_dataset((workdir() / "tiny").string());
  VectorXd p = test::default_p();
  const auto bf = oracle::dao_bruteforce(d.dose, d.structures, d.geometry, p, {p}, 0.7, 0.3,
                                         2000.0, false);
  CHECK(std::stod(k["objective"]) == doctest::Approx(bf.objective).epsilon(1e-7));
}

TEST_CASE("error exit codes") {
  REQUIRE(cli("phantom --out broken --seed 5 --rows 3 --cols 3 --apertures 2 --targets 4 "
              "--healthy 4")
              .code == 0);
  {
    std::ofstream f(workdir() / "broken" / "dose.tensor", std::ios::app | std::ios::binary);
    f << "x";
  }
  CHECK(cli("cpg --dataset broken --out x.txt").code == 3);
  CHECK(cli("cpg --dataset nowhere --out x.txt").code == 3);
  // A node limit of one stops before any incumbent exists.
  CHECK(cli("solve --dataset p3 --variant rdao-c --node-limit 1 --out lim.txt").code == 5);
  CHECK(cli("solve --dataset p3 --variant dao --time-limit 0.5 --warm cpg --out t.txt").code == 0);
  CHECK(cli("solve --dataset p3 --variant dao --warm maybe --out t.txt").code == 2);
  // A prescription no beam can reach: every dose coefficient is zero.
  PhantomSpec spec;
  spec.seed = 1;
  spec.geometry = {2, 3, 3, 2};
  spec.num_target_voxels = 2;
  spec.num_healthy_voxels = 2;
  Dataset z = generate_phantom(spec);
  z.dose.values().setZero();
  save_dataset((workdir() / "zero").string(), z);
  CHECK(cli("solve --dataset zero --variant fmo").code == 4);
  CHECK(cli("cpg --dataset zero --out z.txt").code == 4);
}
