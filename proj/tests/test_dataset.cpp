#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"

using namespace rdao;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rdao_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("phantoms are deterministic per seed") {
  const auto spec = test::small_spec(7, 5, 4, 2, 8, 10);
  const Dataset a = generate_phantom(spec), b = generate_phantom(spec);
  CHECK(a.dose == b.dose);
  auto other = spec;
  other.seed = 8;
  CHECK_FALSE(generate_phantom(other).dose == a.dose);
  CHECK(a.dose.num_voxels() == 18);
  CHECK(a.dose.num_beamlets() == 40);
  CHECK(a.structures.target_voxels.size() == 8);
  CHECK(a.structures.healthy.at(0).name == "healthy");
  CHECK_NOTHROW(a.dose.validate());
  // Every target voxel receives dose in every phase.
  for (int v : a.structures.target_voxels)
    for (int i = 0; i < 5; ++i) CHECK(a.dose.voxel(v).col(i).sum() > 0.0);
}

TEST_CASE("phantom spec validation") {
  PhantomSpec s;
  s.num_target_voxels = 0;
  CHECK_THROWS_AS(generate_phantom(s), ConfigError);
  s = PhantomSpec{};
  s.motion_amplitude = 2.0;
  CHECK_THROWS_AS(generate_phantom(s), ConfigError);
}

TEST_CASE("save and load round trip with identical checksums") {
  const Dataset d = generate_phantom(test::small_spec(7, 5, 4, 2, 8, 10));
  const auto dir1 = scratch("rt1"), dir2 = scratch("rt2");
  const auto m1 = save_dataset(dir1.string(), d);
  const auto m2 = save_dataset(dir2.string(), d);
  CHECK(m1.checksum == m2.checksum);
  CHECK(slurp(dir1 / "manifest.txt") == slurp(dir2 / "manifest.txt"));
  const Dataset back = load_dataset(dir1.string());
  CHECK(back.dose == d.dose);
  CHECK(back.geometry == d.geometry);
  CHECK(back.structures.target_voxels == d.structures.target_voxels);
  CHECK(back.structures.healthy.at(0).voxels == d.structures.healthy.at(0).voxels);
  CHECK(back.structures.prescription == d.structures.prescription);
  REQUIRE(back.nominal_p.has_value());
  CHECK(*back.nominal_p == *d.nominal_p);
  CHECK(back.extras.at("seed") == "7");
  const auto m = read_manifest(dir1.string());
  CHECK(m.checksum_hex().size() == 16);
}

TEST_CASE("load options subsample targets and prune healthy voxels") {
  const Dataset d = generate_phantom(test::small_spec(3, 5, 4, 2, 9, 12));
  const auto dir = scratch("opts");
  save_dataset(dir.string(), d);
  LoadOptions o;
  o.keep_every = 3;
  const Dataset sub = load_dataset(dir.string(), o);
  CHECK(sub.structures.target_voxels == std::vector<int>{0, 3, 6});
  CHECK(sub.structures.prescription.size() == 3);
  o = LoadOptions{};
  o.healthy_cutoff = 1e300;
  CHECK(load_dataset(dir.string(), o).structures.healthy.at(0).voxels.empty());
  o.keep_every = 0;
  CHECK_THROWS_AS(load_dataset(dir.string(), o), ConfigError);
}

TEST_CASE("corrupt datasets are rejected with the right error") {
  const Dataset d = generate_phantom(test::small_spec(3, 4, 4, 2, 5, 5));
  SUBCASE("missing directory") {
    CHECK_THROWS_AS(load_dataset(scratch("none").string()), NotFoundError);
  }
  SUBCASE("truncated tensor") {
    const auto dir = scratch("trunc");
    save_dataset(dir.string(), d);
    const auto t = dir / "dose.tensor";
    fs::resize_file(t, fs::file_size(t) - 8);
    CHECK_THROWS_AS(load_dataset(dir.string()), CorruptionError);
  }
  SUBCASE("flipped byte") {
    const auto dir = scratch("flip");
    save_dataset(dir.string(), d);
    std::string bytes = slurp(dir / "dose.tensor");
    bytes[bytes.size() / 2] ^= 0x10;
    std::ofstream(dir / "dose.tensor", std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_dataset(dir.string()), CorruptionError);
  }
  SUBCASE("manifest voxel count disagrees with the tensor") {
    const auto dir = scratch("vox");
    save_dataset(dir.string(), d);
    std::string text = slurp(dir / "manifest.txt");
    const auto pos = text.find("num_voxels = 10");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 15, "num_voxels = 11");
    std::ofstream(dir / "manifest.txt") << text;
    CHECK_THROWS_AS(load_dataset(dir.string()), FormatError);
  }
  SUBCASE("malformed manifest line") {
    const auto dir = scratch("bad");
    save_dataset(dir.string(), d);
    std::ofstream(dir / "manifest.txt", std::ios::app) << "no equals sign\n";
    CHECK_THROWS_AS(load_dataset(dir.string()), FormatError);
  }
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("", 0) == 14695981039346656037ull);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ull);
}
