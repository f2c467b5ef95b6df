#pragma once

// Seeded synthetic phantoms and the on-disk dataset format: `manifest.txt`
// (key = value lines) plus `dose.tensor` (16-byte header "RDT1" + uint32
// voxels, beamlets, phases; then little-endian float64 in [v][b][i] order).
// Voxel ids are ordered targets first, then each healthy structure in turn.

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "rdao/core.hpp"

namespace rdao {

struct PhantomSpec {
  std::uint64_t seed = 1;
  BeamGeometry geometry;
  int num_target_voxels = 20;
  int num_healthy_voxels = 40;
  int num_phases = 5;
  double motion_amplitude = 0.1;  // fraction of the grid height
  double prescription = 42.4;

  /// Throws ConfigError on invalid counts or amplitude.
  void validate() const;
};

struct Dataset {
  DoseTensord dose;
  StructureSet structures;
  BeamGeometry geometry;
  std::optional<VectorXd> nominal_p;
  std::map<std::string, std::string> extras;  // provenance (seed, amplitude)
};

/// Deterministic for a fixed spec. Targets fill an ellipsoid inside the beam
/// field; healthy voxels ("healthy") sit in a shell around it. Dose falls off
/// as a Gaussian of the beam's-eye-view distance to each beamlet centre and
/// attenuates with depth; phase i shifts the anatomy along the rows by
/// amplitude * |Q| * i / (|I| - 1).
Dataset generate_phantom(const PhantomSpec& spec);

/// Seed-pinned two-angle phantom on which a nominal plan underdoses under an
/// exhale-weighted breathing pattern.
PhantomSpec adversarial_phantom_spec();

struct DatasetManifest {
  BeamGeometry geometry;
  int num_voxels = 0;
  int num_targets = 0;
  std::vector<std::pair<std::string, int>> healthy;  // name, voxel count
  int num_phases = 0;
  VectorXd prescription;
  std::optional<VectorXd> nominal_p;
  std::string tensor_path = "dose.tensor";
  std::uint64_t checksum = 0;
  std::map<std::string, std::string> extras;

  std::string checksum_hex() const;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t seed = 14695981039346656037ull);

/// Writes manifest.txt and dose.tensor into `dir` (created if needed).
DatasetManifest save_dataset(const std::string& dir, const Dataset& data);

struct LoadOptions {
  int keep_every = 1;          // keep every n-th target voxel
  double healthy_cutoff = 0.0; // drop healthy voxels whose dose sum is below
};

/// Throws NotFoundError, FormatError or CorruptionError.
Dataset load_dataset(const std::string& dir, const LoadOptions& options = {});
DatasetManifest read_manifest(const std::string& dir);

}  // namespace rdao
