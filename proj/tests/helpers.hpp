#pragma once

#include <memory>

#include "rdao/cpg.hpp"
#include "rdao/dataset.hpp"
#include "rdao/evaluate.hpp"

namespace rdao::test {

inline VectorXd default_p() {
  VectorXd p(5);
  p << 0.125, 0.125, 0.125, 0.125, 0.5;
  return p;
}

/// Owns the dataset so that Problem::dose stays valid.
struct Instance {
  std::shared_ptr<Dataset> data;
  Problem problem;
};

inline Instance make_instance(const PhantomSpec& spec, double dev = 0.1) {
  Instance in;
  in.data = std::make_shared<Dataset>(generate_phantom(spec));
  in.problem.dose = &in.data->dose;
  in.problem.structures = in.data->structures;
  in.problem.geometry = in.data->geometry;
  const VectorXd p = in.data->nominal_p ? *in.data->nominal_p
                                        : VectorXd::Constant(spec.num_phases, 1.0 / spec.num_phases);
  in.problem.uncertainty = UncertaintySet::symmetric(p, dev);
  return in;
}

inline PhantomSpec small_spec(std::uint64_t seed, int rows = 4, int cols = 4,
                              int apertures = 2, int targets = 6, int healthy = 8) {
  PhantomSpec s;
  s.seed = seed;
  s.geometry = {2, rows, cols, apertures};
  s.num_target_voxels = targets;
  s.num_healthy_voxels = healthy;
  s.num_phases = 5;
  s.motion_amplitude = 0.2;
  return s;
}

inline PlanningConfig config_for(Variant v) {
  PlanningConfig c;
  c.variant = v;
  return c;
}

}  // namespace rdao::test
