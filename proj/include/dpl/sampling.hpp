#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "dpl/geometry.hpp"

namespace dpl {

struct CandidateOffset {
  Vec3 translation = Vec3::Zero();  // meters, in the state estimate frame
  Quat rotation = Quat::Identity();
};

struct SamplingConfig {
  double t_max = 1.0;                            // meters
  double r_max = 5.0 * std::numbers::pi / 180.0;  // radians
  std::size_t n_candidates = 24;
  std::uint64_t seed = 0;
  bool include_estimate = true;  // candidate 0 is the estimate itself

  // Throws InvalidArgument. `min_candidates` lets tests force degenerate sets.
  void validate(std::size_t min_candidates = 2) const;
};

// n_candidates offsets: translations uniform per axis in [-t_max, t_max],
// rotations from per-axis uniform angles in [-r_max, r_max] composed as
// yaw (z), pitch (y), roll (x). Deterministic in (seed, n_candidates).
std::vector<CandidateOffset> sample_candidates(const SamplingConfig& cfg,
                                               std::size_t min_candidates = 2);

// position = x + R t, orientation = q * r.
Pose apply_offset(const Pose& estimate, const CandidateOffset& offset);

// Offset that undoes `offset` when applied to apply_offset(estimate, offset).
CandidateOffset inverse_offset(const CandidateOffset& offset);

}  // namespace dpl
