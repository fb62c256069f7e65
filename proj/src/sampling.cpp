#include "dpl/sampling.hpp"

#include <numbers>

#include "dpl/error.hpp"
#include "dpl/rng.hpp"

namespace dpl {

void SamplingConfig::validate(std::size_t min_candidates) const {
  if (!(t_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "t_max must be positive");
  if (!(r_max > 0.0 && r_max < std::numbers::pi)) {
    throw Error(ErrorCode::InvalidArgument, "r_max must lie in (0, pi)");
  }
  if (n_candidates < min_candidates) {
    throw Error(ErrorCode::InvalidArgument, "n_candidates below the configured minimum");
  }
}

std::vector<CandidateOffset> sample_candidates(const SamplingConfig& cfg, std::size_t min_candidates) {
  cfg.validate(min_candidates);
  Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::Sampling)}));
  std::vector<CandidateOffset> out;
  out.reserve(cfg.n_candidates);
  if (cfg.include_estimate) out.push_back(CandidateOffset{});
  while (out.size() < cfg.n_candidates) {
    CandidateOffset off;
    for (int k = 0; k < 3; ++k) off.translation(k) = rng.uniform(-cfg.t_max, cfg.t_max);
    const double roll = rng.uniform(-cfg.r_max, cfg.r_max);
    const double pitch = rng.uniform(-cfg.r_max, cfg.r_max);
    const double yaw = rng.uniform(-cfg.r_max, cfg.r_max);
    off.rotation = quat_from_yaw_pitch_roll(yaw, pitch, roll);
    out.push_back(off);
  }
  return out;
}

Pose apply_offset(const Pose& estimate, const CandidateOffset& offset) {
  return Pose(estimate.position() + estimate.orientation() * offset.translation,
              estimate.orientation() * offset.rotation);
}

CandidateOffset inverse_offset(const CandidateOffset& offset) {
  const Quat inv = offset.rotation.conjugate();
  return CandidateOffset{-(inv * offset.translation), canonical(inv)};
}

}  // namespace dpl
