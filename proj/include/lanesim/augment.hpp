#pragma once

#include <cmath>
#include <utility>

#include "lanesim/control_law.hpp"
#include "lanesim/errors.hpp"
#include "lanesim/math.hpp"
#include "lanesim/pose.hpp"
#include "lanesim/rng.hpp"
#include "lanesim/warp.hpp"

namespace lanesim {

/// Offset sampling ranges. Defaults: sigma 0.45 m / 5 deg, truncated at two
/// sigmas, which keeps both heavy warp artifacts and adjacent-lane confusion
/// out of reach.
struct AugmentConfig {
  double sigma_de = 0.45;               // meters
  double sigma_dtheta = deg2rad(5.0);   // radians
  double clip_de = 0.9;                 // meters
  double clip_dtheta = deg2rad(10.0);   // radians
  uint64_t seed = 0;

  void validate() const {
    if (!(sigma_de > 0.0 && sigma_dtheta > 0.0)) throw DomainError("augment: sigmas must be > 0");
    if (clip_de < 0.0 || clip_dtheta < 0.0) throw DomainError("augment: clips must be >= 0");
  }
};

/// Draw a zero-mean Gaussian pose offset, truncated to the clip box.
inline PoseOffset sample_offset(Rng& rng, const AugmentConfig& cfg) {
  cfg.validate();
  double de = rng.truncated_gaussian(cfg.sigma_de, cfg.clip_de);
  double dtheta = rng.truncated_gaussian(cfg.sigma_dtheta, cfg.clip_dtheta);
  return {de, dtheta};
}

/// Corrected steering-wheel label for a frame whose viewpoint was displaced by
/// `offset`. The correction applies the lateral control law with the tracking
/// error taken as reference minus actual, so a displacement to the left
/// (de > 0) produces a rightward (negative) correction:
///   label = delta_h + K_e(v) * (-de) + K_theta * (-dtheta)
/// clamped to the steering-wheel mechanical range.
inline double corrected_label(double delta_h, double v, const PoseOffset& offset,
                              const ControlGains& gains) {
  gains.validate();
  if (!offset.finite() || !std::isfinite(delta_h)) throw DomainError("corrected_label: non-finite input");
  if (!(v > kMinSpeed)) throw DomainError("corrected_label: speed must exceed v_min");
  double label = delta_h - gains.ke(v) * offset.de - gains.ktheta * offset.dtheta;
  return std::clamp(label, -kMaxSteeringWheel, kMaxSteeringWheel);
}

/// Warp the frame to the displaced viewpoint and correct its label, both from
/// the same offset.
inline std::pair<CylImage, double> augment_frame(const CylImage& frame, double delta_h, double v,
                                                 const PoseOffset& offset, const ControlGains& gains,
                                                 const WarpEnvelope& env = {}) {
  return {warp_offset(frame, offset, env), corrected_label(delta_h, v, offset, gains)};
}

}  // namespace lanesim
