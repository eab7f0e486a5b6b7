#pragma once

// A controllable stand-in detector with a border-and-corner deficit:
//   p(d) = clamp(p0 - delta * kappa * exp(-d / lambda)),  d = min(dx, dy),
// where kappa only applies when both dx and dy are below lambda.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aniso/detector_protocol.hpp"
#include "aniso/error.hpp"
#include "aniso/image.hpp"
#include "aniso/rle.hpp"
#include "aniso/rng.hpp"

namespace aniso {

struct DegradationProfile {
  double p0 = 0.9;
  double delta = 0.3;
  double lambda = 30.0;  // decay length, pixels
  double kappa = 1.5;    // corner multiplier
  double label_accuracy = 1.0;
  double confidence_base = 0.95;
  double confidence_penalty = 0.3;
  double confidence_jitter = 0.02;
  int mask_noise_px = 1;  // erosion/dilation radius drawn from [-n, n]
  std::string wrong_label = "other";

  void validate() const {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(p0) || !unit(delta) || !unit(label_accuracy) || !unit(confidence_base) ||
        !unit(confidence_penalty) || !unit(confidence_jitter))
      fail(ErrorKind::InvalidInput, "mock profile probabilities must lie in [0,1]");
    if (!(lambda > 0.0)) fail(ErrorKind::InvalidInput, "mock profile lambda must be > 0");
    if (!(kappa >= 1.0)) fail(ErrorKind::InvalidInput, "mock profile kappa must be >= 1");
    if (mask_noise_px < 0) fail(ErrorKind::InvalidInput, "mock profile mask noise must be >= 0");
  }
};

inline double corner_factor(const DegradationProfile& p, int dx, int dy) {
  return (dx < p.lambda && dy < p.lambda) ? p.kappa : 1.0;
}

/// Closed-form detection probability at offset (dx, dy).
inline double detection_probability(const DegradationProfile& p, int dx, int dy) {
  const double d = std::min(dx, dy);
  const double v = p.p0 - p.delta * corner_factor(p, dx, dy) * std::exp(-d / p.lambda);
  return std::clamp(v, 0.0, 1.0);
}

/// Square (Chebyshev) dilation for radius > 0, erosion for radius < 0.
inline BinaryMask morph(const BinaryMask& m, int radius) {
  if (radius == 0) return m;
  const Box b = m.bounds();
  if (b.empty()) return m;
  const int r = std::abs(radius);
  const Box work = intersect(Box{b.x0 - r, b.y0 - r, b.x1 + r, b.y1 + r},
                             Box{0, 0, m.width(), m.height()});
  BinaryMask out(m.width(), m.height());
  for (int y = work.y0; y < work.y1; ++y) {
    for (int x = work.x0; x < work.x1; ++x) {
      bool any = false, all = true;
      for (int yy = y - r; yy <= y + r; ++yy)
        for (int xx = x - r; xx <= x + r; ++xx) {
          const bool v = xx >= 0 && yy >= 0 && xx < m.width() && yy < m.height() && m.at(xx, yy);
          any |= v;
          all &= v;
        }
      if (radius > 0 ? any : all) out.set(x, y);
    }
  }
  return out;
}

struct MockProbe {
  std::string probe_id;
  int dx = 0;
  int dy = 0;
};

/// Zero or one prediction, a pure function of (probe id, seed, profile, gt).
/// `gt_crop` is the ground-truth mask at crop resolution; `category` is the
/// collapsed label a correct prediction carries.
inline std::vector<PredictionRecord> mock_detect(const MockProbe& probe, const BinaryMask& gt_crop,
                                                 const std::string& category,
                                                 const DegradationProfile& profile,
                                                 std::uint64_t seed) {
  profile.validate();
  CounterRng rng(combine(hash_string(probe.probe_id), seed));
  const double u_detect = rng.uniform();
  const double u_label = rng.uniform();
  const double u_conf = rng.uniform();
  const int radius = profile.mask_noise_px == 0
                         ? 0
                         : static_cast<int>(rng.below(2 * profile.mask_noise_px + 1)) -
                               profile.mask_noise_px;

  if (!(u_detect < detection_probability(profile, probe.dx, probe.dy))) return {};

  const double fall = std::exp(-std::min(probe.dx, probe.dy) / profile.lambda);
  const double conf = std::clamp(profile.confidence_base -
                                     profile.confidence_penalty *
                                         corner_factor(profile, probe.dx, probe.dy) * fall +
                                     profile.confidence_jitter * (2.0 * u_conf - 1.0),
                                 0.0, 1.0);
  BinaryMask mask = morph(gt_crop, radius);
  if (mask.bounds().empty()) mask = gt_crop;

  PredictionRecord r;
  r.probe_id = probe.probe_id;
  r.label = u_label < profile.label_accuracy ? category : profile.wrong_label;
  r.confidence = conf;
  r.mask = rle_encode(mask);
  return {r};
}

inline nlohmann::json to_json(const DegradationProfile& p) {
  return {{"p0", p.p0},
          {"delta", p.delta},
          {"lambda", p.lambda},
          {"kappa", p.kappa},
          {"label_accuracy", p.label_accuracy},
          {"confidence_base", p.confidence_base},
          {"confidence_penalty", p.confidence_penalty},
          {"confidence_jitter", p.confidence_jitter},
          {"mask_noise_px", p.mask_noise_px},
          {"wrong_label", p.wrong_label}};
}

inline DegradationProfile profile_from_json(const nlohmann::json& j) {
  DegradationProfile p;
  p.p0 = j.value("p0", p.p0);
  p.delta = j.value("delta", p.delta);
  p.lambda = j.value("lambda", p.lambda);
  p.kappa = j.value("kappa", p.kappa);
  p.label_accuracy = j.value("label_accuracy", p.label_accuracy);
  p.confidence_base = j.value("confidence_base", p.confidence_base);
  p.confidence_penalty = j.value("confidence_penalty", p.confidence_penalty);
  p.confidence_jitter = j.value("confidence_jitter", p.confidence_jitter);
  p.mask_noise_px = j.value("mask_noise_px", p.mask_noise_px);
  p.wrong_label = j.value("wrong_label", p.wrong_label);
  return p;
}

}  // namespace aniso
