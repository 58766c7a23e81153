#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "hom/errors.hpp"

namespace hom {

/// Estimation parameter vector (delta, alpha, sigma, gamma).
///
/// delta is the relative delay between the two arms (time), alpha the
/// visibility in [0,1], sigma the spectral width (1/time, > 0) and gamma the
/// per-photon loss probability in [0,1]. Every distribution built from these
/// is invariant under the joint rescaling delta -> delta/k, sigma -> k*sigma,
/// T -> T/k, so any consistent unit system works; the CLI defaults to
/// sigma = 1.
struct PhysicalParams {
  double delta = 0.0;
  double alpha = 1.0;
  double sigma = 1.0;
  double gamma = 0.0;
};

inline bool params_valid(const PhysicalParams& p) {
  return std::isfinite(p.delta) && std::isfinite(p.alpha) && p.alpha >= 0.0 &&
         p.alpha <= 1.0 && std::isfinite(p.sigma) && p.sigma > 0.0 &&
         std::isfinite(p.gamma) && p.gamma >= 0.0 && p.gamma <= 1.0;
}

inline void require_valid(const PhysicalParams& p) {
  if (!params_valid(p))
    throw DomainError(
        "invalid physical parameters: need finite delta, alpha in [0,1], "
        "sigma > 0, gamma in [0,1]");
}

/// Pump-frequency bookkeeping. The pump frequency enters the state only as a
/// global phase, so no probability or information computation reads it; it is
/// carried for provenance only.
struct SpectrumNote {
  std::optional<double> pump_frequency;
};

}  // namespace hom
