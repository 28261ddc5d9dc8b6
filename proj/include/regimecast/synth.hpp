#pragma once

#include <cstdint>

#include "regimecast/ingest.hpp"

namespace regimecast {

/// Configuration for the synthetic day-ahead market generator used by the
/// desk-scale pipeline runs and the recovery tests.
struct SynthConfig {
  Date start = make_date(2016, 1, 1);
  Index n_days = 1600;
  std::uint64_t seed = 1;
  /// Daily-mean price offsets of the three latent market states
  /// (calm / elevated / spike).
  Scalar regime_offsets[3] = {0.0, 25.0, 60.0};
};

/// Generate a deterministic synthetic market: residual load with seasonal,
/// weekly and intra-day structure; renewables with seasonal and daylight
/// structure; prices driven by residual load plus a sticky three-state
/// latent regime chain and noise (occasionally negative).
MarketTable generate_synthetic_market(const SynthConfig& config);

/// The latent regime path used by the generator for the same config; handy
/// for segmentation sanity checks.
IntVector synthetic_regime_path(const SynthConfig& config);

}  // namespace regimecast
