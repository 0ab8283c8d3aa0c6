#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>

#include "tierprobe/corpus.hpp"
#include "tierprobe/embedstore.hpp"

namespace tierprobe {

enum class SynthMode {
  Linear,  // signal coordinate = energy
  Curved,  // energy traced along a circular arc in the (e0, e2) plane
};

std::string_view synth_mode_name(SynthMode m) noexcept;
SynthMode parse_synth_mode(std::string_view name);

/// Planted-gradient generator settings.
///
/// Each record of tier t gets energy clamp(mu_t + U(-jitter, jitter), -5, 5)
/// with mu_t = (t - 3) * 5/3. Its embedding is
///   offset * e1 + signal * c(energy) + noise * N(0, I_d)
/// where c(energy) = energy * e0 in Linear mode. In Curved mode c places the
/// energy on a circular arc (see curved_coordinates): arc length per energy
/// unit matches the linear mode, but no single linear readout recovers the
/// energy, which is what separates the MLP probe from ridge.
///
/// The constant offset axis mimics the shared mean direction of real sentence
/// embeddings and keeps rows away from the origin, so L2 normalization leaves
/// the planted signal close to its raw geometry.
struct SynthConfig {
  std::size_t per_tier = 40;
  std::size_t dim = 64;
  double signal = 1.0;
  double noise = 0.1;
  double jitter = 0.3;
  double offset = 10.0;
  std::uint64_t seed = 0;
  SynthMode mode = SynthMode::Linear;
};

struct SynthData {
  Corpus corpus;
  EmbeddingMatrix embeddings;
};

/// Tier-mean energy on the symmetric ladder: -5, -10/3, ..., 5.
double tier_mean_energy(Tier t) noexcept;

/// Arc half-angle of the curved mode, in radians.
inline constexpr double kCurvedHalfAngle = 2.0943951023931953;  // 2*pi/3

/// (sin, cos) coordinates of `energy` on the curved-mode arc, scaled so that
/// one energy unit spans one unit of arc length.
std::pair<double, double> curved_coordinates(double energy) noexcept;

/// Deterministic in cfg. Output passes the corpus and embedding validators.
SynthData generate(const SynthConfig& cfg);

}  // namespace tierprobe
