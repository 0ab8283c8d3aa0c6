#include "tierprobe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "tierprobe/error.hpp"
#include "tierprobe/rng.hpp"

namespace tierprobe {

std::string_view synth_mode_name(SynthMode m) noexcept {
  return m == SynthMode::Linear ? "linear" : "curved";
}

SynthMode parse_synth_mode(std::string_view name) {
  if (name == "linear") return SynthMode::Linear;
  if (name == "curved") return SynthMode::Curved;
  throw UsageError("unknown synth mode '" + std::string(name) + "' (expected linear or curved)");
}

double tier_mean_energy(Tier t) noexcept { return (ordinal(t) - 3) * (5.0 / 3.0); }

std::pair<double, double> curved_coordinates(double energy) noexcept {
  const double radius = kEnergyMax / kCurvedHalfAngle;
  const double angle = energy / kEnergyMax * kCurvedHalfAngle;
  return {radius * std::sin(angle), radius * std::cos(angle)};
}

SynthData generate(const SynthConfig& cfg) {
  if (cfg.per_tier < 1) throw ValidationError("synth: per_tier must be >= 1");
  if (cfg.dim < 2) throw ValidationError("synth: dimension must be >= 2");
  if (cfg.mode == SynthMode::Curved && cfg.dim < 3) {
    throw ValidationError("synth: curved mode needs dimension >= 3");
  }
  if (!(cfg.signal >= 0.0) || !(cfg.noise >= 0.0) || !(cfg.jitter >= 0.0) || !(cfg.offset >= 0.0)) {
    throw ValidationError("synth: signal, noise, jitter and offset must be >= 0");
  }

  SynthData out;
  const std::size_t n = cfg.per_tier * kTierCount;
  out.corpus.source = "synth";
  out.corpus.records.reserve(n);
  out.embeddings.data = Matrix(n, cfg.dim);
  out.embeddings.model_name = "synth-" + std::string(synth_mode_name(cfg.mode));

  // Labels and noise come from separate streams so changing the noise level
  // does not move the energies.
  Rng label_rng(derive_seed(cfg.seed, 0));
  Rng noise_rng(derive_seed(cfg.seed, 1));
  std::size_t row = 0;
  for (std::size_t t = 0; t < kTierCount; ++t) {
    const Tier tier = static_cast<Tier>(t);
    for (std::size_t i = 0; i < cfg.per_tier; ++i, ++row) {
      char id[64];
      std::snprintf(id, sizeof(id), "synth-%04zu", row);
      const double jitter = cfg.jitter > 0.0 ? label_rng.uniform(-cfg.jitter, cfg.jitter) : 0.0;
      const double energy = std::clamp(tier_mean_energy(tier) + jitter, kEnergyMin, kEnergyMax);
      out.corpus.records.push_back({id, std::string("placeholder sentence ") + id, tier, energy});

      auto x = out.embeddings.data.row(row);
      for (double& v : x) v = cfg.noise * noise_rng.normal();
      if (cfg.mode == SynthMode::Linear) {
        x[0] += cfg.signal * energy;
      } else {
        const auto [along, across] = curved_coordinates(energy);
        x[0] += cfg.signal * along;
        x[2] += cfg.signal * across;
      }
      x[1] += cfg.offset;
      out.embeddings.row_ids.push_back(id);
    }
  }
  return out;
}

}  // namespace tierprobe
