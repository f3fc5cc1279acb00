#pragma once

// Batch re-derivation of the heartbeat detector from its definition. The
// baseline is recomputed at every sample as an explicit weighted mean over
// all earlier |W| (weight of W_j = prod of later decays), O(n^2).

#include <cmath>
#include <cstddef>
#include <vector>

#include "stagewire/pulse.hpp"

namespace support {

inline std::vector<double> oracle_detect(const std::vector<stagewire::pulse::PulseSample>& samples,
                                         const stagewire::pulse::DetectorConfig& c) {
  const auto w = static_cast<std::size_t>(std::lround(c.window_ms * c.sample_rate_hz / 1000.0));
  const double sign = c.invert ? -1.0 : 1.0;

  struct Delta {
    double t, value;
  };
  std::vector<Delta> deltas;
  std::vector<double> beats;
  for (std::size_t n = w; n < samples.size(); ++n) {
    double sum = 0;
    for (std::size_t i = n - w + 1; i <= n; ++i) sum += sign * (samples[i].value - samples[i - 1].value);
    const double t = samples[n].t_ms;

    if (!deltas.empty()) {
      double num = 0, den = 0;
      for (std::size_t j = 0; j < deltas.size(); ++j) {
        const double later = deltas.back().t - deltas[j].t;
        const double own = j == 0 ? 1.0 : 1.0 - std::exp2(-(deltas[j].t - deltas[j - 1].t) / c.baseline_halflife_ms);
        const double weight = own * std::exp2(-later / c.baseline_halflife_ms);
        num += weight * std::fabs(deltas[j].value);
        den += weight;
      }
      const double baseline = num / den;
      const bool refractory_ok = beats.empty() || t - beats.back() >= c.refractory_ms;
      if (sum > c.gain * baseline && sum > c.absolute_floor && t >= c.warmup_ms && refractory_ok) beats.push_back(t);
    }
    deltas.push_back({t, sum});
  }
  return beats;
}

struct MatchCount {
  std::size_t truth = 0;
  std::size_t matched = 0;
  std::size_t spurious = 0;

  std::size_t missed() const { return truth - matched; }
};

/// One-to-one matching of detections to true beats within +-tolerance_ms.
/// True beats before `from_ms` are not scored, and neither are detections
/// within tolerance of them.
inline MatchCount match_beats(const std::vector<double>& truth, const std::vector<double>& detected, double tolerance_ms,
                              double from_ms = 0) {
  MatchCount out;
  std::vector<bool> used(detected.size(), false);
  for (double tk : truth) {
    std::size_t best = detected.size();
    for (std::size_t i = 0; i < detected.size(); ++i) {
      if (used[i] || std::fabs(detected[i] - tk) > tolerance_ms) continue;
      if (best == detected.size() || std::fabs(detected[i] - tk) < std::fabs(detected[best] - tk)) best = i;
    }
    if (best != detected.size()) used[best] = true;
    if (tk < from_ms) continue;
    ++out.truth;
    if (best != detected.size()) ++out.matched;
  }
  for (bool u : used) out.spurious += u ? 0 : 1;
  return out;
}

}  // namespace support
