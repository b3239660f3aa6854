#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cilforge/clip.hpp"
#include "cilforge/errors.hpp"

namespace cilforge {

// Cumulative inter-frame motion energy of a clip. energies[n] is the L1
// distance between frames n+1 and n raised to gamma; cumulative[i] is the
// mass accumulated before frame i, normalized so the last entry is 1. A clip
// with zero total motion is flagged degenerate and the cumulative values are
// meaningless.
struct MotionProfile {
  std::vector<double> energies;    // size frames-1
  double total = 0.0;
  std::vector<double> cumulative;  // size frames, cumulative[0] = 0
  bool degenerate = false;
};

inline MotionProfile motion_profile(const Clip& clip, double gamma) {
  if (clip.frame_count() < 1) throw ConfigError("motion_profile: empty clip");
  if (!(gamma > 0.0) || gamma > 1.0)
    throw ConfigError("gamma: must lie in (0, 1]");
  MotionProfile prof;
  int frames = clip.frame_count();
  prof.energies.resize(frames > 0 ? frames - 1 : 0);
  for (int n = 0; n + 1 < frames; ++n) {
    double l1 = 0.0;
    const auto& a = clip.frames[n];
    const auto& b = clip.frames[n + 1];
    for (std::size_t i = 0; i < a.size(); ++i) l1 += std::abs(b[i] - a[i]);
    prof.energies[n] = std::pow(l1, gamma);
    prof.total += prof.energies[n];
  }
  prof.cumulative.resize(frames, 0.0);
  if (prof.total > 0.0) {
    double acc = 0.0;
    for (int i = 1; i < frames; ++i) {
      acc += prof.energies[i - 1];
      prof.cumulative[i] = acc / prof.total;
    }
  } else {
    prof.degenerate = true;
  }
  return prof;
}

// Picks exactly n distinct frame indices by splitting the normalized
// cumulative motion mass into n equal bins and keeping, per bin, the first
// frame whose cumulative value reaches the bin midpoint. Collisions advance
// to the next free index (wrapping backwards at the end), so the result
// always has n distinct members. Zero-motion clips fall back to uniform
// temporal spacing.
inline std::vector<int> select_keyframes(const Clip& clip, int n, double gamma) {
  int frames = clip.frame_count();
  if (n < 1 || n > frames)
    throw ConfigError("keyframes: need 1 <= n <= frame count (" +
                      std::to_string(frames) + "), got " + std::to_string(n) +
                      "; frames are never repeated");
  MotionProfile prof = motion_profile(clip, gamma);
  std::vector<int> picked;
  picked.reserve(n);
  if (prof.degenerate) {
    for (int k = 1; k <= n; ++k)
      picked.push_back(static_cast<int>((k - 0.5) / n * frames));
    return picked;
  }
  std::vector<char> taken(frames, 0);
  for (int k = 1; k <= n; ++k) {
    double mid = (k - 0.5) / n;
    int idx = 0;
    while (idx < frames && prof.cumulative[idx] < mid) ++idx;
    if (idx == frames) idx = frames - 1;  // guard against rounding at mass 1
    int chosen = idx;
    while (chosen < frames && taken[chosen]) ++chosen;
    if (chosen == frames) {
      chosen = idx - 1;
      while (chosen >= 0 && taken[chosen]) --chosen;
    }
    taken[chosen] = 1;
    picked.push_back(chosen);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

// Sub-clip at the selected key-frame indices; label and frame geometry are
// preserved.
inline Clip refine_exemplar(const Clip& clip, int n, double gamma) {
  std::vector<int> keep = select_keyframes(clip, n, gamma);
  Clip out;
  out.channels = clip.channels;
  out.height = clip.height;
  out.width = clip.width;
  out.label = clip.label;
  out.clip_id = clip.clip_id;
  out.frames.reserve(keep.size());
  for (int idx : keep) out.frames.push_back(clip.frames[idx]);
  return out;
}

}  // namespace cilforge
