#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace cilforge {

// A labeled sequence of frames. Each frame is a flattened channels*height*width
// grid of doubles; all frames of a clip share the same geometry.
struct Clip {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<std::vector<double>> frames;
  int label = 0;
  std::uint64_t clip_id = 0;

  int frame_count() const { return static_cast<int>(frames.size()); }

  std::size_t frame_size() const {
    return static_cast<std::size_t>(channels) * height * width;
  }

  double& at(int frame, int ch, int y, int x) {
    return frames[frame][(static_cast<std::size_t>(ch) * height + y) * width + x];
  }

  double at(int frame, int ch, int y, int x) const {
    return frames[frame][(static_cast<std::size_t>(ch) * height + y) * width + x];
  }

  bool same_content(const Clip& other) const {
    return channels == other.channels && height == other.height &&
           width == other.width && label == other.label && frames == other.frames;
  }
};

}  // namespace cilforge
