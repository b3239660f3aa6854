#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cilforge/clip.hpp"
#include "cilforge/errors.hpp"
#include "cilforge/rng.hpp"

namespace cilforge {

// Geometry and difficulty of a synthetic clip stream. The stream is fully
// determined by this struct: task 1 holds base_classes classes, every later
// task classes_per_task, and each clip is a class prototype grid plus a
// moving intensity blob plus Gaussian pixel noise.
struct StreamConfig {
  int total_classes = 20;
  int base_classes = 2;
  int classes_per_task = 2;
  int train_clips_per_class = 30;
  int test_clips_per_class = 20;
  int frames_per_clip = 32;
  int channels = 3;
  int height = 8;
  int width = 8;
  double prototype_scale = 1.0;
  double motion_amplitude = 3.0;
  double noise_std = 1.0;
  std::uint64_t seed = 1;

  int task_count() const {
    return 1 + (total_classes - base_classes) / classes_per_task;
  }
};

struct TaskDataset {
  int task_index = 0;  // 1-based
  std::vector<int> label_set;
  std::vector<Clip> train;
  std::vector<Clip> test;
};

// The deterministic per-class part of the generator: spatial prototype plus
// the parameters of the blob trajectory. Exposed so tests can re-render clips
// from closed form.
struct ClassSpec {
  std::vector<double> prototype;  // flattened c*h*w
  double frequency = 1.0;         // blob oscillation cycles per clip
  double dir_x = 1.0;
  double dir_y = 0.0;
};

inline void validate_stream_config(const StreamConfig& cfg) {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string("stream.") + name + ": must be >= 1");
  };
  positive(cfg.total_classes, "total_classes");
  positive(cfg.base_classes, "base_classes");
  positive(cfg.classes_per_task, "classes_per_task");
  positive(cfg.train_clips_per_class, "train_clips_per_class");
  positive(cfg.test_clips_per_class, "test_clips_per_class");
  positive(cfg.frames_per_clip, "frames_per_clip");
  positive(cfg.channels, "channels");
  positive(cfg.height, "height");
  positive(cfg.width, "width");
  int incr = cfg.total_classes - cfg.base_classes;
  if (incr < cfg.classes_per_task || incr % cfg.classes_per_task != 0) {
    throw ConfigError(
        "stream: base_classes + k*classes_per_task must equal total_classes "
        "for some integer k >= 1");
  }
  if (cfg.noise_std < 0.0) throw ConfigError("stream.noise_std: must be >= 0");
}

namespace detail {

inline Rng class_rng(const StreamConfig& cfg, int class_id) {
  return Rng(cfg.seed).split("class").split(static_cast<std::uint64_t>(class_id));
}

inline Rng clip_rng(const StreamConfig& cfg, int class_id, int clip_index) {
  return class_rng(cfg, class_id)
      .split("clip")
      .split(static_cast<std::uint64_t>(clip_index));
}

inline constexpr double kBlobSigmaFrac = 0.15;
inline constexpr double kSwingFrac = 0.35;

}  // namespace detail

inline ClassSpec class_spec(const StreamConfig& cfg, int class_id) {
  Rng rng = detail::class_rng(cfg, class_id);
  ClassSpec spec;
  spec.prototype.resize(static_cast<std::size_t>(cfg.channels) * cfg.height *
                        cfg.width);
  for (double& v : spec.prototype) v = cfg.prototype_scale * rng.gaussian();
  spec.frequency = 0.75 + 2.5 * rng.uniform();
  double angle = 2.0 * 3.14159265358979323846 * rng.uniform();
  spec.dir_x = std::cos(angle);
  spec.dir_y = std::sin(angle);
  return spec;
}

// Phase of the blob trajectory for one clip; the first draw of the clip's rng
// stream, so it can be recovered independently of generation order.
inline double clip_phase(const StreamConfig& cfg, int class_id, int clip_index) {
  Rng rng = detail::clip_rng(cfg, class_id, clip_index);
  return 2.0 * 3.14159265358979323846 * rng.uniform();
}

// Noise-free closed form of one clip: prototype plus the blob evaluated along
// its sinusoidal path at the given phase.
inline Clip render_clip(const StreamConfig& cfg, const ClassSpec& spec,
                        double phase) {
  Clip clip;
  clip.channels = cfg.channels;
  clip.height = cfg.height;
  clip.width = cfg.width;
  clip.frames.resize(cfg.frames_per_clip);
  double cx = 0.5 * (cfg.width - 1);
  double cy = 0.5 * (cfg.height - 1);
  double swing = detail::kSwingFrac * (std::min(cfg.height, cfg.width) - 1);
  double sigma = detail::kBlobSigmaFrac * std::min(cfg.height, cfg.width);
  for (int t = 0; t < cfg.frames_per_clip; ++t) {
    std::vector<double>& frame = clip.frames[t];
    frame = spec.prototype;
    double s = std::sin(2.0 * 3.14159265358979323846 * spec.frequency * t /
                            cfg.frames_per_clip +
                        phase);
    double bx = cx + spec.dir_x * swing * s;
    double by = cy + spec.dir_y * swing * s;
    for (int ch = 0; ch < cfg.channels; ++ch) {
      for (int y = 0; y < cfg.height; ++y) {
        for (int x = 0; x < cfg.width; ++x) {
          double d2 = (x - bx) * (x - bx) + (y - by) * (y - by);
          frame[(static_cast<std::size_t>(ch) * cfg.height + y) * cfg.width + x] +=
              cfg.motion_amplitude * std::exp(-d2 / (2.0 * sigma * sigma));
        }
      }
    }
  }
  return clip;
}

inline std::vector<TaskDataset> generate_stream(const StreamConfig& cfg) {
  validate_stream_config(cfg);
  std::vector<TaskDataset> tasks(cfg.task_count());
  std::uint64_t next_id = 0;
  int class_id = 0;
  for (int k = 0; k < static_cast<int>(tasks.size()); ++k) {
    TaskDataset& task = tasks[k];
    task.task_index = k + 1;
    int classes_here = (k == 0) ? cfg.base_classes : cfg.classes_per_task;
    for (int c = 0; c < classes_here; ++c, ++class_id) {
      task.label_set.push_back(class_id);
      ClassSpec spec = class_spec(cfg, class_id);
      int clips = cfg.train_clips_per_class + cfg.test_clips_per_class;
      for (int i = 0; i < clips; ++i) {
        Rng rng = detail::clip_rng(cfg, class_id, i);
        double phase = 2.0 * 3.14159265358979323846 * rng.uniform();
        Clip clip = render_clip(cfg, spec, phase);
        if (cfg.noise_std > 0.0) {
          for (auto& frame : clip.frames)
            for (double& v : frame) v += cfg.noise_std * rng.gaussian();
        }
        clip.label = class_id;
        clip.clip_id = next_id++;
        if (i < cfg.train_clips_per_class)
          task.train.push_back(std::move(clip));
        else
          task.test.push_back(std::move(clip));
      }
    }
  }
  return tasks;
}

// Average pooling by the integer window 1/delta per axis. delta = 1 is the
// identity; anything else requires 1/delta to be an integer dividing both
// height and width.
inline Clip downsample(const Clip& clip, double delta) {
  if (!(delta > 0.0) || delta > 1.0)
    throw ConfigError("delta: must lie in (0, 1]");
  if (delta == 1.0) return clip;
  double inv = 1.0 / delta;
  int k = static_cast<int>(std::lround(inv));
  if (std::abs(inv - k) > 1e-9)
    throw ConfigError("delta: 1/delta must be an integer pooling window");
  if (clip.height % k != 0 || clip.width % k != 0)
    throw ConfigError("delta: pooling window " + std::to_string(k) +
                      " must divide height " + std::to_string(clip.height) +
                      " and width " + std::to_string(clip.width));
  Clip out;
  out.channels = clip.channels;
  out.height = clip.height / k;
  out.width = clip.width / k;
  out.label = clip.label;
  out.clip_id = clip.clip_id;
  out.frames.resize(clip.frames.size());
  double norm = 1.0 / (static_cast<double>(k) * k);
  for (std::size_t f = 0; f < clip.frames.size(); ++f) {
    out.frames[f].resize(out.frame_size());
    for (int ch = 0; ch < out.channels; ++ch) {
      for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
          double sum = 0.0;
          for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx)
              sum += clip.at(static_cast<int>(f), ch, y * k + dy, x * k + dx);
          out.frames[f][(static_cast<std::size_t>(ch) * out.height + y) * out.width +
                        x] = sum * norm;
        }
      }
    }
  }
  return out;
}

// Nearest-neighbor upsampling by an integer factor per axis; inverse regrid
// for feeding reduced-resolution content to a fixed-size input layer.
inline Clip upsample_nearest(const Clip& clip, int target_h, int target_w) {
  if (target_h == clip.height && target_w == clip.width) return clip;
  if (target_h % clip.height != 0 || target_w % clip.width != 0)
    throw ConfigError("upsample: target dims must be integer multiples");
  int ky = target_h / clip.height;
  int kx = target_w / clip.width;
  Clip out;
  out.channels = clip.channels;
  out.height = target_h;
  out.width = target_w;
  out.label = clip.label;
  out.clip_id = clip.clip_id;
  out.frames.resize(clip.frames.size());
  for (std::size_t f = 0; f < clip.frames.size(); ++f) {
    out.frames[f].resize(out.frame_size());
    for (int ch = 0; ch < out.channels; ++ch)
      for (int y = 0; y < target_h; ++y)
        for (int x = 0; x < target_w; ++x)
          out.frames[f][(static_cast<std::size_t>(ch) * target_h + y) * target_w +
                        x] = clip.at(static_cast<int>(f), ch, y / ky, x / kx);
  }
  return out;
}

}  // namespace cilforge
