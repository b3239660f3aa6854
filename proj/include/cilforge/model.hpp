#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cilforge/clip.hpp"
#include "cilforge/errors.hpp"
#include "cilforge/rng.hpp"

namespace cilforge {

// Row-major dense matrix, just enough for the model below.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return a.size(); }
};

struct ModelConfig {
  int input_dim = 0;
  int embed_dim = 32;
  int hidden = 0;  // 0 = single linear extractor, else one tanh hidden layer
};

// Gradients (and Adam moments) share the parameter layout.
struct Gradients {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
  Matrix head_w;
  std::vector<double> head_b;
};

struct AdamState {
  Gradients m;
  Gradients v;
  long step = 0;
};

// Clip classifier: flattened frames -> linear (or one-hidden-layer tanh)
// extractor -> segment-consensus average -> growable linear head.
struct ModelState {
  ModelConfig cfg;
  Matrix w1;               // input_dim x embed (or input_dim x hidden)
  std::vector<double> b1;
  Matrix w2;               // hidden x embed, empty in linear mode
  std::vector<double> b2;
  Matrix head_w;           // embed x classes
  std::vector<double> head_b;
  AdamState opt;

  int classes() const { return head_w.cols; }
  int embed_dim() const { return cfg.embed_dim; }
};

namespace detail {

inline Gradients zeros_like_params(const ModelState& m) {
  Gradients g;
  g.w1 = Matrix(m.w1.rows, m.w1.cols);
  g.b1.assign(m.b1.size(), 0.0);
  g.w2 = Matrix(m.w2.rows, m.w2.cols);
  g.b2.assign(m.b2.size(), 0.0);
  g.head_w = Matrix(m.head_w.rows, m.head_w.cols);
  g.head_b.assign(m.head_b.size(), 0.0);
  return g;
}

}  // namespace detail

inline Gradients make_gradients(const ModelState& m) {
  return detail::zeros_like_params(m);
}

inline ModelState init_model(const ModelConfig& cfg, int classes, Rng& rng) {
  if (cfg.input_dim < 1 || cfg.embed_dim < 1 || cfg.hidden < 0 || classes < 1)
    throw ConfigError("model: input_dim/embed_dim/classes must be positive");
  ModelState m;
  m.cfg = cfg;
  int first_out = cfg.hidden > 0 ? cfg.hidden : cfg.embed_dim;
  m.w1 = Matrix(cfg.input_dim, first_out);
  double s1 = 1.0 / std::sqrt(static_cast<double>(cfg.input_dim));
  for (double& v : m.w1.a) v = s1 * rng.gaussian();
  m.b1.assign(first_out, 0.0);
  if (cfg.hidden > 0) {
    m.w2 = Matrix(cfg.hidden, cfg.embed_dim);
    double s2 = 1.0 / std::sqrt(static_cast<double>(cfg.hidden));
    for (double& v : m.w2.a) v = s2 * rng.gaussian();
    m.b2.assign(cfg.embed_dim, 0.0);
  }
  m.head_w = Matrix(cfg.embed_dim, classes);
  for (double& v : m.head_w.a) v = 0.01 * rng.gaussian();
  m.head_b.assign(classes, 0.0);
  m.opt.m = detail::zeros_like_params(m);
  m.opt.v = detail::zeros_like_params(m);
  return m;
}

// One representative frame per segment; clips shorter than the segment count
// repeat frames cyclically.
inline std::vector<int> segment_frame_indices(int frames, int segments) {
  if (frames < 1 || segments < 1)
    throw ConfigError("segments: clip frames and segment count must be >= 1");
  std::vector<int> idx(segments);
  for (int k = 0; k < segments; ++k)
    idx[k] = frames >= segments ? static_cast<int>((static_cast<std::int64_t>(k) * frames) / segments)
                                : k % frames;
  return idx;
}

inline std::vector<double> embed_frame(const ModelState& m,
                                       std::span<const double> frame) {
  if (static_cast<int>(frame.size()) != m.cfg.input_dim)
    throw ConfigError("model: frame size " + std::to_string(frame.size()) +
                      " does not match extractor input dim " +
                      std::to_string(m.cfg.input_dim));
  std::vector<double> z1(m.w1.cols, 0.0);
  for (int i = 0; i < m.w1.rows; ++i) {
    double xi = frame[i];
    if (xi == 0.0) continue;
    const double* row = &m.w1.a[static_cast<std::size_t>(i) * m.w1.cols];
    for (int j = 0; j < m.w1.cols; ++j) z1[j] += xi * row[j];
  }
  for (int j = 0; j < m.w1.cols; ++j) z1[j] += m.b1[j];
  if (m.cfg.hidden == 0) return z1;
  for (double& v : z1) v = std::tanh(v);
  std::vector<double> z2(m.cfg.embed_dim, 0.0);
  for (int i = 0; i < m.w2.rows; ++i) {
    double hi = z1[i];
    const double* row = &m.w2.a[static_cast<std::size_t>(i) * m.w2.cols];
    for (int j = 0; j < m.w2.cols; ++j) z2[j] += hi * row[j];
  }
  for (int j = 0; j < m.cfg.embed_dim; ++j) z2[j] += m.b2[j];
  return z2;
}

// Mean of per-segment frame embeddings.
inline std::vector<double> clip_embed(const ModelState& m, const Clip& clip,
                                      int segments) {
  std::vector<int> idx = segment_frame_indices(clip.frame_count(), segments);
  std::vector<double> acc(m.cfg.embed_dim, 0.0);
  for (int fi : idx) {
    std::vector<double> e = embed_frame(m, clip.frames[fi]);
    for (int j = 0; j < m.cfg.embed_dim; ++j) acc[j] += e[j];
  }
  double inv = 1.0 / segments;
  for (double& v : acc) v *= inv;
  return acc;
}

inline std::vector<double> forward(const ModelState& m,
                                   std::span<const double> embedding) {
  if (static_cast<int>(embedding.size()) != m.cfg.embed_dim)
    throw ConfigError("model: embedding length does not match embed_dim");
  std::vector<double> o(m.head_b);
  for (int i = 0; i < m.head_w.rows; ++i) {
    double yi = embedding[i];
    const double* row = &m.head_w.a[static_cast<std::size_t>(i) * m.head_w.cols];
    for (int j = 0; j < m.head_w.cols; ++j) o[j] += yi * row[j];
  }
  return o;
}

inline std::vector<double> clip_logits(const ModelState& m, const Clip& clip,
                                       int segments) {
  return forward(m, clip_embed(m, clip, segments));
}

// Accumulates scale * dLoss/dParams for one clip given dLoss/dLogits.
// Activations are recomputed; the model is small enough that this beats
// carrying forward state around.
inline void accumulate_backward(const ModelState& m, const Clip& clip,
                                int segments, std::span<const double> dlogits,
                                double scale, Gradients& g) {
  if (static_cast<int>(dlogits.size()) != m.classes())
    throw ConfigError("backward: loss gradient length does not match head width");
  std::vector<int> idx = segment_frame_indices(clip.frame_count(), segments);
  std::vector<double> y = clip_embed(m, clip, segments);

  // head: o = W^T y + b
  for (int i = 0; i < m.head_w.rows; ++i)
    for (int j = 0; j < m.head_w.cols; ++j)
      g.head_w.at(i, j) += scale * y[i] * dlogits[j];
  for (int j = 0; j < m.head_w.cols; ++j) g.head_b[j] += scale * dlogits[j];

  std::vector<double> dy(m.cfg.embed_dim, 0.0);
  for (int i = 0; i < m.head_w.rows; ++i) {
    double acc = 0.0;
    const double* row = &m.head_w.a[static_cast<std::size_t>(i) * m.head_w.cols];
    for (int j = 0; j < m.head_w.cols; ++j) acc += row[j] * dlogits[j];
    dy[i] = acc;
  }

  double invN = 1.0 / segments;
  if (m.cfg.hidden == 0) {
    // de_k = dy / N for every segment frame
    for (int j = 0; j < m.cfg.embed_dim; ++j)
      g.b1[j] += scale * dy[j];  // sum over segments of dy/N
    for (int fi : idx) {
      const auto& frame = clip.frames[fi];
      for (int i = 0; i < m.w1.rows; ++i) {
        double xi = frame[i] * invN * scale;
        if (xi == 0.0) continue;
        double* row = &g.w1.a[static_cast<std::size_t>(i) * g.w1.cols];
        for (int j = 0; j < m.w1.cols; ++j) row[j] += xi * dy[j];
      }
    }
    return;
  }

  for (int fi : idx) {
    const auto& frame = clip.frames[fi];
    // recompute hidden activations for this frame
    std::vector<double> h(m.cfg.hidden, 0.0);
    for (int i = 0; i < m.w1.rows; ++i) {
      double xi = frame[i];
      if (xi == 0.0) continue;
      const double* row = &m.w1.a[static_cast<std::size_t>(i) * m.w1.cols];
      for (int j = 0; j < m.cfg.hidden; ++j) h[j] += xi * row[j];
    }
    for (int j = 0; j < m.cfg.hidden; ++j) h[j] = std::tanh(h[j] + m.b1[j]);

    // de = dy / N through second layer
    for (int i = 0; i < m.w2.rows; ++i)
      for (int j = 0; j < m.w2.cols; ++j)
        g.w2.at(i, j) += scale * invN * h[i] * dy[j];
    for (int j = 0; j < m.cfg.embed_dim; ++j) g.b2[j] += scale * invN * dy[j];

    std::vector<double> dh(m.cfg.hidden, 0.0);
    for (int i = 0; i < m.w2.rows; ++i) {
      double acc = 0.0;
      const double* row = &m.w2.a[static_cast<std::size_t>(i) * m.w2.cols];
      for (int j = 0; j < m.w2.cols; ++j) acc += row[j] * dy[j];
      dh[i] = acc * invN * (1.0 - h[i] * h[i]);
    }
    for (int i = 0; i < m.w1.rows; ++i) {
      double xi = frame[i] * scale;
      if (xi == 0.0) continue;
      double* row = &g.w1.a[static_cast<std::size_t>(i) * g.w1.cols];
      for (int j = 0; j < m.cfg.hidden; ++j) row[j] += xi * dh[j];
    }
    for (int j = 0; j < m.cfg.hidden; ++j) g.b1[j] += scale * dh[j];
  }
}

inline Gradients backward(const ModelState& m, const Clip& clip, int segments,
                          std::span<const double> dlogits) {
  Gradients g = detail::zeros_like_params(m);
  accumulate_backward(m, clip, segments, dlogits, 1.0, g);
  return g;
}

namespace detail {

inline void adam_update(std::vector<double>& w, std::vector<double>& m,
                        std::vector<double>& v, const std::vector<double>& g,
                        double lr, double c1, double c2, const char* what) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(g[i]))
      throw TrainingError(std::string("non-finite gradient in ") + what);
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    double mhat = m[i] * c1;
    double vhat = v[i] * c2;
    w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace detail

// Standard Adam (beta1 0.9, beta2 0.999, eps 1e-8) over every parameter
// tensor; the shared step counter advances once per call.
inline void adam_step(ModelState& m, const Gradients& g, double lr) {
  m.opt.step += 1;
  double c1 = 1.0 / (1.0 - std::pow(0.9, static_cast<double>(m.opt.step)));
  double c2 = 1.0 / (1.0 - std::pow(0.999, static_cast<double>(m.opt.step)));
  detail::adam_update(m.w1.a, m.opt.m.w1.a, m.opt.v.w1.a, g.w1.a, lr, c1, c2, "w1");
  detail::adam_update(m.b1, m.opt.m.b1, m.opt.v.b1, g.b1, lr, c1, c2, "b1");
  detail::adam_update(m.w2.a, m.opt.m.w2.a, m.opt.v.w2.a, g.w2.a, lr, c1, c2, "w2");
  detail::adam_update(m.b2, m.opt.m.b2, m.opt.v.b2, g.b2, lr, c1, c2, "b2");
  detail::adam_update(m.head_w.a, m.opt.m.head_w.a, m.opt.v.head_w.a, g.head_w.a,
                      lr, c1, c2, "head_w");
  detail::adam_update(m.head_b, m.opt.m.head_b, m.opt.v.head_b, g.head_b, lr, c1,
                      c2, "head_b");
}

// Appends new_classes output columns. Existing columns (and their optimizer
// moments) are preserved bit for bit; new columns and bias entries are drawn
// from a 0.01-scaled Gaussian.
inline void expand_head(ModelState& m, int new_classes, Rng& rng) {
  if (new_classes < 0) throw ConfigError("expand_head: new_classes must be >= 0");
  if (new_classes == 0) return;
  int old_cols = m.head_w.cols;
  int cols = old_cols + new_classes;
  auto grow = [&](Matrix& w, bool random_init) {
    Matrix next(w.rows, cols);
    for (int i = 0; i < w.rows; ++i) {
      for (int j = 0; j < old_cols; ++j) next.at(i, j) = w.at(i, j);
      for (int j = old_cols; j < cols; ++j)
        next.at(i, j) = random_init ? 0.01 * rng.gaussian() : 0.0;
    }
    w = std::move(next);
  };
  grow(m.head_w, true);
  m.head_b.resize(cols);
  for (int j = old_cols; j < cols; ++j) m.head_b[j] = 0.01 * rng.gaussian();
  grow(m.opt.m.head_w, false);
  grow(m.opt.v.head_w, false);
  m.opt.m.head_b.resize(cols, 0.0);
  m.opt.v.head_b.resize(cols, 0.0);
}

inline ModelState snapshot_teacher(const ModelState& m) { return m; }

// Multiply count of one clip forward pass; the bookkeeping behind the
// reported per-step cost.
inline std::uint64_t clip_forward_multiplies(const ModelConfig& cfg, int segments,
                                             int classes) {
  std::uint64_t per_frame =
      cfg.hidden > 0
          ? static_cast<std::uint64_t>(cfg.input_dim) * cfg.hidden +
                static_cast<std::uint64_t>(cfg.hidden) * cfg.embed_dim
          : static_cast<std::uint64_t>(cfg.input_dim) * cfg.embed_dim;
  return per_frame * segments + static_cast<std::uint64_t>(cfg.embed_dim) * classes;
}

}  // namespace cilforge
