#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cilforge/clip.hpp"
#include "cilforge/errors.hpp"

namespace cilforge {

// Clip container format, little-endian throughout:
//   magic "CILF", u32 version = 1, u32 clip count;
//   per clip: u32 label, u32 frames, u32 channels, u32 height, u32 width,
//   then frames*channels*height*width f64 values.
inline constexpr char kClipMagic[4] = {'C', 'I', 'L', 'F'};
inline constexpr std::uint32_t kClipFormatVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::string& out, double d) {
  std::uint64_t v{};
  std::memcpy(&v, &d, 8);
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xFF);
    v = r;
  }
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
public:
  Reader(const unsigned char* data, std::size_t size) : data_(data), size_(size) {}

  std::uint32_t u32(const char* what) {
    if (pos_ + 4 > size_)
      throw ClipIoError(ClipIoError::Kind::truncated_payload,
                        std::string("clip file truncated while reading ") + what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64(const char* what) {
    if (pos_ + 8 > size_)
      throw ClipIoError(ClipIoError::Kind::truncated_payload,
                        std::string("clip file truncated while reading ") + what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    double d{};
    std::memcpy(&d, &v, 8);
    return d;
  }

  std::size_t pos() const { return pos_; }
  std::size_t size() const { return size_; }

private:
  const unsigned char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline void save_clips(const std::filesystem::path& path,
                       const std::vector<Clip>& clips) {
  std::string buf;
  buf.append(kClipMagic, 4);
  detail::put_u32(buf, kClipFormatVersion);
  detail::put_u32(buf, static_cast<std::uint32_t>(clips.size()));
  for (const Clip& clip : clips) {
    detail::put_u32(buf, static_cast<std::uint32_t>(clip.label));
    detail::put_u32(buf, static_cast<std::uint32_t>(clip.frame_count()));
    detail::put_u32(buf, static_cast<std::uint32_t>(clip.channels));
    detail::put_u32(buf, static_cast<std::uint32_t>(clip.height));
    detail::put_u32(buf, static_cast<std::uint32_t>(clip.width));
    for (const auto& frame : clip.frames)
      for (double v : frame) detail::put_f64(buf, v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TrainingError("cannot open " + path.string() + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw TrainingError("write failed for " + path.string());
}

inline std::vector<Clip> load_clips(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ClipIoError(ClipIoError::Kind::malformed_header,
                      "cannot open " + path.string());
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (data.size() < 12)
    throw ClipIoError(ClipIoError::Kind::malformed_header,
                      "clip file shorter than header");
  if (std::memcmp(data.data(), kClipMagic, 4) != 0)
    throw ClipIoError(ClipIoError::Kind::malformed_header, "bad magic bytes");

  detail::Reader r(data.data() + 4, data.size() - 4);
  std::uint32_t version = r.u32("version");
  if (version != kClipFormatVersion)
    throw ClipIoError(ClipIoError::Kind::version_mismatch,
                      "unsupported clip format version " + std::to_string(version));
  std::uint32_t count = r.u32("clip count");

  std::vector<Clip> clips;
  clips.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Clip clip;
    clip.label = static_cast<int>(r.u32("label"));
    std::uint32_t frames = r.u32("frame count");
    clip.channels = static_cast<int>(r.u32("channels"));
    clip.height = static_cast<int>(r.u32("height"));
    clip.width = static_cast<int>(r.u32("width"));
    if (frames == 0 || clip.channels <= 0 || clip.height <= 0 || clip.width <= 0)
      throw ClipIoError(ClipIoError::Kind::malformed_header,
                        "clip " + std::to_string(i) + " has empty dimensions");
    std::uint64_t per_frame = static_cast<std::uint64_t>(clip.channels) *
                              clip.height * clip.width;
    if (per_frame * frames > (1ull << 30))
      throw ClipIoError(ClipIoError::Kind::malformed_header,
                        "clip " + std::to_string(i) + " dimensions implausibly large");
    clip.frames.resize(frames);
    for (auto& frame : clip.frames) {
      frame.resize(per_frame);
      for (double& v : frame) v = r.f64("frame payload");
    }
    clip.clip_id = i;
    clips.push_back(std::move(clip));
  }
  if (r.pos() != r.size())
    throw ClipIoError(ClipIoError::Kind::trailing_data,
                      "unexpected bytes after final clip");
  return clips;
}

}  // namespace cilforge
