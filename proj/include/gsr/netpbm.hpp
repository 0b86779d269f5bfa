#pragma once

// Binary Netpbm (P5 / P6) and PFM (Pf / PF) readers and writers.
//
// Depth maps: 16- or 8-bit P5 (raw integer units preserved, no scaling) or
// single-channel Pf. PFM rows are stored bottom-to-top and the sign of the
// scale line gives the byte order (negative = little-endian). Pixels that are
// invalid in a DepthImage are written to PFM as NaN, and any non-finite PFM
// sample reads back as an invalid pixel with value 0.
//
// Guides: P6 (values byte / maxval), P5 (one channel), or PF / Pf.
// Masks: P5, any maxval, 0 = invalid.

#include <stdexcept>
#include <string>
#include <string_view>

#include "gsr/image.hpp"

namespace gsr {

class IoError : public std::runtime_error {
 public:
  enum class Kind { open_failed, write_failed, malformed_header, truncated_payload, unsupported_maxval, unsupported_format };

  IoError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// In-memory codecs. These are what the path-based functions use, and what the
// tests drive directly with hand-built byte strings.
DepthImage decode_depth(std::string_view bytes);
GuideImage decode_guide(std::string_view bytes);
DepthImage decode_mask(std::string_view bytes);  // data = 0/1, valid = all

std::string encode_pfm(const DepthImage& image);
std::string encode_pfm(const GuideImage& image);  // 1 or 3 channels
std::string encode_pgm(const DepthImage& image, int maxval = 65535);
std::string encode_ppm(const GuideImage& image);  // 3 channels, 8-bit
std::string encode_mask(const Mask& mask, int height, int width);

DepthImage load_depth(const std::string& path);
GuideImage load_guide(const std::string& path);
/// Loads a mask and checks it against the expected dimensions.
Mask load_mask(const std::string& path, int height, int width);

/// Chooses PFM or PGM from the extension (".pgm" → 16-bit PGM, anything else → PFM).
void save_depth(const std::string& path, const DepthImage& image);
void save_guide(const std::string& path, const GuideImage& image);
void save_mask(const std::string& path, const Mask& mask, int height, int width);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace gsr
