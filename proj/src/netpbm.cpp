#include "gsr/netpbm.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace gsr {
namespace {

using Kind = IoError::Kind;

struct Header {
  std::string magic;
  int width = 0;
  int height = 0;
  double third = 0.0;  // maxval for Netpbm, scale for PFM
  std::size_t payload_offset = 0;
};

// Reads `count` whitespace-separated tokens after the two-byte magic, skipping
// '#' comments, then consumes exactly one whitespace byte.
Header parse_header(std::string_view bytes) {
  if (bytes.size() < 2) throw IoError(Kind::malformed_header, "file too short for a header");
  Header h;
  h.magic = std::string(bytes.substr(0, 2));
  std::size_t pos = 2;
  std::string tokens[3];
  for (auto& tok : tokens) {
    for (;;) {
      if (pos >= bytes.size()) throw IoError(Kind::malformed_header, "header ends prematurely");
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) tok += bytes[pos++];
  }
  if (pos >= bytes.size()) throw IoError(Kind::malformed_header, "missing whitespace after header");
  h.payload_offset = pos + 1;

  auto parse_int = [](const std::string& s, const char* what) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      throw IoError(Kind::malformed_header, std::string("bad ") + what + " '" + s + "'");
    long v = std::stol(s);
    if (v < 1 || v > (1 << 24)) throw IoError(Kind::malformed_header, std::string("out-of-range ") + what);
    return static_cast<int>(v);
  };
  h.width = parse_int(tokens[0], "width");
  h.height = parse_int(tokens[1], "height");
  std::istringstream third(tokens[2]);
  third.imbue(std::locale::classic());
  if (!(third >> h.third) || !third.eof())
    throw IoError(Kind::malformed_header, "bad maxval/scale '" + tokens[2] + "'");
  return h;
}

int checked_maxval(const Header& h) {
  if (h.third != std::floor(h.third) || h.third < 1 || h.third > 65535)
    throw IoError(Kind::unsupported_maxval, "unsupported maxval " + std::to_string(h.third));
  return static_cast<int>(h.third);
}

// Integer samples of a P5/P6 payload, big-endian when maxval > 255.
std::vector<int> read_samples(std::string_view bytes, const Header& h, int channels, int maxval) {
  const std::size_t count = static_cast<std::size_t>(h.width) * h.height * channels;
  const std::size_t bps = maxval > 255 ? 2 : 1;
  if (bytes.size() - h.payload_offset < count * bps)
    throw IoError(Kind::truncated_payload, "payload shorter than " + std::to_string(count * bps) + " bytes");
  std::vector<int> out(count);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.payload_offset);
  for (std::size_t n = 0; n < count; ++n) {
    out[n] = bps == 2 ? (p[2 * n] << 8) | p[2 * n + 1] : p[n];
    if (out[n] > maxval) throw IoError(Kind::malformed_header, "sample exceeds maxval");
  }
  return out;
}

// PFM samples in file order (bottom row first), converted to host floats.
std::vector<float> read_pfm_samples(std::string_view bytes, const Header& h, int channels) {
  if (h.third == 0.0 || !std::isfinite(h.third)) throw IoError(Kind::malformed_header, "PFM scale must be nonzero");
  const std::size_t count = static_cast<std::size_t>(h.width) * h.height * channels;
  if (bytes.size() - h.payload_offset < count * 4)
    throw IoError(Kind::truncated_payload, "PFM payload shorter than " + std::to_string(count * 4) + " bytes");
  const bool file_little = h.third < 0;
  const bool host_little = std::endian::native == std::endian::little;
  std::vector<float> out(count);
  const char* p = bytes.data() + h.payload_offset;
  for (std::size_t n = 0; n < count; ++n) {
    std::uint32_t bits;
    std::memcpy(&bits, p + 4 * n, 4);
    if (file_little != host_little) bits = __builtin_bswap32(bits);
    std::memcpy(&out[n], &bits, 4);
  }
  return out;
}

void append_float_le(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  char b[4];
  std::memcpy(b, &bits, 4);
  out.append(b, 4);
}

std::string pfm_header(char type, int w, int h) {
  return std::string("P") + type + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n-1.0\n";
}

bool has_suffix(const std::string& s, std::string_view suffix) {
  if (s.size() < suffix.size()) return false;
  for (std::size_t n = 0; n < suffix.size(); ++n)
    if (std::tolower(static_cast<unsigned char>(s[s.size() - suffix.size() + n])) != suffix[n]) return false;
  return true;
}

}  // namespace

DepthImage decode_depth(std::string_view bytes) {
  const Header h = parse_header(bytes);
  DepthImage img(h.height, h.width);
  if (h.magic == "P5") {
    const int maxval = checked_maxval(h);
    const auto samples = read_samples(bytes, h, 1, maxval);
    for (std::size_t n = 0; n < samples.size(); ++n) img.data[n] = samples[n];
    return img;
  }
  if (h.magic == "Pf") {
    const auto samples = read_pfm_samples(bytes, h, 1);
    for (int i = 0; i < h.height; ++i) {
      const int file_row = h.height - 1 - i;
      for (int j = 0; j < h.width; ++j) {
        const float v = samples[static_cast<std::size_t>(file_row) * h.width + j];
        const std::size_t p = static_cast<std::size_t>(i) * h.width + j;
        if (std::isfinite(v)) {
          img.data[p] = v;
        } else {
          img.data[p] = 0.0;
          img.valid[p] = 0;
        }
      }
    }
    return img;
  }
  throw IoError(Kind::unsupported_format, "not a depth format: '" + h.magic + "'");
}

GuideImage decode_guide(std::string_view bytes) {
  const Header h = parse_header(bytes);
  if (h.magic == "P5" || h.magic == "P6") {
    const int channels = h.magic == "P6" ? 3 : 1;
    const int maxval = checked_maxval(h);
    const auto samples = read_samples(bytes, h, channels, maxval);
    GuideImage img(h.height, h.width, channels);
    for (int i = 0; i < h.height; ++i)
      for (int j = 0; j < h.width; ++j)
        for (int c = 0; c < channels; ++c)
          img.at(c, i, j) = samples[(static_cast<std::size_t>(i) * h.width + j) * channels + c] / double(maxval);
    return img;
  }
  if (h.magic == "Pf" || h.magic == "PF") {
    const int channels = h.magic == "PF" ? 3 : 1;
    const auto samples = read_pfm_samples(bytes, h, channels);
    GuideImage img(h.height, h.width, channels);
    for (int i = 0; i < h.height; ++i) {
      const int file_row = h.height - 1 - i;
      for (int j = 0; j < h.width; ++j)
        for (int c = 0; c < channels; ++c)
          img.at(c, i, j) = samples[(static_cast<std::size_t>(file_row) * h.width + j) * channels + c];
    }
    img.validate();
    return img;
  }
  throw IoError(Kind::unsupported_format, "not a guide format: '" + h.magic + "'");
}

DepthImage decode_mask(std::string_view bytes) {
  const Header h = parse_header(bytes);
  if (h.magic != "P5") throw IoError(Kind::unsupported_format, "mask must be P5, got '" + h.magic + "'");
  const int maxval = checked_maxval(h);
  const auto samples = read_samples(bytes, h, 1, maxval);
  DepthImage img(h.height, h.width);
  for (std::size_t n = 0; n < samples.size(); ++n) img.data[n] = samples[n] != 0 ? 1.0 : 0.0;
  return img;
}

std::string encode_pfm(const DepthImage& image) {
  std::string out = pfm_header('f', image.width, image.height);
  out.reserve(out.size() + image.size() * 4);
  for (int i = image.height - 1; i >= 0; --i)
    for (int j = 0; j < image.width; ++j)
      append_float_le(out, image.is_valid(i, j) ? static_cast<float>(image.at(i, j))
                                                : std::numeric_limits<float>::quiet_NaN());
  return out;
}

std::string encode_pfm(const GuideImage& image) {
  if (image.channels != 1 && image.channels != 3)
    throw std::invalid_argument("PFM stores 1 or 3 channels, got " + std::to_string(image.channels));
  std::string out = pfm_header(image.channels == 3 ? 'F' : 'f', image.width, image.height);
  for (int i = image.height - 1; i >= 0; --i)
    for (int j = 0; j < image.width; ++j)
      for (int c = 0; c < image.channels; ++c) append_float_le(out, static_cast<float>(image.at(c, i, j)));
  return out;
}

std::string encode_pgm(const DepthImage& image, int maxval) {
  if (maxval < 1 || maxval > 65535) throw IoError(Kind::unsupported_maxval, "unsupported maxval " + std::to_string(maxval));
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n" +
                    std::to_string(maxval) + "\n";
  for (std::size_t p = 0; p < image.size(); ++p) {
    const double v = image.valid[p] ? std::clamp(std::round(image.data[p]), 0.0, double(maxval)) : 0.0;
    const auto s = static_cast<unsigned>(v);
    if (maxval > 255) out += static_cast<char>((s >> 8) & 0xff);
    out += static_cast<char>(s & 0xff);
  }
  return out;
}

std::string encode_ppm(const GuideImage& image) {
  if (image.channels != 3) throw std::invalid_argument("PPM needs 3 channels");
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  for (int i = 0; i < image.height; ++i)
    for (int j = 0; j < image.width; ++j)
      for (int c = 0; c < 3; ++c)
        out += static_cast<char>(static_cast<unsigned char>(std::clamp(std::round(image.at(c, i, j) * 255.0), 0.0, 255.0)));
  return out;
}

std::string encode_mask(const Mask& mask, int height, int width) {
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (std::size_t p = 0; p < static_cast<std::size_t>(height) * width; ++p) out += static_cast<char>(mask[p] ? 255 : 0);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(Kind::open_failed, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(Kind::write_failed, "cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(Kind::write_failed, "write to '" + path + "' failed");
}

DepthImage load_depth(const std::string& path) { return decode_depth(read_file(path)); }
GuideImage load_guide(const std::string& path) { return decode_guide(read_file(path)); }

Mask load_mask(const std::string& path, int height, int width) {
  const DepthImage m = decode_mask(read_file(path));
  if (m.height != height || m.width != width)
    throw IoError(Kind::malformed_header, "mask '" + path + "' has size " + std::to_string(m.height) + "x" +
                                              std::to_string(m.width) + ", expected " + std::to_string(height) + "x" +
                                              std::to_string(width));
  Mask out(m.size());
  for (std::size_t p = 0; p < m.size(); ++p) out[p] = m.data[p] != 0.0;
  return out;
}

void save_depth(const std::string& path, const DepthImage& image) {
  write_file(path, has_suffix(path, ".pgm") ? encode_pgm(image) : encode_pfm(image));
}

void save_guide(const std::string& path, const GuideImage& image) {
  write_file(path, has_suffix(path, ".ppm") ? encode_ppm(image) : encode_pfm(image));
}

void save_mask(const std::string& path, const Mask& mask, int height, int width) {
  write_file(path, encode_mask(mask, height, width));
}

}  // namespace gsr
