#include "gsr/convnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include "gsr/features.hpp"
#include "gsr/netpbm.hpp"

namespace gsr {
namespace {

constexpr char kMagic[4] = {'G', 'S', 'R', 'P'};
constexpr std::uint32_t kVersion = 1;

// Row/column ranges for which a tap offset stays inside the image.
struct TapRange {
  int begin;
  int end;
};
TapRange tap_range(int offset, int extent) { return {std::max(0, -offset), std::min(extent, extent - offset)}; }

void check_finite(const FeatureMap& f) {
  for (double v : f.data)
    if (!std::isfinite(v)) throw NumericalError("divergence");
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out += static_cast<char>((v >> (8 * b)) & 0xff);
}

std::uint32_t get_u32(std::string_view bytes, std::size_t& pos) {
  if (pos + 4 > bytes.size()) throw IoError(IoError::Kind::truncated_payload, "parameter file truncated");
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + b])) << (8 * b);
  pos += 4;
  return v;
}

}  // namespace

ConvNetParams::ConvNetParams(std::vector<int> widths, std::uint64_t seed) : widths_(std::move(widths)) {
  layout();
  std::mt19937_64 rng(seed);
  for (int l = 0; l < layer_count(); ++l) {
    const double bound = std::sqrt(6.0 / (widths_[l] * 9.0));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : kernel(l)) w = dist(rng);
  }
}

ConvNetParams ConvNetParams::standard(int guide_channels, std::uint64_t seed) {
  return ConvNetParams({guide_channels + 1, 32, 32, 32, 16}, seed);
}

ConvNetParams ConvNetParams::zeros(std::vector<int> widths) {
  ConvNetParams p;
  p.widths_ = std::move(widths);
  p.layout();
  return p;
}

void ConvNetParams::layout() {
  if (widths_.size() < 2) throw std::invalid_argument("ConvNetParams: need at least one layer");
  for (int w : widths_)
    if (w < 1) throw std::invalid_argument("ConvNetParams: layer widths must be positive");
  offsets_.clear();
  std::size_t total = 0;
  for (int l = 0; l < layer_count(); ++l) {
    offsets_.push_back(total);
    total += static_cast<std::size_t>(widths_[l + 1]) * widths_[l] * 9 + widths_[l + 1];
  }
  values_.assign(total + 1, 0.0);
}

std::span<double> ConvNetParams::kernel(int layer) {
  return {values_.data() + kernel_offset(layer), bias_offset(layer) - kernel_offset(layer)};
}
std::span<const double> ConvNetParams::kernel(int layer) const {
  return {values_.data() + kernel_offset(layer), bias_offset(layer) - kernel_offset(layer)};
}
std::span<double> ConvNetParams::bias(int layer) {
  return {values_.data() + bias_offset(layer), static_cast<std::size_t>(widths_[layer + 1])};
}
std::span<const double> ConvNetParams::bias(int layer) const {
  return {values_.data() + bias_offset(layer), static_cast<std::size_t>(widths_[layer + 1])};
}

void conv3x3_forward(const FeatureMap& input, std::span<const double> kernel, std::span<const double> bias,
                     FeatureMap& output) {
  const int h = input.height, w = input.width, in_c = input.depth, out_c = static_cast<int>(bias.size());
  if (kernel.size() != static_cast<std::size_t>(out_c) * in_c * 9)
    throw std::invalid_argument("conv3x3_forward: kernel size mismatch");
  output = FeatureMap(h, w, out_c);
  const std::size_t plane = input.plane_size();
  for (int o = 0; o < out_c; ++o) {
    double* out = output.data.data() + o * plane;
    std::fill(out, out + plane, bias[o]);
    for (int c = 0; c < in_c; ++c) {
      const double* in = input.data.data() + c * plane;
      for (int t = 0; t < 9; ++t) {
        const double wt = kernel[(static_cast<std::size_t>(o) * in_c + c) * 9 + t];
        if (wt == 0.0) continue;
        const int oi = t / 3 - 1, oj = t % 3 - 1;
        const TapRange ri = tap_range(oi, h), rj = tap_range(oj, w);
        for (int i = ri.begin; i < ri.end; ++i) {
          double* dst = out + static_cast<std::size_t>(i) * w;
          const double* src = in + static_cast<std::ptrdiff_t>(i + oi) * w + oj;
          for (int j = rj.begin; j < rj.end; ++j) dst[j] += wt * src[j];
        }
      }
    }
  }
}

void conv3x3_backward(const FeatureMap& input, std::span<const double> kernel, const FeatureMap& grad_output,
                      std::span<double> grad_kernel, std::span<double> grad_bias, FeatureMap* grad_input) {
  const int h = input.height, w = input.width, in_c = input.depth, out_c = grad_output.depth;
  if (grad_output.height != h || grad_output.width != w || grad_kernel.size() != kernel.size() ||
      grad_bias.size() != static_cast<std::size_t>(out_c))
    throw std::invalid_argument("conv3x3_backward: shape mismatch");
  const std::size_t plane = input.plane_size();
  if (grad_input) *grad_input = FeatureMap(h, w, in_c);
  for (int o = 0; o < out_c; ++o) {
    const double* go = grad_output.data.data() + o * plane;
    double bsum = 0.0;
    for (std::size_t p = 0; p < plane; ++p) bsum += go[p];
    grad_bias[o] += bsum;
    for (int c = 0; c < in_c; ++c) {
      const double* in = input.data.data() + c * plane;
      double* gi = grad_input ? grad_input->data.data() + c * plane : nullptr;
      for (int t = 0; t < 9; ++t) {
        const std::size_t widx = (static_cast<std::size_t>(o) * in_c + c) * 9 + t;
        const int oi = t / 3 - 1, oj = t % 3 - 1;
        const TapRange ri = tap_range(oi, h), rj = tap_range(oj, w);
        double acc = 0.0;
        const double wt = kernel[widx];
        for (int i = ri.begin; i < ri.end; ++i) {
          const double* g = go + static_cast<std::size_t>(i) * w;
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(i + oi) * w + oj;
          const double* src = in + shift;
          for (int j = rj.begin; j < rj.end; ++j) acc += g[j] * src[j];
          if (gi && wt != 0.0) {
            double* dst = gi + shift;
            for (int j = rj.begin; j < rj.end; ++j) dst[j] += wt * g[j];
          }
        }
        grad_kernel[widx] += acc;
      }
    }
  }
}

NetOutput net_forward(const ConvNetParams& params, const FeatureMap& input) {
  if (input.depth != params.input_channels())
    throw std::invalid_argument("net_forward: expected " + std::to_string(params.input_channels()) +
                                " input channels, got " + std::to_string(input.depth));
  NetOutput out;
  out.tape.input = input;
  FeatureMap act = input;
  for (int l = 0; l < params.layer_count(); ++l) {
    FeatureMap pre;
    conv3x3_forward(act, params.kernel(l), params.bias(l), pre);
    check_finite(pre);
    act = pre;
    if (l + 1 < params.layer_count())
      for (double& v : act.data) v = std::max(v, 0.0);
    out.tape.pre_activations.push_back(std::move(pre));
  }
  out.features = std::move(act);
  return out;
}

NetOutput net_forward(const ConvNetParams& params, const GuideImage& guide, const TargetImage& source_up) {
  return net_forward(params, colour_features(guide, source_up));
}

std::vector<double> net_backward(const ConvNetParams& params, const ActivationTape& tape, const FeatureMap& grad_features) {
  const int layers = params.layer_count();
  if (static_cast<int>(tape.pre_activations.size()) != layers || tape.input.depth != params.input_channels())
    throw std::invalid_argument("net_backward: tape does not match the parameters");
  const FeatureMap& last = tape.pre_activations.back();
  if (grad_features.height != last.height || grad_features.width != last.width || grad_features.depth != last.depth)
    throw std::invalid_argument("net_backward: gradient shape does not match the tape");

  std::vector<double> grads(params.values().size(), 0.0);
  FeatureMap grad_pre = grad_features;
  for (int l = layers - 1; l >= 0; --l) {
    FeatureMap input;
    if (l == 0) {
      input = tape.input;
    } else {
      input = tape.pre_activations[l - 1];
      for (double& v : input.data) v = std::max(v, 0.0);
    }
    std::span<double> gk(grads.data() + params.kernel_offset(l), params.kernel(l).size());
    std::span<double> gb(grads.data() + params.bias_offset(l), params.bias(l).size());
    FeatureMap grad_input;
    conv3x3_backward(input, params.kernel(l), grad_pre, gk, gb, l > 0 ? &grad_input : nullptr);
    if (l > 0) {
      const FeatureMap& pre = tape.pre_activations[l - 1];
      for (std::size_t p = 0; p < grad_input.data.size(); ++p)
        if (pre.data[p] <= 0.0) grad_input.data[p] = 0.0;
      grad_pre = std::move(grad_input);
    }
  }
  return grads;
}

std::string encode_params(const ConvNetParams& params) {
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(params.widths().size()));
  for (int w : params.widths()) put_u32(out, static_cast<std::uint32_t>(w));
  for (double v : params.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

ConvNetParams decode_params(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw IoError(IoError::Kind::malformed_header, "not a parameter file (bad magic)");
  std::size_t pos = 4;
  const std::uint32_t version = get_u32(bytes, pos);
  if (version != kVersion)
    throw IoError(IoError::Kind::unsupported_format, "unsupported parameter file version " + std::to_string(version));
  const std::uint32_t count = get_u32(bytes, pos);
  if (count < 2 || count > 64) throw IoError(IoError::Kind::malformed_header, "bad layer count in parameter file");
  std::vector<int> widths(count);
  for (int& w : widths) {
    const std::uint32_t v = get_u32(bytes, pos);
    if (v < 1 || v > 4096) throw IoError(IoError::Kind::malformed_header, "bad layer width in parameter file");
    w = static_cast<int>(v);
  }
  ConvNetParams params = ConvNetParams::zeros(std::move(widths));
  for (double& v : params.values()) v = std::bit_cast<float>(get_u32(bytes, pos));
  if (pos != bytes.size()) throw IoError(IoError::Kind::malformed_header, "trailing bytes in parameter file");
  return params;
}

void save_params(const std::string& path, const ConvNetParams& params) { write_file(path, encode_params(params)); }
ConvNetParams load_params(const std::string& path) { return decode_params(read_file(path)); }

}  // namespace gsr
