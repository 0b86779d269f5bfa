#include "gsr/pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include "gsr/backward.hpp"
#include "gsr/downsampler.hpp"
#include "gsr/features.hpp"
#include "gsr/resample.hpp"

namespace gsr {

Model make_model(FeatureMode mode, int guide_channels, std::uint64_t seed) {
  if (mode == FeatureMode::learned) return {mode, ConvNetParams::standard(guide_channels, seed)};
  return {mode, ConvNetParams::zeros({guide_channels + 1, 1})};
}

FeatureMap extract_features(const Model& model, const GuideImage& guide, const TargetImage& source_up) {
  if (model.mode == FeatureMode::colour) return colour_features(guide, source_up);
  return net_forward(model.params, guide, source_up).features;
}

Prediction predict(const Model& model, const GuideImage& guide, const SourceImage& source, int k, double lambda,
                   SolveOptions options) {
  if (guide.height != source.height * k || guide.width != source.width * k)
    throw std::invalid_argument("predict: guide is not k times the source size");
  const TargetImage source_up = bicubic_upsample(source, k);
  const FeatureMap features = extract_features(model, guide, source_up);
  Prediction out;
  out.graph = compute_affinities(features, {model.params.raw_mu()});
  const DownsampleOperator down = build_box_downsampler(guide.height, guide.width, k).restricted_to(source.valid);
  ForwardResult fwd = forward_solve(out.graph, down, source, lambda, &source_up, options);
  out.target = std::move(fwd.target);
  out.report = fwd.report;
  return out;
}

LossResult masked_loss(LossKind kind, const TargetImage& pred, const TargetImage& gt) {
  if (pred.height != gt.height || pred.width != gt.width) throw std::invalid_argument("masked_loss: size mismatch");
  std::size_t n = 0;
  for (std::size_t p = 0; p < gt.size(); ++p) n += pred.valid[p] && gt.valid[p];
  if (n == 0) throw std::domain_error("no valid pixels");
  LossResult out;
  out.grad.assign(gt.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t p = 0; p < gt.size(); ++p) {
    if (!pred.valid[p] || !gt.valid[p]) continue;
    const double d = pred.data[p] - gt.data[p];
    if (kind == LossKind::l1) {
      out.value += std::abs(d) * inv_n;
      out.grad[p] = (d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0) * inv_n;
    } else {
      out.value += d * d * inv_n;
      out.grad[p] = 2.0 * d * inv_n;
    }
  }
  if (!std::isfinite(out.value)) throw NumericalError("non-finite loss");
  return out;
}

namespace {

struct ForwardState {
  DownsampleOperator down;
  SourceImage source;
  NetOutput net;
  AffinityScale scale;
  AffinityGraph graph;
  ForwardResult fwd;
};

ForwardState run_forward(const Model& model, const Sample& sample, int k, double lambda, SolveOptions options) {
  ForwardState st;
  st.down = build_box_downsampler(sample.depth.height, sample.depth.width, k, sample.depth.valid);
  st.source = SourceImage(sample.depth.height / k, sample.depth.width / k);
  st.source.data = st.down.apply(sample.depth.data);
  st.source.valid = st.down.row_mask();
  const TargetImage source_up = bicubic_upsample(st.source, k);
  if (model.mode == FeatureMode::learned) {
    st.net = net_forward(model.params, sample.guide, source_up);
  } else {
    st.net.features = colour_features(sample.guide, source_up);
  }
  st.scale = {model.params.raw_mu()};
  st.graph = compute_affinities(st.net.features, st.scale);
  st.fwd = forward_solve(st.graph, st.down, st.source, lambda, &source_up, options);
  return st;
}

}  // namespace

SampleGradient sample_loss_and_gradient(const Model& model, const Sample& sample, int k, double lambda, LossKind loss,
                                        SolveOptions options) {
  const ForwardState st = run_forward(model, sample, k, lambda, options);
  const LossResult l = masked_loss(loss, st.fwd.target, sample.depth);
  const LayerGradients layer = backward_solve(st.graph, st.down, lambda, st.fwd.target.data, l.grad, options);
  const AffinityGradients aff = affinity_backward(st.net.features, st.scale, layer.grad_edges);

  SampleGradient out;
  out.loss = l.value;
  out.cg_iterations = st.fwd.report.iterations + layer.report.iterations;
  if (model.mode == FeatureMode::learned) {
    out.grads = net_backward(model.params, st.net.tape, aff.grad_features);
  } else {
    out.grads.assign(model.params.values().size(), 0.0);
  }
  out.grads.back() = aff.grad_raw_mu;
  return out;
}

double sample_loss(const Model& model, const Sample& sample, int k, double lambda, LossKind loss,
                   SolveOptions options) {
  const ForwardState st = run_forward(model, sample, k, lambda, options);
  return masked_loss(loss, st.fwd.target, sample.depth).value;
}

}  // namespace gsr
