#pragma once

#include <optional>

#include "gsr/convnet.hpp"
#include "gsr/dataset.hpp"
#include "gsr/graph.hpp"
#include "gsr/solver.hpp"

namespace gsr {

enum class FeatureMode { colour, learned };
enum class LossKind { l1, mse };

/// Features and scale used to build the graph. In colour mode only
/// params.raw_mu() is read.
struct Model {
  FeatureMode mode = FeatureMode::colour;
  ConvNetParams params;
};

/// Colour mode carries a minimal one-layer parameter block so raw_mu has a home.
Model make_model(FeatureMode mode, int guide_channels, std::uint64_t seed);

FeatureMap extract_features(const Model& model, const GuideImage& guide, const TargetImage& source_up);

struct Prediction {
  TargetImage target;
  AffinityGraph graph;
  CgReport report;
};

/// Upsamples `source` by k: bicubic warm start, features, affinities, forward solve.
/// Invalid source pixels get empty downsampler rows.
Prediction predict(const Model& model, const GuideImage& guide, const SourceImage& source, int k, double lambda,
                   SolveOptions options = {});

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;  // d loss / d pred, zero outside the joint mask
};

/// Mean L1 or squared error over jointly valid pixels. The L1 subgradient at 0 is 0.
/// Throws std::domain_error("no valid pixels") on an empty intersection.
LossResult masked_loss(LossKind kind, const TargetImage& pred, const TargetImage& gt);

struct SampleGradient {
  double loss = 0.0;
  std::vector<double> grads;  // aligned with model.params.values()
  int cg_iterations = 0;      // forward + adjoint
};

/// One pass of features -> affinities -> forward solve -> loss -> adjoint
/// solve -> affinity and network backward. The source is synthesized from the
/// sample's depth with the box downsampler.
SampleGradient sample_loss_and_gradient(const Model& model, const Sample& sample, int k, double lambda, LossKind loss,
                                        SolveOptions options = {});

/// Loss only, same pipeline as above.
double sample_loss(const Model& model, const Sample& sample, int k, double lambda, LossKind loss,
                   SolveOptions options = {});

}  // namespace gsr
