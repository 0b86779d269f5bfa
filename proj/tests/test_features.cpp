#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "gsr/convnet.hpp"
#include "gsr/features.hpp"
#include "gsr/graph.hpp"
#include "gsr/netpbm.hpp"
#include "oracles.hpp"

using namespace gsr;

namespace {

FeatureMap random_map(int h, int w, int m, std::mt19937_64& rng) {
  FeatureMap f(h, w, m);
  f.data = oracle::random_vector(f.data.size(), rng);
  return f;
}

// Direct zero-padded cross-correlation, one output value at a time.
double conv_at(const FeatureMap& in, std::span<const double> kernel, double bias, int o, int i, int j) {
  double acc = bias;
  for (int c = 0; c < in.depth; ++c)
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        const int ii = i + di, jj = j + dj;
        if (ii < 0 || jj < 0 || ii >= in.height || jj >= in.width) continue;
        acc += kernel[(static_cast<std::size_t>(o) * in.depth + c) * 9 + (di + 1) * 3 + (dj + 1)] * in.at(c, ii, jj);
      }
  return acc;
}

}  // namespace

TEST_SUITE("colour features") {
  TEST_CASE("constant inputs give zero features and unit affinities") {
    const GuideImage guide(4, 4, 3, 0.25);
    const TargetImage up(4, 4, 12.0);
    const FeatureMap f = colour_features(guide, up);
    CHECK(f.depth == 4);
    for (double v : f.data) CHECK(v == 0.0);
    const AffinityGraph g = compute_affinities(f, {});
    for (std::size_t e = 0; e < g.weights.edge_count(); ++e) CHECK(g.weights.edge(e) == 1.0);
  }

  TEST_CASE("channel count is C + 1") {
    CHECK(colour_features(GuideImage(2, 3, 1), TargetImage(2, 3)).depth == 2);
    CHECK(colour_features(GuideImage(2, 3, 3), TargetImage(2, 3)).depth == 4);
  }

  TEST_CASE("step edge in the guide") {
    GuideImage guide(1, 4, 1);
    guide.data = {0, 0, 1, 1};
    const FeatureMap f = colour_features(guide, TargetImage(1, 4, 5.0));
    // mean 1/2, population std 1/2
    CHECK(f.data == std::vector<double>{-1, -1, 1, 1, 0, 0, 0, 0});
    const AffinityGraph g = compute_affinities(f, {});
    CHECK(g.weights.right[0] == 1.0);
    CHECK(g.weights.right[1] == doctest::Approx(std::exp(-4.0 / 2.0)).epsilon(1e-14));
    CHECK(g.weights.right[2] == 1.0);
  }

  TEST_CASE("standardized channels have zero mean and unit variance") {
    std::mt19937_64 rng(0);
    const FeatureMap f = standardize_channels(random_map(5, 7, 3, rng));
    for (int c = 0; c < 3; ++c) {
      double mean = 0.0, sq = 0.0;
      for (std::size_t p = 0; p < 35; ++p) mean += f.data[c * 35 + p] / 35;
      for (std::size_t p = 0; p < 35; ++p) sq += (f.data[c * 35 + p] - mean) * (f.data[c * 35 + p] - mean) / 35;
      CHECK(std::abs(mean) <= 1e-14);
      CHECK(std::abs(sq - 1.0) <= 1e-12);
    }
  }

  TEST_CASE("size mismatch") { CHECK_THROWS_AS(stack_inputs(GuideImage(2, 2, 3), TargetImage(2, 3)), std::invalid_argument); }
}

TEST_SUITE("conv net") {
  TEST_CASE("standard architecture") {
    const ConvNetParams p = ConvNetParams::standard(3, 1);
    CHECK(p.widths() == std::vector<int>{4, 32, 32, 32, 16});
    CHECK(p.layer_count() == 4);
    CHECK(p.values().size() == (4 * 32 + 32 * 32 * 2 + 32 * 16) * 9 + 32 * 3 + 16 + 1);
    CHECK(p.raw_mu() == 0.0);
    for (int l = 0; l < 4; ++l) {
      const double bound = std::sqrt(6.0 / (p.widths()[l] * 9));
      for (double v : p.kernel(l)) CHECK(std::abs(v) <= bound);
      for (double v : p.bias(l)) CHECK(v == 0.0);
    }
  }

  TEST_CASE("initialization is deterministic per seed") {
    CHECK(ConvNetParams::standard(3, 7).values() == ConvNetParams::standard(3, 7).values());
    CHECK(ConvNetParams::standard(3, 7).values() != ConvNetParams::standard(3, 8).values());
  }

  TEST_CASE("zero parameters give zero features") {
    std::mt19937_64 rng(1);
    const NetOutput out = net_forward(ConvNetParams::zeros({2, 4, 3}), random_map(5, 5, 2, rng));
    CHECK(out.features.depth == 3);
    for (double v : out.features.data) CHECK(v == 0.0);
  }

  TEST_CASE("identity kernel reproduces the input") {
    std::mt19937_64 rng(2);
    ConvNetParams p = ConvNetParams::zeros({2, 2});
    for (int c = 0; c < 2; ++c) p.kernel(0)[(c * 2 + c) * 9 + 4] = 1.0;
    const FeatureMap in = random_map(4, 6, 2, rng);
    CHECK(net_forward(p, in).features.data == in.data);
  }

  TEST_CASE("single layer matches direct correlation") {
    std::mt19937_64 rng(3);
    const ConvNetParams p({3, 2}, 5);
    ConvNetParams q = p;
    q.bias(0)[0] = 0.3;
    q.bias(0)[1] = -0.2;
    const FeatureMap in = random_map(5, 4, 3, rng);
    const FeatureMap out = net_forward(q, in).features;
    for (int o = 0; o < 2; ++o)
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 4; ++j)
          CHECK(std::abs(out.at(o, i, j) - conv_at(in, q.kernel(0), q.bias(0)[o], o, i, j)) <= 1e-14);
  }

  TEST_CASE("translation equivariance away from the border") {
    std::mt19937_64 rng(4);
    const ConvNetParams p({1, 4, 2}, 9);
    FeatureMap a(12, 12, 1), b(12, 12, 1);
    for (int i = 4; i < 7; ++i)
      for (int j = 4; j < 7; ++j) {
        const double v = oracle::random_vector(1, rng)[0];
        a.at(0, i, j) = v;
        b.at(0, i + 1, j + 2) = v;
      }
    // Biases are zero, so the response is confined to a small neighbourhood.
    const FeatureMap fa = net_forward(p, a).features, fb = net_forward(p, b).features;
    for (int c = 0; c < 2; ++c)
      for (int i = 1; i < 9; ++i)
        for (int j = 1; j < 8; ++j) CHECK(std::abs(fa.at(c, i, j) - fb.at(c, i + 1, j + 2)) <= 1e-14);
  }

  TEST_CASE("backward matches finite differences over every parameter") {
    std::mt19937_64 rng(5);
    ConvNetParams p({2, 4, 4, 3}, 11);
    for (int l = 0; l < p.layer_count(); ++l)
      for (double& b : p.bias(l)) b = 0.1 * oracle::random_vector(1, rng)[0];
    const FeatureMap in = random_map(8, 8, 2, rng);
    FeatureMap upstream(8, 8, 3);
    upstream.data = oracle::random_vector(upstream.data.size(), rng);
    auto loss = [&](const ConvNetParams& q) { return oracle::dot(net_forward(q, in).features.data, upstream.data); };
    const NetOutput out = net_forward(p, in);
    const std::vector<double> grads = net_backward(p, out.tape, upstream);
    REQUIRE(grads.size() == p.values().size());
    CHECK(grads.back() == 0.0);
    const double h = 1e-4;
    double worst = 0.0;
    for (std::size_t n = 0; n + 1 < p.values().size(); ++n) {
      ConvNetParams plus = p, minus = p;
      plus.values()[n] += h;
      minus.values()[n] -= h;
      const double numeric = (loss(plus) - loss(minus)) / (2 * h);
      worst = std::max(worst, std::abs(grads[n] - numeric) / std::max({std::abs(grads[n]), std::abs(numeric), 1e-6}));
    }
    CHECK(worst <= 1e-5);
  }

  TEST_CASE("input gradient of a convolution is its adjoint") {
    std::mt19937_64 rng(6);
    const ConvNetParams p({3, 2}, 3);
    const FeatureMap x = random_map(6, 5, 3, rng);
    FeatureMap v(6, 5, 2);
    v.data = oracle::random_vector(v.data.size(), rng);
    const std::vector<double> zero_bias(2, 0.0);
    FeatureMap kx;
    conv3x3_forward(x, p.kernel(0), zero_bias, kx);
    std::vector<double> gk(p.kernel(0).size(), 0.0), gb(2, 0.0);
    FeatureMap ktv;
    conv3x3_backward(x, p.kernel(0), v, gk, gb, &ktv);
    CHECK(std::abs(oracle::dot(kx.data, v.data) - oracle::dot(x.data, ktv.data)) <= 1e-12);
  }

  TEST_CASE("wrong input depth") {
    CHECK_THROWS_AS(net_forward(ConvNetParams({3, 2}, 0), FeatureMap(2, 2, 2)), std::invalid_argument);
  }
}

TEST_SUITE("parameter files") {
  TEST_CASE("round trip through float32") {
    ConvNetParams p = ConvNetParams::standard(3, 2);
    p.raw_mu() = -0.75;
    const ConvNetParams q = decode_params(encode_params(p));
    CHECK(q.widths() == p.widths());
    for (std::size_t n = 0; n < p.values().size(); ++n)
      CHECK(q.values()[n] == static_cast<double>(static_cast<float>(p.values()[n])));
    CHECK(q.raw_mu() == -0.75);
  }

  TEST_CASE("header layout") {
    const std::string bytes = encode_params(ConvNetParams::zeros({2, 1}));
    CHECK(bytes.substr(0, 4) == "GSRP");
    CHECK(bytes.size() == 4 + 4 + 4 + 2 * 4 + (18 + 1 + 1) * 4);
    CHECK(bytes[4] == 1);
    CHECK(bytes[8] == 2);
  }

  TEST_CASE("file round trip") {
    const auto path = (std::filesystem::temp_directory_path() / "gsr_test_params.bin").string();
    const ConvNetParams p({4, 3, 2}, 1);
    save_params(path, p);
    CHECK(decode_params(encode_params(load_params(path))).values() == load_params(path).values());
    CHECK(load_params(path).widths() == p.widths());
    std::filesystem::remove(path);
  }

  TEST_CASE("malformed files") {
    std::string bytes = encode_params(ConvNetParams::zeros({2, 1}));
    CHECK_THROWS_AS(decode_params(bytes.substr(0, bytes.size() - 2)), IoError);
    CHECK_THROWS_AS(decode_params(bytes + "x"), IoError);
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_params(bad_magic), IoError);
    std::string bad_version = bytes;
    bad_version[4] = 2;
    CHECK_THROWS_AS(decode_params(bad_version), IoError);
    CHECK_THROWS_AS(load_params("/nonexistent/params.bin"), IoError);
  }
}
