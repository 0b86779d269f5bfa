#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "gsr/metrics.hpp"
#include "gsr/netpbm.hpp"
#include "gsr/resample.hpp"
#include "oracles.hpp"

using namespace gsr;

namespace {

std::string be16(std::initializer_list<int> values) {
  std::string s;
  for (int v : values) {
    s += static_cast<char>((v >> 8) & 0xff);
    s += static_cast<char>(v & 0xff);
  }
  return s;
}

DepthImage ramp(int h, int w, double a, double b, double c) {
  DepthImage img(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) img.at(i, j) = a + b * i + c * j;
  return img;
}

}  // namespace

TEST_SUITE("bicubic_upsample") {
  TEST_CASE("constant image stays constant for any scale") {
    for (int k : {1, 2, 3, 4, 8}) {
      const DepthImage src(5, 3, 5.0);
      const TargetImage up = bicubic_upsample(src, k);
      REQUIRE(up.height == 5 * k);
      REQUIRE(up.width == 3 * k);
      for (double v : up.data) CHECK(v == doctest::Approx(5.0).epsilon(1e-15));
    }
  }

  TEST_CASE("k = 1 is the identity") {
    std::mt19937_64 rng(1);
    DepthImage src(6, 7);
    src.data = oracle::random_vector(src.size(), rng);
    const TargetImage up = bicubic_upsample(src, 1);
    for (std::size_t p = 0; p < src.size(); ++p) CHECK(std::abs(up.data[p] - src.data[p]) <= 1e-15);
  }

  TEST_CASE("4x4 ramp at k = 2 matches the direct kernel-sum oracle") {
    const DepthImage src = ramp(4, 4, 1.0, 0.7, -0.3);
    const TargetImage up = bicubic_upsample(src, 2);
    double worst = 0.0;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        const double expected = oracle::bicubic_at(src, (i + 0.5) / 2 - 0.5, (j + 0.5) / 2 - 0.5);
        worst = std::max(worst, std::abs(up.at(i, j) - expected));
      }
    CHECK(worst <= 1e-9);
  }

  TEST_CASE("random image matches the oracle at other scales") {
    std::mt19937_64 rng(7);
    DepthImage src(5, 6);
    src.data = oracle::random_vector(src.size(), rng, 0.0, 10.0);
    for (int k : {3, 4}) {
      const TargetImage up = bicubic_upsample(src, k);
      for (int i = 0; i < up.height; ++i)
        for (int j = 0; j < up.width; ++j)
          CHECK(std::abs(up.at(i, j) - oracle::bicubic_at(src, (i + 0.5) / k - 0.5, (j + 0.5) / k - 0.5)) <= 1e-9);
    }
  }

  TEST_CASE("bilinear images are reproduced wherever the stencil stays inside") {
    // Clamped borders break linear reproduction in the outermost band, so the
    // check covers output pixels whose 4-tap stencils are all in range.
    const int k = 4;
    DepthImage src(8, 9);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 9; ++j) src.at(i, j) = 2.0 + 0.5 * i - 1.25 * j + 0.1 * i * j;
    const TargetImage up = bicubic_upsample(src, k);
    int checked = 0;
    for (int i = 0; i < up.height; ++i)
      for (int j = 0; j < up.width; ++j) {
        const double y = (i + 0.5) / k - 0.5, x = (j + 0.5) / k - 0.5;
        if (std::floor(y) - 1 < 0 || std::floor(y) + 2 > 7 || std::floor(x) - 1 < 0 || std::floor(x) + 2 > 8) continue;
        CHECK(std::abs(up.at(i, j) - (2.0 + 0.5 * y - 1.25 * x + 0.1 * y * x)) <= 1e-9);
        ++checked;
      }
    CHECK(checked > 100);
  }

  TEST_CASE("invalid pixels are filled from the nearest valid pixel") {
    DepthImage src(3, 3, 1.0);
    src.at(0, 0) = 9.0;
    src.at(2, 2) = 1e6;  // garbage under an invalid flag
    src.valid[8] = 0;
    src.valid[4] = 0;
    const SourceImage filled = fill_invalid_nearest(src);
    CHECK(filled.at(2, 2) == 1.0);
    CHECK(filled.at(1, 1) == 1.0);
    const TargetImage up = bicubic_upsample(src, 2);
    for (double v : up.data) CHECK(v < 20.0);
    CHECK(up.valid == upsample_mask(src.valid, 3, 3, 2));
    CHECK_FALSE(up.is_valid(5, 5));
    CHECK(up.is_valid(0, 0));
  }

  TEST_CASE("rejects k < 1") { CHECK_THROWS_AS(bicubic_upsample(DepthImage(2, 2), 0), std::invalid_argument); }
}

TEST_SUITE("metrics") {
  TEST_CASE("identical images give zero") {
    const DepthImage a = ramp(3, 3, 1, 2, 3);
    CHECK(masked_mse(a, a) == 0.0);
    CHECK(masked_mae(a, a) == 0.0);
  }

  TEST_CASE("constant offset of 2") {
    const DepthImage gt = ramp(4, 5, 0, 1, 1);
    DepthImage pred = gt;
    for (double& v : pred.data) v += 2.0;
    CHECK(masked_mse(pred, gt) == doctest::Approx(4.0));
    CHECK(masked_mae(pred, gt) == doctest::Approx(2.0));
  }

  TEST_CASE("one of four valid pixels off by 2") {
    DepthImage gt(2, 2, 1.0), pred(2, 2, 1.0);
    pred.at(1, 0) = 3.0;
    CHECK(masked_mse(pred, gt) == doctest::Approx(1.0));
    CHECK(masked_mae(pred, gt) == doctest::Approx(0.5));
  }

  TEST_CASE("invalid pixels never influence the metrics") {
    std::mt19937_64 rng(3);
    DepthImage gt(6, 6), pred(6, 6);
    gt.data = oracle::random_vector(36, rng);
    pred.data = oracle::random_vector(36, rng);
    for (int p = 0; p < 36; p += 5) gt.valid[p] = 0;
    pred.valid[7] = 0;
    const double mse = masked_mse(pred, gt), mae = masked_mae(pred, gt);
    for (int trial = 0; trial < 20; ++trial) {
      DepthImage p2 = pred, g2 = gt;
      for (int p = 0; p < 36; p += 5) g2.data[p] = oracle::random_vector(1, rng, -1e3, 1e3)[0];
      p2.data[7] = oracle::random_vector(1, rng, -1e3, 1e3)[0];
      CHECK(masked_mse(p2, g2) == mse);
      CHECK(masked_mae(p2, g2) == mae);
    }
  }

  TEST_CASE("empty joint mask is an error") {
    DepthImage a(2, 2), b(2, 2);
    a.valid = {1, 1, 0, 0};
    b.valid = {0, 0, 1, 1};
    CHECK_THROWS_WITH_AS(masked_mse(a, b), "no valid pixels", std::domain_error);
    CHECK_THROWS_WITH_AS(masked_mae(a, b), "no valid pixels", std::domain_error);
  }
}

TEST_SUITE("netpbm") {
  TEST_CASE("PFM round trip of a 3x3 depth map is bit-exact") {
    DepthImage img(3, 3);
    const float values[9] = {0.0f, 1.5f, -2.25f, 1e-7f, 3.4e38f, 123.456f, -0.0f, 7.0f, 1.0f / 3.0f};
    for (int p = 0; p < 9; ++p) img.data[p] = values[p];
    const DepthImage back = decode_depth(encode_pfm(img));
    REQUIRE(back.height == 3);
    REQUIRE(back.width == 3);
    for (int p = 0; p < 9; ++p) {
      const float f = static_cast<float>(back.data[p]);
      CHECK(std::memcmp(&f, &values[p], 4) == 0);
    }
    CHECK(encode_pfm(back) == encode_pfm(img));
  }

  TEST_CASE("PFM rows are stored bottom-to-top and invalid pixels are NaN") {
    DepthImage img(2, 1);
    img.data = {1.0, 2.0};
    img.valid = {1, 0};
    const std::string bytes = encode_pfm(img);
    const std::string header = "Pf\n1 2\n-1.0\n";
    REQUIRE(bytes.substr(0, header.size()) == header);
    float first, second;
    std::memcpy(&first, bytes.data() + header.size(), 4);
    std::memcpy(&second, bytes.data() + header.size() + 4, 4);
    CHECK(std::isnan(first));
    CHECK(second == 1.0f);
    const DepthImage back = decode_depth(bytes);
    CHECK(back.valid == Mask{1, 0});
    CHECK(back.data[1] == 0.0);
  }

  TEST_CASE("big-endian PFM is read") {
    std::string bytes = "Pf\n1 1\n1.0\n";
    const unsigned char be[4] = {0x40, 0x49, 0x0f, 0xdb};  // 3.14159274f
    bytes.append(reinterpret_cast<const char*>(be), 4);
    CHECK(decode_depth(bytes).data[0] == doctest::Approx(3.14159274));
  }

  TEST_CASE("16-bit PGM keeps raw units") {
    const std::string bytes = "P5\n2 1\n65535\n" + be16({1000, 65535});
    const DepthImage d = decode_depth(bytes);
    CHECK(d.data[0] == 1000.0);
    CHECK(d.data[1] == 65535.0);
  }

  TEST_CASE("PGM round trip is exact for in-range integers") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> dist(0, 65535);
    DepthImage img(4, 7);
    for (double& v : img.data) v = dist(rng);
    const DepthImage back = decode_depth(encode_pgm(img));
    CHECK(back.data == img.data);
    DepthImage small(2, 2);
    small.data = {0, 17, 254, 255};
    CHECK(decode_depth(encode_pgm(small, 255)).data == small.data);
  }

  TEST_CASE("PPM guides are byte / 255, planar") {
    std::string bytes = "P6\n2 2\n255\n";
    const unsigned char px[12] = {255, 0, 51, 0, 0, 0, 10, 20, 30, 255, 255, 255};
    bytes.append(reinterpret_cast<const char*>(px), 12);
    const GuideImage g = decode_guide(bytes);
    REQUIRE(g.channels == 3);
    CHECK(g.at(0, 0, 0) == 1.0);
    CHECK(g.at(2, 0, 0) == doctest::Approx(0.2));
    CHECK(g.at(1, 1, 0) == doctest::Approx(20.0 / 255));
    CHECK(g.at(2, 1, 1) == 1.0);
    CHECK(decode_guide(encode_ppm(g)).data == g.data);
  }

  TEST_CASE("comments in headers are skipped") {
    const std::string bytes = std::string("P5\n# made by hand\n1 1 # trailing\n255\n") + '\x07';
    CHECK(decode_depth(bytes).data[0] == 7.0);
  }

  TEST_CASE("masks: zero means invalid") {
    Mask m{1, 0, 1, 1, 0, 0};
    const DepthImage back = decode_mask(encode_mask(m, 2, 3));
    for (int p = 0; p < 6; ++p) CHECK((back.data[p] != 0.0) == (m[p] != 0));
  }

  TEST_CASE("errors are reported distinctly") {
    auto kind_of = [](const std::string& bytes) {
      try {
        decode_depth(bytes);
      } catch (const IoError& e) {
        return e.kind();
      }
      FAIL("no error");
      return IoError::Kind::open_failed;
    };
    CHECK(kind_of("P5\n2 x\n255\n") == IoError::Kind::malformed_header);
    CHECK(kind_of("P5\n2 2\n") == IoError::Kind::malformed_header);
    CHECK(kind_of("P5\n2 2\n255\nabc") == IoError::Kind::truncated_payload);
    CHECK(kind_of("Pf\n2 2\n-1.0\n1234567") == IoError::Kind::truncated_payload);
    CHECK(kind_of("P5\n1 1\n70000\n" + be16({1})) == IoError::Kind::unsupported_maxval);
    CHECK(kind_of("P5\n1 1\n0\n\x01") == IoError::Kind::unsupported_maxval);
    CHECK(kind_of("P3\n1 1\n255\n1") == IoError::Kind::unsupported_format);
    CHECK_THROWS_AS(load_depth("/nonexistent/file.pfm"), IoError);
  }
}
