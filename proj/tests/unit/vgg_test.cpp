// Copyright 2026 The HistoStyle Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <fstream>
#include <iterator>

#include "histostyle/vgg.hpp"
#include "test_util.hpp"

namespace histostyle {
namespace {

namespace fs = std::filesystem;
using testing::max_relative_error;
using testing::random_image;
using testing::random_tensor;

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

TEST(Layers, StandardPrefix) {
  const auto& layers = vgg19_layers();
  std::vector<std::string> names;
  for (const auto& l : layers) names.push_back(l.name);
  const std::vector<std::string> expected = {
      "conv1_1", "relu1_1", "conv1_2", "relu1_2", "pool1",
      "conv2_1", "relu2_1", "conv2_2", "relu2_2", "pool2",
      "conv3_1", "relu3_1", "conv3_2", "relu3_2", "conv3_3", "relu3_3",
      "conv3_4", "relu3_4", "pool3",
      "conv4_1", "relu4_1", "conv4_2", "relu4_2", "conv4_3", "relu4_3",
      "conv4_4", "relu4_4", "pool4",
      "conv5_1", "relu5_1"};
  EXPECT_EQ(names, expected);
  std::map<std::string, std::size_t> widths;
  for (const auto& l : layers) {
    if (l.kind == LayerKind::kConv) widths[l.name] = l.channels_out;
  }
  EXPECT_EQ(widths["conv1_1"], 64u);
  EXPECT_EQ(widths["conv1_2"], 64u);
  EXPECT_EQ(widths["conv2_1"], 128u);
  EXPECT_EQ(widths["conv3_4"], 256u);
  EXPECT_EQ(widths["conv4_2"], 512u);
  EXPECT_EQ(widths["conv5_1"], 512u);
  EXPECT_EQ(layers.front().channels_in, 3u);
}

TEST(Layers, DivisorKeepsTopology) {
  const auto tiny = vgg19_layers(16);
  ASSERT_EQ(tiny.size(), vgg19_layers().size());
  for (std::size_t i = 0; i < tiny.size(); ++i) {
    EXPECT_EQ(tiny[i].name, vgg19_layers()[i].name);
    EXPECT_EQ(tiny[i].kind, vgg19_layers()[i].kind);
  }
  EXPECT_EQ(tiny[0].channels_out, 4u);
  EXPECT_EQ(tiny[28].channels_out, 32u);
  EXPECT_THROW(vgg19_layers(0), InvalidInput);
}

TEST(Layers, TapsResolve) {
  const VggNetwork net(random_weights(vgg19_layers(16), 1));
  EXPECT_NO_THROW(net.layer_index(kContentTap));
  for (const char* tap : kStyleTaps) EXPECT_NO_THROW(net.layer_index(tap));
  EXPECT_THROW(net.layer_index("relu6_1"), InvalidInput);
}

class WeightFile : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = testing::make_temp_dir("weights"); }
  fs::path dir_;
};

TEST_F(WeightFile, RoundTrip) {
  const auto layers = vgg19_layers(8);
  const auto w = random_weights(layers, 7);
  const auto path = dir_ / "w.bin";
  const auto crc = save_weights(w, path);
  const auto loaded = load_weights(path, layers);
  EXPECT_EQ(loaded.checksum, crc);
  ASSERT_EQ(loaded.conv.size(), 13u);
  for (const auto& [name, cw] : w.conv) {
    EXPECT_EQ(loaded.conv.at(name).kernel, cw.kernel) << name;
    EXPECT_EQ(loaded.conv.at(name).bias, cw.bias) << name;
  }
}

TEST_F(WeightFile, FullSizeShapesAndBadWidth) {
  const auto path = dir_ / "full.bin";
  save_weights(random_weights(vgg19_layers(), 3), path);
  const auto loaded = load_weights(path, vgg19_layers());
  EXPECT_EQ(loaded.conv.at("conv1_1").kernel.shape(), (Shape{64, 3, 3, 3}));
  EXPECT_EQ(loaded.conv.at("conv5_1").kernel.shape(), (Shape{512, 512, 3, 3}));

  auto layers = vgg19_layers();
  for (auto& l : layers) {
    if (l.name == "conv2_1") l.channels_out = 127;
    if (l.name == "conv2_2") l.channels_in = 127;
  }
  const auto bad = dir_ / "bad.bin";
  save_weights(random_weights(layers, 4), bad);
  try {
    load_weights(bad, vgg19_layers());
    FAIL() << "expected IncompatibleWeights";
  } catch (const IncompatibleWeights& e) {
    EXPECT_EQ(e.layer(), "conv2_1");
    EXPECT_NE(std::string(e.what()).find("conv2_1"), std::string::npos);
  }
}

TEST_F(WeightFile, FileLayoutIsLittleEndian) {
  const auto layers = vgg19_layers(64);
  auto w = random_weights(layers, 9);
  w.conv.at("conv1_1").kernel[0] = 1.0f;
  const auto path = dir_ / "w.bin";
  save_weights(w, path);
  const auto bytes = read_bytes(path);
  ASSERT_GE(bytes.size(), 40u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "VGGW");
  EXPECT_EQ(bytes[4], 1);  // version
  EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
  EXPECT_EQ(bytes[8], 13);  // layer count
  EXPECT_EQ(bytes[12], 7);  // "conv1_1"
  EXPECT_EQ(bytes[13], 0);
  EXPECT_EQ(std::string(bytes.begin() + 14, bytes.begin() + 21), "conv1_1");
  EXPECT_EQ(bytes[21], 1);  // out = ceil(64/64)
  EXPECT_EQ(bytes[25], 3);  // in
  EXPECT_EQ(bytes[29], 3);
  EXPECT_EQ(bytes[33], 3);
  // 1.0f = 0x3f800000, little-endian.
  EXPECT_EQ(bytes[37], 0x00);
  EXPECT_EQ(bytes[39], 0x80);
  EXPECT_EQ(bytes[40], 0x3f);
}

TEST_F(WeightFile, BadMagicAndVersion) {
  const auto layers = vgg19_layers(16);
  const auto path = dir_ / "w.bin";
  save_weights(random_weights(layers, 1), path);
  auto bytes = read_bytes(path);
  auto magic = bytes;
  magic[0] = 'X';
  write_bytes(path, magic);
  EXPECT_THROW(load_weights(path, layers), FormatError);
  auto version = bytes;
  version[4] = 2;
  write_bytes(path, version);
  EXPECT_THROW(load_weights(path, layers), FormatError);
}

TEST_F(WeightFile, TruncationAndCorruption) {
  const auto layers = vgg19_layers(16);
  const auto path = dir_ / "w.bin";
  save_weights(random_weights(layers, 1), path);
  const auto bytes = read_bytes(path);
  for (std::size_t keep : {std::size_t{2}, std::size_t{10}, bytes.size() / 2,
                           bytes.size() - 1}) {
    write_bytes(path, std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + keep));
    EXPECT_THROW(load_weights(path, layers), IoError) << keep;
  }
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  write_bytes(path, flipped);
  EXPECT_THROW(load_weights(path, layers), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  write_bytes(path, trailing);
  EXPECT_THROW(load_weights(path, layers), FormatError);
  EXPECT_THROW(load_weights(dir_ / "missing.bin", layers), IoError);
}

TEST_F(WeightFile, NonFiniteRejected) {
  const auto layers = vgg19_layers(16);
  auto w = random_weights(layers, 1);
  w.conv.at("conv3_1").bias[0] = std::numeric_limits<float>::quiet_NaN();
  const auto path = dir_ / "w.bin";
  save_weights(w, path);
  EXPECT_THROW(load_weights(path, layers), FormatError);
}

TEST_F(WeightFile, MissingAndExtraLayers) {
  const auto layers = vgg19_layers(16);
  const auto path = dir_ / "w.bin";
  auto fewer = layers;
  fewer.erase(fewer.begin() + 28, fewer.end());  // drop conv5_1, relu5_1
  save_weights(random_weights(fewer, 1), path);
  try {
    load_weights(path, layers);
    FAIL();
  } catch (const IncompatibleWeights& e) {
    EXPECT_EQ(e.layer(), "conv5_1");
  }
  save_weights(random_weights(layers, 1), path);
  try {
    load_weights(path, fewer);
    FAIL();
  } catch (const IncompatibleWeights& e) {
    EXPECT_EQ(e.layer(), "conv5_1");
  }
}

TEST(Network, RejectsMismatchedWeights) {
  auto w = random_weights(vgg19_layers(16), 1);
  w.conv.erase("conv3_2");
  EXPECT_THROW(VggNetwork{w}, IncompatibleWeights);
}

TEST(Preprocess, MeansAndRoundTrip) {
  const PreprocessConfig cfg;
  const auto zero = preprocess(RgbImage(4, 3, 0), cfg);
  ASSERT_EQ(zero.shape(), (Shape{3, 3, 4}));
  for (std::size_t c = 0; c < 3; ++c) {
    for (float v : zero.channel(c)) EXPECT_EQ(v, -cfg.channel_means[c]);
  }
  const auto full = preprocess(RgbImage(4, 3, 255), cfg);
  const double expected[3] = {131.32, 138.221, 151.061};
  for (std::size_t c = 0; c < 3; ++c) {
    for (float v : full.channel(c)) EXPECT_NEAR(v, expected[c], 1e-4);
  }
  const auto img = random_image(17, 9, 5);
  EXPECT_EQ(deprocess(preprocess(img, cfg), cfg), img);
  EXPECT_EQ(deprocess(preprocess<double>(img, cfg), cfg), img);
}

TEST(Preprocess, DeprocessClamps) {
  BasicTensor<float> t(Shape{3, 1, 2});
  t.at(0, 0, 0) = 1000.0f;
  t.at(0, 0, 1) = -1000.0f;
  const auto img = deprocess(t);
  EXPECT_EQ(img.pixel(0, 0)[0], 255);
  EXPECT_EQ(img.pixel(1, 0)[0], 0);
  EXPECT_THROW(deprocess(Tensor(Shape{1, 2, 2})), InvalidInput);
}

class TinyNetwork : public ::testing::Test {
 protected:
  TinyNetwork() : net_(random_weights(vgg19_layers(16), 42)) {}
  VggNetwork net_;
};

TEST_F(TinyNetwork, TapShapes) {
  const auto input = random_tensor<float>(Shape{3, 64, 64}, 1, -100, 100);
  std::set<std::string> taps(kStyleTaps.begin(), kStyleTaps.end());
  taps.insert(kContentTap);
  const auto fwd = net_.forward_with_taps(input, taps);
  ASSERT_EQ(fwd.taps.size(), 6u);
  EXPECT_EQ(fwd.taps.at("conv4_2").shape(), (Shape{32, 8, 8}));
  const std::size_t widths[5] = {4, 8, 16, 32, 32};
  for (std::size_t k = 0; k < 5; ++k) {
    const std::size_t side = 64 >> k;
    EXPECT_EQ(fwd.taps.at(kStyleTaps[k]).shape(), (Shape{widths[k], side, side}));
  }
}

TEST_F(TinyNetwork, FullWidthContentTapShape) {
  const VggNetwork full(random_weights(vgg19_layers(), 1));
  const auto input = random_tensor<float>(Shape{3, 64, 64}, 2, -100, 100);
  const auto fwd = full.forward_with_taps(input, {"conv4_2", "relu1_1"});
  EXPECT_EQ(fwd.taps.at("conv4_2").shape(), (Shape{512, 8, 8}));
  EXPECT_EQ(fwd.taps.at("relu1_1").shape(), (Shape{64, 64, 64}));
}

TEST_F(TinyNetwork, EmptyTapSet) {
  const auto input = random_tensor<float>(Shape{3, 32, 32}, 3);
  const auto fwd = net_.forward_with_taps(input, {});
  EXPECT_TRUE(fwd.taps.empty());
  EXPECT_EQ(fwd.cache.depth, 0u);
}

TEST_F(TinyNetwork, InputValidation) {
  EXPECT_THROW(net_.forward_with_taps(Tensor(Shape{1, 32, 32}), {"relu1_1"}), InvalidInput);
  EXPECT_THROW(net_.forward_with_taps(Tensor(Shape{3, 32, 32}), {"bogus"}), InvalidInput);
}

TEST_F(TinyNetwork, OddSizesFlowThrough) {
  const auto input = random_tensor<float>(Shape{3, 37, 21}, 4);
  const auto fwd = net_.forward_with_taps(input, {"relu5_1"});
  EXPECT_EQ(fwd.taps.at("relu5_1").shape(), (Shape{32, 3, 2}));
}

TEST_F(TinyNetwork, Deterministic) {
  const auto input = random_tensor<float>(Shape{3, 32, 32}, 5, -100, 100);
  const std::set<std::string> taps = {"relu1_1", "conv4_2", "relu5_1"};
  const auto a = net_.forward_with_taps(input, taps);
  const auto b = net_.forward_with_taps(input, taps);
  for (const auto& tap : taps) EXPECT_EQ(a.taps.at(tap), b.taps.at(tap));
}

TEST_F(TinyNetwork, BackwardZeroAndCacheChecks) {
  const auto input = random_tensor<float>(Shape{3, 32, 32}, 6);
  const auto fwd = net_.forward_with_taps(input, {"relu2_1", "conv4_2"});
  std::map<std::string, Tensor> grads;
  for (const auto& [name, t] : fwd.taps) grads[name] = Tensor(t.shape());
  const auto g = net_.backward_from_taps(grads, fwd.cache);
  ASSERT_EQ(g.shape(), input.shape());
  for (float v : g.storage()) EXPECT_EQ(v, 0.0f);

  EXPECT_THROW(net_.backward_from_taps({{"relu3_1", Tensor(Shape{16, 8, 8})}}, fwd.cache),
               InvalidInput);
  EXPECT_THROW(net_.backward_from_taps(grads, ForwardCache<float>{}), InvalidInput);
  const VggNetwork other(random_weights(vgg19_layers(16), 43));
  EXPECT_THROW(other.backward_from_taps(grads, fwd.cache), InvalidInput);
}

TEST_F(TinyNetwork, TapAdditivity) {
  const auto input = random_tensor<float>(Shape{3, 32, 32}, 7, -100, 100);
  const std::set<std::string> taps = {"relu1_1", "relu3_1", "conv4_2", "relu5_1"};
  const auto fwd = net_.forward_with_taps(input, taps);
  std::map<std::string, Tensor> all;
  std::uint64_t seed = 100;
  for (const auto& [name, t] : fwd.taps) all[name] = random_tensor<float>(t.shape(), seed++);
  const auto joint = net_.backward_from_taps(all, fwd.cache);
  std::vector<double> sum(joint.size(), 0.0);
  for (const auto& [name, g] : all) {
    const auto part = net_.backward_from_taps({{name, g}}, fwd.cache);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += part[i];
  }
  EXPECT_LT(max_relative_error(joint, sum), 1e-6);
}

TEST(NetworkGradient, FiniteDifferencesDouble) {
  // Composite scalar sum_t <tap_t, r_t> over all six taps, in double.
  const BasicVggNetwork<double> net(random_weights(vgg19_layers(16), 8).cast<double>());
  const auto input = random_tensor<double>(Shape{3, 16, 16}, 9, -50, 50);
  std::set<std::string> taps(kStyleTaps.begin(), kStyleTaps.end());
  taps.insert(kContentTap);
  const auto fwd = net.forward_with_taps(input, taps);
  std::map<std::string, BasicTensor<double>> probes;
  std::uint64_t seed = 200;
  for (const auto& [name, t] : fwd.taps) probes[name] = random_tensor<double>(t.shape(), seed++);
  const auto analytic = net.backward_from_taps(probes, fwd.cache);
  const std::function<double(const BasicTensor<double>&)> f =
      [&](const BasicTensor<double>& x) {
        const auto r = net.forward_with_taps(x, taps);
        double s = 0.0;
        for (const auto& [name, t] : r.taps) s += testing::inner(t, probes.at(name));
        return s;
      };
  const auto numeric = testing::central_differences<double>(f, input, 1e-4);
  EXPECT_LT(max_relative_error(analytic.storage(), numeric), 1e-3);
}

}  // namespace
}  // namespace histostyle
