#include <bit>
#include <cmath>
#include <filesystem>
#include <limits>
#include <utility>

#include <gtest/gtest.h>

#include "tmt/errors.hpp"
#include "tmt/image_io.hpp"
#include "tmt/serialize.hpp"

namespace tmt {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "tmt_unit_io";
  fs::create_directories(dir);
  return dir / name;
}

TEST(PgmTest, GoldenBytes) {
  const GrayImage img{3, 2, {0, 128, 255, 1, 2, 3}};
  const std::string expect = std::string("P5\n3 2\n255\n") + std::string("\x00\x80\xff\x01\x02\x03", 6);
  EXPECT_EQ(encode_pgm(img), expect);
}

TEST(PgmTest, RoundTripAndAscii) {
  const GrayImage img{2, 2, {9, 8, 7, 6}};
  const GrayImage back = decode_pgm(encode_pgm(img));
  EXPECT_EQ(back.pixels, img.pixels);
  EXPECT_EQ(back.width, 2u);
  const GrayImage ascii = decode_pgm("P2\n# comment\n2 1\n255\n10 20\n");
  EXPECT_EQ(ascii.pixels, (std::vector<std::uint8_t>{10, 20}));
}

TEST(PgmTest, MalformedInput) {
  EXPECT_THROW(decode_pgm("P6\n1 1\n255\nabc"), InputError);
  EXPECT_THROW(decode_pgm("P5\n2 2\n255\n\x01"), InputError);
  EXPECT_THROW(decode_pgm(""), InputError);
}

TEST(PpmTest, GoldenBytes) {
  const std::vector<std::uint8_t> rgb{1, 2, 3, 4, 5, 6};
  EXPECT_EQ(encode_ppm(2, 1, rgb), std::string("P6\n2 1\n255\n\x01\x02\x03\x04\x05\x06"));
  const std::vector<int> labels{0, 1};
  const std::string ppm = encode_label_ppm(2, 1, labels);
  const auto c0 = class_color(0), c1 = class_color(1);
  EXPECT_EQ(ppm.substr(11), std::string({static_cast<char>(c0[0]), static_cast<char>(c0[1]),
                                         static_cast<char>(c0[2]), static_cast<char>(c1[0]),
                                         static_cast<char>(c1[1]), static_cast<char>(c1[2])}));
  EXPECT_NE(c0, c1);
}

TEST(ImageTest, ScoreAndMaskImages) {
  const std::vector<double> s{0.0, 0.5, 1.0};
  EXPECT_EQ(score_image(3, 1, s).pixels, (std::vector<std::uint8_t>{0, 128, 255}));
  AttentionMask m = open_mask(2, 2);
  m.additive(1, 0) = -std::numeric_limits<double>::infinity();
  const GrayImage g = mask_image(m);
  EXPECT_EQ(g.width, 2u);
  EXPECT_EQ(g.height, 2u);
  EXPECT_EQ(g.pixels, (std::vector<std::uint8_t>{255, 255, 0, 255}));
}

TEST(F64Test, LittleEndianLayout) {
  const std::vector<double> v{1.0};
  const std::string bytes = encode_f64le(v);
  ASSERT_EQ(bytes.size(), 8u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[7]), 0x3f);
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 0xf0);
  EXPECT_EQ(decode_f64le(bytes), v);
  EXPECT_THROW(decode_f64le("abc"), InputError);
}

TEST(SerializeTest, SegModelRoundTripIsExact) {
  Rng rng(3);
  SegModelConfig cfg;
  cfg.layers = 2;
  cfg.patch_radius = 1;
  const SegModelParams p = make_seg_model(cfg, rng);
  const auto files = save_seg_model(scratch("model"), p);
  ASSERT_EQ(files.size(), 2u);
  const SegModelParams q = load_seg_model(scratch("model"));
  EXPECT_EQ(q.config.layers, 2u);
  EXPECT_EQ(q.config.patch_radius, 1u);
  EXPECT_EQ(flatten(q.refs()), flatten(p.refs()));
}

TEST(SerializeTest, MlpRoundTripIsExact) {
  Rng rng(4);
  const std::vector<std::size_t> dims{5, 7, 3, 1};
  const MlpParams p = make_mlp(dims, rng);
  save_mlp(scratch("mlp"), p);
  const MlpParams q = load_mlp(scratch("mlp"));
  EXPECT_EQ(q.layer_count(), 3u);
  EXPECT_EQ(flatten(q.refs()), flatten(p.refs()));
}

TEST(SerializeTest, TruncatedBinaryIsRejected) {
  Rng rng(5);
  const std::vector<std::size_t> dims{2, 2, 1};
  save_mlp(scratch("short"), make_mlp(dims, rng));
  const fs::path bin = scratch("short.bin");
  const std::string bytes = read_file(bin);
  write_file(bin, bytes.substr(0, bytes.size() - 8));
  EXPECT_THROW(load_mlp(scratch("short")), ShapeError);
}

TEST(SerializeTest, FeatureMapRoundTrip) {
  FeatureMap fm(2, 3, 4);
  for (std::size_t i = 0; i < fm.features.values().size(); ++i) fm.features.values()[i] = 0.1 * i - 1.0;
  save_feature_map(scratch("fm.f64"), fm);
  const FeatureMap back = load_feature_map(scratch("fm.f64"), 2, 3, 4);
  EXPECT_EQ(back.features, fm.features);
  EXPECT_THROW(load_feature_map(scratch("fm.f64"), 2, 3, 5), ShapeError);
}

TEST(FileTest, MissingFileIsInputError) {
  EXPECT_THROW(read_file(scratch("does_not_exist")), InputError);
}

}  // namespace
}  // namespace tmt
