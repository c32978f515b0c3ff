#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <sstream>

#include "advkit/advkit.hpp"
#include "test_support.hpp"

namespace advkit {
namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

TEST(Blobs, Deterministic) {
  const auto a = gen_blobs(5, 4, 3, 10, 1.0);
  const auto b = gen_blobs(5, 4, 3, 10, 1.0);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(gen_blobs(6, 4, 3, 10, 1.0).inputs, a.inputs);
}

TEST(Blobs, ShapeAndLabels) {
  const auto d = gen_blobs(1, 5, 7, 9, 0.5);
  EXPECT_EQ(d.size(), 45u);
  EXPECT_EQ(d.dim(), 7u);
  EXPECT_EQ(d.num_classes, 5u);
  EXPECT_FALSE(d.bounds.has_value());
  for (std::size_t c = 0; c < 5; ++c)
    EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), c), 9);
}

TEST(Blobs, TinySpreadCollapsesToCenters) {
  const double spread = 1e-9;
  const auto centers = blob_centers(3, 4, 5, spread);
  const auto d = gen_blobs(3, 4, 5, 6, spread);
  for (std::size_t i = 0; i < d.size(); ++i)
    EXPECT_LT(norm_l2(sub(d.inputs[i], centers[d.labels[i]])), 1e-7);
}

TEST(Blobs, CentersAreSeparated) {
  const auto centers = blob_centers(4, 10, 20, 1.0);
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j) EXPECT_GE(norm_l2(sub(centers[i], centers[j])), 6.0);
}

TEST(Blobs, LinearlySeparable) {
  const auto data = gen_blobs(8, 5, 10, 80, 1.0);
  auto [train, test] = split(data, 0.25, 8);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.seed = 8;
  const std::vector<std::size_t> widths{10, 5};
  const auto trained = train_classifier(train, widths, cfg);
  EXPECT_GE(accuracy(trained.model, test), 0.99);
}

TEST(Blobs, RejectsBadArguments) {
  EXPECT_THROW(gen_blobs(1, 1, 3, 5, 1.0), Error);
  EXPECT_THROW(gen_blobs(1, 3, 3, 0, 1.0), Error);
  EXPECT_THROW(gen_blobs(1, 3, 3, 5, 0.0), Error);
}

TEST(Embed, NoiselessEmbeddingPreservesDistancesAndNorms) {
  const auto d = gen_blobs(4, 3, 5, 6, 1.0);
  const auto e = embed_isometric(d, 40, 0.0, 9);
  ASSERT_EQ(e.dim(), 40u);
  EXPECT_EQ(e.labels, d.labels);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_NEAR(norm_l2(e.inputs[i]), norm_l2(d.inputs[i]), 1e-10);
    for (std::size_t j = i + 1; j < d.size(); j += 3)
      EXPECT_NEAR(norm_l2(sub(e.inputs[i], e.inputs[j])), norm_l2(sub(d.inputs[i], d.inputs[j])), 1e-10);
  }
}

TEST(Embed, DeterministicAndSeedSensitive) {
  const auto d = gen_blobs(2, 2, 3, 4, 1.0);
  EXPECT_EQ(embed_isometric(d, 10, 0.1, 5).inputs, embed_isometric(d, 10, 0.1, 5).inputs);
  EXPECT_NE(embed_isometric(d, 10, 0.1, 5).inputs, embed_isometric(d, 10, 0.1, 6).inputs);
}

TEST(Embed, NoiseScale) {
  LabeledDataset d;
  d.num_classes = 2;
  d.inputs.assign(200, Vector{0.0, 0.0});
  d.labels.assign(200, 0);
  const auto e = embed_isometric(d, 50, 0.3, 1);
  double ss = 0.0;
  for (const auto& x : e.inputs) ss += dot(x, x);
  EXPECT_NEAR(std::sqrt(ss / (200.0 * 50.0)), 0.3, 0.01);
}

TEST(Embed, RejectsBadArguments) {
  const auto d = gen_blobs(1, 2, 4, 2, 1.0);
  EXPECT_THROW(embed_isometric(d, 3, 0.0, 1), Error);
  EXPECT_THROW(embed_isometric(d, 8, -1.0, 1), Error);
}

// Two 3x3 images with labels 7 and 2.
std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>> hand_idx() {
  std::vector<std::uint8_t> images{0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 3};
  for (int i = 0; i < 9; ++i) images.push_back(static_cast<std::uint8_t>(i * 30));
  for (int i = 0; i < 9; ++i) images.push_back(static_cast<std::uint8_t>(255 - i));
  std::vector<std::uint8_t> labels{0, 0, 8, 1, 0, 0, 0, 2, 7, 2};
  return {images, labels};
}

TEST(Idx, ParsesHandFixture) {
  const auto [images, labels] = hand_idx();
  IdxShape shape;
  const auto d = parse_idx(images, labels, &shape);
  EXPECT_EQ(shape.rows, 3u);
  EXPECT_EQ(shape.cols, 3u);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.labels, (std::vector<std::size_t>{7, 2}));
  EXPECT_EQ(d.num_classes, 8u);
  EXPECT_EQ(d.inputs[0][1], 30.0 / 255.0);
  EXPECT_EQ(d.inputs[1][0], 1.0);
  ASSERT_TRUE(d.bounds.has_value());
  EXPECT_EQ(d.bounds->lo, 0.0);
  EXPECT_EQ(d.bounds->hi, 1.0);
}

TEST(Idx, RejectsWrongMagic) {
  auto [images, labels] = hand_idx();
  images[3] = 0x02;
  try {
    parse_idx(images, labels);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::format);
    EXPECT_NE(std::string(e.what()).find("0x00000802"), std::string::npos);
  }
}

TEST(Idx, ByteExactRoundTrip) {
  const auto [images, labels] = hand_idx();
  IdxShape shape;
  const auto d = parse_idx(images, labels, &shape);
  const auto enc = encode_idx(d, shape);
  EXPECT_EQ(enc.images, images);
  EXPECT_EQ(enc.labels, labels);

  const auto ip = temp_path("advkit_idx_images"), lp = temp_path("advkit_idx_labels");
  write_idx(d, shape, ip, lp);
  const auto back = load_idx(ip, lp);
  std::filesystem::remove(ip);
  std::filesystem::remove(lp);
  EXPECT_EQ(back.inputs, d.inputs);
  EXPECT_EQ(back.labels, d.labels);
}

TEST(Idx, EverySingleByteHeaderCorruptionIsRejected) {
  const auto [images, labels] = hand_idx();
  for (std::size_t b = 0; b < 16; ++b) {
    auto bad = images;
    bad[b] ^= 0xFF;
    EXPECT_THROW(parse_idx(bad, labels), Error) << "image header byte " << b;
  }
  for (std::size_t b = 0; b < 8; ++b) {
    auto bad = labels;
    bad[b] ^= 0xFF;
    EXPECT_THROW(parse_idx(images, bad), Error) << "label header byte " << b;
  }
}

TEST(Idx, TruncationAndPadding) {
  auto [images, labels] = hand_idx();
  auto shorter = images;
  shorter.pop_back();
  EXPECT_THROW(parse_idx(shorter, labels), Error);
  auto longer = images;
  longer.push_back(0);
  EXPECT_THROW(parse_idx(longer, labels), Error);
  EXPECT_THROW(parse_idx(std::vector<std::uint8_t>(images.begin(), images.begin() + 10), labels), Error);
  labels.pop_back();
  EXPECT_THROW(parse_idx(images, labels), Error);
}

TEST(Idx, MissingFileIsIoError) {
  try {
    load_idx("/nonexistent/images", "/nonexistent/labels");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}

LabeledDataset counted(std::size_t n, std::size_t classes) {
  LabeledDataset d;
  d.num_classes = classes;
  for (std::size_t i = 0; i < n; ++i) {
    d.inputs.push_back({static_cast<double>(i), 1.0});
    d.labels.push_back(i % classes);
  }
  return d;
}

TEST(Split, SizesDisjointAndComplete) {
  const auto d = counted(100, 4);
  const auto [train, test] = split(d, 0.4, 3);
  EXPECT_EQ(train.size(), 60u);
  EXPECT_EQ(test.size(), 40u);
  std::set<double> ids;
  for (const auto& x : train.inputs) ids.insert(x[0]);
  for (const auto& x : test.inputs) EXPECT_TRUE(ids.insert(x[0]).second);
  EXPECT_EQ(ids.size(), 100u);
}

TEST(Split, Deterministic) {
  const auto d = counted(50, 3);
  EXPECT_EQ(split(d, 0.3, 9).second.inputs, split(d, 0.3, 9).second.inputs);
  EXPECT_NE(split(d, 0.3, 9).second.inputs, split(d, 0.3, 10).second.inputs);
}

TEST(Split, ClassProportionsWithinOne) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t classes = 2 + rng.below(6);
    LabeledDataset d;
    d.num_classes = classes;
    const std::size_t n = 4 * classes + rng.below(200);
    for (std::size_t i = 0; i < n; ++i) {
      d.inputs.push_back({static_cast<double>(i)});
      d.labels.push_back(i < 2 * classes ? i % classes : rng.below(classes));
    }
    const double f = 0.1 + 0.8 * rng.uniform();
    const auto [train, test] = split(d, f, trial);
    EXPECT_EQ(train.size() + test.size(), n);
    for (std::size_t c = 0; c < classes; ++c) {
      const auto nc = static_cast<double>(std::count(d.labels.begin(), d.labels.end(), c));
      const auto tc = static_cast<double>(std::count(test.labels.begin(), test.labels.end(), c));
      EXPECT_LE(std::abs(tc - nc * f), 1.0) << "class " << c;
    }
  }
}

TEST(Split, SingletonClassIsSplitError) {
  auto d = counted(10, 2);
  d.num_classes = 3;
  d.labels[0] = 2;
  try {
    split(d, 0.5, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::split);
  }
  EXPECT_THROW(split(counted(10, 2), 1.0, 1), Error);
}

TEST(Subsample, SizeAndDeterminism) {
  const auto d = counted(100, 4);
  const auto s = subsample(d, 30, 5);
  EXPECT_EQ(s.size(), 30u);
  EXPECT_EQ(subsample(d, 30, 5).inputs, s.inputs);
  EXPECT_EQ(subsample(d, 500, 5).size(), 100u);
}

TEST(DatasetFile, RoundTripIsExact) {
  auto d = gen_blobs(11, 3, 4, 5, 0.7);
  d.bounds = Bounds{-20.0, 20.0};
  const auto path = temp_path("advkit_dataset_rt.json");
  save_dataset(d, path);
  const auto back = load_dataset(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.inputs, d.inputs);
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.num_classes, d.num_classes);
  EXPECT_EQ(back.seed, 11u);
  ASSERT_TRUE(back.bounds.has_value());
  EXPECT_EQ(back.bounds->hi, 20.0);
}

TEST(DatasetFile, RejectsWrongFormatAndBadLabels) {
  auto j = to_json(gen_blobs(1, 2, 2, 2, 1.0));
  j["format"] = "other";
  EXPECT_THROW(dataset_from_json(j), Error);
  j["format"] = "advkit-dataset-v1";
  j["labels"][0] = 9;
  EXPECT_THROW(dataset_from_json(j), Error);
}

TEST(DatasetCsv, LabelThenFeatures) {
  LabeledDataset d;
  d.num_classes = 2;
  d.inputs = {{0.5, -1.0}};
  d.labels = {1};
  std::ostringstream os;
  write_dataset_csv(os, d);
  EXPECT_EQ(os.str(), "1,0.5,-1\n");
}

}  // namespace
}  // namespace advkit
