#include <gtest/gtest.h>

#include <fstream>

#include "autohyper/error.hpp"
#include "autohyper/trainer/dataset.hpp"
#include "temp_dir.hpp"

using namespace autohyper;
using namespace autohyper::trainer;

namespace {

void put_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_images(const std::filesystem::path& p, std::uint32_t magic, std::uint32_t n, std::uint32_t rows,
                  std::uint32_t cols, std::size_t pixel_bytes) {
  std::ofstream out(p, std::ios::binary);
  put_be32(out, magic);
  put_be32(out, n);
  put_be32(out, rows);
  put_be32(out, cols);
  for (std::size_t i = 0; i < pixel_bytes; ++i) out.put(static_cast<char>(i == 0 ? 0xFF : i % 251));
}

void write_labels(const std::filesystem::path& p, std::uint32_t magic, std::uint32_t n) {
  std::ofstream out(p, std::ios::binary);
  put_be32(out, magic);
  put_be32(out, n);
  for (std::uint32_t i = 0; i < n; ++i) out.put(static_cast<char>(i % 3));
}

}  // namespace

TEST(Idx, LoadsHandBuiltFixture) {
  TempDir dir("idx");
  write_images(dir / "img", 0x803, 10, 4, 5, 200);
  write_labels(dir / "lbl", 0x801, 10);
  const auto d = load_idx(dir / "img", dir / "lbl");
  EXPECT_EQ(d.size(), 10u);
  EXPECT_EQ(d.height, 4u);
  EXPECT_EQ(d.width, 5u);
  EXPECT_EQ(d.classes, 3u);
  EXPECT_EQ(d.images[0], 1.0f);
  EXPECT_FLOAT_EQ(d.images[1], 1.0f / 255.0f);
  EXPECT_EQ(d.labels[4], 1);
}

TEST(Idx, ImagesFileWithLabelMagicIsNamed) {
  TempDir dir("idx");
  write_images(dir / "img", 0x801, 10, 4, 5, 200);
  write_labels(dir / "lbl", 0x801, 10);
  try {
    load_idx(dir / "img", dir / "lbl");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("0x00000801"), std::string::npos) << e.what();
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(Idx, CountMismatch) {
  TempDir dir("idx");
  write_images(dir / "img", 0x803, 10, 4, 5, 200);
  write_labels(dir / "lbl", 0x801, 9);
  try {
    load_idx(dir / "img", dir / "lbl");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("mismatch"), std::string::npos) << e.what();
  }
}

TEST(Idx, Truncation) {
  TempDir dir("idx");
  write_images(dir / "img", 0x803, 10, 4, 5, 150);
  write_labels(dir / "lbl", 0x801, 10);
  EXPECT_THROW(load_idx(dir / "img", dir / "lbl"), FormatError);
  std::ofstream(dir / "short", std::ios::binary) << "ab";
  EXPECT_THROW(load_idx(dir / "short", dir / "lbl"), FormatError);
}

TEST(SyntheticShapes, DeterministicAndBalanced) {
  const auto a = make_synthetic_shapes(203, 16, 0.2, 5);
  const auto b = make_synthetic_shapes(203, 16, 0.2, 5);
  const auto c = make_synthetic_shapes(203, 16, 0.2, 6);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.images, c.images);
  EXPECT_EQ(a.classes, kSyntheticClasses);
  std::vector<int> counts(4, 0);
  for (int l : a.labels) ++counts[static_cast<std::size_t>(l)];
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  EXPECT_LE(*hi - *lo, 1);
}

TEST(SyntheticShapes, HeldOutDiffersFromTraining) {
  DatasetSpec spec;
  spec.train_size = 64;
  spec.heldout_size = 32;
  const auto train = make_training_set(spec);
  const auto held = make_heldout_set(spec);
  EXPECT_EQ(train.size(), 64u);
  EXPECT_EQ(held.size(), 32u);
  EXPECT_NE(std::vector<float>(train.images.begin(), train.images.begin() + 256),
            std::vector<float>(held.images.begin(), held.images.begin() + 256));
}

TEST(SyntheticShapes, ClassesAreVisuallyDistinct) {
  // Noise-free prototypes: stripes vary along one axis only, blobs peak at the centre.
  const auto d = make_synthetic_shapes(4, 16, 0.0, 1);
  const auto img = [&](std::size_t i, std::size_t r, std::size_t c) { return d.image(i)[r * 16 + c]; };
  for (std::size_t r = 0; r < 16; ++r) EXPECT_EQ(img(0, r, 0), img(0, r, 9));  // horizontal stripes
  for (std::size_t c = 0; c < 16; ++c) EXPECT_EQ(img(1, 0, c), img(1, 9, c));  // vertical stripes
  EXPECT_GT(img(3, 8, 8), img(3, 0, 0));
}

TEST(Datasets, SourceNames) {
  EXPECT_EQ(parse_dataset_source("synthetic_shapes"), DatasetSource::synthetic_shapes);
  EXPECT_EQ(parse_dataset_source("idx"), DatasetSource::idx_files);
  EXPECT_THROW(parse_dataset_source("cifar"), ConfigError);
  EXPECT_THROW(make_synthetic_shapes(4, 2, 0.2, 1), ValidationError);
}
