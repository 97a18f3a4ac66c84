#include <algorithm>
#include <cstdio>
#include <fstream>
#include <vector>

#include "autohyper/error.hpp"
#include "autohyper/trainer/dataset.hpp"

namespace autohyper::trainer {

namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open IDX file '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t at, const std::string& file) {
  if (at + 4 > b.size()) throw FormatError(file + ": truncated IDX header", b.size());
  return static_cast<std::uint32_t>(b[at]) << 24 | static_cast<std::uint32_t>(b[at + 1]) << 16 |
         static_cast<std::uint32_t>(b[at + 2]) << 8 | static_cast<std::uint32_t>(b[at + 3]);
}

std::string hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const std::string img_name = images_path.string(), lbl_name = labels_path.string();
  const auto img = slurp(images_path);
  const auto lbl = slurp(labels_path);

  const std::uint32_t img_magic = be32(img, 0, img_name);
  if (img_magic != kIdxImagesMagic) {
    throw FormatError(img_name + ": bad IDX images magic " + hex(img_magic) + ", expected " +
                          hex(kIdxImagesMagic),
                      0);
  }
  const std::uint32_t lbl_magic = be32(lbl, 0, lbl_name);
  if (lbl_magic != kIdxLabelsMagic) {
    throw FormatError(lbl_name + ": bad IDX labels magic " + hex(lbl_magic) + ", expected " +
                          hex(kIdxLabelsMagic),
                      0);
  }

  const std::size_t n_images = be32(img, 4, img_name);
  const std::size_t rows = be32(img, 8, img_name);
  const std::size_t cols = be32(img, 12, img_name);
  const std::size_t n_labels = be32(lbl, 4, lbl_name);
  if (rows == 0 || cols == 0) throw FormatError(img_name + ": zero image dimension", 8);
  if (n_images != n_labels) {
    throw FormatError("IDX count mismatch: " + std::to_string(n_images) + " images vs " +
                          std::to_string(n_labels) + " labels",
                      4);
  }
  const std::size_t img_bytes = 16 + n_images * rows * cols;
  if (img.size() < img_bytes) {
    throw FormatError(img_name + ": truncated pixel data (need " + std::to_string(img_bytes) +
                          " bytes)",
                      img.size());
  }
  if (lbl.size() < 8 + n_labels) {
    throw FormatError(lbl_name + ": truncated label data", lbl.size());
  }

  Dataset d;
  d.height = rows;
  d.width = cols;
  d.images.resize(n_images * rows * cols);
  for (std::size_t i = 0; i < d.images.size(); ++i) d.images[i] = static_cast<float>(img[16 + i]) / 255.0f;
  d.labels.resize(n_labels);
  int max_label = -1;
  for (std::size_t i = 0; i < n_labels; ++i) {
    d.labels[i] = lbl[8 + i];
    max_label = std::max(max_label, d.labels[i]);
  }
  d.classes = static_cast<std::size_t>(max_label + 1);
  return d;
}

}  // namespace autohyper::trainer
