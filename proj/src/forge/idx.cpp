#include "saulab/forge/idx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "saulab/core/error.hpp"

namespace sau {

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError(what + ": truncated header");
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw FormatError("cannot open '" + images_path + "'");
  if (read_be32(img, images_path) != 0x00000803u) {
    throw FormatError("'" + images_path + "' has a bad IDX image magic");
  }
  const std::uint32_t n = read_be32(img, images_path);
  const std::uint32_t h = read_be32(img, images_path);
  const std::uint32_t w = read_be32(img, images_path);
  std::vector<unsigned char> pixels(static_cast<std::size_t>(n) * h * w);
  if (!img.read(reinterpret_cast<char*>(pixels.data()),
                static_cast<std::streamsize>(pixels.size()))) {
    throw FormatError("'" + images_path + "' pixel payload truncated");
  }

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw FormatError("cannot open '" + labels_path + "'");
  if (read_be32(lab, labels_path) != 0x00000801u) {
    throw FormatError("'" + labels_path + "' has a bad IDX label magic");
  }
  const std::uint32_t nl = read_be32(lab, labels_path);
  if (nl != n) {
    throw ConsistencyError("image count " + std::to_string(n) + " != label count " +
                           std::to_string(nl));
  }
  std::vector<unsigned char> raw_labels(nl);
  if (!lab.read(reinterpret_cast<char*>(raw_labels.data()),
                static_cast<std::streamsize>(raw_labels.size()))) {
    throw FormatError("'" + labels_path + "' label payload truncated");
  }

  LabeledDataset ds;
  std::vector<float> data(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) data[i] = pixels[i] / 255.0f;
  ds.images = Tensor::from_data({static_cast<int>(n), 1, static_cast<int>(h), static_cast<int>(w)},
                                std::move(data));
  int max_label = 0;
  for (unsigned char l : raw_labels) {
    ds.labels.push_back(static_cast<int>(l));
    max_label = std::max(max_label, static_cast<int>(l));
  }
  ds.num_classes = max_label + 1;
  ds.poison_mask.assign(n, false);
  ds.original_labels = ds.labels;
  return ds;
}

void write_idx(const LabeledDataset& ds, const std::string& images_path,
               const std::string& labels_path) {
  const Shape& s = ds.images.shape();
  if (s[1] != 1) throw DomainError("IDX export supports single-channel images only");
  std::ofstream img(images_path, std::ios::binary | std::ios::trunc);
  if (!img) throw FormatError("cannot open '" + images_path + "' for writing");
  write_be32(img, 0x00000803u);
  write_be32(img, static_cast<std::uint32_t>(s[0]));
  write_be32(img, static_cast<std::uint32_t>(s[2]));
  write_be32(img, static_cast<std::uint32_t>(s[3]));
  const float* d = ds.images.data();
  std::vector<unsigned char> row(static_cast<std::size_t>(ds.images.size()));
  for (std::int64_t i = 0; i < ds.images.size(); ++i) {
    row[i] = static_cast<unsigned char>(
        std::lround(std::min(std::max(d[i], 0.0f), 1.0f) * 255.0f));
  }
  img.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));

  std::ofstream lab(labels_path, std::ios::binary | std::ios::trunc);
  if (!lab) throw FormatError("cannot open '" + labels_path + "' for writing");
  write_be32(lab, 0x00000801u);
  write_be32(lab, static_cast<std::uint32_t>(ds.labels.size()));
  for (int l : ds.labels) {
    const unsigned char b = static_cast<unsigned char>(l);
    lab.write(reinterpret_cast<const char*>(&b), 1);
  }
  if (!img || !lab) throw FormatError("IDX write failed");
}

}  // namespace sau
