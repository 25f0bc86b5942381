#include "saulab/forge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "saulab/core/error.hpp"
#include "saulab/core/rng.hpp"

namespace sau {

TargetMap TargetMap::all_to_one(int target, int num_classes) {
  if (target < 0 || target >= num_classes) throw DomainError("target label out of range");
  return TargetMap{TargetMode::AllToOne, target, num_classes};
}

TargetMap TargetMap::all_to_all(int num_classes) {
  return TargetMap{TargetMode::AllToAll, 0, num_classes};
}

int map_target(int y, const TargetMap& tm) {
  if (y < 0 || y >= tm.num_classes) throw DomainError("label out of range");
  return tm.mode == TargetMode::AllToOne ? tm.target_label : (y + 1) % tm.num_classes;
}

Tensor LabeledDataset::image(int i) const {
  if (i < 0 || i >= size()) throw DomainError("sample index out of range");
  const Shape& s = images.shape();
  const std::int64_t stride = static_cast<std::int64_t>(s[1]) * s[2] * s[3];
  return Tensor::from_data({s[1], s[2], s[3]},
                           std::vector<float>(images.data() + i * stride,
                                              images.data() + (i + 1) * stride));
}

LabeledDataset LabeledDataset::subset(const std::vector<int>& indices) const {
  const Shape& s = images.shape();
  const std::int64_t stride = static_cast<std::int64_t>(s[1]) * s[2] * s[3];
  LabeledDataset out;
  out.num_classes = num_classes;
  std::vector<float> data;
  data.reserve(indices.size() * static_cast<std::size_t>(stride));
  for (int i : indices) {
    if (i < 0 || i >= size()) throw DomainError("subset index out of range");
    data.insert(data.end(), images.data() + i * stride, images.data() + (i + 1) * stride);
    out.labels.push_back(labels[i]);
    out.poison_mask.push_back(poison_mask[i]);
    out.original_labels.push_back(original_labels[i]);
  }
  out.images = Tensor::from_data({static_cast<int>(indices.size()), s[1], s[2], s[3]},
                                 std::move(data));
  return out;
}

LabeledDataset poison_dataset(const LabeledDataset& clean, const TriggerSpec& trigger,
                              const TargetMap& tm, float ratio, std::uint64_t seed,
                              bool clean_label) {
  if (ratio < 0.0f || ratio > 1.0f) throw DomainError("poison ratio must be in [0,1]");
  const int n = clean.size();
  const int want = static_cast<int>(std::lround(static_cast<double>(ratio) * n));

  std::vector<int> pool;
  for (int i = 0; i < n; ++i) {
    if (clean_label) {
      if (tm.mode == TargetMode::AllToOne && clean.labels[i] == tm.target_label) {
        pool.push_back(i);
      }
    } else if (tm.mode == TargetMode::AllToOne) {
      if (clean.labels[i] != tm.target_label) pool.push_back(i);
    } else {
      pool.push_back(i);
    }
  }
  if (want > static_cast<int>(pool.size())) {
    throw PoolExhaustedError("poisoning " + std::to_string(want) + " samples exceeds the " +
                             std::to_string(pool.size()) + " eligible ones");
  }

  Rng rng(seed);
  rng.shuffle(pool);
  pool.resize(static_cast<std::size_t>(want));
  std::sort(pool.begin(), pool.end());

  LabeledDataset out;
  out.images = clean.images.clone();
  out.labels = clean.labels;
  out.num_classes = clean.num_classes;
  out.poison_mask.assign(static_cast<std::size_t>(n), false);
  out.original_labels = clean.labels;

  const Shape& s = out.images.shape();
  const std::int64_t stride = static_cast<std::int64_t>(s[1]) * s[2] * s[3];
  for (int i : pool) {
    Tensor poisoned = apply_trigger(clean.image(i), trigger);
    std::memcpy(out.images.data() + i * stride, poisoned.data(),
                static_cast<std::size_t>(stride) * sizeof(float));
    if (!clean_label) out.labels[i] = map_target(clean.labels[i], tm);
    out.poison_mask[i] = true;
  }
  return out;
}

Tensor class_template(int cls, int num_classes, int channels, int height, int width) {
  if (cls < 0 || cls >= num_classes) throw DomainError("class index out of range");
  Tensor img = Tensor::full({channels, height, width}, 0.1f);
  const int thickness = std::max(1, height / 8);
  float* d = img.data();
  const std::int64_t plane = static_cast<std::int64_t>(height) * width;
  if (cls % 2 == 0) {
    // Horizontal bright bar, band position indexed by class.
    const int center = (cls / 2 * 2 + 1) * height / (num_classes + 1);
    for (int c = 0; c < channels; ++c) {
      for (int i = std::max(0, center - thickness); i <= std::min(height - 1, center + thickness);
           ++i) {
        for (int j = 0; j < width; ++j) d[c * plane + i * width + j] = 0.85f;
      }
    }
  } else {
    const int center = (cls / 2 * 2 + 1) * width / (num_classes + 1);
    for (int c = 0; c < channels; ++c) {
      for (int i = 0; i < height; ++i) {
        for (int j = std::max(0, center - thickness); j <= std::min(width - 1, center + thickness);
             ++j) {
          d[c * plane + i * width + j] = 0.85f;
        }
      }
    }
  }
  return img;
}

LabeledDataset gen_synthetic(int num_classes, int samples_per_class, int channels, int height,
                             int width, float noise_sigma, std::uint64_t seed) {
  if (num_classes < 2 || samples_per_class <= 0 || channels <= 0 || height <= 0 || width <= 0) {
    throw DomainError("gen_synthetic: parameters must be positive, K >= 2");
  }
  if (noise_sigma < 0.0f) throw DomainError("noise sigma must be nonnegative");

  std::vector<Tensor> templates;
  templates.reserve(static_cast<std::size_t>(num_classes));
  for (int k = 0; k < num_classes; ++k) {
    templates.push_back(class_template(k, num_classes, channels, height, width));
  }

  const int n = num_classes * samples_per_class;
  const std::int64_t stride = static_cast<std::int64_t>(channels) * height * width;
  std::vector<float> data(static_cast<std::size_t>(n * stride));
  Rng rng(seed);
  LabeledDataset ds;
  ds.num_classes = num_classes;
  for (int i = 0; i < n; ++i) {
    const int label = i % num_classes;
    const float* t = templates[static_cast<std::size_t>(label)].data();
    float* out = data.data() + i * stride;
    for (std::int64_t j = 0; j < stride; ++j) {
      const float v = t[j] + (noise_sigma > 0.0f ? noise_sigma * rng.gaussian() : 0.0f);
      out[j] = std::min(std::max(v, 0.0f), 1.0f);
    }
    ds.labels.push_back(label);
  }
  ds.images = Tensor::from_data({n, channels, height, width}, std::move(data));
  ds.poison_mask.assign(static_cast<std::size_t>(n), false);
  ds.original_labels = ds.labels;
  return ds;
}

namespace {
constexpr char kDatasetMagic[8] = {'S', 'A', 'U', 'D', 'S', 'E', 'T', '1'};
}

void save_dataset(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out.write(kDatasetMagic, 8);
  const Shape& s = ds.images.shape();
  std::int32_t hdr[5] = {s[0], s[1], s[2], s[3], ds.num_classes};
  out.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  out.write(reinterpret_cast<const char*>(ds.images.data()),
            static_cast<std::streamsize>(ds.images.size() * sizeof(float)));
  for (int i = 0; i < ds.size(); ++i) {
    std::int32_t rec[3] = {ds.labels[i], ds.poison_mask[i] ? 1 : 0, ds.original_labels[i]};
    out.write(reinterpret_cast<const char*>(rec), sizeof rec);
  }
  if (!out) throw FormatError("write failed for '" + path + "'");
}

LabeledDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kDatasetMagic, 8) != 0) {
    throw FormatError("'" + path + "' is not a dataset file");
  }
  std::int32_t hdr[5];
  if (!in.read(reinterpret_cast<char*>(hdr), sizeof hdr)) throw FormatError("dataset truncated");
  const int n = hdr[0], c = hdr[1], h = hdr[2], w = hdr[3];
  if (n <= 0 || c <= 0 || h <= 0 || w <= 0) throw FormatError("bad dataset header");
  std::vector<float> data(static_cast<std::size_t>(n) * c * h * w);
  if (!in.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(data.size() * sizeof(float)))) {
    throw FormatError("dataset truncated");
  }
  LabeledDataset ds;
  ds.num_classes = hdr[4];
  ds.images = Tensor::from_data({n, c, h, w}, std::move(data));
  for (int i = 0; i < n; ++i) {
    std::int32_t rec[3];
    if (!in.read(reinterpret_cast<char*>(rec), sizeof rec)) throw FormatError("dataset truncated");
    ds.labels.push_back(rec[0]);
    ds.poison_mask.push_back(rec[1] != 0);
    ds.original_labels.push_back(rec[2]);
  }
  return ds;
}

}  // namespace sau
