#include "saulab/zoo/model.hpp"

#include <cmath>

#include "saulab/core/error.hpp"
#include "saulab/core/ops.hpp"
#include "saulab/core/rng.hpp"

namespace sau {

void ModelConfig::validate() const {
  if (num_classes < 2) throw DomainError("num_classes must be >= 2");
  if (in_channels <= 0 || in_height <= 0 || in_width <= 0) {
    throw DomainError("input shape must be positive");
  }
  if (arch == Arch::Mlp) {
    for (int w : hidden_widths) {
      if (w <= 0) throw DomainError("hidden widths must be positive");
    }
  } else {
    if (conv_channels.empty()) throw DomainError("cnn needs at least one conv block");
    if (kernel_sizes.size() != conv_channels.size()) {
      throw DomainError("one kernel size per conv block required");
    }
    for (std::size_t i = 0; i < conv_channels.size(); ++i) {
      if (conv_channels[i] <= 0 || kernel_sizes[i] <= 0 || kernel_sizes[i] % 2 == 0) {
        throw DomainError("conv channels positive, kernels odd positive");
      }
    }
    int h = in_height, w = in_width;
    for (std::size_t i = 0; i < conv_channels.size(); ++i) {
      if (h % 2 != 0 || w % 2 != 0) {
        throw DomainError("input spatial dims must halve per conv block");
      }
      h /= 2;
      w /= 2;
    }
  }
}

std::int64_t ModelConfig::param_count() const {
  std::int64_t n = 0;
  if (arch == Arch::Mlp) {
    int in = in_channels * in_height * in_width;
    for (int wdt : hidden_widths) {
      n += static_cast<std::int64_t>(in) * wdt + wdt;
      if (use_norm_layers) n += 2 * wdt;
      in = wdt;
    }
    n += static_cast<std::int64_t>(in) * num_classes + num_classes;
  } else {
    int cin = in_channels;
    for (std::size_t i = 0; i < conv_channels.size(); ++i) {
      const int cout = conv_channels[i], k = kernel_sizes[i];
      n += static_cast<std::int64_t>(cout) * cin * k * k + cout;
      if (use_norm_layers) n += 2 * cout;
      cin = cout;
    }
    n += static_cast<std::int64_t>(cin) * num_classes + num_classes;
  }
  return n;
}

std::int64_t ModelConfig::stats_count() const {
  if (!use_norm_layers) return 0;
  std::int64_t n = 0;
  if (arch == Arch::Mlp) {
    for (int w : hidden_widths) n += 2 * w;
  } else {
    for (int c : conv_channels) n += 2 * c;
  }
  return n;
}

namespace {

Tensor kaiming_uniform(Shape shape, int fan_in, Rng& rng) {
  const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
  return Tensor::uniform(std::move(shape), -bound, bound, rng, /*requires_grad=*/true);
}

}  // namespace

Model Model::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  Model m;
  m.cfg_ = cfg;
  auto push_norm = [&](int width) {
    m.params_.push_back(Tensor::full({width}, 1.0f, true));   // gamma
    m.params_.push_back(Tensor::zeros({width}, true));        // beta
    m.stats_.push_back(Tensor::zeros({width}));               // running mean
    m.stats_.push_back(Tensor::full({width}, 1.0f));          // running var
  };
  if (cfg.arch == Arch::Mlp) {
    int in = cfg.in_channels * cfg.in_height * cfg.in_width;
    for (int width : cfg.hidden_widths) {
      m.params_.push_back(kaiming_uniform({in, width}, in, rng));
      m.params_.push_back(Tensor::zeros({width}, true));
      if (cfg.use_norm_layers) push_norm(width);
      in = width;
    }
    m.params_.push_back(kaiming_uniform({in, cfg.num_classes}, in, rng));
    m.params_.push_back(Tensor::zeros({cfg.num_classes}, true));
  } else {
    int cin = cfg.in_channels;
    for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
      const int cout = cfg.conv_channels[i], k = cfg.kernel_sizes[i];
      m.params_.push_back(kaiming_uniform({cout, cin, k, k}, cin * k * k, rng));
      m.params_.push_back(Tensor::zeros({cout}, true));
      if (cfg.use_norm_layers) push_norm(cout);
      cin = cout;
    }
    m.params_.push_back(kaiming_uniform({cin, cfg.num_classes}, cin, rng));
    m.params_.push_back(Tensor::zeros({cfg.num_classes}, true));
  }
  return m;
}

Tensor Model::forward_logits(const Tensor& x, bool training) const {
  const bool batch_stats = training && !norm_stats_frozen_;
  std::size_t p = 0, s = 0;
  auto next = [&]() -> const Tensor& { return params_[p++]; };

  if (cfg_.arch == Arch::Mlp) {
    const int features = cfg_.in_channels * cfg_.in_height * cfg_.in_width;
    Tensor h;
    if (x.rank() == 2 && x.dim(1) == features) {
      h = x;
    } else if (x.rank() == 4 && x.dim(1) == cfg_.in_channels && x.dim(2) == cfg_.in_height &&
               x.dim(3) == cfg_.in_width) {
      h = reshape(x, {x.dim(0), features});
    } else {
      throw ShapeError("mlp forward: input " + shape_str(x.shape()) + " does not match config");
    }
    for (std::size_t i = 0; i < cfg_.hidden_widths.size(); ++i) {
      const Tensor& w = next();
      const Tensor& b = next();
      h = add_rowvec(matmul(h, w), b);
      if (cfg_.use_norm_layers) {
        const Tensor& gamma = next();
        const Tensor& beta = next();
        Tensor rm = stats_[s++];
        Tensor rv = stats_[s++];
        h = batchnorm(h, gamma, beta, rm, rv, batch_stats);
      }
      h = relu(h);
    }
    const Tensor& w = next();
    const Tensor& b = next();
    return add_rowvec(matmul(h, w), b);
  }

  if (x.rank() != 4 || x.dim(1) != cfg_.in_channels || x.dim(2) != cfg_.in_height ||
      x.dim(3) != cfg_.in_width) {
    throw ShapeError("cnn forward: input " + shape_str(x.shape()) + " does not match config");
  }
  Tensor h = x;
  for (std::size_t i = 0; i < cfg_.conv_channels.size(); ++i) {
    const Tensor& w = next();
    const Tensor& b = next();
    h = add_channel_bias(conv2d(h, w, cfg_.kernel_sizes[i] / 2), b);
    if (cfg_.use_norm_layers) {
      const Tensor& gamma = next();
      const Tensor& beta = next();
      Tensor rm = stats_[s++];
      Tensor rv = stats_[s++];
      h = batchnorm(h, gamma, beta, rm, rv, batch_stats);
    }
    h = relu(h);
    h = avg_pool2(h);
  }
  h = global_avg_pool(h);
  const Tensor& w = next();
  const Tensor& b = next();
  return add_rowvec(matmul(h, w), b);
}

Tensor Model::forward(const Tensor& x, bool training) const {
  return softmax_rows(forward_logits(x, training));
}

std::vector<int> Model::predict(const Tensor& x) const { return argmax_rows(forward(x)); }

Model Model::clone() const {
  Model m;
  m.cfg_ = cfg_;
  m.norm_stats_frozen_ = norm_stats_frozen_;
  for (const Tensor& p : params_) m.params_.push_back(p.clone());
  for (const Tensor& s : stats_) m.stats_.push_back(s.clone());
  return m;
}

void Model::set_requires_grad(bool rg) {
  for (Tensor& p : params_) p.set_requires_grad(rg);
}

void Model::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

void freeze_norm_stats(Model& model) { model.norm_stats_frozen_ = true; }

Model assemble_model(const ModelConfig& cfg, std::vector<Tensor> params, std::vector<Tensor> stats,
                     bool norm_stats_frozen) {
  cfg.validate();
  Model m;
  m.cfg_ = cfg;
  m.params_ = std::move(params);
  m.stats_ = std::move(stats);
  m.norm_stats_frozen_ = norm_stats_frozen;
  return m;
}

std::uint64_t model_hash(const Model& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const Tensor& t) {
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(t.data());
    for (std::int64_t i = 0; i < t.size() * 4; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const Tensor& p : m.params()) mix(p);
  for (const Tensor& s : m.running_stats()) mix(s);
  return h;
}

ModelPair ModelPair::make(const Model& poisoned, bool freeze_norm) {
  ModelPair pair;
  pair.frozen = poisoned.clone();
  pair.frozen.set_requires_grad(false);
  pair.trainable = poisoned.clone();
  pair.trainable.set_requires_grad(true);
  pair.norm_stats_frozen = freeze_norm;
  if (freeze_norm) {
    freeze_norm_stats(pair.frozen);
    freeze_norm_stats(pair.trainable);
  }
  return pair;
}

const char* arch_name(Arch a) { return a == Arch::Mlp ? "mlp" : "cnn"; }

Arch arch_from_name(const std::string& name) {
  if (name == "mlp") return Arch::Mlp;
  if (name == "cnn") return Arch::Cnn;
  throw DomainError("unknown arch '" + name + "'");
}

}  // namespace sau
