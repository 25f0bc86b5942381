#include "saulab/risk/instance_gen.hpp"

#include "saulab/core/rng.hpp"

namespace sau {

GridInstance make_grid_instance(std::uint64_t seed, const InstanceOptions& opt) {
  Rng rng(seed);
  const int dim = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_dim - 1)));
  const int n = 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_samples - 3)));
  const int k = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_classes - 1)));

  GridInstance inst;

  // Data: flat samples as 1 x 1 x dim images, values away from the clamp.
  std::vector<float> pixels(static_cast<std::size_t>(n) * dim);
  for (float& v : pixels) v = rng.uniform(0.3f, 0.7f);
  inst.data.images = Tensor::from_data({n, 1, 1, dim}, std::move(pixels));
  inst.data.num_classes = k;
  for (int i = 0; i < n; ++i) {
    inst.data.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(k))));
  }
  inst.data.original_labels = inst.data.labels;
  inst.data.poison_mask.assign(static_cast<std::size_t>(n), false);

  inst.tm = opt.all_to_all
                ? TargetMap::all_to_all(k)
                : TargetMap::all_to_one(static_cast<int>(rng.below(static_cast<std::uint64_t>(k))),
                                        k);

  // Additive trigger; 0.05..0.2 amplitude keeps x + delta inside [0,1].
  const float amplitude = rng.uniform(0.05f, 0.2f);
  const float frequency = rng.uniform(0.25f, 3.0f);
  inst.trigger = TriggerSpec::sinusoidal(amplitude, frequency);

  // Models: either an independent pair or a perturbed copy of the same net.
  ModelConfig cfg;
  cfg.arch = Arch::Mlp;
  cfg.in_channels = 1;
  cfg.in_height = 1;
  cfg.in_width = dim;
  cfg.num_classes = k;
  cfg.use_norm_layers = false;
  cfg.hidden_widths = rng.below(2) == 0 ? std::vector<int>{} : std::vector<int>{4};
  Model bd = Model::init(cfg, rng.next_u64());
  Model cur;
  const std::uint64_t style = rng.below(3);
  if (style == 0) {
    cur = bd.clone();  // identical pair
  } else if (style == 1) {
    cur = bd.clone();  // nearby pair
    for (Tensor& p : cur.params()) {
      for (std::int64_t j = 0; j < p.size(); ++j) p.data()[j] += 0.1f * rng.gaussian();
    }
  } else {
    cur = Model::init(cfg, rng.next_u64());  // unrelated pair
  }
  inst.pair.frozen = bd;
  inst.pair.frozen.set_requires_grad(false);
  inst.pair.trainable = cur;
  inst.pair.trainable.set_requires_grad(true);

  // Grid: the exact trigger delta, the zero vector, and a few extras.
  std::vector<Tensor> points;
  points.push_back(sinusoidal_wave(amplitude, frequency, 1, 1, dim));
  points.push_back(Tensor::zeros({1, 1, dim}));
  const int extras =
      static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_extra_grid_points + 1)));
  for (int e = 0; e < extras; ++e) {
    points.push_back(Tensor::uniform({1, 1, dim}, -0.2f, 0.2f, rng));
  }
  inst.grid = PerturbationSet::finite_grid(std::move(points));
  return inst;
}

}  // namespace sau
