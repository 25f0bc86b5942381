#pragma once

#include "saulab/core/tensor.hpp"

namespace sau {

enum class TriggerKind { Patch, Blended, Sinusoidal };

// A trigger and its generating function g(x; trigger). Patch overwrites a
// pixel block, blended alpha-mixes a full-size pattern, sinusoidal adds a
// horizontal sine wave. Outputs are clamped to [0,1].
struct TriggerSpec {
  TriggerKind kind = TriggerKind::Patch;

  // patch
  int patch_row = 0;
  int patch_col = 0;
  int patch_height = 3;
  int patch_width = 3;
  float patch_value = 1.0f;

  // blended
  Tensor pattern;  // same shape as one image
  float alpha = 0.2f;

  // sinusoidal
  float amplitude = 0.08f;
  float frequency = 6.0f;  // cycles per image width

  // 3x3 white block in the bottom-right corner of an h x w image.
  static TriggerSpec corner_patch(int image_height, int image_width, int size = 3,
                                  float value = 1.0f);
  static TriggerSpec blended(Tensor pattern, float alpha = 0.2f);
  static TriggerSpec sinusoidal(float amplitude = 0.08f, float frequency = 6.0f);
};

// g(x; trigger) for one image [C,H,W] or a batch [N,C,H,W]. The input is
// not mutated.
Tensor apply_trigger(const Tensor& x, const TriggerSpec& trigger);

// g(x;trigger) - x for a reference image shape; with values in [0,1] this is
// the exact perturbation for sinusoidal/blended triggers away from the clamp.
Tensor trigger_delta(const Tensor& x, const TriggerSpec& trigger);

// The additive wave a sinusoidal trigger adds per pixel, as a [C,H,W]
// tensor. apply_trigger adds exactly these values, so x + wave reproduces
// g(x) bit for bit wherever no clamping occurs.
Tensor sinusoidal_wave(float amplitude, float frequency, int channels, int height, int width);

const char* trigger_kind_name(TriggerKind k);

}  // namespace sau
