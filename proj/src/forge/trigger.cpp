#include "saulab/forge/trigger.hpp"

#include <cmath>

#include "saulab/core/error.hpp"

namespace sau {

TriggerSpec TriggerSpec::corner_patch(int image_height, int image_width, int size, float value) {
  TriggerSpec t;
  t.kind = TriggerKind::Patch;
  t.patch_row = image_height - size;
  t.patch_col = image_width - size;
  t.patch_height = size;
  t.patch_width = size;
  t.patch_value = value;
  if (t.patch_row < 0 || t.patch_col < 0) throw DomainError("patch larger than image");
  return t;
}

TriggerSpec TriggerSpec::blended(Tensor pattern, float alpha) {
  if (alpha < 0.0f || alpha > 1.0f) throw DomainError("alpha must be in [0,1]");
  TriggerSpec t;
  t.kind = TriggerKind::Blended;
  t.pattern = std::move(pattern);
  t.alpha = alpha;
  return t;
}

TriggerSpec TriggerSpec::sinusoidal(float amplitude, float frequency) {
  if (amplitude < 0.0f) throw DomainError("amplitude must be nonnegative");
  TriggerSpec t;
  t.kind = TriggerKind::Sinusoidal;
  t.amplitude = amplitude;
  t.frequency = frequency;
  return t;
}

namespace {

void apply_one(const float* x, float* out, int c, int h, int w, const TriggerSpec& trig) {
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  switch (trig.kind) {
    case TriggerKind::Patch: {
      if (trig.patch_row < 0 || trig.patch_col < 0 || trig.patch_row + trig.patch_height > h ||
          trig.patch_col + trig.patch_width > w) {
        throw DomainError("patch out of image bounds");
      }
      std::copy(x, x + c * plane, out);
      for (int ch = 0; ch < c; ++ch) {
        for (int i = trig.patch_row; i < trig.patch_row + trig.patch_height; ++i) {
          for (int j = trig.patch_col; j < trig.patch_col + trig.patch_width; ++j) {
            out[ch * plane + i * w + j] = trig.patch_value;
          }
        }
      }
      break;
    }
    case TriggerKind::Blended: {
      if (!trig.pattern.defined() || trig.pattern.size() != c * plane) {
        throw ShapeError("blend pattern does not match image shape");
      }
      const float* p = trig.pattern.data();
      for (std::int64_t i = 0; i < c * plane; ++i) {
        out[i] = (1.0f - trig.alpha) * x[i] + trig.alpha * p[i];
      }
      break;
    }
    case TriggerKind::Sinusoidal: {
      Tensor wave = sinusoidal_wave(trig.amplitude, trig.frequency, c, h, w);
      const float* s = wave.data();
      for (std::int64_t i = 0; i < c * plane; ++i) out[i] = x[i] + s[i];
      break;
    }
  }
  for (std::int64_t i = 0; i < c * plane; ++i) out[i] = std::min(std::max(out[i], 0.0f), 1.0f);
}

}  // namespace

Tensor apply_trigger(const Tensor& x, const TriggerSpec& trigger) {
  if (x.rank() != 3 && x.rank() != 4) {
    throw ShapeError("apply_trigger expects [C,H,W] or [N,C,H,W], got " + shape_str(x.shape()));
  }
  const int n = x.rank() == 4 ? x.dim(0) : 1;
  const int c = x.rank() == 4 ? x.dim(1) : x.dim(0);
  const int h = x.rank() == 4 ? x.dim(2) : x.dim(1);
  const int w = x.rank() == 4 ? x.dim(3) : x.dim(2);
  Tensor out = Tensor::zeros(x.shape());
  const std::int64_t stride = static_cast<std::int64_t>(c) * h * w;
  for (int i = 0; i < n; ++i) {
    apply_one(x.data() + i * stride, out.data() + i * stride, c, h, w, trigger);
  }
  return out;
}

Tensor trigger_delta(const Tensor& x, const TriggerSpec& trigger) {
  Tensor gx = apply_trigger(x, trigger);
  Tensor d = Tensor::zeros(x.shape());
  d.array() = gx.array() - x.array();
  return d;
}

Tensor sinusoidal_wave(float amplitude, float frequency, int channels, int height, int width) {
  Tensor wave = Tensor::zeros({channels, height, width});
  float* s = wave.data();
  const std::int64_t plane = static_cast<std::int64_t>(height) * width;
  for (int ch = 0; ch < channels; ++ch) {
    for (int i = 0; i < height; ++i) {
      for (int j = 0; j < width; ++j) {
        s[ch * plane + i * width + j] =
            amplitude * std::sin(6.28318530717958647692f * frequency * static_cast<float>(j) /
                                 static_cast<float>(width));
      }
    }
  }
  return wave;
}

const char* trigger_kind_name(TriggerKind k) {
  switch (k) {
    case TriggerKind::Patch:
      return "patch";
    case TriggerKind::Blended:
      return "blended";
    case TriggerKind::Sinusoidal:
      return "sinusoidal";
  }
  return "?";
}

}  // namespace sau
