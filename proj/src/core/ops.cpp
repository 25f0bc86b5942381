#include "saulab/core/ops.hpp"

#include <cmath>
#include <string>

#include "saulab/core/error.hpp"

namespace sau {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

void maybe_record(const Tensor& a, Tensor out, std::function<void(const Tensor&)> backfn) {
  if (tracing(a)) GradTape::active()->record({a}, std::move(out), std::move(backfn));
}

void maybe_record2(const Tensor& a, const Tensor& b, Tensor out,
                   std::function<void(const Tensor&)> backfn) {
  if (tracing(a, b)) GradTape::active()->record({a, b}, std::move(out), std::move(backfn));
}

}  // namespace

void check_probability_vector(const float* v, int k) {
  if (k < 2) throw DomainError("probability vector needs K >= 2, got " + std::to_string(k));
  double s = 0.0;
  for (int i = 0; i < k; ++i) {
    if (v[i] < 0.0f || !std::isfinite(v[i])) {
      throw DomainError("probability entry " + std::to_string(i) + " is invalid");
    }
    s += v[i];
  }
  if (std::abs(s - 1.0) > 1e-5) {
    throw DomainError("probabilities sum to " + std::to_string(s) + ", expected 1");
  }
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  out.array() = a.array() + b.array();
  maybe_record2(a, b, out, [a, b](const Tensor& o) mutable {
    if (a.requires_grad()) a.grad() += o.grad();
    if (b.requires_grad()) b.grad() += o.grad();
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out = Tensor::zeros(a.shape());
  out.array() = a.array() - b.array();
  maybe_record2(a, b, out, [a, b](const Tensor& o) mutable {
    if (a.requires_grad()) a.grad() += o.grad();
    if (b.requires_grad()) b.grad() -= o.grad();
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape());
  out.array() = a.array() * b.array();
  maybe_record2(a, b, out, [a, b](const Tensor& o) mutable {
    if (a.requires_grad()) a.grad() += o.grad() * b.array();
    if (b.requires_grad()) b.grad() += o.grad() * a.array();
  });
  return out;
}

Tensor scale(const Tensor& a, float s) {
  Tensor out = Tensor::zeros(a.shape());
  out.array() = a.array() * s;
  maybe_record(a, out, [a, s](const Tensor& o) mutable {
    if (a.requires_grad()) a.grad() += o.grad() * s;
  });
  return out;
}

Tensor neg(const Tensor& a) { return scale(a, -1.0f); }

Tensor relu(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  out.array() = a.array().max(0.0f);
  maybe_record(a, out, [a](const Tensor& o) mutable {
    if (a.requires_grad()) {
      a.grad() += o.grad() * (a.array() > 0.0f).cast<float>();
    }
  });
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::zeros({m, n});
  ConstMatrixMap A(a.data(), m, k), B(b.data(), k, n);
  MatrixMap(out.data(), m, n).noalias() = A * B;
  maybe_record2(a, b, out, [a, b, m, k, n](const Tensor& o) mutable {
    ConstMatrixMap Gg(o.grad().data(), m, n);
    if (a.requires_grad()) {
      ConstMatrixMap B(b.data(), k, n);
      MatrixMap(a.grad().data(), m, k).noalias() += Gg * B.transpose();
    }
    if (b.requires_grad()) {
      ConstMatrixMap A(a.data(), m, k);
      MatrixMap(b.grad().data(), k, n).noalias() += A.transpose() * Gg;
    }
  });
  return out;
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  if (m.rank() != 2 || v.rank() != 1 || m.dim(1) != v.dim(0)) {
    throw ShapeError("add_rowvec: " + shape_str(m.shape()) + " + " + shape_str(v.shape()));
  }
  const int rows = m.dim(0), cols = m.dim(1);
  Tensor out = Tensor::zeros(m.shape());
  ConstMatrixMap M(m.data(), rows, cols);
  MatrixMap(out.data(), rows, cols) =
      M.rowwise() + Eigen::Map<const Eigen::RowVectorXf>(v.data(), cols);
  maybe_record2(m, v, out, [m, v, rows, cols](const Tensor& o) mutable {
    ConstMatrixMap Gg(o.grad().data(), rows, cols);
    if (m.requires_grad()) m.grad() += o.grad();
    if (v.requires_grad()) {
      Eigen::Map<Eigen::VectorXf>(v.grad().data(), cols) += Gg.colwise().sum().transpose();
    }
  });
  return out;
}

Tensor add_channel_bias(const Tensor& x, const Tensor& b) {
  if (x.rank() != 4 || b.rank() != 1 || x.dim(1) != b.dim(0)) {
    throw ShapeError("add_channel_bias: " + shape_str(x.shape()) + " + " + shape_str(b.shape()));
  }
  const int batch = x.dim(0), ch = x.dim(1);
  const std::int64_t spatial = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
  Tensor out = Tensor::zeros(x.shape());
  const float* xs = x.data();
  const float* bs = b.data();
  float* os = out.data();
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < ch; ++c) {
      const std::int64_t base = (static_cast<std::int64_t>(n) * ch + c) * spatial;
      ArrayMap(os + base, spatial) = ConstArrayMap(xs + base, spatial) + bs[c];
    }
  }
  maybe_record2(x, b, out, [x, b, batch, ch, spatial](const Tensor& o) mutable {
    if (x.requires_grad()) x.grad() += o.grad();
    if (b.requires_grad()) {
      auto bg = b.grad();
      const float* gg = o.grad().data();
      for (int n = 0; n < batch; ++n) {
        for (int c = 0; c < ch; ++c) {
          const std::int64_t base = (static_cast<std::int64_t>(n) * ch + c) * spatial;
          bg[c] += static_cast<float>(ConstArrayMap(gg + base, spatial).cast<double>().sum());
        }
      }
    }
  });
  return out;
}

Tensor add_sample_broadcast(const Tensor& batch, const Tensor& eps) {
  if (batch.rank() < 2 || batch.size() != eps.size() * batch.dim(0)) {
    throw ShapeError("add_sample_broadcast: " + shape_str(batch.shape()) + " + " +
                     shape_str(eps.shape()));
  }
  const int n = batch.dim(0);
  const std::int64_t stride = eps.size();
  Tensor out = Tensor::zeros(batch.shape());
  for (int i = 0; i < n; ++i) {
    ArrayMap(out.data() + i * stride, stride) =
        ConstArrayMap(batch.data() + i * stride, stride) + eps.array();
  }
  maybe_record2(batch, eps, out, [batch, eps, n, stride](const Tensor& o) {
    if (batch.requires_grad()) batch.grad() += o.grad();
    if (eps.requires_grad()) {
      for (int i = 0; i < n; ++i) {
        eps.grad() += ConstArrayMap(o.grad().data() + i * stride, stride);
      }
    }
  });
  return out;
}

Tensor clamp01(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  out.array() = a.array().min(1.0f).max(0.0f);
  maybe_record(a, out, [a](const Tensor& o) {
    if (a.requires_grad()) {
      a.grad() += o.grad() * ((a.array() > 0.0f) && (a.array() < 1.0f)).cast<float>();
    }
  });
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  if (logits.rank() != 1 && logits.rank() != 2) {
    throw ShapeError("softmax_rows expects rank 1 or 2, got " + shape_str(logits.shape()));
  }
  const int rows = logits.rank() == 2 ? logits.dim(0) : 1;
  const int cols = logits.rank() == 2 ? logits.dim(1) : logits.dim(0);
  Tensor out = Tensor::zeros(logits.shape());
  const float* in = logits.data();
  float* os = out.data();
  for (int r = 0; r < rows; ++r) {
    ConstArrayMap row(in + static_cast<std::int64_t>(r) * cols, cols);
    ArrayMap orow(os + static_cast<std::int64_t>(r) * cols, cols);
    orow = (row - row.maxCoeff()).exp();
    orow /= orow.sum();
  }
  Tensor a = logits;
  maybe_record(logits, out, [a, rows, cols](const Tensor& o) mutable {
    if (!a.requires_grad()) return;
    const float* y = o.data();
    const float* gy = o.grad().data();
    float* gx = a.grad().data();
    for (int r = 0; r < rows; ++r) {
      const std::int64_t base = static_cast<std::int64_t>(r) * cols;
      ConstArrayMap yr(y + base, cols), gr(gy + base, cols);
      const float inner = (yr * gr).sum();
      ArrayMap(gx + base, cols) += yr * (gr - inner);
    }
  });
  return out;
}

Tensor sum(const Tensor& a) {
  Tensor out = Tensor::scalar(static_cast<float>(a.array().cast<double>().sum()));
  maybe_record(a, out, [a](const Tensor& o) mutable {
    if (a.requires_grad()) a.grad() += o.grad()[0];
  });
  return out;
}

Tensor mean(const Tensor& a) {
  const float inv = 1.0f / static_cast<float>(a.size());
  Tensor out = Tensor::scalar(static_cast<float>(a.array().cast<double>().sum()) * inv);
  maybe_record(a, out, [a, inv](const Tensor& o) mutable {
    if (a.requires_grad()) a.grad() += o.grad()[0] * inv;
  });
  return out;
}

Tensor dot(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "dot");
  Tensor out = Tensor::scalar(
      static_cast<float>((a.array().cast<double>() * b.array().cast<double>()).sum()));
  maybe_record2(a, b, out, [a, b](const Tensor& o) mutable {
    const float g = o.grad()[0];
    if (a.requires_grad()) a.grad() += g * b.array();
    if (b.requires_grad()) b.grad() += g * a.array();
  });
  return out;
}

Tensor cross_entropy(const Tensor& probs, int label) {
  if (probs.rank() != 1) {
    throw ShapeError("cross_entropy expects a probability vector, got " +
                     shape_str(probs.shape()));
  }
  const int k = probs.dim(0);
  check_probability_vector(probs.data(), k);
  if (label < 0 || label >= k) {
    throw DomainError("label " + std::to_string(label) + " out of range for K=" +
                      std::to_string(k));
  }
  const float p = std::max(probs.at(label), kProbFloor);
  Tensor out = Tensor::scalar(-std::log(p));
  maybe_record(probs, out, [probs, label](const Tensor& o) mutable {
    if (!probs.requires_grad()) return;
    const float p = probs.at(label);
    if (p > kProbFloor) probs.grad()[label] += -o.grad()[0] / p;
  });
  return out;
}

Tensor cross_entropy_mean(const Tensor& probs, const std::vector<int>& labels) {
  if (probs.rank() != 2) {
    throw ShapeError("cross_entropy_mean expects [B,K], got " + shape_str(probs.shape()));
  }
  const int rows = probs.dim(0), k = probs.dim(1);
  if (static_cast<int>(labels.size()) != rows) {
    throw ShapeError("cross_entropy_mean: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(rows) + " rows");
  }
  const float* p = probs.data();
  double total = 0.0;
  for (int r = 0; r < rows; ++r) {
    check_probability_vector(p + static_cast<std::int64_t>(r) * k, k);
    const int y = labels[r];
    if (y < 0 || y >= k) throw DomainError("label out of range in row " + std::to_string(r));
    total += -std::log(std::max(p[static_cast<std::int64_t>(r) * k + y], kProbFloor));
  }
  Tensor out = Tensor::scalar(static_cast<float>(total / rows));
  maybe_record(probs, out, [probs, labels, rows, k](const Tensor& o) mutable {
    if (!probs.requires_grad()) return;
    const float g = o.grad()[0] / static_cast<float>(rows);
    const float* p = probs.data();
    auto gp = probs.grad();
    for (int r = 0; r < rows; ++r) {
      const std::int64_t i = static_cast<std::int64_t>(r) * k + labels[r];
      if (p[i] > kProbFloor) gp[i] += -g / p[i];
    }
  });
  return out;
}

namespace {

// One JS term in double precision; returns the value and d/dp per coordinate.
double js_forward_row(const float* p, const float* q, int k, float* dp, float* dq) {
  double acc = 0.0;
  for (int i = 0; i < k; ++i) {
    const double pi = p[i], qi = q[i];
    const double mi = 0.5 * (pi + qi);
    const double lp = std::log(std::max(pi, static_cast<double>(kProbFloor)) /
                               std::max(mi, static_cast<double>(kProbFloor)));
    const double lq = std::log(std::max(qi, static_cast<double>(kProbFloor)) /
                               std::max(mi, static_cast<double>(kProbFloor)));
    if (pi > 0.0) acc += 0.5 * pi * lp;
    if (qi > 0.0) acc += 0.5 * qi * lq;
    if (dp) dp[i] = static_cast<float>(0.5 * lp);
    if (dq) dq[i] = static_cast<float>(0.5 * lq);
  }
  return acc;
}

}  // namespace

Tensor js_divergence(const Tensor& p, const Tensor& q) {
  if (p.rank() != 1 || q.rank() != 1 || p.dim(0) != q.dim(0)) {
    throw ShapeError("js_divergence: " + shape_str(p.shape()) + " vs " + shape_str(q.shape()));
  }
  const int k = p.dim(0);
  check_probability_vector(p.data(), k);
  check_probability_vector(q.data(), k);
  Tensor out = Tensor::scalar(static_cast<float>(js_forward_row(p.data(), q.data(), k, nullptr, nullptr)));
  maybe_record2(p, q, out, [p, q, k](const Tensor& o) mutable {
    std::vector<float> dp(k), dq(k);
    js_forward_row(p.data(), q.data(), k, dp.data(), dq.data());
    const float g = o.grad()[0];
    if (p.requires_grad()) p.grad() += g * ConstArrayMap(dp.data(), k);
    if (q.requires_grad()) q.grad() += g * ConstArrayMap(dq.data(), k);
  });
  return out;
}

Tensor js_divergence_mean(const Tensor& p, const Tensor& q) {
  if (p.rank() != 2 || q.rank() != 2 || p.shape() != q.shape()) {
    throw ShapeError("js_divergence_mean: " + shape_str(p.shape()) + " vs " +
                     shape_str(q.shape()));
  }
  const int rows = p.dim(0), k = p.dim(1);
  double total = 0.0;
  for (int r = 0; r < rows; ++r) {
    const std::int64_t base = static_cast<std::int64_t>(r) * k;
    check_probability_vector(p.data() + base, k);
    check_probability_vector(q.data() + base, k);
    total += js_forward_row(p.data() + base, q.data() + base, k, nullptr, nullptr);
  }
  Tensor out = Tensor::scalar(static_cast<float>(total / rows));
  maybe_record2(p, q, out, [p, q, rows, k](const Tensor& o) mutable {
    const float g = o.grad()[0] / static_cast<float>(rows);
    std::vector<float> dp(k), dq(k);
    for (int r = 0; r < rows; ++r) {
      const std::int64_t base = static_cast<std::int64_t>(r) * k;
      js_forward_row(p.data() + base, q.data() + base, k, dp.data(), dq.data());
      if (p.requires_grad()) ArrayMap(p.grad().data() + base, k) += g * ConstArrayMap(dp.data(), k);
      if (q.requires_grad()) ArrayMap(q.grad().data() + base, k) += g * ConstArrayMap(dq.data(), k);
    }
  });
  return out;
}

Tensor sar_loss(const Tensor& probs, const std::vector<int>& bd_pred,
                const std::vector<int>& labels) {
  if (probs.rank() != 2) {
    throw ShapeError("sar_loss expects [B,K], got " + shape_str(probs.shape()));
  }
  const int rows = probs.dim(0), k = probs.dim(1);
  if (static_cast<int>(bd_pred.size()) != rows || static_cast<int>(labels.size()) != rows) {
    throw ShapeError("sar_loss: prediction/label count mismatch");
  }
  const float* p = probs.data();
  double total = 0.0;
  for (int r = 0; r < rows; ++r) {
    if (bd_pred[r] < 0 || bd_pred[r] >= k) throw DomainError("sar_loss: prediction out of range");
    if (bd_pred[r] == labels[r]) continue;
    const float rest = 1.0f - p[static_cast<std::int64_t>(r) * k + bd_pred[r]];
    total += -std::log(std::max(rest, kProbFloor));
  }
  Tensor out = Tensor::scalar(static_cast<float>(total / rows));
  maybe_record(probs, out, [probs, bd_pred, labels, rows, k](const Tensor& o) mutable {
    if (!probs.requires_grad()) return;
    const float g = o.grad()[0] / static_cast<float>(rows);
    const float* p = probs.data();
    auto gp = probs.grad();
    for (int r = 0; r < rows; ++r) {
      if (bd_pred[r] == labels[r]) continue;
      const std::int64_t i = static_cast<std::int64_t>(r) * k + bd_pred[r];
      const float rest = 1.0f - p[i];
      if (rest > kProbFloor) gp[i] += g / rest;
    }
  });
  return out;
}

namespace {

void im2col(const float* x, int cin, int h, int w, int kh, int kw, int pad, int hout, int wout,
            float* col) {
  // col is [cin*kh*kw, hout*wout] row-major.
  for (int c = 0; c < cin; ++c) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        float* dst = col + (static_cast<std::int64_t>(c) * kh * kw + ki * kw + kj) *
                               (static_cast<std::int64_t>(hout) * wout);
        for (int i = 0; i < hout; ++i) {
          const int si = i - pad + ki;
          for (int j = 0; j < wout; ++j) {
            const int sj = j - pad + kj;
            dst[i * wout + j] = (si >= 0 && si < h && sj >= 0 && sj < w)
                                    ? x[(static_cast<std::int64_t>(c) * h + si) * w + sj]
                                    : 0.0f;
          }
        }
      }
    }
  }
}

void col2im_add(const float* col, int cin, int h, int w, int kh, int kw, int pad, int hout,
                int wout, float* x) {
  for (int c = 0; c < cin; ++c) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const float* src = col + (static_cast<std::int64_t>(c) * kh * kw + ki * kw + kj) *
                                     (static_cast<std::int64_t>(hout) * wout);
        for (int i = 0; i < hout; ++i) {
          const int si = i - pad + ki;
          if (si < 0 || si >= h) continue;
          for (int j = 0; j < wout; ++j) {
            const int sj = j - pad + kj;
            if (sj >= 0 && sj < w) {
              x[(static_cast<std::int64_t>(c) * h + si) * w + sj] += src[i * wout + j];
            }
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, int pad) {
  if (x.rank() != 4 || w.rank() != 4 || x.dim(1) != w.dim(1)) {
    throw ShapeError("conv2d: " + shape_str(x.shape()) + " (*) " + shape_str(w.shape()));
  }
  const int batch = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int hout = h + 2 * pad - kh + 1;
  const int wout = wd + 2 * pad - kw + 1;
  if (hout <= 0 || wout <= 0) throw ShapeError("conv2d: kernel larger than padded input");

  Tensor out = Tensor::zeros({batch, cout, hout, wout});
  const std::int64_t patch = static_cast<std::int64_t>(cin) * kh * kw;
  const std::int64_t area = static_cast<std::int64_t>(hout) * wout;
  std::vector<float> col(static_cast<std::size_t>(patch * area));
  ConstMatrixMap W(w.data(), cout, patch);
  for (int n = 0; n < batch; ++n) {
    im2col(x.data() + static_cast<std::int64_t>(n) * cin * h * wd, cin, h, wd, kh, kw, pad, hout,
           wout, col.data());
    ConstMatrixMap C(col.data(), patch, area);
    MatrixMap(out.data() + static_cast<std::int64_t>(n) * cout * area, cout, area).noalias() =
        W * C;
  }

  maybe_record2(x, w, out, [x, w, pad, batch, cin, h, wd, cout, kh, kw, hout, wout, patch,
                            area](const Tensor& o) mutable {
    std::vector<float> col(static_cast<std::size_t>(patch * area));
    std::vector<float> dcol(static_cast<std::size_t>(patch * area));
    ConstMatrixMap W(w.data(), cout, patch);
    for (int n = 0; n < batch; ++n) {
      ConstMatrixMap G(o.grad().data() + static_cast<std::int64_t>(n) * cout * area, cout, area);
      if (w.requires_grad()) {
        im2col(x.data() + static_cast<std::int64_t>(n) * cin * h * wd, cin, h, wd, kh, kw, pad,
               hout, wout, col.data());
        ConstMatrixMap C(col.data(), patch, area);
        MatrixMap(w.grad().data(), cout, patch).noalias() += G * C.transpose();
      }
      if (x.requires_grad()) {
        MatrixMap(dcol.data(), patch, area).noalias() = W.transpose() * G;
        col2im_add(dcol.data(), cin, h, wd, kh, kw, pad, hout, wout,
                   x.grad().data() + static_cast<std::int64_t>(n) * cin * h * wd);
      }
    }
  });
  return out;
}

Tensor avg_pool2(const Tensor& x) {
  if (x.rank() != 4 || x.dim(2) % 2 != 0 || x.dim(3) % 2 != 0) {
    throw ShapeError("avg_pool2 expects [B,C,2i,2j], got " + shape_str(x.shape()));
  }
  const int batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int ho = h / 2, wo = w / 2;
  Tensor out = Tensor::zeros({batch, ch, ho, wo});
  const float* xs = x.data();
  float* os = out.data();
  for (std::int64_t nc = 0; nc < static_cast<std::int64_t>(batch) * ch; ++nc) {
    const float* plane = xs + nc * h * w;
    float* oplane = os + nc * ho * wo;
    for (int i = 0; i < ho; ++i) {
      for (int j = 0; j < wo; ++j) {
        const float* p = plane + (2 * i) * w + 2 * j;
        oplane[i * wo + j] = 0.25f * (p[0] + p[1] + p[w] + p[w + 1]);
      }
    }
  }
  maybe_record(x, out, [x, batch, ch, h, w, ho, wo](const Tensor& o) mutable {
    if (!x.requires_grad()) return;
    const float* gs = o.grad().data();
    float* gx = x.grad().data();
    for (std::int64_t nc = 0; nc < static_cast<std::int64_t>(batch) * ch; ++nc) {
      const float* gplane = gs + nc * ho * wo;
      float* xplane = gx + nc * h * w;
      for (int i = 0; i < ho; ++i) {
        for (int j = 0; j < wo; ++j) {
          const float g = 0.25f * gplane[i * wo + j];
          float* p = xplane + (2 * i) * w + 2 * j;
          p[0] += g;
          p[1] += g;
          p[w] += g;
          p[w + 1] += g;
        }
      }
    }
  });
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("global_avg_pool expects [B,C,H,W]");
  const int batch = x.dim(0), ch = x.dim(1);
  const std::int64_t area = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
  const float inv = 1.0f / static_cast<float>(area);
  Tensor out = Tensor::zeros({batch, ch});
  const float* xs = x.data();
  float* os = out.data();
  for (std::int64_t nc = 0; nc < static_cast<std::int64_t>(batch) * ch; ++nc) {
    os[nc] = static_cast<float>(ConstArrayMap(xs + nc * area, area).cast<double>().sum()) * inv;
  }
  maybe_record(x, out, [x, batch, ch, area, inv](const Tensor& o) mutable {
    if (!x.requires_grad()) return;
    const float* gs = o.grad().data();
    float* gx = x.grad().data();
    for (std::int64_t nc = 0; nc < static_cast<std::int64_t>(batch) * ch; ++nc) {
      ArrayMap(gx + nc * area, area) += gs[nc] * inv;
    }
  });
  return out;
}

Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                 Tensor& running_var, bool use_batch_stats, float momentum, float eps) {
  if (x.rank() != 2 && x.rank() != 4) {
    throw ShapeError("batchnorm expects [B,C] or [B,C,H,W], got " + shape_str(x.shape()));
  }
  const int batch = x.dim(0), ch = x.dim(1);
  const std::int64_t spatial = x.rank() == 4 ? static_cast<std::int64_t>(x.dim(2)) * x.dim(3) : 1;
  if (gamma.size() != ch || beta.size() != ch || running_mean.size() != ch ||
      running_var.size() != ch) {
    throw ShapeError("batchnorm: parameter size does not match channel count");
  }
  const std::int64_t n = static_cast<std::int64_t>(batch) * spatial;
  auto offset = [ch, spatial](int b, int c) {
    return (static_cast<std::int64_t>(b) * ch + c) * spatial;
  };

  std::vector<float> mean_c(ch), invstd_c(ch);
  const float* xs = x.data();
  if (use_batch_stats) {
    for (int c = 0; c < ch; ++c) {
      double s = 0.0, s2 = 0.0;
      for (int b = 0; b < batch; ++b) {
        ConstArrayMap v(xs + offset(b, c), spatial);
        s += v.cast<double>().sum();
        s2 += v.cast<double>().square().sum();
      }
      const double mu = s / static_cast<double>(n);
      const double var = std::max(s2 / static_cast<double>(n) - mu * mu, 0.0);
      mean_c[c] = static_cast<float>(mu);
      invstd_c[c] = static_cast<float>(1.0 / std::sqrt(var + eps));
      running_mean.data()[c] =
          (1.0f - momentum) * running_mean.at(c) + momentum * static_cast<float>(mu);
      running_var.data()[c] =
          (1.0f - momentum) * running_var.at(c) + momentum * static_cast<float>(var);
    }
  } else {
    for (int c = 0; c < ch; ++c) {
      mean_c[c] = running_mean.at(c);
      invstd_c[c] = 1.0f / std::sqrt(running_var.at(c) + eps);
    }
  }

  Tensor xhat = Tensor::zeros(x.shape());
  Tensor out = Tensor::zeros(x.shape());
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < ch; ++c) {
      ConstArrayMap v(xs + offset(b, c), spatial);
      ArrayMap xh(xhat.data() + offset(b, c), spatial);
      xh = (v - mean_c[c]) * invstd_c[c];
      ArrayMap(out.data() + offset(b, c), spatial) = xh * gamma.at(c) + beta.at(c);
    }
  }

  if (tracing(x, gamma) || tracing(beta)) {
    GradTape::active()->record(
        {x, gamma, beta}, out,
        [x, gamma, beta, xhat, invstd_c, use_batch_stats, batch, ch, spatial, n,
         offset](const Tensor& o) {
          const float* gg = o.grad().data();
          for (int c = 0; c < ch; ++c) {
            // Channel-wise reductions of upstream grad and grad*xhat.
            double gsum = 0.0, gxsum = 0.0;
            for (int b = 0; b < batch; ++b) {
              ConstArrayMap g(gg + offset(b, c), spatial);
              ConstArrayMap xh(xhat.data() + offset(b, c), spatial);
              gsum += g.cast<double>().sum();
              gxsum += (g.cast<double>() * xh.cast<double>()).sum();
            }
            if (gamma.requires_grad()) gamma.grad()[c] += static_cast<float>(gxsum);
            if (beta.requires_grad()) beta.grad()[c] += static_cast<float>(gsum);
            if (x.requires_grad()) {
              const float a = gamma.at(c) * invstd_c[c];
              if (use_batch_stats) {
                const float gm = static_cast<float>(gsum / static_cast<double>(n));
                const float gxm = static_cast<float>(gxsum / static_cast<double>(n));
                for (int b = 0; b < batch; ++b) {
                  ConstArrayMap g(gg + offset(b, c), spatial);
                  ConstArrayMap xh(xhat.data() + offset(b, c), spatial);
                  ArrayMap(x.grad().data() + offset(b, c), spatial) += a * (g - gm - xh * gxm);
                }
              } else {
                for (int b = 0; b < batch; ++b) {
                  ConstArrayMap g(gg + offset(b, c), spatial);
                  ArrayMap(x.grad().data() + offset(b, c), spatial) += a * g;
                }
              }
            }
          }
        });
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape new_shape) {
  if (shape_size(new_shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                     shape_str(new_shape));
  }
  Tensor out = Tensor::zeros(std::move(new_shape));
  out.array() = x.array();
  maybe_record(x, out, [x](const Tensor& o) mutable {
    if (x.requires_grad()) x.grad() += o.grad();
  });
  return out;
}

int argmax(const float* row, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

std::vector<int> argmax_rows(const Tensor& m) {
  if (m.rank() != 2) throw ShapeError("argmax_rows expects [B,K]");
  const int rows = m.dim(0), cols = m.dim(1);
  std::vector<int> out(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    out[static_cast<std::size_t>(r)] = argmax(m.data() + static_cast<std::int64_t>(r) * cols, cols);
  }
  return out;
}

Tensor sign_of(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  out.array() = a.array().sign();
  return out;
}

}  // namespace sau
