#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "misgen/parallel.hpp"
#include "misgen/rng.hpp"
#include "misgen/tensor.hpp"

namespace misgen::num {

// Actor-critic trunk: conv 3x3 (pad 1) -> ReLU -> conv 3x3 (pad 1) -> ReLU
// -> flatten + inventory -> dense -> ReLU -> {policy logits, value}.
struct ArchDesc {
  int in_channels = 0;
  int height = 0;
  int width = 0;
  int inventory_dim = 0;
  int action_count = 0;
  int conv1_channels = 16;
  int conv2_channels = 32;
  int hidden_dim = 256;

  int spatial() const { return height * width; }
  int conv_out_elems() const { return conv2_channels * spatial(); }
  // Flatten order: feature index = (h*width + w) * conv2_channels + c,
  // inventory scalars appended at the end.
  int feature_dim() const { return conv_out_elems() + inventory_dim; }

  bool operator==(const ArchDesc&) const = default;
};

// Named parameter tensors in canonical order. Conv weights are stored
// [out_ch][ky][kx][in_ch] so that im2col rows (k*in_ch + c) line up with
// contiguous channel blocks; dense/head weights are [out][in] row-major.
template <typename S>
struct ParamSet {
  ArchDesc arch;
  Tensor<S> conv1_w, conv1_b;
  Tensor<S> conv2_w, conv2_b;
  Tensor<S> dense_w, dense_b;
  Tensor<S> policy_w, policy_b;
  Tensor<S> value_w, value_b;

  static ParamSet zeros(const ArchDesc& a) {
    ParamSet p;
    p.arch = a;
    p.conv1_w = Tensor<S>({a.conv1_channels, 3, 3, a.in_channels});
    p.conv1_b = Tensor<S>({a.conv1_channels});
    p.conv2_w = Tensor<S>({a.conv2_channels, 3, 3, a.conv1_channels});
    p.conv2_b = Tensor<S>({a.conv2_channels});
    p.dense_w = Tensor<S>({a.hidden_dim, a.feature_dim()});
    p.dense_b = Tensor<S>({a.hidden_dim});
    p.policy_w = Tensor<S>({a.action_count, a.hidden_dim});
    p.policy_b = Tensor<S>({a.action_count});
    p.value_w = Tensor<S>({1, a.hidden_dim});
    p.value_b = Tensor<S>({1});
    return p;
  }

  template <typename F>
  void for_each(F&& f) {
    f("conv1_w", conv1_w);
    f("conv1_b", conv1_b);
    f("conv2_w", conv2_w);
    f("conv2_b", conv2_b);
    f("dense_w", dense_w);
    f("dense_b", dense_b);
    f("policy_w", policy_w);
    f("policy_b", policy_b);
    f("value_w", value_w);
    f("value_b", value_b);
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<ParamSet*>(this)->for_each([&](const char* n, Tensor<S>& t) {
      f(n, static_cast<const Tensor<S>&>(t));
    });
  }

  int64_t total_params() const {
    int64_t n = 0;
    for_each([&](const char*, const Tensor<S>& t) { n += t.numel(); });
    return n;
  }

  void set_zero() {
    for_each([](const char*, Tensor<S>& t) { t.array().setZero(); });
  }

  void add(const ParamSet& other) {
    std::vector<Tensor<S>*> mine, theirs;
    for_each([&](const char*, Tensor<S>& t) { mine.push_back(&t); });
    const_cast<ParamSet&>(other).for_each([&](const char*, Tensor<S>& t) { theirs.push_back(&t); });
    for (size_t i = 0; i < mine.size(); ++i) mine[i]->array() += theirs[i]->array();
  }

  template <typename T>
  ParamSet<T> cast() const {
    ParamSet<T> out = ParamSet<T>::zeros(arch);
    std::vector<const Tensor<S>*> src;
    for_each([&](const char*, const Tensor<S>& t) { src.push_back(&t); });
    size_t i = 0;
    out.for_each([&](const char*, Tensor<T>& t) {
      for (int64_t j = 0; j < t.numel(); ++j)
        t.data[static_cast<size_t>(j)] = static_cast<T>(src[i]->data[static_cast<size_t>(j)]);
      ++i;
    });
    return out;
  }
};

namespace detail {

// Orthogonal rows scaled by gain, computed in double regardless of S.
// Gaussian fill order is row-major; QR column signs are fixed so the
// result is a well-defined function of the rng draws.
inline MatX<double> orthogonal_rows(int rows, int cols, double gain, RngStream& rng) {
  MatX<double> a(cols, rows);  // QR of the transpose: orthonormal columns
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) a(c, r) = rng.normal();
  Eigen::HouseholderQR<MatX<double>> qr(a);
  MatX<double> q = qr.householderQ() * MatX<double>::Identity(cols, rows);
  VecX<double> diag = qr.matrixQR().diagonal().head(rows);
  for (int k = 0; k < rows; ++k)
    if (diag(k) < 0) q.col(k) = -q.col(k);
  return gain * q.transpose();
}

template <typename S>
void fill_from(Tensor<S>& t, const MatX<double>& m) {
  // m is (rows, cols); tensor flat layout is row-major over the same matrix.
  int rows = static_cast<int>(m.rows()), cols = static_cast<int>(m.cols());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) t.data[static_cast<size_t>(r) * cols + c] = static_cast<S>(m(r, c));
}

}  // namespace detail

// Orthogonal-scaled trunk, zero output heads: the initial policy is exactly
// uniform and initial values are exactly zero.
template <typename S>
ParamSet<S> init_params(const ArchDesc& a, RngStream& rng) {
  ParamSet<S> p = ParamSet<S>::zeros(a);
  const double relu_gain = std::sqrt(2.0);
  detail::fill_from(p.conv1_w, detail::orthogonal_rows(a.conv1_channels, 9 * a.in_channels, relu_gain, rng));
  detail::fill_from(p.conv2_w, detail::orthogonal_rows(a.conv2_channels, 9 * a.conv1_channels, relu_gain, rng));
  detail::fill_from(p.dense_w, detail::orthogonal_rows(a.hidden_dim, a.feature_dim(), relu_gain, rng));
  return p;
}

// ---------------------------------------------------------------------------
// Forward / backward machinery. Activations are kept channel-minor: a layer
// output is a (channels, batch*H*W) column-major matrix whose column
// b*H*W + h*W + w holds all channels of one cell.

struct LossCoeffs {
  double clip_eps = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
};

struct LossStats {
  double loss_total = 0, loss_policy = 0, loss_value = 0;
  double entropy = 0, kl = 0, clip_frac = 0;
  double max_ratio_dev = 0;  // max |rho - 1| over the batch

  void accumulate(const LossStats& o) {
    loss_total += o.loss_total;
    loss_policy += o.loss_policy;
    loss_value += o.loss_value;
    entropy += o.entropy;
    kl += o.kl;
    clip_frac += o.clip_frac;
    max_ratio_dev = std::max(max_ratio_dev, o.max_ratio_dev);
  }
};

// A view of one PPO minibatch. obs/inventory rows are addressed through
// `indices` when present (gather-free shuffled minibatches); otherwise
// sample b lives at row b.
template <typename S>
struct PpoBatch {
  const S* obs_base = nullptr;        // stride C*H*W, row-major [c][h][w]
  const S* inventory_base = nullptr;  // stride K
  const int* indices = nullptr;       // nullptr => identity
  const int* actions = nullptr;
  const S* old_logp = nullptr;
  const S* advantages = nullptr;
  const S* value_targets = nullptr;
  int batch = 0;

  int row(int b) const { return indices ? indices[b] : b; }
};

template <typename S>
struct NetScratch {
  MatX<S> xm;     // input converted channel-minor
  MatX<S> cols1, y1, cols2, y2;
  MatX<S> feat, hid, logits;
  VecX<S> values;
  MatX<S> dlogits, dhid, dfeat, dy2, dcols2, dy1;
  VecX<S> dvalues;
};

namespace detail {

// Number of samples per GEMM micro-batch. All forward paths use the same
// micro-batching so a given sample produces bitwise-identical activations
// during collection and during updates.
inline constexpr int kMicroBatch = 64;

template <typename S>
void to_channel_minor(const ArchDesc& a, const PpoBatch<S>& batch, int b0, int mb, MatX<S>& xm) {
  const int hw = a.spatial(), c_in = a.in_channels;
  xm.resize(c_in, static_cast<Eigen::Index>(mb) * hw);
  for (int b = 0; b < mb; ++b) {
    const S* src = batch.obs_base + static_cast<int64_t>(batch.row(b0 + b)) * c_in * hw;
    S* dst = xm.data() + static_cast<int64_t>(b) * hw * c_in;
    for (int c = 0; c < c_in; ++c)
      for (int p = 0; p < hw; ++p) dst[static_cast<int64_t>(p) * c_in + c] = src[static_cast<int64_t>(c) * hw + p];
  }
}

// src is (C, mb*H*W) channel-minor; cols is (9*C, mb*H*W) with row block
// k*C..k*C+C holding the kernel-offset-k neighbor channels (zero padded).
template <typename S>
void im2col(const MatX<S>& src, int mb, int c, int h, int w, MatX<S>& cols) {
  const int hw = h * w;
  cols.resize(static_cast<Eigen::Index>(9) * c, static_cast<Eigen::Index>(mb) * hw);
  for (int b = 0; b < mb; ++b) {
    for (int k = 0; k < 9; ++k) {
      const int dy = k / 3 - 1, dx = k % 3 - 1;
      for (int y = 0; y < h; ++y) {
        const int sy = y + dy;
        S* dst_col0 = cols.data() + (static_cast<int64_t>(b) * hw + static_cast<int64_t>(y) * w) * 9 * c + k * c;
        if (sy < 0 || sy >= h) {
          for (int x = 0; x < w; ++x) std::memset(dst_col0 + static_cast<int64_t>(x) * 9 * c, 0, sizeof(S) * c);
          continue;
        }
        for (int x = 0; x < w; ++x) {
          const int sx = x + dx;
          S* dst = dst_col0 + static_cast<int64_t>(x) * 9 * c;
          if (sx < 0 || sx >= w) {
            std::memset(dst, 0, sizeof(S) * c);
          } else {
            const S* s = src.data() + (static_cast<int64_t>(b) * hw + static_cast<int64_t>(sy) * w + sx) * c;
            std::memcpy(dst, s, sizeof(S) * c);
          }
        }
      }
    }
  }
}

// Transpose of im2col: adds col blocks back onto the padded source grid.
template <typename S>
void col2im_add(const MatX<S>& dcols, int mb, int c, int h, int w, MatX<S>& dst) {
  const int hw = h * w;
  dst.resize(c, static_cast<Eigen::Index>(mb) * hw);
  dst.setZero();
  for (int b = 0; b < mb; ++b) {
    for (int k = 0; k < 9; ++k) {
      const int dy = k / 3 - 1, dx = k % 3 - 1;
      for (int y = 0; y < h; ++y) {
        const int sy = y + dy;
        if (sy < 0 || sy >= h) continue;
        for (int x = 0; x < w; ++x) {
          const int sx = x + dx;
          if (sx < 0 || sx >= w) continue;
          const S* s = dcols.data() + (static_cast<int64_t>(b) * hw + static_cast<int64_t>(y) * w + x) * 9 * c + k * c;
          S* d = dst.data() + (static_cast<int64_t>(b) * hw + static_cast<int64_t>(sy) * w + sx) * c;
          for (int i = 0; i < c; ++i) d[i] += s[i];
        }
      }
    }
  }
}

template <typename S>
Eigen::Map<const MatX<S>> weight_mat(const Tensor<S>& w, int fan_in, int fan_out) {
  // Row-major [out][in] flat data viewed column-major as (in, out).
  return {w.ptr(), fan_in, fan_out};
}

template <typename S>
Eigen::Map<const VecX<S>> bias_vec(const Tensor<S>& b) {
  return {b.ptr(), b.numel()};
}

// Runs the trunk + heads on samples [b0, b0+mb); leaves activations in s.
template <typename S>
void forward_micro(const ParamSet<S>& p, const PpoBatch<S>& batch, int b0, int mb, NetScratch<S>& s) {
  const ArchDesc& a = p.arch;
  const int hw = a.spatial();

  to_channel_minor(a, batch, b0, mb, s.xm);
  im2col(s.xm, mb, a.in_channels, a.height, a.width, s.cols1);
  auto w1 = weight_mat(p.conv1_w, 9 * a.in_channels, a.conv1_channels);
  s.y1.noalias() = w1.transpose() * s.cols1;
  s.y1.colwise() += bias_vec(p.conv1_b);
  s.y1 = s.y1.cwiseMax(S(0));

  im2col(s.y1, mb, a.conv1_channels, a.height, a.width, s.cols2);
  auto w2 = weight_mat(p.conv2_w, 9 * a.conv1_channels, a.conv2_channels);
  s.y2.noalias() = w2.transpose() * s.cols2;
  s.y2.colwise() += bias_vec(p.conv2_b);
  s.y2 = s.y2.cwiseMax(S(0));

  // Flatten (position-major, channel-minor) + inventory.
  s.feat.resize(a.feature_dim(), mb);
  const int c2 = a.conv2_channels;
  for (int b = 0; b < mb; ++b) {
    std::memcpy(s.feat.data() + static_cast<int64_t>(b) * a.feature_dim(),
                s.y2.data() + static_cast<int64_t>(b) * hw * c2, sizeof(S) * static_cast<size_t>(hw) * c2);
    const S* inv = batch.inventory_base + static_cast<int64_t>(batch.row(b0 + b)) * a.inventory_dim;
    for (int k = 0; k < a.inventory_dim; ++k)
      s.feat(static_cast<Eigen::Index>(c2) * hw + k, b) = inv[k];
  }

  auto wd = weight_mat(p.dense_w, a.feature_dim(), a.hidden_dim);
  s.hid.noalias() = wd.transpose() * s.feat;
  s.hid.colwise() += bias_vec(p.dense_b);
  s.hid = s.hid.cwiseMax(S(0));

  auto wp = weight_mat(p.policy_w, a.hidden_dim, a.action_count);
  s.logits.noalias() = wp.transpose() * s.hid;
  s.logits.colwise() += bias_vec(p.policy_b);

  auto wv = weight_mat(p.value_w, a.hidden_dim, 1);
  s.values.noalias() = (wv.transpose() * s.hid).transpose();
  s.values.array() += static_cast<S>(p.value_b.data[0]);
}

}  // namespace detail

template <typename S>
struct ForwardResult {
  Tensor<S> logits;  // [B x A]
  Tensor<S> values;  // [B]
};

// Pure batched policy/value evaluation. Scratch may be reused across calls.
template <typename S>
void forward_into(const ParamSet<S>& p, const PpoBatch<S>& batch, NetScratch<S>& scratch,
                  S* logits_out, S* values_out) {
  const int a_cnt = p.arch.action_count;
  for (int b0 = 0; b0 < batch.batch; b0 += detail::kMicroBatch) {
    const int mb = std::min(detail::kMicroBatch, batch.batch - b0);
    detail::forward_micro(p, batch, b0, mb, scratch);
    std::memcpy(logits_out + static_cast<int64_t>(b0) * a_cnt, scratch.logits.data(),
                sizeof(S) * static_cast<size_t>(mb) * a_cnt);
    std::memcpy(values_out + b0, scratch.values.data(), sizeof(S) * static_cast<size_t>(mb));
  }
}

template <typename S>
ForwardResult<S> forward(const ParamSet<S>& p, const Tensor<S>& obs, const Tensor<S>& inventory) {
  const ArchDesc& a = p.arch;
  require_shape(obs.shape.size() == 4, "forward: obs must be [B x C x H x W], got " + obs.shape_str());
  const int b = obs.dim(0);
  require_shape(obs.dim(1) == a.in_channels && obs.dim(2) == a.height && obs.dim(3) == a.width,
                "forward: obs " + obs.shape_str() + " does not match architecture C/H/W");
  require_shape(inventory.shape.size() == 2 && inventory.dim(0) == b && inventory.dim(1) == a.inventory_dim,
                "forward: inventory " + inventory.shape_str() + " must be [B x K]");

  ForwardResult<S> out{Tensor<S>({b, a.action_count}), Tensor<S>({b})};
  PpoBatch<S> view;
  view.obs_base = obs.ptr();
  view.inventory_base = inventory.ptr();
  view.batch = b;
  NetScratch<S> scratch;
  forward_into(p, view, scratch, out.logits.ptr(), out.values.ptr());
  if (!out.logits.all_finite() || !out.values.all_finite())
    throw std::runtime_error("forward: non-finite output");
  return out;
}

// ---------------------------------------------------------------------------
// Composite PPO loss (clipped surrogate + value MSE + entropy bonus) with
// exact reverse-mode gradients for the fixed architecture.

namespace detail {

// Per-sample loss terms and dLoss/dlogits, dLoss/dvalue. All reductions are
// sequential per sample; the 1/B mean factor is applied here.
template <typename S>
void loss_heads(const PpoBatch<S>& batch, int b0, int mb, const LossCoeffs& k, NetScratch<S>& s,
                LossStats& stats) {
  const int acts = static_cast<int>(s.logits.rows());
  s.dlogits.resize(acts, mb);
  s.dvalues.resize(mb);
  const S inv_b = S(1) / static_cast<S>(batch.batch);
  for (int b = 0; b < mb; ++b) {
    const int g = b0 + b;
    // log-softmax, stable
    S mx = s.logits.col(b).maxCoeff();
    S z = 0;
    for (int j = 0; j < acts; ++j) z += std::exp(s.logits(j, b) - mx);
    const S log_z = std::log(z) + mx;

    const int act = batch.actions[g];
    const S logp = s.logits(act, b) - log_z;
    const S ratio = std::exp(logp - batch.old_logp[g]);
    const S adv = batch.advantages[g];
    const S lo = S(1) - static_cast<S>(k.clip_eps), hi = S(1) + static_cast<S>(k.clip_eps);
    const S clipped = std::min(std::max(ratio, lo), hi);
    const S s1 = ratio * adv, s2 = clipped * adv;
    const bool unclipped_active = s1 <= s2;

    S entropy = 0;
    for (int j = 0; j < acts; ++j) {
      const S lp = s.logits(j, b) - log_z;
      entropy -= std::exp(lp) * lp;
    }

    const S v = s.values(b);
    const S vt = batch.value_targets[g];

    stats.loss_policy += -std::min(s1, s2) * inv_b;
    stats.loss_value += static_cast<S>(k.value_coef) * (v - vt) * (v - vt) * inv_b;
    stats.entropy += entropy * inv_b;
    stats.kl += (batch.old_logp[g] - logp) * inv_b;
    stats.clip_frac += (ratio < lo || ratio > hi) ? inv_b : S(0);
    stats.max_ratio_dev = std::max(stats.max_ratio_dev, std::abs(static_cast<double>(ratio) - 1.0));

    // d(-min(s1,s2))/dlogp: -adv*ratio on the unclipped branch, 0 otherwise.
    const S dlogp = unclipped_active ? -adv * ratio : S(0);
    for (int j = 0; j < acts; ++j) {
      const S pj = std::exp(s.logits(j, b) - log_z);
      const S ind = (j == act) ? S(1) : S(0);
      const S d_pol = dlogp * (ind - pj);
      const S d_ent = static_cast<S>(k.entropy_coef) * pj * ((s.logits(j, b) - log_z) + entropy);
      s.dlogits(j, b) = (d_pol + d_ent) * inv_b;
    }
    s.dvalues(b) = S(2) * static_cast<S>(k.value_coef) * (v - vt) * inv_b;
  }
}

template <typename S>
void backward_micro(const ParamSet<S>& p, int mb, NetScratch<S>& s, ParamSet<S>& g) {
  const ArchDesc& a = p.arch;
  const int hw = a.spatial(), c2 = a.conv2_channels;

  auto wp = weight_mat(p.policy_w, a.hidden_dim, a.action_count);
  auto wv = weight_mat(p.value_w, a.hidden_dim, 1);

  Eigen::Map<MatX<S>> g_wp(g.policy_w.ptr(), a.hidden_dim, a.action_count);
  Eigen::Map<VecX<S>> g_bp(g.policy_b.ptr(), a.action_count);
  Eigen::Map<MatX<S>> g_wv(g.value_w.ptr(), a.hidden_dim, 1);
  g_wp.noalias() += s.hid * s.dlogits.transpose();
  g_bp.noalias() += s.dlogits.rowwise().sum();
  g_wv.noalias() += s.hid * s.dvalues;
  g.value_b.data[0] += s.dvalues.sum();

  s.dhid.noalias() = wp * s.dlogits;
  s.dhid.noalias() += wv * s.dvalues.transpose();
  s.dhid = (s.hid.array() > S(0)).select(s.dhid, S(0));

  auto wd = weight_mat(p.dense_w, a.feature_dim(), a.hidden_dim);
  Eigen::Map<MatX<S>> g_wd(g.dense_w.ptr(), a.feature_dim(), a.hidden_dim);
  Eigen::Map<VecX<S>> g_bd(g.dense_b.ptr(), a.hidden_dim);
  g_wd.noalias() += s.feat * s.dhid.transpose();
  g_bd.noalias() += s.dhid.rowwise().sum();
  s.dfeat.noalias() = wd * s.dhid;

  // un-flatten (inventory rows carry no upstream parameters)
  s.dy2.resize(c2, static_cast<Eigen::Index>(mb) * hw);
  for (int b = 0; b < mb; ++b)
    std::memcpy(s.dy2.data() + static_cast<int64_t>(b) * hw * c2,
                s.dfeat.data() + static_cast<int64_t>(b) * a.feature_dim(),
                sizeof(S) * static_cast<size_t>(hw) * c2);
  s.dy2 = (s.y2.array() > S(0)).select(s.dy2, S(0));

  auto w2 = weight_mat(p.conv2_w, 9 * a.conv1_channels, a.conv2_channels);
  Eigen::Map<MatX<S>> g_w2(g.conv2_w.ptr(), 9 * a.conv1_channels, a.conv2_channels);
  Eigen::Map<VecX<S>> g_b2(g.conv2_b.ptr(), a.conv2_channels);
  g_w2.noalias() += s.cols2 * s.dy2.transpose();
  g_b2.noalias() += s.dy2.rowwise().sum();
  s.dcols2.noalias() = w2 * s.dy2;
  col2im_add(s.dcols2, mb, a.conv1_channels, a.height, a.width, s.dy1);
  s.dy1 = (s.y1.array() > S(0)).select(s.dy1, S(0));

  Eigen::Map<MatX<S>> g_w1(g.conv1_w.ptr(), 9 * a.in_channels, a.conv1_channels);
  Eigen::Map<VecX<S>> g_b1(g.conv1_b.ptr(), a.conv1_channels);
  g_w1.noalias() += s.cols1 * s.dy1.transpose();
  g_b1.noalias() += s.dy1.rowwise().sum();
}

}  // namespace detail

// Loss + exact gradient over one contiguous range of the batch, accumulated
// into `grads` (caller zeroes). Returns stats scaled by 1/batch.
template <typename S>
LossStats ppo_loss_grad_range(const ParamSet<S>& p, const PpoBatch<S>& batch, const LossCoeffs& k,
                              int b_begin, int b_end, NetScratch<S>& scratch, ParamSet<S>& grads) {
  LossStats stats;
  for (int b0 = b_begin; b0 < b_end; b0 += detail::kMicroBatch) {
    const int mb = std::min(detail::kMicroBatch, b_end - b0);
    detail::forward_micro(p, batch, b0, mb, scratch);
    detail::loss_heads(batch, b0, mb, k, scratch, stats);
    detail::backward_micro(p, mb, scratch, grads);
  }
  return stats;
}

// Full-batch loss + gradient with deterministic chunked parallelism:
// fixed-size chunks accumulate private gradient buffers which are reduced
// in chunk order, so the result is independent of MISGEN_THREADS.
template <typename S>
LossStats ppo_loss_grad(const ParamSet<S>& p, const PpoBatch<S>& batch, const LossCoeffs& k,
                        ParamSet<S>& grads,
                        std::vector<ParamSet<S>>* chunk_bufs = nullptr,
                        std::vector<NetScratch<S>>* scratch_pool = nullptr) {
  constexpr int kChunk = 256;
  const int n_chunks = (batch.batch + kChunk - 1) / kChunk;
  grads.set_zero();

  std::vector<ParamSet<S>> local_bufs;
  std::vector<NetScratch<S>> local_scratch;
  auto& bufs = chunk_bufs ? *chunk_bufs : local_bufs;
  auto& pool = scratch_pool ? *scratch_pool : local_scratch;
  while (static_cast<int>(bufs.size()) < n_chunks) bufs.push_back(ParamSet<S>::zeros(p.arch));
  if (pool.empty()) pool.resize(static_cast<size_t>(thread_budget()));

  std::vector<LossStats> chunk_stats(static_cast<size_t>(n_chunks));
  parallel_chunks(n_chunks, [&](int c, int w) {
    auto& buf = bufs[static_cast<size_t>(c)];
    if (buf.arch != p.arch) buf = ParamSet<S>::zeros(p.arch);
    buf.set_zero();
    const int b0 = c * kChunk, b1 = std::min(batch.batch, b0 + kChunk);
    chunk_stats[static_cast<size_t>(c)] =
        ppo_loss_grad_range(p, batch, k, b0, b1, pool[static_cast<size_t>(w)], buf);
  });

  LossStats stats;
  for (int c = 0; c < n_chunks; ++c) {
    grads.add(bufs[static_cast<size_t>(c)]);
    stats.accumulate(chunk_stats[static_cast<size_t>(c)]);
  }
  stats.loss_total = stats.loss_policy + stats.loss_value - k.entropy_coef * stats.entropy;

  grads.for_each([](const char* name, Tensor<S>& t) {
    if (!t.all_finite())
      throw std::runtime_error(std::string("backward: non-finite gradient in tensor ") + name);
  });
  if (!std::isfinite(stats.loss_total))
    throw std::runtime_error("backward: non-finite loss");
  return stats;
}

}  // namespace misgen::num
