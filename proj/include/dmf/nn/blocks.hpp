#pragma once

#include <vector>

#include "dmf/nn/config.hpp"
#include "dmf/nn/layers.hpp"

namespace dmf::nn {

/// conv(2, kf) stride (1, 2) -> per-frame norm -> PReLU.
template <typename T>
class EncoderBlock {
 public:
  struct Ctx {
    typename Conv2dDown<T>::Ctx conv;
    typename FreqNorm<T>::Ctx norm;
    typename PReLU<T>::Ctx act;
  };

  EncoderBlock() = default;
  EncoderBlock(std::size_t in_ch, std::size_t out_ch, std::size_t kf, Rng& rng)
      : conv_(in_ch, out_ch, kf, rng), norm_(out_ch), act_(out_ch) {}

  Tensor<T> forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    auto h = conv_.forward(x, ctx ? &ctx->conv : nullptr);
    h = norm_.forward(h, ctx ? &ctx->norm : nullptr);
    return act_.forward(h, ctx ? &ctx->act : nullptr);
  }

  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& dy) {
    auto g = act_.backward(ctx.act, dy);
    g = norm_.backward(ctx.norm, g);
    return conv_.backward(ctx.conv, g);
  }

  template <class F>
  void visit(F&& f) {
    conv_.visit(f);
    norm_.visit(f);
    act_.visit(f);
  }
  template <class F>
  void visit(F&& f) const {
    conv_.visit(f);
    norm_.visit(f);
    act_.visit(f);
  }

 private:
  Conv2dDown<T> conv_;
  FreqNorm<T> norm_;
  PReLU<T> act_;
};

/// Five (by default) downsampling blocks; every block output is kept as a
/// skip connection, outermost first. The last skip is also the latent.
template <typename T>
class Encoder {
 public:
  struct Ctx {
    std::vector<typename EncoderBlock<T>::Ctx> blocks;
  };
  struct Output {
    Tensor<T> latent;
    std::vector<Tensor<T>> skips;
  };

  Encoder() = default;
  Encoder(std::size_t in_ch, const EncoderConfig& cfg, Rng& rng) : cfg_(cfg), in_ch_(in_ch) {
    cfg_.bin_table();  // validates the size arithmetic
    for (std::size_t b = 0; b < cfg.num_blocks; ++b)
      blocks_.emplace_back(b == 0 ? in_ch : cfg.channels, cfg.channels, cfg.kernel_for_block(b), rng);
  }

  Output forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    detail::require_shape(x.rank() == 3 && x.dim(0) == in_ch_,
                          "encoder: expected " + std::to_string(in_ch_) + " input channels, got " +
                              x.shape_string());
    detail::require_shape(x.dim(2) == cfg_.input_bins,
                          "encoder: expected " + std::to_string(cfg_.input_bins) +
                              " frequency bins, got " + std::to_string(x.dim(2)));
    if (ctx) ctx->blocks.resize(blocks_.size());
    Output out;
    const Tensor<T>* cur = &x;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      out.skips.push_back(blocks_[b].forward(*cur, ctx ? &ctx->blocks[b] : nullptr));
      cur = &out.skips.back();
    }
    out.latent = out.skips.back();
    return out;
  }

  /// `d_skips[b]` is the total gradient w.r.t. block b's output.
  Tensor<T> backward(const Ctx& ctx, std::vector<Tensor<T>> d_skips) {
    Tensor<T> g = std::move(d_skips.back());
    for (std::size_t b = blocks_.size(); b-- > 0;) {
      g = blocks_[b].backward(ctx.blocks[b], g);
      if (b > 0) g += d_skips[b - 1];
    }
    return g;
  }

  const EncoderConfig& config() const noexcept { return cfg_; }

  template <class F>
  void visit(F&& f) {
    for (auto& b : blocks_) b.visit(f);
  }
  template <class F>
  void visit(F&& f) const {
    for (const auto& b : blocks_) b.visit(f);
  }

 private:
  EncoderConfig cfg_;
  std::size_t in_ch_ = 0;
  std::vector<EncoderBlock<T>> blocks_;
};

/// concat(x, skip) -> transposed conv(2, kf) stride (1, 2) -> [norm -> PReLU].
template <typename T>
class DecoderBlock {
 public:
  struct Ctx {
    typename ConvTranspose2dUp<T>::Ctx conv;
    typename FreqNorm<T>::Ctx norm;
    typename PReLU<T>::Ctx act;
    std::size_t x_channels = 0;
  };

  DecoderBlock() = default;
  DecoderBlock(std::size_t in_ch, std::size_t skip_ch, std::size_t out_ch, std::size_t kf,
               bool linear, Rng& rng)
      : conv_(in_ch + skip_ch, out_ch, kf, rng), linear_(linear) {
    if (!linear) {
      norm_ = FreqNorm<T>(out_ch);
      act_ = PReLU<T>(out_ch);
    }
  }

  Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& skip, Ctx* ctx = nullptr) const {
    detail::require_shape(x.rank() == 3 && skip.rank() == 3 && x.dim(1) == skip.dim(1) &&
                              x.dim(2) == skip.dim(2),
                          "decoder block: input " + x.shape_string() + " does not match skip " +
                              skip.shape_string());
    if (ctx) ctx->x_channels = x.dim(0);
    auto h = conv_.forward(concat_channels(x, skip), ctx ? &ctx->conv : nullptr);
    if (linear_) return h;
    h = norm_.forward(h, ctx ? &ctx->norm : nullptr);
    return act_.forward(h, ctx ? &ctx->act : nullptr);
  }

  /// Returns {d_x, d_skip}.
  std::pair<Tensor<T>, Tensor<T>> backward(const Ctx& ctx, const Tensor<T>& dy) {
    Tensor<T> g = dy;
    if (!linear_) {
      g = act_.backward(ctx.act, g);
      g = norm_.backward(ctx.norm, g);
    }
    return split_channels(conv_.backward(ctx.conv, g), ctx.x_channels);
  }

  template <class F>
  void visit(F&& f) {
    conv_.visit(f);
    if (!linear_) {
      norm_.visit(f);
      act_.visit(f);
    }
  }
  template <class F>
  void visit(F&& f) const {
    conv_.visit(f);
    if (!linear_) {
      norm_.visit(f);
      act_.visit(f);
    }
  }

 private:
  ConvTranspose2dUp<T> conv_;
  FreqNorm<T> norm_;
  PReLU<T> act_;
  bool linear_ = false;
};

/// Mirror of the encoder. Block j consumes skip (n-1-j) and restores the
/// frequency size that entered encoder block (n-1-j).
template <typename T>
class Decoder {
 public:
  struct Ctx {
    std::vector<typename DecoderBlock<T>::Ctx> blocks;
  };

  Decoder() = default;
  /// `linear_output`: the final block skips norm/PReLU (regression heads).
  Decoder(const EncoderConfig& enc, std::size_t out_ch, bool linear_output, Rng& rng)
      : enc_(enc), bins_(enc.bin_table()) {
    const std::size_t n = enc.num_blocks, c = enc.channels;
    for (std::size_t j = 0; j < n; ++j) {
      const bool last = j + 1 == n;
      blocks_.emplace_back(c, c, last ? out_ch : c, enc.kernel_for_block(n - 1 - j),
                           last && linear_output, rng);
    }
  }

  Tensor<T> forward(const Tensor<T>& latent, const std::vector<Tensor<T>>& skips,
                    Ctx* ctx = nullptr) const {
    const std::size_t n = blocks_.size();
    detail::require_shape(skips.size() == n, "decoder: expected " + std::to_string(n) + " skips");
    for (std::size_t b = 0; b < n; ++b)
      detail::require_shape(skips[b].rank() == 3 && skips[b].dim(2) == bins_[b + 1],
                            "decoder: skip " + std::to_string(b) + " has shape " +
                                skips[b].shape_string());
    if (ctx) ctx->blocks.resize(n);
    Tensor<T> cur = latent;
    for (std::size_t j = 0; j < n; ++j)
      cur = blocks_[j].forward(cur, skips[n - 1 - j], ctx ? &ctx->blocks[j] : nullptr);
    return cur;
  }

  /// Returns d_latent and accumulates skip gradients into `d_skips` (outermost first).
  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& dy, std::vector<Tensor<T>>& d_skips) {
    const std::size_t n = blocks_.size();
    Tensor<T> g = dy;
    for (std::size_t j = n; j-- > 0;) {
      auto [dx, ds] = blocks_[j].backward(ctx.blocks[j], g);
      auto& slot = d_skips[n - 1 - j];
      if (slot.empty())
        slot = std::move(ds);
      else
        slot += ds;
      g = std::move(dx);
    }
    return g;
  }

  /// Frequency size after each decoder block, e.g. 9, 19, 39, 79, 161.
  std::vector<std::size_t> output_bins() const {
    std::vector<std::size_t> r;
    for (std::size_t j = 0; j < blocks_.size(); ++j) r.push_back(bins_[blocks_.size() - 1 - j]);
    return r;
  }

  template <class F>
  void visit(F&& f) {
    for (auto& b : blocks_) b.visit(f);
  }
  template <class F>
  void visit(F&& f) const {
    for (const auto& b : blocks_) b.visit(f);
  }

 private:
  EncoderConfig enc_;
  std::vector<std::size_t> bins_;
  std::vector<DecoderBlock<T>> blocks_;
};

/// Squeezed TCM: 1x1 (C->B) -> norm/PReLU -> dilated causal conv (B->B)
/// -> norm/PReLU -> 1x1 (B->C), plus the residual input.
template <typename T>
class StcmBlock {
 public:
  struct Ctx {
    typename Conv1x1<T>::Ctx squeeze;
    typename ChannelNorm<T>::Ctx n1;
    typename PReLU<T>::Ctx a1;
    typename DilatedCausalConv1d<T>::Ctx dil;
    typename ChannelNorm<T>::Ctx n2;
    typename PReLU<T>::Ctx a2;
    typename Conv1x1<T>::Ctx expand;
  };

  StcmBlock() = default;
  StcmBlock(std::size_t channels, std::size_t bottleneck, std::size_t kernel, std::size_t dilation,
            Rng& rng)
      : squeeze_(channels, bottleneck, rng), n1_(bottleneck), a1_(bottleneck),
        dil_(bottleneck, bottleneck, kernel, dilation, rng), n2_(bottleneck), a2_(bottleneck),
        expand_(bottleneck, channels, rng) {}

  Tensor<T> forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    auto h = squeeze_.forward(x, ctx ? &ctx->squeeze : nullptr);
    h = n1_.forward(h, ctx ? &ctx->n1 : nullptr);
    h = a1_.forward(h, ctx ? &ctx->a1 : nullptr);
    h = dil_.forward(h, ctx ? &ctx->dil : nullptr);
    h = n2_.forward(h, ctx ? &ctx->n2 : nullptr);
    h = a2_.forward(h, ctx ? &ctx->a2 : nullptr);
    h = expand_.forward(h, ctx ? &ctx->expand : nullptr);
    h += x;
    return h;
  }

  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& dy) {
    auto g = expand_.backward(ctx.expand, dy);
    g = a2_.backward(ctx.a2, g);
    g = n2_.backward(ctx.n2, g);
    g = dil_.backward(ctx.dil, g);
    g = a1_.backward(ctx.a1, g);
    g = n1_.backward(ctx.n1, g);
    g = squeeze_.backward(ctx.squeeze, g);
    g += dy;
    return g;
  }

  template <class F>
  void visit(F&& f) {
    squeeze_.visit(f), n1_.visit(f), a1_.visit(f), dil_.visit(f);
    n2_.visit(f), a2_.visit(f), expand_.visit(f);
  }
  template <class F>
  void visit(F&& f) const {
    squeeze_.visit(f), n1_.visit(f), a1_.visit(f), dil_.visit(f);
    n2_.visit(f), a2_.visit(f), expand_.visit(f);
  }

 private:
  Conv1x1<T> squeeze_;
  ChannelNorm<T> n1_;
  PReLU<T> a1_;
  DilatedCausalConv1d<T> dil_;
  ChannelNorm<T> n2_;
  PReLU<T> a2_;
  Conv1x1<T> expand_;
};

/// `groups` repetitions of the dilation ladder, applied to a [C][T] sequence.
template <typename T>
class StcmStack {
 public:
  struct Ctx {
    std::vector<typename StcmBlock<T>::Ctx> blocks;
  };

  StcmStack() = default;
  StcmStack(std::size_t channels, const StcmConfig& cfg, Rng& rng) : cfg_(cfg), channels_(channels) {
    cfg.validate();
    for (std::size_t g = 0; g < cfg.groups; ++g)
      for (auto d : cfg.dilations)
        blocks_.emplace_back(channels, cfg.bottleneck_channels, cfg.temporal_kernel, d, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    detail::require_shape(x.rank() == 2 && x.dim(0) == channels_,
                          "S-TCM: expected [" + std::to_string(channels_) + " x T], got " +
                              x.shape_string());
    if (ctx) ctx->blocks.resize(blocks_.size());
    Tensor<T> h = x;
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      h = blocks_[i].forward(h, ctx ? &ctx->blocks[i] : nullptr);
    return h;
  }

  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& dy) {
    Tensor<T> g = dy;
    for (std::size_t i = blocks_.size(); i-- > 0;) g = blocks_[i].backward(ctx.blocks[i], g);
    return g;
  }

  std::size_t block_count() const noexcept { return blocks_.size(); }
  std::size_t receptive_field() const noexcept { return cfg_.receptive_field(); }
  const StcmConfig& config() const noexcept { return cfg_; }

  template <class F>
  void visit(F&& f) {
    for (auto& b : blocks_) b.visit(f);
  }
  template <class F>
  void visit(F&& f) const {
    for (const auto& b : blocks_) b.visit(f);
  }

 private:
  StcmConfig cfg_;
  std::size_t channels_ = 0;
  std::vector<StcmBlock<T>> blocks_;
};

/// Dual-path gain head: h = conv(x); g = tanh(conv_a(h)) * sigmoid(conv_b(h));
/// gain = sigmoid(conv_out(g)), one gain per T-F bin in (0, 1).
template <typename T>
class DualPathMaskHead {
 public:
  struct Ctx {
    typename Conv1x1<T>::Ctx pre, branch_tanh, branch_sig, post;
    Tensor<T> t, s, gain;
  };

  DualPathMaskHead() = default;
  DualPathMaskHead(std::size_t channels, Rng& rng)
      : pre_(channels, channels, rng), branch_tanh_(channels, channels, rng),
        branch_sig_(channels, channels, rng), post_(channels, 1, rng) {}

  /// features [C][T][F] -> gain [T][F]
  Tensor<T> forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    detail::require_shape(x.rank() == 3, "mask head expects [C][T][F]");
    auto h = pre_.forward(x, ctx ? &ctx->pre : nullptr);
    auto t = nn::tanh(branch_tanh_.forward(h, ctx ? &ctx->branch_tanh : nullptr));
    auto s = nn::sigmoid(branch_sig_.forward(h, ctx ? &ctx->branch_sig : nullptr));
    Tensor<T> g(t.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = t[i] * s[i];
    auto gain = nn::sigmoid(post_.forward(g, ctx ? &ctx->post : nullptr));
    if (ctx) {
      ctx->t = std::move(t);
      ctx->s = std::move(s);
      ctx->gain = gain;
    }
    return std::move(gain).reshaped({x.dim(1), x.dim(2)});
  }

  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& d_gain) {
    auto dz = sigmoid_backward(ctx.gain, d_gain.reshaped(ctx.gain.shape()));
    auto dg = post_.backward(ctx.post, dz);
    Tensor<T> dt(dg.shape()), ds(dg.shape());
    for (std::size_t i = 0; i < dg.size(); ++i) {
      dt[i] = dg[i] * ctx.s[i];
      ds[i] = dg[i] * ctx.t[i];
    }
    auto dh = branch_tanh_.backward(ctx.branch_tanh, tanh_backward(ctx.t, dt));
    dh += branch_sig_.backward(ctx.branch_sig, sigmoid_backward(ctx.s, ds));
    return pre_.backward(ctx.pre, dh);
  }

  template <class F>
  void visit(F&& f) {
    pre_.visit(f), branch_tanh_.visit(f), branch_sig_.visit(f), post_.visit(f);
  }
  template <class F>
  void visit(F&& f) const {
    pre_.visit(f), branch_tanh_.visit(f), branch_sig_.visit(f), post_.visit(f);
  }

 private:
  Conv1x1<T> pre_, branch_tanh_, branch_sig_, post_;
};

}  // namespace dmf::nn
