#pragma once

#include "dmf/nn/blocks.hpp"

namespace dmf::nn {

// Latent [C][T][Fl] <-> sequence [(C*Fl)][T] for the temporal stack.
template <typename T>
Tensor<T> latent_to_sequence(const Tensor<T>& z) {
  const std::size_t c = z.dim(0), frames = z.dim(1), bins = z.dim(2);
  Tensor<T> s({c * bins, frames});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t f = 0; f < bins; ++f) s.at(ch * bins + f, t) = z.at(ch, t, f);
  return s;
}

template <typename T>
Tensor<T> sequence_to_latent(const Tensor<T>& s, std::size_t channels, std::size_t bins) {
  const std::size_t frames = s.dim(1);
  Tensor<T> z({channels, frames, bins});
  for (std::size_t ch = 0; ch < channels; ++ch)
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t f = 0; f < bins; ++f) z.at(ch, t, f) = s.at(ch * bins + f, t);
  return z;
}

/// Encoder followed by the S-TCM stack on the flattened latent.
template <typename T>
class Backbone {
 public:
  struct Ctx {
    typename Encoder<T>::Ctx enc;
    typename StcmStack<T>::Ctx tcm;
  };
  struct Output {
    Tensor<T> latent;  // after the temporal stack
    std::vector<Tensor<T>> skips;
  };

  Backbone() = default;
  Backbone(std::size_t in_ch, const EncoderConfig& enc, const StcmConfig& tcm, Rng& rng)
      : encoder_(in_ch, enc, rng), latent_bins_(enc.bin_table().back()),
        tcm_(enc.channels * latent_bins_, tcm, rng) {}

  Output forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    auto e = encoder_.forward(x, ctx ? &ctx->enc : nullptr);
    auto seq = tcm_.forward(latent_to_sequence(e.latent), ctx ? &ctx->tcm : nullptr);
    return {sequence_to_latent(seq, encoder_.config().channels, latent_bins_), std::move(e.skips)};
  }

  /// `d_skips` comes from the decoder(s), outermost first.
  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& d_latent, std::vector<Tensor<T>> d_skips) {
    auto dseq = tcm_.backward(ctx.tcm, latent_to_sequence(d_latent));
    d_skips.back() += sequence_to_latent(dseq, encoder_.config().channels, latent_bins_);
    return encoder_.backward(ctx.enc, std::move(d_skips));
  }

  const EncoderConfig& encoder_config() const noexcept { return encoder_.config(); }
  const StcmStack<T>& tcm() const noexcept { return tcm_; }

  template <class F>
  void visit(F&& f) {
    encoder_.visit(f);
    tcm_.visit(f);
  }
  template <class F>
  void visit(F&& f) const {
    encoder_.visit(f);
    tcm_.visit(f);
  }

 private:
  Encoder<T> encoder_;
  std::size_t latent_bins_ = 0;
  StcmStack<T> tcm_;
};

/// Emits `taps` unconstrained multi-frame filter sheets [k][T][F] (DN/DR).
template <typename T>
class FilterMaskNet {
 public:
  struct Ctx {
    typename Backbone<T>::Ctx bb;
    typename Decoder<T>::Ctx dec;
  };

  FilterMaskNet() = default;
  FilterMaskNet(std::size_t in_ch, std::size_t taps, const EncoderConfig& enc,
                const StcmConfig& tcm, Rng& rng)
      : in_ch_(in_ch), backbone_(in_ch, enc, tcm, rng), decoder_(enc, taps, true, rng) {}

  Tensor<T> forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    auto b = backbone_.forward(x, ctx ? &ctx->bb : nullptr);
    return decoder_.forward(b.latent, b.skips, ctx ? &ctx->dec : nullptr);
  }

  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& d_mask) {
    std::vector<Tensor<T>> d_skips(backbone_.encoder_config().num_blocks);
    auto d_latent = decoder_.backward(ctx.dec, d_mask, d_skips);
    return backbone_.backward(ctx.bb, d_latent, std::move(d_skips));
  }

  std::size_t input_channels() const noexcept { return in_ch_; }

  /// Bias the read-out towards the pass-through filter: tap 0 near one,
  /// remaining taps near zero.
  void init_identity(T weight_scale = T(0.1)) {
    std::vector<Param<T>*> ps;
    decoder_.visit([&](Param<T>& p) { ps.push_back(&p); });
    auto& weight = *ps[ps.size() - 2];
    auto& bias = *ps.back();
    for (auto& w : weight.value.vec()) w *= weight_scale;
    bias.value.fill(T{0});
    bias.value[0] = T{1};
  }

  template <class F>
  void visit(F&& f) {
    backbone_.visit(f);
    decoder_.visit(f);
  }
  template <class F>
  void visit(F&& f) const {
    backbone_.visit(f);
    decoder_.visit(f);
  }

 private:
  std::size_t in_ch_ = 0;
  Backbone<T> backbone_;
  Decoder<T> decoder_;
};

/// Shared encoder/S-TCM with two decoders emitting real and imaginary
/// residual planes (SR).
template <typename T>
class RefineNet {
 public:
  struct Ctx {
    typename Backbone<T>::Ctx bb;
    typename Decoder<T>::Ctx dec_re, dec_im;
  };
  struct Output {
    Tensor<T> re;  // [T][F]
    Tensor<T> im;
  };

  RefineNet() = default;
  RefineNet(std::size_t in_ch, const EncoderConfig& enc, const StcmConfig& tcm, Rng& rng)
      : in_ch_(in_ch), backbone_(in_ch, enc, tcm, rng), dec_re_(enc, 1, true, rng),
        dec_im_(enc, 1, true, rng) {}

  Output forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    auto b = backbone_.forward(x, ctx ? &ctx->bb : nullptr);
    auto re = dec_re_.forward(b.latent, b.skips, ctx ? &ctx->dec_re : nullptr);
    auto im = dec_im_.forward(b.latent, b.skips, ctx ? &ctx->dec_im : nullptr);
    const std::size_t frames = re.dim(1), bins = re.dim(2);
    return {std::move(re).reshaped({frames, bins}), std::move(im).reshaped({frames, bins})};
  }

  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& d_re, const Tensor<T>& d_im) {
    const std::vector<std::size_t> shape{1, d_re.dim(0), d_re.dim(1)};
    std::vector<Tensor<T>> d_skips(backbone_.encoder_config().num_blocks);
    auto d_latent = dec_re_.backward(ctx.dec_re, d_re.reshaped(shape), d_skips);
    d_latent += dec_im_.backward(ctx.dec_im, d_im.reshaped(shape), d_skips);
    return backbone_.backward(ctx.bb, d_latent, std::move(d_skips));
  }

  std::size_t input_channels() const noexcept { return in_ch_; }

  template <class F>
  void visit(F&& f) {
    backbone_.visit(f);
    dec_re_.visit(f);
    dec_im_.visit(f);
  }
  template <class F>
  void visit(F&& f) const {
    backbone_.visit(f);
    dec_re_.visit(f);
    dec_im_.visit(f);
  }

 private:
  std::size_t in_ch_ = 0;
  Backbone<T> backbone_;
  Decoder<T> dec_re_, dec_im_;
};

/// Encoder/S-TCM/decoder followed by the dual-path head: one gain in (0, 1)
/// per T-F bin (MF/HF).
template <typename T>
class GainNet {
 public:
  struct Ctx {
    typename Backbone<T>::Ctx bb;
    typename Decoder<T>::Ctx dec;
    typename DualPathMaskHead<T>::Ctx head;
  };

  GainNet() = default;
  GainNet(std::size_t in_ch, const EncoderConfig& enc, const StcmConfig& tcm, Rng& rng)
      : in_ch_(in_ch), backbone_(in_ch, enc, tcm, rng),
        decoder_(enc, enc.channels, false, rng), head_(enc.channels, rng) {}

  Tensor<T> forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    auto b = backbone_.forward(x, ctx ? &ctx->bb : nullptr);
    auto feat = decoder_.forward(b.latent, b.skips, ctx ? &ctx->dec : nullptr);
    return head_.forward(feat, ctx ? &ctx->head : nullptr);
  }

  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& d_gain) {
    auto d_feat = head_.backward(ctx.head, d_gain);
    std::vector<Tensor<T>> d_skips(backbone_.encoder_config().num_blocks);
    auto d_latent = decoder_.backward(ctx.dec, d_feat, d_skips);
    return backbone_.backward(ctx.bb, d_latent, std::move(d_skips));
  }

  std::size_t input_channels() const noexcept { return in_ch_; }

  template <class F>
  void visit(F&& f) {
    backbone_.visit(f);
    decoder_.visit(f);
    head_.visit(f);
  }
  template <class F>
  void visit(F&& f) const {
    backbone_.visit(f);
    decoder_.visit(f);
    head_.visit(f);
  }

 private:
  std::size_t in_ch_ = 0;
  Backbone<T> backbone_;
  Decoder<T> decoder_;
  DualPathMaskHead<T> head_;
};

}  // namespace dmf::nn
