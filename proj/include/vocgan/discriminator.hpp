#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vocgan/layers.hpp"
#include "vocgan/mel.hpp"

namespace vocgan {

// Hierarchically-nested JCU discriminators: the final (full-resolution)
// discriminator is multi-scale over pooled copies of the waveform, the side
// scales get one resolution-specific discriminator each. Every instance
// shares one trunk between an unconditional head and a mel-conditional head.
struct DiscriminatorConfig {
  std::int64_t scales = 4;        // side discriminators D_1..D_K
  std::int64_t d0_subscales = 3;  // multi-scale instances inside D_0
  bool hierarchical = true;       // build the side discriminators
  bool jcu = true;                // build the conditional heads
  std::vector<std::int64_t> channels = {16, 64, 256, 512};
  std::int64_t entry_kernel = 15;
  std::int64_t block_kernel = 41;
  std::int64_t block_stride = 4;
  std::int64_t block_groups = 4;
  std::int64_t mel_channels = kNumMels;
  std::int64_t cond_channels = 128;  // mel projection width for the cond head

  void validate() const {
    if (hierarchical && scales + 1 != 5)
      throw ConfigError(strcat_("DiscriminatorConfig: hierarchical mode needs 5 resolution-"
                                "specific discriminators, got ", scales + 1));
    if (d0_subscales < 1) throw ConfigError("DiscriminatorConfig: d0_subscales must be >= 1");
    if (channels.size() != 4)
      throw ConfigError("DiscriminatorConfig: channel plan must list 4 trunk widths");
    for (auto c : channels)
      if (c < block_groups || c % block_groups != 0)
        throw ConfigError(strcat_("DiscriminatorConfig: trunk width ", c,
                                  " must be a positive multiple of groups ", block_groups));
  }

  std::int64_t trunk_stride() const {
    std::int64_t s = 1;
    for (int i = 0; i < 3; ++i) s *= block_stride;
    return s;
  }

  static DiscriminatorConfig full() { return DiscriminatorConfig{}; }

  static DiscriminatorConfig toy() {
    DiscriminatorConfig cfg;
    cfg.channels = {8, 16, 32, 64};
    cfg.cond_channels = 32;
    return cfg;
  }
};

template <typename T>
struct DiscOutput {
  Tensor<T> uncond_scores;          // [B, 1, windows]
  Tensor<T> cond_scores;            // defined only for JCU discriminators
  std::vector<Tensor<T>> features;  // post-activation trunk maps, one per layer
};

template <typename T>
class JcuDiscriminator {
 public:
  JcuDiscriminator() = default;

  JcuDiscriminator(const DiscriminatorConfig& cfg, const std::string& prefix, Rng& rng)
      : cfg_(cfg) {
    trunk_.push_back(Conv1dLayer<T>::make(prefix + ".entry", 1, cfg.channels[0], cfg.entry_kernel,
                                          rng, 1, (cfg.entry_kernel - 1) / 2));
    for (int i = 0; i < 3; ++i) {
      trunk_.push_back(Conv1dLayer<T>::make(
          strcat_(prefix, ".down", i), cfg.channels[static_cast<size_t>(i)],
          cfg.channels[static_cast<size_t>(i) + 1], cfg.block_kernel, rng, cfg.block_stride,
          (cfg.block_kernel - 1) / 2, 1, cfg.block_groups));
    }
    uncond_head_ = Conv1dLayer<T>::make(prefix + ".uncond_head", cfg.channels[3], 1, 1, rng);
    if (cfg.jcu) {
      mel_proj_ = Conv1dLayer<T>::make(prefix + ".mel_proj", cfg.mel_channels, cfg.cond_channels,
                                       1, rng);
      cond_head_ = Conv1dLayer<T>::make(prefix + ".cond_head",
                                        cfg.channels[3] + cfg.cond_channels, 1, 1, rng);
    }
  }

  // x: [B, 1, L]; mel: [B, mel_channels, T]. Both heads read the same trunk
  // output; the conditional head sees the mel resized to the trunk's
  // temporal rate, projected and concatenated on channels.
  DiscOutput<T> discriminate(const Tensor<T>& x, const Tensor<T>& mel) const {
    DiscOutput<T> out;
    Tensor<T> h = x;
    for (const auto& layer : trunk_) {
      h = leaky_relu(layer.forward(h));
      out.features.push_back(h);
    }
    out.uncond_scores = uncond_head_.forward(h);
    if (cfg_.jcu) {
      const Tensor<T> mel_in = mul_scalar(add_scalar(mel, static_cast<T>(kMelNormShift)),
                                          static_cast<T>(kMelNormScale));
      auto cond = mel_proj_->forward(nearest_resize(mel_in, h.dim(2)));
      out.cond_scores = cond_head_->forward(concat_channels(h, cond));
    }
    return out;
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    for (auto& l : trunk_) l.collect(out);
    uncond_head_.collect(out);
    if (mel_proj_) mel_proj_->collect(out);
    if (cond_head_) cond_head_->collect(out);
    return out;
  }

  std::vector<Parameter<T>*> trunk_parameters() {
    std::vector<Parameter<T>*> out;
    for (auto& l : trunk_) l.collect(out);
    return out;
  }

  std::int64_t score_length(std::int64_t input_length) const {
    std::int64_t len = input_length;
    for (const auto& layer : trunk_)
      len = kernels::conv_out_len(len + 2 * layer.pad, layer.weight.shape()[2], layer.stride, 0,
                                  layer.dil);
    return len;
  }

  // Input samples one score window depends on (zero padding folded in).
  std::pair<std::int64_t, std::int64_t> window_receptive_field(std::int64_t window) const {
    std::int64_t lo = window, hi = window;
    for (auto it = trunk_.rbegin(); it != trunk_.rend(); ++it) {
      const std::int64_t k = it->weight.shape()[2];
      lo = lo * it->stride - it->pad;
      hi = hi * it->stride - it->pad + it->dil * (k - 1);
    }
    return {lo, hi};
  }

 private:
  DiscriminatorConfig cfg_;
  std::vector<Conv1dLayer<T>> trunk_;
  Conv1dLayer<T> uncond_head_;
  std::optional<Conv1dLayer<T>> mel_proj_;
  std::optional<Conv1dLayer<T>> cond_head_;
};

// The instance list is flattened: D_0's sub-discriminators first (full-res
// input, then pooled x2, pooled x4), then D_1..D_K on the side waveforms.
template <typename T>
class DiscriminatorBank {
 public:
  DiscriminatorBank(DiscriminatorConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng = Rng(seed).fork(0x64697363);  // discriminator init stream
    for (std::int64_t s = 0; s < cfg_.d0_subscales; ++s)
      d0_subs_.emplace_back(cfg_, strcat_("disc.0.sub", s), rng);
    if (cfg_.hierarchical)
      for (std::int64_t k = 1; k <= cfg_.scales; ++k)
        side_.emplace_back(cfg_, strcat_("disc.", k), rng);
  }

  const DiscriminatorConfig& config() const { return cfg_; }

  std::int64_t instances() const {
    return static_cast<std::int64_t>(d0_subs_.size() + side_.size());
  }

  // Human-readable instance labels, aligned with discriminate_all's order.
  std::vector<std::string> instance_labels() const {
    std::vector<std::string> labels;
    for (size_t s = 0; s < d0_subs_.size(); ++s) labels.push_back(strcat_("d0.sub", s));
    for (size_t k = 0; k < side_.size(); ++k) labels.push_back(strcat_("d", k + 1));
    return labels;
  }

  // Scale index (k) each instance judges; D_0's sub-discriminators all map
  // to scale 0.
  std::vector<std::int64_t> instance_scales() const {
    std::vector<std::int64_t> scales(d0_subs_.size(), 0);
    for (size_t k = 0; k < side_.size(); ++k) scales.push_back(static_cast<std::int64_t>(k + 1));
    return scales;
  }

  // waves[k] is the scale-k waveform [B, 1, 256*T/2^k]; only waves[0] is used
  // in non-hierarchical mode. Lengths are validated against the mel.
  std::vector<DiscOutput<T>> discriminate_all(const std::vector<Tensor<T>>& waves,
                                              const Tensor<T>& mel) const {
    const std::int64_t full_len = kMelHop * mel.dim(2);
    if (waves.empty()) throw ContractError("discriminate_all: no waveforms");
    std::vector<DiscOutput<T>> outs;

    Tensor<T> pooled = waves[0];
    check_scale_length(pooled, full_len, 0);
    for (size_t s = 0; s < d0_subs_.size(); ++s) {
      if (s > 0) pooled = avg_pool1d(pooled, 4, 2, 1);  // same operator as the dsp halving pass
      outs.push_back(d0_subs_[s].discriminate(pooled, mel));
    }

    for (size_t k = 0; k < side_.size(); ++k) {
      const auto scale = static_cast<std::int64_t>(k + 1);
      if (static_cast<size_t>(scale) >= waves.size())
        throw ContractError(strcat_("discriminate_all: missing waveform for scale ", scale));
      check_scale_length(waves[static_cast<size_t>(scale)], full_len >> scale, scale);
      outs.push_back(side_[k].discriminate(waves[static_cast<size_t>(scale)], mel));
    }
    return outs;
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    for (auto& d : d0_subs_)
      for (auto* p : d.parameters()) out.push_back(p);
    for (auto& d : side_)
      for (auto* p : d.parameters()) out.push_back(p);
    return out;
  }

  std::vector<NamedTensor<T>> trainables() { return collect_trainables(parameters()); }

  JcuDiscriminator<T>& d0_sub(std::int64_t s) { return d0_subs_[static_cast<size_t>(s)]; }
  JcuDiscriminator<T>& side(std::int64_t k) { return side_[static_cast<size_t>(k - 1)]; }

 private:
  static void check_scale_length(const Tensor<T>& x, std::int64_t want, std::int64_t scale) {
    detail::check_rank(x, 3, "discriminate_all", "waveform");
    if (x.dim(2) != want)
      throw ShapeError(strcat_("discriminate_all: scale ", scale, " waveform axis 2 is ",
                               x.dim(2), ", expected ", want));
  }

  DiscriminatorConfig cfg_;
  std::vector<JcuDiscriminator<T>> d0_subs_;
  std::vector<JcuDiscriminator<T>> side_;
};

}  // namespace vocgan
