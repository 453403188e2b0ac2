#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vocgan/layers.hpp"
#include "vocgan/mel.hpp"

namespace vocgan {

// Multi-scale waveform generator: mel spectrogram in, full-resolution
// waveform plus K half-rate side waveforms out. Side outputs are taken from
// the upsampling blocks whose cumulative rate is 256/2^k; each 2x block also
// receives a projected mel skip connection on its input.
struct GeneratorConfig {
  std::int64_t mel_channels = kNumMels;
  std::int64_t base_channels = 256;
  std::int64_t min_channels = 32;
  std::vector<std::int64_t> upsample_rates = {4, 4, 2, 2, 2, 2};
  std::vector<std::int64_t> residual_dilations = {1, 3, 9};
  std::int64_t downsampled_outputs = 4;  // K side waveforms
  bool hierarchical = true;              // side heads + mel skip connections
  std::int64_t input_kernel = 7;
  std::int64_t head_kernel = 7;

  std::int64_t total_rate() const {
    std::int64_t r = 1;
    for (auto u : upsample_rates) r *= u;
    return r;
  }

  void validate() const {
    if (mel_channels <= 0 || base_channels <= 0)
      throw ConfigError("GeneratorConfig: channel counts must be positive");
    if (total_rate() != kMelHop)
      throw ConfigError(strcat_("GeneratorConfig: upsample rates multiply to ", total_rate(),
                                ", must equal the mel hop ", kMelHop));
    for (auto r : upsample_rates)
      if (r < 2 || r % 2 != 0)
        throw ConfigError(strcat_("GeneratorConfig: upsample rate ", r, " must be even and >= 2"));
    if (hierarchical) {
      if (upsample_rates.size() != 6)
        throw ConfigError(strcat_("GeneratorConfig: hierarchical generator needs six upsampling"
                                  " blocks, got ", upsample_rates.size()));
      if (upsample_rates[0] != 4 || upsample_rates[1] != 4)
        throw ConfigError("GeneratorConfig: first two upsample rates must be 4");
      for (size_t i = 2; i < upsample_rates.size(); ++i)
        if (upsample_rates[i] != 2)
          throw ConfigError("GeneratorConfig: upsample rates after the first two must be 2");
      if (downsampled_outputs != 4)
        throw ConfigError(strcat_("GeneratorConfig: hierarchical generator fixes K at 4, got ",
                                  downsampled_outputs));
    }
  }

  std::vector<std::int64_t> channel_plan() const {
    std::vector<std::int64_t> plan{base_channels};
    const std::int64_t floor_ch = std::min(min_channels, base_channels);
    for (size_t i = 0; i < upsample_rates.size(); ++i)
      plan.push_back(std::max(plan.back() / 2, floor_ch));
    return plan;
  }

  static GeneratorConfig vocgan_full() { return GeneratorConfig{}; }

  static GeneratorConfig vocgan_toy() {
    GeneratorConfig cfg;
    cfg.base_channels = 64;
    return cfg;
  }

  // MelGAN-style baseline: four blocks raising by 8,8,2,2, no side outputs,
  // no mel skips.
  static GeneratorConfig melgan_baseline(std::int64_t base_channels = 256) {
    GeneratorConfig cfg;
    cfg.base_channels = base_channels;
    cfg.upsample_rates = {8, 8, 2, 2};
    cfg.hierarchical = false;
    cfg.downsampled_outputs = 0;
    return cfg;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["mel_channels"] = mel_channels;
    j["base_channels"] = base_channels;
    j["min_channels"] = min_channels;
    j["upsample_rates"] = upsample_rates;
    j["residual_dilations"] = residual_dilations;
    j["downsampled_outputs"] = downsampled_outputs;
    j["hierarchical"] = hierarchical;
    j["input_kernel"] = input_kernel;
    j["head_kernel"] = head_kernel;
    return j;
  }

  static GeneratorConfig from_json(const nlohmann::json& j) {
    GeneratorConfig cfg;
    cfg.mel_channels = j.at("mel_channels").get<std::int64_t>();
    cfg.base_channels = j.at("base_channels").get<std::int64_t>();
    cfg.min_channels = j.at("min_channels").get<std::int64_t>();
    cfg.upsample_rates = j.at("upsample_rates").get<std::vector<std::int64_t>>();
    cfg.residual_dilations = j.at("residual_dilations").get<std::vector<std::int64_t>>();
    cfg.downsampled_outputs = j.at("downsampled_outputs").get<std::int64_t>();
    cfg.hierarchical = j.at("hierarchical").get<bool>();
    cfg.input_kernel = j.at("input_kernel").get<std::int64_t>();
    cfg.head_kernel = j.at("head_kernel").get<std::int64_t>();
    cfg.validate();
    return cfg;
  }

  std::string config_hash() const { return hex64(fnv1a64(to_json().dump())); }
};

template <typename T>
class Generator {
 public:
  Generator(GeneratorConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng = Rng(seed).fork(0x67656e);  // generator init stream

    const auto plan = cfg_.channel_plan();
    input_conv_ = Conv1dLayer<T>::make("gen.input_conv", cfg_.mel_channels, plan[0],
                                       cfg_.input_kernel, rng, 1, (cfg_.input_kernel - 1) / 2, 1,
                                       1, /*reflect=*/true);

    std::int64_t cumulative = 1;
    for (size_t i = 0; i < cfg_.upsample_rates.size(); ++i) {
      const std::int64_t rate = cfg_.upsample_rates[i];
      const std::int64_t cin = plan[i], cout = plan[i + 1];
      const std::string prefix = strcat_("gen.block", i);
      Block block;
      block.input_rate = cumulative;
      cumulative *= rate;
      block.cumulative_rate = cumulative;
      if (cfg_.hierarchical && rate == 2)
        block.mel_proj = Conv1dLayer<T>::make(prefix + ".skip", cfg_.mel_channels, cin, 1, rng);
      block.up = ConvT1dLayer<T>::make(prefix + ".up", cin, cout, 2 * rate, rate, rate / 2, rng);
      for (size_t d = 0; d < cfg_.residual_dilations.size(); ++d) {
        const std::int64_t dil = cfg_.residual_dilations[d];
        ResUnit unit;
        unit.dilated = Conv1dLayer<T>::make(strcat_(prefix, ".res", d, ".dilated"), cout, cout, 3,
                                            rng, 1, dil, dil, 1, /*reflect=*/true);
        unit.pointwise =
            Conv1dLayer<T>::make(strcat_(prefix, ".res", d, ".pointwise"), cout, cout, 1, rng);
        block.res.push_back(std::move(unit));
      }
      blocks_.push_back(std::move(block));
    }

    // output heads: one per side scale on the block whose cumulative rate is
    // total/2^k, plus the full-resolution head on the final block
    const std::int64_t total = cfg_.total_rate();
    if (cfg_.hierarchical) {
      for (std::int64_t k = cfg_.downsampled_outputs; k >= 1; --k) {
        const std::int64_t want = total >> k;
        bool placed = false;
        for (size_t i = 0; i < blocks_.size(); ++i) {
          if (blocks_[i].cumulative_rate == want && !blocks_[i].head) {
            blocks_[i].head = Conv1dLayer<T>::make(
                strcat_("gen.block", i, ".head"), cfg_.channel_plan()[i + 1], 1, cfg_.head_kernel,
                rng, 1, (cfg_.head_kernel - 1) / 2, 1, 1, /*reflect=*/true);
            blocks_[i].head_scale = k;
            placed = true;
            break;
          }
        }
        if (!placed)
          throw ConfigError(strcat_("GeneratorConfig: no upsampling block has cumulative rate ",
                                    want, " for side output ", k));
      }
    }
    Block& last = blocks_.back();
    if (last.head) throw ConfigError("GeneratorConfig: final block already carries a side head");
    last.head = Conv1dLayer<T>::make("gen.head", cfg_.channel_plan().back(), 1, cfg_.head_kernel,
                                     rng, 1, (cfg_.head_kernel - 1) / 2, 1, 1, /*reflect=*/true);
    last.head_scale = 0;
  }

  const GeneratorConfig& config() const { return cfg_; }

  // All scale outputs, index k holding the 1/2^k-resolution waveform
  // [B, 1, total_rate*T/2^k]. Non-hierarchical configs return one output.
  std::vector<Tensor<T>> generate(const Tensor<T>& mel) const {
    return run(mel, /*side_heads=*/true);
  }

  // Full-resolution output only; side heads are skipped for speed.
  Tensor<T> generate_full(const Tensor<T>& mel) const {
    return run(mel, /*side_heads=*/false)[0];
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    input_conv_.collect(out);
    for (auto& b : blocks_) {
      if (b.mel_proj) b.mel_proj->collect(out);
      b.up.collect(out);
      for (auto& r : b.res) {
        r.dilated.collect(out);
        r.pointwise.collect(out);
      }
      if (b.head) b.head->collect(out);
    }
    return out;
  }

  std::vector<NamedTensor<T>> trainables() { return collect_trainables(parameters()); }

  std::int64_t output_length(std::int64_t n_frames) const { return cfg_.total_rate() * n_frames; }

  // Conservative analytic bound on the full-resolution samples influenced by
  // mel frames [frame_lo, frame_hi], for locality probing.
  std::pair<std::int64_t, std::int64_t> mel_influence_window(std::int64_t frame_lo,
                                                             std::int64_t frame_hi,
                                                             std::int64_t n_frames) const {
    std::int64_t lo = frame_lo, hi = frame_hi, len = n_frames;
    auto pad_reflect_step = [&](std::int64_t amount) {
      // source interval -> padded interval, mirrors included
      std::int64_t plo = lo + amount, phi = hi + amount;
      if (lo <= amount) plo = std::min(plo, amount - std::min(hi, amount));
      if (hi >= len - 1 - amount) phi = std::max(phi, amount + 2 * (len - 1) - lo);
      lo = plo;
      hi = phi;
      len += 2 * amount;
    };
    auto conv_step = [&](std::int64_t k, std::int64_t dil) {
      // stride-1 conv without padding: input i reaches outputs [i-d(k-1), i]
      lo = lo - dil * (k - 1);
      hi = hi;
      len = len - dil * (k - 1);
      lo = std::max<std::int64_t>(0, lo);
      hi = std::min(hi, len - 1);
    };
    auto reflect_conv = [&](std::int64_t k, std::int64_t pad, std::int64_t dil) {
      pad_reflect_step(pad);
      conv_step(k, dil);
    };
    auto transposed_step = [&](std::int64_t k, std::int64_t stride, std::int64_t pad) {
      lo = lo * stride - pad;
      hi = hi * stride - pad + k - 1;
      len = (len - 1) * stride - 2 * pad + k;
      lo = std::max<std::int64_t>(0, lo);
      hi = std::min(hi, len - 1);
    };

    reflect_conv(cfg_.input_kernel, (cfg_.input_kernel - 1) / 2, 1);
    for (const auto& b : blocks_) {
      transposed_step(2 * (b.cumulative_rate / b.input_rate),
                      b.cumulative_rate / b.input_rate, (b.cumulative_rate / b.input_rate) / 2);
      for (size_t d = 0; d < cfg_.residual_dilations.size(); ++d)
        reflect_conv(3, cfg_.residual_dilations[d], cfg_.residual_dilations[d]);
    }
    reflect_conv(cfg_.head_kernel, (cfg_.head_kernel - 1) / 2, 1);
    return {lo, hi};
  }

 private:
  struct ResUnit {
    Conv1dLayer<T> dilated;
    Conv1dLayer<T> pointwise;
  };
  struct Block {
    ConvT1dLayer<T> up;
    std::optional<Conv1dLayer<T>> mel_proj;
    std::vector<ResUnit> res;
    std::optional<Conv1dLayer<T>> head;
    std::int64_t head_scale = -1;
    std::int64_t input_rate = 1;
    std::int64_t cumulative_rate = 1;
  };

  std::vector<Tensor<T>> run(const Tensor<T>& mel, bool side_heads) const {
    detail::check_rank(mel, 3, "generate", "mel");
    if (mel.dim(1) != cfg_.mel_channels)
      throw ShapeError(strcat_("generate: mel axis 1 is ", mel.dim(1), ", expected ",
                               cfg_.mel_channels));
    const std::int64_t n_out = cfg_.hierarchical ? cfg_.downsampled_outputs + 1 : 1;
    std::vector<Tensor<T>> outputs(static_cast<size_t>(n_out));

    const Tensor<T> mel_in =
        mul_scalar(add_scalar(mel, static_cast<T>(kMelNormShift)), static_cast<T>(kMelNormScale));
    Tensor<T> h = input_conv_.forward(mel_in);
    for (const auto& b : blocks_) {
      if (b.mel_proj) {
        auto skip = b.mel_proj->forward(nearest_resize(mel_in, h.dim(2)));
        h = add(h, skip);
      }
      h = b.up.forward(leaky_relu(h));
      for (const auto& unit : b.res) {
        auto y = unit.pointwise.forward(leaky_relu(unit.dilated.forward(leaky_relu(h))));
        h = add(h, y);
      }
      if (b.head && (side_heads || b.head_scale == 0)) {
        auto wave = tanh_act(b.head->forward(leaky_relu(h)));
        if (b.head_scale >= 0 && b.head_scale < n_out)
          outputs[static_cast<size_t>(b.head_scale)] = wave;
      }
    }
    return outputs;
  }

  GeneratorConfig cfg_;
  Conv1dLayer<T> input_conv_;
  std::vector<Block> blocks_;
};

}  // namespace vocgan
