#pragma once

#include <string>
#include <vector>

#include "vocgan/discriminator.hpp"
#include "vocgan/stft.hpp"

namespace vocgan {

struct LossWeights {
  double alpha = 10.0;  // feature matching
  double beta = 1.0;    // multi-resolution STFT

  void validate() const {
    if (alpha < 0 || beta < 0) throw ConfigError("LossWeights: weights must be non-negative");
  }
};

// Named scalar losses for one training step. Order of insertion is the CSV
// column order, so it must be deterministic across steps.
struct LossReport {
  std::int64_t step = 0;
  std::vector<std::pair<std::string, double>> terms;

  void set(const std::string& name, double value) {
    for (auto& t : terms)
      if (t.first == name) {
        t.second = value;
        return;
      }
    terms.emplace_back(name, value);
  }

  bool has(const std::string& name) const {
    for (const auto& t : terms)
      if (t.first == name) return true;
    return false;
  }

  double get(const std::string& name) const {
    for (const auto& t : terms)
      if (t.first == name) return t.second;
    throw ContractError(strcat_("LossReport: no term named ", name));
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& t : terms) out.push_back(t.first);
    return out;
  }
};

// ---------------------------------------------------------------------------
// adversarial objectives (least-squares, window-based)
// ---------------------------------------------------------------------------

// One discriminator instance's objective: 1/2 E[fake^2] + 1/2 E[(real-1)^2],
// expectations realized as means over score windows and batch.
template <typename T>
Tensor<T> lsgan_instance_objective(const Tensor<T>& fake_scores, const Tensor<T>& real_scores) {
  auto fake_term = mean(square(fake_scores));
  auto real_term = mean(square(add_scalar(real_scores, T(-1))));
  return mul_scalar(add(fake_term, real_term), T(0.5));
}

template <typename T>
Tensor<T> jcu_instance_objective(const DiscOutput<T>& fake, const DiscOutput<T>& real) {
  if (!fake.cond_scores.defined() || !real.cond_scores.defined())
    throw ContractError("jcu_instance_objective: conditional scores missing");
  auto fake_term = add(mean(square(fake.uncond_scores)), mean(square(fake.cond_scores)));
  auto real_term = add(mean(square(add_scalar(real.uncond_scores, T(-1)))),
                       mean(square(add_scalar(real.cond_scores, T(-1)))));
  return mul_scalar(add(fake_term, real_term), T(0.5));
}

// Sum of instance objectives; D_0's sub-discriminators contribute their sum.
template <typename T>
Tensor<T> lsgan_disc_loss(const std::vector<DiscOutput<T>>& fake,
                          const std::vector<DiscOutput<T>>& real) {
  if (fake.size() != real.size() || fake.empty())
    throw ContractError("lsgan_disc_loss: mismatched or empty score sets");
  Tensor<T> total;
  for (size_t i = 0; i < fake.size(); ++i) {
    auto v = lsgan_instance_objective(fake[i].uncond_scores, real[i].uncond_scores);
    total = total.defined() ? add(total, v) : v;
  }
  return total;
}

template <typename T>
Tensor<T> lsgan_gen_loss(const std::vector<DiscOutput<T>>& fake) {
  if (fake.empty()) throw ContractError("lsgan_gen_loss: empty score set");
  Tensor<T> total;
  for (const auto& f : fake) {
    auto v = mul_scalar(mean(square(add_scalar(f.uncond_scores, T(-1)))), T(0.5));
    total = total.defined() ? add(total, v) : v;
  }
  return total;
}

template <typename T>
Tensor<T> jcu_disc_loss(const std::vector<DiscOutput<T>>& fake,
                        const std::vector<DiscOutput<T>>& real) {
  if (fake.size() != real.size() || fake.empty())
    throw ContractError("jcu_disc_loss: mismatched or empty score sets");
  Tensor<T> total;
  for (size_t i = 0; i < fake.size(); ++i) {
    auto v = jcu_instance_objective(fake[i], real[i]);
    total = total.defined() ? add(total, v) : v;
  }
  return total;
}

template <typename T>
Tensor<T> jcu_gen_loss(const std::vector<DiscOutput<T>>& fake) {
  if (fake.empty()) throw ContractError("jcu_gen_loss: empty score set");
  Tensor<T> total;
  for (const auto& f : fake) {
    if (!f.cond_scores.defined()) throw ContractError("jcu_gen_loss: conditional scores missing");
    auto v = mul_scalar(add(mean(square(add_scalar(f.uncond_scores, T(-1)))),
                            mean(square(add_scalar(f.cond_scores, T(-1))))),
                        T(0.5));
    total = total.defined() ? add(total, v) : v;
  }
  return total;
}

// ---------------------------------------------------------------------------
// feature matching
// ---------------------------------------------------------------------------

// Mean L1 distance between real and fake trunk feature maps, summed over all
// discriminator instances and layers. Real features are expected to be
// tape-free constants.
template <typename T>
Tensor<T> feature_matching_loss(const std::vector<DiscOutput<T>>& real,
                                const std::vector<DiscOutput<T>>& fake) {
  if (fake.size() != real.size() || fake.empty())
    throw ContractError("feature_matching_loss: mismatched or empty feature sets");
  Tensor<T> total;
  for (size_t i = 0; i < fake.size(); ++i) {
    if (real[i].features.size() != fake[i].features.size())
      throw ShapeError(strcat_("feature_matching_loss: instance ", i, " has ",
                               real[i].features.size(), " real vs ", fake[i].features.size(),
                               " fake layers"));
    for (size_t t = 0; t < fake[i].features.size(); ++t) {
      detail::check_same_shape(real[i].features[t], fake[i].features[t],
                               "feature_matching_loss");
      auto term = mean(abs_val(sub(real[i].features[t], fake[i].features[t])));
      total = total.defined() ? add(total, term) : term;
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// multi-resolution STFT loss
// ---------------------------------------------------------------------------

inline std::vector<StftConfig> stft_loss_resolutions() {
  return {{512, 240, 50}, {1024, 600, 120}, {2048, 1200, 240}};
}

inline constexpr double kStftLogFloor = 1e-7;

// Differentiable magnitude spectrogram of [B, 1, L] waveforms -> [B, bins,
// frames]. Forward runs the shared centered-STFT framing; backward pushes the
// magnitude gradient through the complex spectrum and back via the inverse
// transform, including the reflect-padding scatter.
template <typename T>
Tensor<T> stft_magnitude(const Tensor<T>& x, const StftConfig& cfg) {
  detail::check_rank(x, 3, "stft_magnitude", "input");
  if (x.dim(1) != 1)
    throw ShapeError(strcat_("stft_magnitude: axis 1 must be 1 channel, got ", x.dim(1)));
  cfg.validate();
  const std::int64_t B = x.dim(0), L = x.dim(2);
  const std::int64_t bins = cfg.bins();
  const std::int64_t frames = cfg.frames_for(L);

  auto out = Tensor<T>::zeros({B, bins, frames});
  // complex spectra are kept for the backward pass
  auto spectra = std::make_shared<std::vector<Spectrogram<T>>>();
  spectra->reserve(static_cast<size_t>(B));
  for (std::int64_t b = 0; b < B; ++b) {
    spectra->push_back(stft_samples(x.data() + b * L, L, cfg));
    const auto& spec = spectra->back();
    for (std::int64_t t = 0; t < frames; ++t)
      for (std::int64_t k = 0; k < bins; ++k)
        out.data()[(b * bins + k) * frames + t] = std::abs(spec.at(k, t));
  }

  autodiff::wire(out, {x}, [&](TensorNode<T>* self) {
    auto* px = x.raw();
    return [self, px, spectra, cfg, B, L, bins, frames] {
      px->ensure_grad();
      const std::int64_t n = cfg.fft_size;
      const std::int64_t half = n / 2;
      const auto window = stft_detail::padded_window<T>(cfg);
      Fft<T> fft(n);
      std::vector<std::complex<T>> buf(static_cast<size_t>(n));
      for (std::int64_t b = 0; b < B; ++b) {
        const auto& spec = (*spectra)[static_cast<size_t>(b)];
        T* gx = px->grad.data() + b * L;
        for (std::int64_t t = 0; t < frames; ++t) {
          // dL/dS = dL/d|S| * S/|S| on the one-sided bins, zero elsewhere
          for (std::int64_t k = 0; k < n; ++k) buf[static_cast<size_t>(k)] = {T(0), T(0)};
          bool any = false;
          for (std::int64_t k = 0; k < bins; ++k) {
            const T gm = self->grad[static_cast<size_t>((b * bins + k) * frames + t)];
            if (gm == T(0)) continue;
            const std::complex<T> s = spec.at(k, t);
            const T mag = std::abs(s);
            if (mag == T(0)) continue;
            buf[static_cast<size_t>(k)] = s * (gm / mag);
            any = true;
          }
          if (!any) continue;
          // dL/dx_padded[n] = w[n] * N * Re(IFFT(dL/dS)[n])
          fft.inverse(buf.data());
          const std::int64_t start = t * cfg.hop - half;
          for (std::int64_t i = 0; i < n; ++i) {
            const T g = window[static_cast<size_t>(i)] * static_cast<T>(n) *
                        buf[static_cast<size_t>(i)].real();
            if (g == T(0)) continue;
            gx[stft_detail::reflect_index(start + i, L)] += g;
          }
        }
      }
    };
  });
  return out;
}

// Spectral convergence + log-magnitude L1 for one resolution, averaged over
// the three analysis resolutions. `reference` is treated as a constant.
template <typename T>
Tensor<T> multires_stft_loss(const Tensor<T>& reference, const Tensor<T>& generated,
                             const std::vector<StftConfig>& resolutions = stft_loss_resolutions()) {
  detail::check_rank(reference, 3, "multires_stft_loss", "reference");
  detail::check_rank(generated, 3, "multires_stft_loss", "generated");
  const std::int64_t len = std::min(reference.dim(2), generated.dim(2));
  Tensor<T> ref = reference.dim(2) == len ? reference : narrow_time(reference, 0, len);
  Tensor<T> gen = generated.dim(2) == len ? generated : narrow_time(generated, 0, len);

  Tensor<T> total;
  for (const auto& cfg : resolutions) {
    Tensor<T> ref_mag;
    {
      NoGradGuard ng;
      ref_mag = stft_magnitude(ref.raw()->backprop ? ref.detach() : ref, cfg);
    }
    auto gen_mag = stft_magnitude(gen, cfg);

    // ||M - M_hat||_F / ||M||_F
    T ref_norm = 0;
    for (std::int64_t i = 0; i < ref_mag.numel(); ++i)
      ref_norm += ref_mag.data()[i] * ref_mag.data()[i];
    ref_norm = std::sqrt(ref_norm);
    auto diff = sub(gen_mag, ref_mag);
    auto sc = mul_scalar(sqrt_val(sum(square(diff))),
                         T(1) / std::max(ref_norm, static_cast<T>(kStftLogFloor)));

    // (1/N) * || log M - log M_hat ||_1, magnitudes floored
    auto ref_log = Tensor<T>::zeros(ref_mag.shape());
    for (std::int64_t i = 0; i < ref_mag.numel(); ++i)
      ref_log.data()[i] =
          std::log(std::max(ref_mag.data()[i], static_cast<T>(kStftLogFloor)));
    auto log_mag = mean(abs_val(sub(log_val(clamp_min(gen_mag, static_cast<T>(kStftLogFloor))),
                                    ref_log)));

    auto term = add(sc, log_mag);
    total = total.defined() ? add(total, term) : term;
  }
  return mul_scalar(total, T(1) / static_cast<T>(resolutions.size()));
}

// ---------------------------------------------------------------------------
// total generator objective
// ---------------------------------------------------------------------------

// adv + alpha * fm + beta * stft; pass an undefined stft tensor when the
// auxiliary loss is ablated.
template <typename T>
Tensor<T> total_gen_loss(const Tensor<T>& adversarial, const Tensor<T>& feature_matching,
                         const Tensor<T>& stft_term, const LossWeights& weights) {
  weights.validate();
  auto total = add(adversarial, mul_scalar(feature_matching, static_cast<T>(weights.alpha)));
  if (stft_term.defined())
    total = add(total, mul_scalar(stft_term, static_cast<T>(weights.beta)));
  return total;
}

}  // namespace vocgan
