#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vocgan/adam.hpp"
#include "vocgan/audio.hpp"
#include "vocgan/checkpoint.hpp"
#include "vocgan/generator.hpp"
#include "vocgan/losses.hpp"

namespace vocgan {

struct TrainConfig {
  std::uint64_t seed = 42;
  std::int64_t steps = 2000;
  std::int64_t batch_size = 4;
  double clip_seconds = 1.0;  // cropped clips, truncated to a whole number of hops

  double lr = 1e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.9;
  double adam_epsilon = 1e-8;
  LossWeights weights;

  // ablation switches; baseline_melgan selects the MelGAN generator and
  // forces the hierarchical and JCU branches off
  bool hierarchical = true;
  bool jcu = true;
  bool stft = true;
  bool baseline_melgan = false;

  std::int64_t checkpoint_interval = 500;
  std::int64_t gen_base_channels = 64;  // toy width; the full preset uses 256
  std::vector<std::int64_t> disc_channels = {8, 16, 32, 64};
  std::int64_t disc_cond_channels = 32;
  std::string precision = "f32";  // "f32" | "f64"
  int threads = 0;                // 0 = hardware concurrency
  bool log_stft_monitor = true;   // track L_STFT even when it is not optimized

  void validate() const {
    weights.validate();
    if (baseline_melgan && (hierarchical || jcu))
      throw ConfigError("TrainConfig: baseline_melgan forces hierarchical=false and jcu=false");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (steps < 1) throw ConfigError("TrainConfig: steps must be >= 1");
    if (precision != "f32" && precision != "f64")
      throw ConfigError(strcat_("TrainConfig: precision must be f32 or f64, got ", precision));
    if (clip_samples() < kMelHop)
      throw ConfigError("TrainConfig: clip_seconds shorter than one mel hop");
  }

  // Crop length truncated so mel frames and samples align exactly
  // (1 s -> 86 frames * 256 = 22016 samples).
  std::int64_t clip_samples() const {
    const auto raw = static_cast<std::int64_t>(clip_seconds * kSampleRate);
    return (raw / kMelHop) * kMelHop;
  }

  std::int64_t clip_frames() const { return clip_samples() / kMelHop; }

  GeneratorConfig generator_config() const {
    if (baseline_melgan) return GeneratorConfig::melgan_baseline(gen_base_channels);
    GeneratorConfig cfg;
    cfg.base_channels = gen_base_channels;
    cfg.hierarchical = hierarchical;
    cfg.downsampled_outputs = hierarchical ? 4 : 0;
    return cfg;
  }

  DiscriminatorConfig discriminator_config() const {
    DiscriminatorConfig cfg = DiscriminatorConfig::toy();
    cfg.channels = disc_channels;
    cfg.cond_channels = disc_cond_channels;
    cfg.hierarchical = hierarchical;
    cfg.jcu = jcu;
    return cfg;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["steps"] = steps;
    j["batch_size"] = batch_size;
    j["clip_seconds"] = clip_seconds;
    j["lr"] = lr;
    j["adam_beta1"] = adam_beta1;
    j["adam_beta2"] = adam_beta2;
    j["adam_epsilon"] = adam_epsilon;
    j["alpha"] = weights.alpha;
    j["beta"] = weights.beta;
    j["hierarchical"] = hierarchical;
    j["jcu"] = jcu;
    j["stft"] = stft;
    j["baseline_melgan"] = baseline_melgan;
    j["checkpoint_interval"] = checkpoint_interval;
    j["gen_base_channels"] = gen_base_channels;
    j["disc_channels"] = disc_channels;
    j["disc_cond_channels"] = disc_cond_channels;
    j["precision"] = precision;
    j["threads"] = threads;
    j["log_stft_monitor"] = log_stft_monitor;
    return j;
  }

  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    cfg.seed = j.value("seed", cfg.seed);
    cfg.steps = j.value("steps", cfg.steps);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.clip_seconds = j.value("clip_seconds", cfg.clip_seconds);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
    cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
    cfg.adam_epsilon = j.value("adam_epsilon", cfg.adam_epsilon);
    cfg.weights.alpha = j.value("alpha", cfg.weights.alpha);
    cfg.weights.beta = j.value("beta", cfg.weights.beta);
    cfg.hierarchical = j.value("hierarchical", cfg.hierarchical);
    cfg.jcu = j.value("jcu", cfg.jcu);
    cfg.stft = j.value("stft", cfg.stft);
    cfg.baseline_melgan = j.value("baseline_melgan", cfg.baseline_melgan);
    cfg.checkpoint_interval = j.value("checkpoint_interval", cfg.checkpoint_interval);
    cfg.gen_base_channels = j.value("gen_base_channels", cfg.gen_base_channels);
    cfg.disc_channels = j.value("disc_channels", cfg.disc_channels);
    cfg.disc_cond_channels = j.value("disc_cond_channels", cfg.disc_cond_channels);
    cfg.precision = j.value("precision", cfg.precision);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.log_stft_monitor = j.value("log_stft_monitor", cfg.log_stft_monitor);
    cfg.validate();
    return cfg;
  }
};

// Named ablation presets mirroring the study rows.
inline void apply_ablation_preset(TrainConfig& cfg, const std::string& name) {
  auto set = [&](bool baseline, bool hier, bool jcu, bool stft) {
    cfg.baseline_melgan = baseline;
    cfg.hierarchical = hier;
    cfg.jcu = jcu;
    cfg.stft = stft;
  };
  if (name == "baseline")
    set(true, false, false, false);
  else if (name == "hierarchical")
    set(false, true, false, false);
  else if (name == "jcu")
    set(false, false, true, false);
  else if (name == "hierarchical_jcu")
    set(false, true, true, false);
  else if (name == "hierarchical_stft")
    set(false, true, false, true);
  else if (name == "full" || name == "vocgan")
    set(false, true, true, true);
  else
    throw ConfigError(strcat_("unknown ablation preset: ", name,
                              " (expected baseline|hierarchical|jcu|hierarchical_jcu|"
                              "hierarchical_stft|full)"));
}

// ---------------------------------------------------------------------------
// dataset
// ---------------------------------------------------------------------------

struct DatasetItem {
  std::string wav_path;
  std::vector<float> samples;  // 22050 Hz
};

class Dataset {
 public:
  static Dataset from_paths(const std::vector<std::string>& paths,
                            std::int64_t min_samples = kSampleRate) {
    Dataset ds;
    for (const auto& p : paths) {
      Waveform w;
      try {
        w = read_wav(p);
      } catch (const DataError& e) {
        std::cerr << "[dataset] skipping unreadable file: " << e.what() << "\n";
        continue;
      }
      if (w.sample_rate != kSampleRate) {
        std::cerr << "[dataset] skipping " << p << ": sample rate " << w.sample_rate
                  << ", expected " << kSampleRate << "\n";
        continue;
      }
      if (static_cast<std::int64_t>(w.samples.size()) < min_samples) {
        std::cerr << "[dataset] skipping " << p << ": clip shorter than " << min_samples
                  << " samples\n";
        continue;
      }
      ds.items_.push_back({p, std::move(w.samples)});
    }
    if (ds.items_.empty()) throw DataError("dataset: no usable clips");
    return ds;
  }

  static Dataset from_directory(const std::string& dir, std::int64_t min_samples = kSampleRate) {
    std::vector<std::string> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".wav")
        paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw DataError(strcat_("dataset: no .wav files in ", dir));
    return from_paths(paths, min_samples);
  }

  // Manifest written by the prepare step: CSV "wav,mel,n_frames".
  static Dataset from_manifest(const std::string& manifest_path,
                               std::int64_t min_samples = kSampleRate) {
    std::ifstream is(manifest_path);
    if (!is) throw DataError(strcat_("cannot open manifest: ", manifest_path));
    std::vector<std::string> paths;
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
      if (header) {
        header = false;
        continue;
      }
      if (line.empty()) continue;
      paths.push_back(line.substr(0, line.find(',')));
    }
    if (paths.empty()) throw DataError(strcat_("manifest lists no clips: ", manifest_path));
    return from_paths(paths, min_samples);
  }

  std::int64_t size() const { return static_cast<std::int64_t>(items_.size()); }
  const DatasetItem& item(std::int64_t i) const { return items_[static_cast<size_t>(i)]; }

 private:
  std::vector<DatasetItem> items_;
};

template <typename T>
struct Batch {
  Tensor<T> mel;                 // [B, 80, frames]
  std::vector<Tensor<T>> waves;  // ground truth per scale, [B, 1, clip/2^k]
};

// Random crops, peak-normalized, with mel and the scale ladder of ground
// truth waveforms. Draw order per item is (index, offset) so batches are
// reproducible from the rng state alone.
template <typename T>
Batch<T> sample_batch(const Dataset& dataset, const TrainConfig& cfg, Rng& rng) {
  if (dataset.size() == 0) throw DataError("sample_batch: empty dataset");
  const std::int64_t clip = cfg.clip_samples();
  const std::int64_t frames = cfg.clip_frames();
  const std::int64_t scales = cfg.hierarchical ? 5 : 1;
  const std::int64_t B = cfg.batch_size;

  Batch<T> batch;
  batch.mel = Tensor<T>::zeros({B, kNumMels, frames});
  batch.waves.resize(static_cast<size_t>(scales));

  std::vector<std::vector<std::vector<float>>> per_item_scales(static_cast<size_t>(B));
  for (std::int64_t b = 0; b < B; ++b) {
    const std::int64_t idx = rng.uniform_int(dataset.size());
    const auto& item = dataset.item(idx);
    const auto len = static_cast<std::int64_t>(item.samples.size());
    const std::int64_t max_start = len - clip;
    const std::int64_t start = max_start > 0 ? rng.uniform_int(max_start + 1) : 0;

    Waveform crop;
    crop.samples.assign(item.samples.begin() + start, item.samples.begin() + start + clip);
    crop = peak_normalize(crop);

    const MelSpectrogram mel = mel_spectrogram(crop).first_frames(frames);
    for (std::int64_t m = 0; m < kNumMels; ++m)
      for (std::int64_t t = 0; t < frames; ++t)
        batch.mel.data()[(b * kNumMels + m) * frames + t] = static_cast<T>(mel.at(m, t));

    auto& ladder = per_item_scales[static_cast<size_t>(b)];
    ladder.push_back(crop.samples);
    for (std::int64_t k = 1; k < scales; ++k) ladder.push_back(halve_waveform(ladder.back()));
  }

  for (std::int64_t k = 0; k < scales; ++k) {
    const auto lk = static_cast<std::int64_t>(per_item_scales[0][static_cast<size_t>(k)].size());
    auto& wave = batch.waves[static_cast<size_t>(k)];
    wave = Tensor<T>::zeros({B, 1, lk});
    for (std::int64_t b = 0; b < B; ++b) {
      const auto& src = per_item_scales[static_cast<size_t>(b)][static_cast<size_t>(k)];
      for (std::int64_t i = 0; i < lk; ++i)
        wave.data()[b * lk + i] = static_cast<T>(src[static_cast<size_t>(i)]);
    }
  }
  return batch;
}

// ---------------------------------------------------------------------------
// training loop
// ---------------------------------------------------------------------------

template <typename T>
class Trainer {
 public:
  Trainer(const TrainConfig& cfg)
      : cfg_(cfg),
        gen_(cfg.generator_config(), cfg.seed),
        disc_(cfg.discriminator_config(), cfg.seed),
        sample_rng_(Rng(cfg.seed).fork(0x73616d70)) {
    cfg_.validate();
    gen_trainables_ = gen_.trainables();
    disc_trainables_ = disc_.trainables();
    gen_opt_.lr = disc_opt_.lr = cfg.lr;
    gen_opt_.beta1 = disc_opt_.beta1 = cfg.adam_beta1;
    gen_opt_.beta2 = disc_opt_.beta2 = cfg.adam_beta2;
    gen_opt_.epsilon = disc_opt_.epsilon = cfg.adam_epsilon;
  }

  Generator<T>& generator() { return gen_; }
  DiscriminatorBank<T>& discriminators() { return disc_; }
  Rng& sample_rng() { return sample_rng_; }
  std::int64_t completed_steps() const { return completed_steps_; }
  const std::vector<NamedTensor<T>>& gen_trainables() const { return gen_trainables_; }
  const std::vector<NamedTensor<T>>& disc_trainables() const { return disc_trainables_; }

  LossReport train_step(const Batch<T>& batch) {
    const std::int64_t step = completed_steps_ + 1;
    zero_grads(gen_trainables_);
    zero_grads(disc_trainables_);

    LossReport report;
    report.step = step;
    auto check = [&](const char* name, double v) {
      if (!std::isfinite(v))
        throw NumericError(strcat_("non-finite loss term '", name, "' at step ", step));
      return v;
    };

    // one generator forward per step; the discriminator update sees the same
    // samples detached, the generator update reuses the tape
    auto fakes = gen_.generate(batch.mel);
    std::vector<Tensor<T>> fakes_detached;
    fakes_detached.reserve(fakes.size());
    for (const auto& f : fakes) fakes_detached.push_back(f.detach());

    const auto scales = disc_.instance_scales();

    // --- discriminator update ---
    {
      auto real_outs = disc_.discriminate_all(batch.waves, batch.mel);
      auto fake_outs = disc_.discriminate_all(fakes_detached, batch.mel);
      Tensor<T> d_loss = cfg_.jcu ? jcu_disc_loss(fake_outs, real_outs)
                                  : lsgan_disc_loss(fake_outs, real_outs);

      // per-scale objectives for the report; D_0 sums its sub-discriminators
      std::vector<double> per_scale(static_cast<size_t>(1 + (cfg_.hierarchical ? 4 : 0)), 0.0);
      for (size_t i = 0; i < fake_outs.size(); ++i) {
        const double v =
            cfg_.jcu
                ? static_cast<double>(jcu_instance_objective(fake_outs[i], real_outs[i]).item())
                : static_cast<double>(lsgan_instance_objective(fake_outs[i].uncond_scores,
                                                               real_outs[i].uncond_scores)
                                          .item());
        per_scale[static_cast<size_t>(scales[i])] += v;
      }
      const char* v_prefix = cfg_.jcu ? "v_jcu_" : "v_";
      for (size_t k = 0; k < per_scale.size(); ++k)
        report.set(strcat_(v_prefix, k), check(strcat_(v_prefix, k).c_str(), per_scale[k]));
      report.set(cfg_.jcu ? "d_loss_jcu" : "d_loss",
                 check("d_loss", static_cast<double>(d_loss.item())));

      backward(d_loss);
      adam_step(disc_trainables_, disc_opt_);
    }

    // --- generator update (against the updated discriminator) ---
    {
      auto fake_outs = disc_.discriminate_all(fakes, batch.mel);
      std::vector<DiscOutput<T>> real_outs;
      {
        NoGradGuard ng;
        real_outs = disc_.discriminate_all(batch.waves, batch.mel);
      }
      Tensor<T> adv = cfg_.jcu ? jcu_gen_loss(fake_outs) : lsgan_gen_loss(fake_outs);
      Tensor<T> fm = feature_matching_loss(real_outs, fake_outs);

      Tensor<T> stft_term;
      double stft_value = 0.0;
      if (cfg_.stft) {
        stft_term = multires_stft_loss(batch.waves[0], fakes[0]);
        stft_value = static_cast<double>(stft_term.item());
      } else if (cfg_.log_stft_monitor) {
        NoGradGuard ng;
        stft_value =
            static_cast<double>(multires_stft_loss(batch.waves[0], fakes[0].detach()).item());
      }

      const double adv_v = check(cfg_.jcu ? "g_adv_jcu" : "g_adv", adv.item());
      const double fm_v = check("fm", fm.item());
      report.set(cfg_.jcu ? "g_adv_jcu" : "g_adv", adv_v);
      report.set("fm", fm_v);
      if (cfg_.stft) report.set("stft", check("stft", stft_value));

      Tensor<T> total = total_gen_loss(adv, fm, stft_term, cfg_.weights);
      check("g_total", total.item());
      // reported total is the exact double recomputation of the objective
      double total_v = adv_v + cfg_.weights.alpha * fm_v;
      if (cfg_.stft) total_v += cfg_.weights.beta * stft_value;
      report.set("g_total", total_v);
      if (cfg_.log_stft_monitor && !cfg_.stft)
        report.set("stft_monitor", check("stft_monitor", stft_value));

      backward(total);
      adam_step(gen_trainables_, gen_opt_);
    }

    completed_steps_ = step;
    return report;
  }

  // --- training-state sidecar (exact-precision resume) ---

  void save_state(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError(strcat_("cannot open training state for writing: ", path));
    os.write("VOCT", 4);
    ckpt_detail::put_u32(os, 1);
    ckpt_detail::put_u32(os, static_cast<std::uint32_t>(sizeof(T)));
    ckpt_detail::put_u64(os, static_cast<std::uint64_t>(completed_steps_));
    for (auto s : sample_rng_.state) ckpt_detail::put_u64(os, s);
    write_adam(os, gen_opt_);
    write_adam(os, disc_opt_);
    write_values(os, gen_trainables_);
    write_values(os, disc_trainables_);
    if (!os) throw DataError(strcat_("training state write failed: ", path));
  }

  void load_state(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError(strcat_("cannot open training state: ", path));
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "VOCT", 4) != 0)
      throw DataError(strcat_("not a VOCT training state: ", path));
    const auto version = ckpt_detail::get_u32(is);
    if (version != 1)
      throw DataError(strcat_("training state version mismatch: file has ", version,
                              ", reader expects 1"));
    const auto scalar_size = ckpt_detail::get_u32(is);
    if (scalar_size != sizeof(T))
      throw DataError(strcat_("training state precision mismatch: file has ", scalar_size * 8,
                              "-bit scalars, trainer uses ", sizeof(T) * 8, "-bit"));
    completed_steps_ = static_cast<std::int64_t>(ckpt_detail::get_u64(is));
    for (auto& s : sample_rng_.state) s = ckpt_detail::get_u64(is);
    read_adam(is, gen_opt_, gen_trainables_);
    read_adam(is, disc_opt_, disc_trainables_);
    read_values(is, gen_trainables_);
    read_values(is, disc_trainables_);
    if (!is) throw DataError(strcat_("truncated training state: ", path));
  }

 private:
  static void write_scalar_vec(std::ostream& os, const T* data, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      if constexpr (sizeof(T) == 4) {
        std::uint32_t bits;
        std::memcpy(&bits, &data[i], 4);
        ckpt_detail::put_u32(os, bits);
      } else {
        std::uint64_t bits;
        std::memcpy(&bits, &data[i], 8);
        ckpt_detail::put_u64(os, bits);
      }
    }
  }

  static void read_scalar_vec(std::istream& is, T* data, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      if constexpr (sizeof(T) == 4) {
        const std::uint32_t bits = ckpt_detail::get_u32(is);
        std::memcpy(&data[i], &bits, 4);
      } else {
        const std::uint64_t bits = ckpt_detail::get_u64(is);
        std::memcpy(&data[i], &bits, 8);
      }
    }
  }

  void write_adam(std::ostream& os, const AdamState<T>& st) const {
    ckpt_detail::put_u64(os, static_cast<std::uint64_t>(st.step));
    ckpt_detail::put_u64(os, static_cast<std::uint64_t>(st.m.size()));
    for (size_t i = 0; i < st.m.size(); ++i) {
      ckpt_detail::put_u64(os, static_cast<std::uint64_t>(st.m[i].size()));
      write_scalar_vec(os, st.m[i].data(), st.m[i].size());
      write_scalar_vec(os, st.v[i].data(), st.v[i].size());
    }
  }

  void read_adam(std::istream& is, AdamState<T>& st,
                 const std::vector<NamedTensor<T>>& trainables) {
    st.step = static_cast<std::int64_t>(ckpt_detail::get_u64(is));
    const auto count = ckpt_detail::get_u64(is);
    if (count != 0 && count != trainables.size())
      throw DataError(strcat_("training state optimizer tracks ", count, " tensors, model has ",
                              trainables.size()));
    st.m.assign(count, {});
    st.v.assign(count, {});
    for (size_t i = 0; i < count; ++i) {
      const auto n = static_cast<size_t>(ckpt_detail::get_u64(is));
      st.m[i].resize(n);
      st.v[i].resize(n);
      read_scalar_vec(is, st.m[i].data(), n);
      read_scalar_vec(is, st.v[i].data(), n);
    }
  }

  void write_values(std::ostream& os, const std::vector<NamedTensor<T>>& trainables) const {
    for (const auto& nt : trainables)
      write_scalar_vec(os, nt.tensor->data(), static_cast<size_t>(nt.tensor->numel()));
  }

  void read_values(std::istream& is, const std::vector<NamedTensor<T>>& trainables) {
    for (const auto& nt : trainables)
      read_scalar_vec(is, nt.tensor->data(), static_cast<size_t>(nt.tensor->numel()));
  }

  TrainConfig cfg_;
  Generator<T> gen_;
  DiscriminatorBank<T> disc_;
  AdamState<T> gen_opt_, disc_opt_;
  std::vector<NamedTensor<T>> gen_trainables_, disc_trainables_;
  Rng sample_rng_;
  std::int64_t completed_steps_ = 0;
};

inline std::string loss_csv_row(const LossReport& report) {
  std::string row = std::to_string(report.step);
  char buf[40];
  for (const auto& [name, value] : report.terms) {
    std::snprintf(buf, sizeof(buf), ",%.17g", value);
    row += buf;
  }
  return row;
}

inline std::string loss_csv_header(const LossReport& report) {
  std::string h = "step";
  for (const auto& [name, value] : report.terms) h += "," + name;
  return h;
}

// Full training runs: loss CSV, periodic checkpoints, exact resume. Returns
// the path of the final generator checkpoint.
template <typename T>
std::string run_training_impl(const TrainConfig& cfg, const Dataset& dataset,
                              const std::string& out_dir, const std::string& resume_state,
                              std::ostream& log) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  set_threads(cfg.threads);

  Trainer<T> trainer(cfg);
  if (!resume_state.empty()) trainer.load_state(resume_state);

  {
    std::ofstream cfg_os(fs::path(out_dir) / "train_config.json");
    cfg_os << cfg.to_json().dump(2) << "\n";
    std::ofstream gen_os(fs::path(out_dir) / "generator.json");
    gen_os << cfg.generator_config().to_json().dump(2) << "\n";
  }

  const fs::path csv_path = fs::path(out_dir) / "losses.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw DataError(strcat_("cannot open loss log for writing: ", csv_path.string()));

  auto save_all = [&](const fs::path& dir) {
    fs::create_directories(dir);
    save_checkpoint((dir / "generator.vocg").string(), trainer.gen_trainables());
    save_checkpoint((dir / "discriminator.vocg").string(), trainer.disc_trainables());
    trainer.save_state((dir / "train_state.voct").string());
  };

  bool wrote_header = false;
  while (trainer.completed_steps() < cfg.steps) {
    auto batch = sample_batch<T>(dataset, cfg, trainer.sample_rng());
    const LossReport report = trainer.train_step(batch);
    if (!wrote_header) {
      csv << loss_csv_header(report) << "\n";
      wrote_header = true;
    }
    csv << loss_csv_row(report) << "\n";
    csv.flush();
    if (report.step % 100 == 0 || report.step == cfg.steps)
      log << "step " << report.step << "/" << cfg.steps << "  g_total "
          << report.get("g_total") << "\n";
    if (cfg.checkpoint_interval > 0 && report.step % cfg.checkpoint_interval == 0 &&
        report.step != cfg.steps)
      save_all(fs::path(out_dir) / strcat_("checkpoints/step_", report.step));
  }
  save_all(fs::path(out_dir));
  return (fs::path(out_dir) / "generator.vocg").string();
}

inline std::string run_training(const TrainConfig& cfg, const Dataset& dataset,
                                const std::string& out_dir, const std::string& resume_state = "",
                                std::ostream& log = std::cout) {
  cfg.validate();
  if (cfg.precision == "f64")
    return run_training_impl<double>(cfg, dataset, out_dir, resume_state, log);
  return run_training_impl<float>(cfg, dataset, out_dir, resume_state, log);
}

}  // namespace vocgan
