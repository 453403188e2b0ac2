// vocgan command-line tool: corpus generation, dataset preparation,
// training, synthesis, objective evaluation and the CPU inference benchmark.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "vocgan/vocgan.hpp"

namespace fs = std::filesystem;
using namespace vocgan;

namespace {

bool deterministic_env() {
  const char* v = std::getenv("VOCGAN_DETERMINISTIC");
  return v != nullptr && std::string(v) == "1";
}

GeneratorConfig load_generator_config(const std::string& checkpoint,
                                      const std::string& explicit_path) {
  fs::path path = explicit_path;
  if (path.empty()) {
    path = fs::path(checkpoint).parent_path() / "generator.json";
    if (!fs::exists(path))
      throw DataError(strcat_("no generator config next to ", checkpoint,
                              "; pass --gen-config"));
  }
  std::ifstream is(path);
  if (!is) throw DataError(strcat_("cannot open generator config: ", path.string()));
  nlohmann::json j;
  is >> j;
  return GeneratorConfig::from_json(j);
}

Generator<float> load_generator(const std::string& checkpoint, const std::string& config_path) {
  Generator<float> gen(load_generator_config(checkpoint, config_path), 0);
  auto trainables = gen.trainables();
  load_checkpoint(checkpoint, trainables);
  return gen;
}

Waveform read_wav_at_rate(const std::string& path) {
  Waveform w = read_wav(path);
  if (w.sample_rate != kSampleRate)
    throw DataError(strcat_(path, ": sample rate ", w.sample_rate, ", expected ", kSampleRate,
                            " (run prepare with --resample first)"));
  return w;
}

std::vector<std::string> wav_paths_in(const std::string& data) {
  if (fs::is_regular_file(data)) {
    // manifest file
    std::ifstream is(data);
    if (!is) throw DataError(strcat_("cannot open ", data));
    std::vector<std::string> paths;
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
      if (header) {
        header = false;
        continue;
      }
      if (!line.empty()) paths.push_back(line.substr(0, line.find(',')));
    }
    if (paths.empty()) throw DataError(strcat_("manifest lists no clips: ", data));
    return paths;
  }
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(data))
    if (entry.is_regular_file() && entry.path().extension() == ".wav")
      paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw DataError(strcat_("no .wav files in ", data));
  return paths;
}

Tensor<float> mel_to_tensor(const MelSpectrogram& mel) {
  auto t = Tensor<float>::zeros({1, mel.n_mels, mel.n_frames});
  for (std::int64_t m = 0; m < mel.n_mels; ++m)
    for (std::int64_t f = 0; f < mel.n_frames; ++f)
      t.data()[m * mel.n_frames + f] = mel.at(m, f);
  return t;
}

Waveform synthesize(const Generator<float>& gen, const MelSpectrogram& mel) {
  NoGradGuard ng;
  auto out = gen.generate_full(mel_to_tensor(mel));
  Waveform w;
  w.samples.assign(out.data(), out.data() + out.numel());
  return w;
}

int cmd_make_corpus(const std::string& out_dir, int count, std::uint64_t seed, double min_s,
                    double max_s) {
  auto paths = make_synthetic_corpus(out_dir, count, seed, min_s, max_s);
  std::cout << "wrote " << paths.size() << " clips to " << out_dir << "\n";
  return 0;
}

int cmd_prepare(const std::string& data_dir, const std::string& out_dir, bool resample) {
  fs::create_directories(out_dir);
  std::ofstream manifest(fs::path(out_dir) / "manifest.csv");
  manifest << "wav,mel,n_frames\n";
  std::vector<std::string> rejected;
  int prepared = 0;

  for (const auto& path : wav_paths_in(data_dir)) {
    Waveform w;
    try {
      w = read_wav(path);
    } catch (const DataError& e) {
      rejected.push_back(strcat_(path, ": ", e.what()));
      continue;
    }
    std::string wav_path = path;
    if (w.sample_rate != kSampleRate) {
      if (!resample) {
        rejected.push_back(strcat_(path, ": sample rate ", w.sample_rate, " (use --resample)"));
        continue;
      }
      w = resample_linear(w, kSampleRate);
      const auto dir = fs::path(out_dir) / "resampled";
      fs::create_directories(dir);
      wav_path = (dir / fs::path(path).filename()).string();
      write_wav(wav_path, w);
    }
    MelSpectrogram mel;
    try {
      mel = mel_spectrogram(w);
    } catch (const Error& e) {
      rejected.push_back(strcat_(path, ": ", e.what()));
      continue;
    }
    const auto mel_path =
        (fs::path(out_dir) / (fs::path(path).stem().string() + ".vocm")).string();
    save_mel(mel_path, mel);
    manifest << wav_path << "," << mel_path << "," << mel.n_frames << "\n";
    ++prepared;
  }

  for (const auto& r : rejected) std::cerr << "rejected: " << r << "\n";
  if (prepared == 0) throw DataError("prepare: no usable files");
  std::cout << "prepared " << prepared << " files (" << rejected.size() << " rejected), manifest "
            << (fs::path(out_dir) / "manifest.csv").string() << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data, const std::string& out,
              const std::string& ablation, const std::string& resume, std::int64_t steps,
              std::int64_t batch, std::int64_t seed, const std::string& preset,
              const std::string& precision, int threads) {
  TrainConfig cfg;
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) throw DataError(strcat_("cannot open train config: ", config_path));
    nlohmann::json j;
    is >> j;
    cfg = TrainConfig::from_json(j);
  }
  if (!ablation.empty()) apply_ablation_preset(cfg, ablation);
  if (preset == "full") {
    cfg.gen_base_channels = 256;
    cfg.disc_channels = {16, 64, 256, 512};
    cfg.disc_cond_channels = 128;
  } else if (preset == "toy") {
    cfg.gen_base_channels = 64;
    cfg.disc_channels = {8, 16, 32, 64};
    cfg.disc_cond_channels = 32;
  } else if (!preset.empty()) {
    throw ConfigError(strcat_("unknown model preset: ", preset, " (expected toy|full)"));
  }
  if (steps > 0) cfg.steps = steps;
  if (batch > 0) cfg.batch_size = batch;
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (!precision.empty()) cfg.precision = precision;
  if (threads >= 0) cfg.threads = threads;
  if (deterministic_env()) {
    cfg.precision = "f64";
    cfg.threads = 1;
  }
  cfg.validate();

  Dataset dataset = fs::is_regular_file(data) ? Dataset::from_manifest(data)
                                              : Dataset::from_directory(data);
  const auto ckpt = run_training(cfg, dataset, out, resume);
  std::cout << "final checkpoint " << ckpt << "\n";
  return 0;
}

int cmd_synth(const std::string& checkpoint, const std::string& gen_config,
              const std::string& mel_path, const std::string& wav_path, const std::string& out) {
  if (deterministic_env()) set_threads(1);
  auto gen = load_generator(checkpoint, gen_config);
  MelSpectrogram mel;
  if (!mel_path.empty())
    mel = load_mel(mel_path);
  else if (!wav_path.empty())
    mel = mel_spectrogram(read_wav_at_rate(wav_path));  // copy-synthesis
  else
    throw DataError("synth: pass --mel or --wav");
  Waveform w = synthesize(gen, mel);
  write_wav(out, w);
  std::cout << "wrote " << out << " (" << w.samples.size() << " samples, " << w.seconds()
            << " s)\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& gen_config,
             const std::string& data, const std::string& report_path, const std::string& f0_dir,
             bool ground_truth) {
  if (deterministic_env()) set_threads(1);
  std::optional<Generator<float>> gen;
  std::string config_hash = "ground_truth";
  if (!ground_truth) {
    gen.emplace(load_generator(checkpoint, gen_config));
    config_hash = gen->config().config_hash();
  }
  if (!f0_dir.empty()) fs::create_directories(f0_dir);

  nlohmann::ordered_json utterances = nlohmann::ordered_json::array();
  double mcd_sum = 0.0, f0_sum = 0.0;
  int count = 0, f0_count = 0;
  for (const auto& path : wav_paths_in(data)) {
    const Waveform ref = read_wav_at_rate(path);
    const Waveform syn = ground_truth ? ref : synthesize(*gen, mel_spectrogram(ref));
    const double mcd_db = mcd(ref, syn);
    const auto f0 = f0_rmse(ref, syn);
    nlohmann::ordered_json u;
    u["wav"] = path;
    u["mcd_db"] = mcd_db;
    if (f0) {
      u["f0_rmse_hz"] = *f0;
      f0_sum += *f0;
      ++f0_count;
    } else {
      u["f0_rmse_hz"] = nullptr;
    }
    utterances.push_back(u);
    mcd_sum += mcd_db;
    ++count;
    if (!f0_dir.empty())
      dump_f0_trajectory(ref, syn,
                         (fs::path(f0_dir) / (fs::path(path).stem().string() + "_f0.csv"))
                             .string());
  }
  if (count == 0) throw DataError("eval: no utterances");

  nlohmann::ordered_json report;
  report["checkpoint"] = ground_truth ? "ground_truth" : checkpoint;
  report["config_hash"] = config_hash;
  report["utterances"] = utterances;
  report["mean_mcd_db"] = mcd_sum / count;
  if (f0_count > 0)
    report["mean_f0_rmse_hz"] = f0_sum / f0_count;
  else
    report["mean_f0_rmse_hz"] = nullptr;

  std::ofstream os(report_path);
  if (!os) throw DataError(strcat_("cannot open report for writing: ", report_path));
  os << report.dump(2) << "\n";
  std::cout << "mean MCD " << (mcd_sum / count) << " dB over " << count << " utterances\n";
  return 0;
}

int cmd_bench(const std::string& checkpoint, const std::string& gen_config,
              const std::string& data, const std::string& report_path, int threads, int runs) {
  if (deterministic_env()) threads = 1;
  auto gen = load_generator(checkpoint, gen_config);
  std::vector<MelSpectrogram> mels;
  for (const auto& path : wav_paths_in(data))
    mels.push_back(mel_spectrogram(read_wav_at_rate(path)));
  auto report = benchmark_rtf(gen, mels, threads, runs);
  std::ofstream os(report_path);
  if (!os) throw DataError(strcat_("cannot open report for writing: ", report_path));
  os << report.to_json().dump(2) << "\n";
  std::cout << "RTF median " << report.rtf_median << " over " << report.runs << " runs (threads="
            << report.threads << ", config " << report.config_hash << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VocGAN-style neural vocoder toolkit"};
  app.require_subcommand(1);

  // make-corpus
  auto* mc = app.add_subcommand("make-corpus", "generate the bundled synthetic corpus");
  std::string mc_out = "corpus";
  int mc_count = 8;
  std::uint64_t mc_seed = 1234;
  double mc_min = 1.2, mc_max = 2.5;
  mc->add_option("--out", mc_out, "output directory")->required();
  mc->add_option("--count", mc_count, "number of clips");
  mc->add_option("--seed", mc_seed, "corpus seed");
  mc->add_option("--min-seconds", mc_min, "shortest clip length");
  mc->add_option("--max-seconds", mc_max, "longest clip length");

  // prepare
  auto* pr = app.add_subcommand("prepare", "validate WAVs and cache mel spectrograms");
  std::string pr_data, pr_out;
  bool pr_resample = false;
  pr->add_option("--data-dir", pr_data, "directory of WAV files")->required();
  pr->add_option("--out-dir", pr_out, "output directory for mel caches + manifest")->required();
  pr->add_flag("--resample", pr_resample, "linearly resample non-22050 Hz input");

  // train
  auto* tr = app.add_subcommand("train", "run the GAN training loop");
  std::string tr_config, tr_data, tr_out, tr_ablation, tr_resume, tr_preset, tr_precision;
  std::int64_t tr_steps = -1, tr_batch = -1, tr_seed = -1;
  int tr_threads = -1;
  tr->add_option("--config", tr_config, "TrainConfig JSON file");
  tr->add_option("--data", tr_data, "WAV directory or manifest.csv")->required();
  tr->add_option("--out", tr_out, "output directory")->required();
  tr->add_option("--ablation", tr_ablation,
                 "baseline|hierarchical|jcu|hierarchical_jcu|hierarchical_stft|full");
  tr->add_option("--resume", tr_resume, "train_state.voct to resume from");
  tr->add_option("--steps", tr_steps, "override step count");
  tr->add_option("--batch-size", tr_batch, "override batch size");
  tr->add_option("--seed", tr_seed, "override seed");
  tr->add_option("--preset", tr_preset, "model size preset: toy|full");
  tr->add_option("--precision", tr_precision, "f32|f64");
  tr->add_option("--threads", tr_threads, "kernel threads (0 = hardware)");

  // synth
  auto* sy = app.add_subcommand("synth", "mel (or WAV via copy-synthesis) to waveform");
  std::string sy_ckpt, sy_cfg, sy_mel, sy_wav, sy_out;
  sy->add_option("--checkpoint", sy_ckpt, "generator .vocg file")->required();
  sy->add_option("--gen-config", sy_cfg, "generator config JSON (default: sibling file)");
  sy->add_option("--mel", sy_mel, "input .vocm mel cache");
  sy->add_option("--wav", sy_wav, "input WAV for copy-synthesis");
  sy->add_option("--out", sy_out, "output WAV path")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "objective evaluation (MCD, F0 RMSE)");
  std::string ev_ckpt, ev_cfg, ev_data, ev_report, ev_f0;
  bool ev_ground_truth = false;
  ev->add_option("--checkpoint", ev_ckpt, "generator .vocg file");
  ev->add_option("--gen-config", ev_cfg, "generator config JSON");
  ev->add_option("--data", ev_data, "WAV directory or manifest.csv")->required();
  ev->add_option("--report", ev_report, "output JSON report")->required();
  ev->add_option("--f0-dir", ev_f0, "directory for per-utterance F0 trajectory CSVs");
  ev->add_flag("--ground-truth", ev_ground_truth,
               "score the ground truth against itself instead of synthesizing");

  // bench
  auto* be = app.add_subcommand("bench", "real-time-factor benchmark");
  std::string be_ckpt, be_cfg, be_data, be_report;
  int be_threads = 1, be_runs = 5;
  be->add_option("--checkpoint", be_ckpt, "generator .vocg file")->required();
  be->add_option("--gen-config", be_cfg, "generator config JSON");
  be->add_option("--data", be_data, "WAV directory or manifest.csv")->required();
  be->add_option("--report", be_report, "output JSON report")->required();
  be->add_option("--threads", be_threads, "kernel threads");
  be->add_option("--runs", be_runs, "timed runs (>= 5)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (mc->parsed()) return cmd_make_corpus(mc_out, mc_count, mc_seed, mc_min, mc_max);
    if (pr->parsed()) return cmd_prepare(pr_data, pr_out, pr_resample);
    if (tr->parsed())
      return cmd_train(tr_config, tr_data, tr_out, tr_ablation, tr_resume, tr_steps, tr_batch,
                       tr_seed, tr_preset, tr_precision, tr_threads);
    if (sy->parsed()) return cmd_synth(sy_ckpt, sy_cfg, sy_mel, sy_wav, sy_out);
    if (ev->parsed()) {
      if (!ev_ground_truth && ev_ckpt.empty())
        throw DataError("eval: --checkpoint is required unless --ground-truth is set");
      return cmd_eval(ev_ckpt, ev_cfg, ev_data, ev_report, ev_f0, ev_ground_truth);
    }
    if (be->parsed()) return cmd_bench(be_ckpt, be_cfg, be_data, be_report, be_threads, be_runs);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
