#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vocgan/corpus.hpp"
#include "vocgan/mel.hpp"
#include "vocgan/trainer.hpp"

using namespace vocgan;
namespace fs = std::filesystem;

namespace {

#ifndef VOCGAN_CLI_PATH
#error "VOCGAN_CLI_PATH must be defined"
#endif

const std::string kCli = VOCGAN_CLI_PATH;

struct Workspace {
  fs::path root;
  Workspace() : root(fs::temp_directory_path() / "vocgan_cli_ws") {
    fs::remove_all(root);
    fs::create_directories(root);
  }
};

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::vector<char> read_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is);
  return std::vector<char>((std::istreambuf_iterator<char>(is)),
                           std::istreambuf_iterator<char>());
}

const Workspace& ws() {
  static Workspace w;
  return w;
}

}  // namespace

TEST_CASE("cli exit codes: usage=1, data=2") {
  REQUIRE(run("") == 1);
  REQUIRE(run("no-such-command") == 1);
  REQUIRE(run("train --out x") == 1);                          // missing required --data
  REQUIRE(run("prepare --data-dir /nonexistent --out-dir " +
              (ws().root / "p0").string()) == 2);              // unreadable input
  REQUIRE(run("--help") == 0);
}

TEST_CASE("cli pipeline: prepare rejects wrong rates unless --resample") {
  const auto corpus = ws().root / "corpus";
  make_synthetic_corpus(corpus.string(), 4, 11);

  // drop in one 44.1 kHz file
  Waveform hi;
  hi.sample_rate = 44100;
  hi.samples.assign(44100, 0.0f);
  for (size_t i = 0; i < hi.samples.size(); ++i)
    hi.samples[i] = static_cast<float>(0.5 * std::sin(2.0 * 3.141592653589793 * 220.0 * i / 44100));
  write_wav((corpus / "hi_rate.wav").string(), hi);

  const auto prep = ws().root / "prep";
  REQUIRE(run("prepare --data-dir " + corpus.string() + " --out-dir " + prep.string()) == 0);
  {
    std::ifstream is(prep / "manifest.csv");
    std::string line;
    int rows = 0;
    bool saw_hi_rate = false;
    while (std::getline(is, line)) {
      if (line.find("hi_rate") != std::string::npos) saw_hi_rate = true;
      ++rows;
    }
    REQUIRE(rows == 5);  // header + 4 valid clips
    REQUIRE_FALSE(saw_hi_rate);
  }

  const auto prep_rs = ws().root / "prep_resampled";
  REQUIRE(run("prepare --data-dir " + corpus.string() + " --out-dir " + prep_rs.string() +
              " --resample") == 0);
  {
    std::ifstream is(prep_rs / "manifest.csv");
    std::string line;
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    REQUIRE(rows == 6);  // header + 5 clips, hi_rate resampled
  }
}

TEST_CASE("cli pipeline: train, synth idempotence, eval, bench") {
  const auto corpus = ws().root / "corpus";
  const auto prep = ws().root / "prep";
  const auto out = ws().root / "run";
  REQUIRE(fs::exists(prep / "manifest.csv"));  // produced by the previous case

  // tiny but real training run
  {
    TrainConfig cfg;
    cfg.steps = 2;
    cfg.batch_size = 1;
    cfg.clip_seconds = 0.25;
    cfg.gen_base_channels = 16;
    cfg.disc_channels = {4, 8, 8, 8};
    cfg.disc_cond_channels = 8;
    cfg.threads = 2;
    const auto cfg_path = ws().root / "train.json";
    std::ofstream os(cfg_path);
    os << cfg.to_json().dump(2);
    os.close();
    REQUIRE(run("train --config " + cfg_path.string() + " --data " +
                (prep / "manifest.csv").string() + " --out " + out.string()) == 0);
  }
  REQUIRE(fs::exists(out / "generator.vocg"));
  REQUIRE(fs::exists(out / "generator.json"));
  REQUIRE(fs::exists(out / "losses.csv"));

  SECTION("synth is byte-identical across invocations") {
    const auto wav0 = (ws().root / "syn0.wav").string();
    const auto wav1 = (ws().root / "syn1.wav").string();
    const std::string args = "synth --checkpoint " + (out / "generator.vocg").string() +
                             " --wav " + (corpus / "tone_000.wav").string();
    REQUIRE(run(args + " --out " + wav0) == 0);
    REQUIRE(run(args + " --out " + wav1) == 0);
    REQUIRE(read_bytes(wav0) == read_bytes(wav1));

    // mel-cache input path gives the documented length: frames * 256 samples
    auto mel = load_mel((prep / "tone_000.vocm").string());
    const auto wav2 = (ws().root / "syn2.wav").string();
    REQUIRE(run("synth --checkpoint " + (out / "generator.vocg").string() + " --mel " +
                (prep / "tone_000.vocm").string() + " --out " + wav2) == 0);
    REQUIRE(static_cast<std::int64_t>(read_wav(wav2).samples.size()) == mel.n_frames * 256);
  }

  SECTION("ground-truth eval scores 0.0 MCD and 0.0 F0 RMSE") {
    const auto report = ws().root / "gt.json";
    REQUIRE(run("eval --data " + (prep / "manifest.csv").string() + " --report " +
                report.string() + " --ground-truth") == 0);
    std::ifstream is(report);
    nlohmann::json j;
    is >> j;
    REQUIRE(j["mean_mcd_db"].get<double>() == 0.0);
    for (const auto& u : j["utterances"]) {
      REQUIRE(u["mcd_db"].get<double>() == 0.0);
      if (!u["f0_rmse_hz"].is_null()) REQUIRE(u["f0_rmse_hz"].get<double>() == 0.0);
    }
  }

  SECTION("eval of the trained checkpoint emits per-utterance rows") {
    const auto report = ws().root / "eval.json";
    REQUIRE(run("eval --checkpoint " + (out / "generator.vocg").string() + " --data " +
                (prep / "manifest.csv").string() + " --report " + report.string() +
                " --f0-dir " + (ws().root / "f0").string()) == 0);
    std::ifstream is(report);
    nlohmann::json j;
    is >> j;
    REQUIRE(j["utterances"].size() == 4);
    REQUIRE(j.contains("mean_mcd_db"));
    REQUIRE(j.contains("config_hash"));
    REQUIRE(fs::exists(ws().root / "f0" / "tone_000_f0.csv"));
  }

  SECTION("bench writes the rtf report") {
    const auto report = ws().root / "bench.json";
    REQUIRE(run("bench --checkpoint " + (out / "generator.vocg").string() + " --data " +
                (prep / "manifest.csv").string() + " --report " + report.string() +
                " --threads 1 --runs 5") == 0);
    std::ifstream is(report);
    nlohmann::json j;
    is >> j;
    REQUIRE(j["runs"].get<int>() == 5);
    REQUIRE(j["threads"].get<int>() == 1);
    REQUIRE(j["rtf_median"].get<double>() > 0.0);
    REQUIRE(j["rtf_runs"].size() == 5);
    REQUIRE(j.contains("config_hash"));
  }

  SECTION("version-mismatched checkpoints are rejected with exit code 2") {
    const auto bad = ws().root / "bad.vocg";
    auto bytes = read_bytes(out / "generator.vocg");
    bytes[4] = 9;  // corrupt the format version field
    std::ofstream os(bad, std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    os.close();
    REQUIRE(run("synth --checkpoint " + bad.string() + " --gen-config " +
                (out / "generator.json").string() + " --wav " +
                (corpus / "tone_000.wav").string() + " --out " +
                (ws().root / "bad.wav").string()) == 2);
  }
}
