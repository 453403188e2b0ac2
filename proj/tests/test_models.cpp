#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"
#include "vocgan/audio.hpp"
#include "vocgan/discriminator.hpp"
#include "vocgan/generator.hpp"

using namespace vocgan;

namespace {

GeneratorConfig mini_gen_config() {
  GeneratorConfig cfg;
  cfg.base_channels = 16;
  return cfg;
}

DiscriminatorConfig mini_disc_config() {
  DiscriminatorConfig cfg;
  cfg.channels = {4, 8, 8, 8};
  cfg.cond_channels = 8;
  return cfg;
}

template <typename T>
Tensor<T> random_mel(std::int64_t frames, Rng& rng, std::int64_t batch = 1) {
  auto mel = Tensor<T>::zeros({batch, kNumMels, frames});
  for (auto& v : mel.vec()) v = static_cast<T>(rng.uniform(-4.0, 1.0));
  return mel;
}

}  // namespace

TEST_CASE("generator config invariants") {
  GeneratorConfig cfg;
  REQUIRE(cfg.total_rate() == 256);
  REQUIRE(cfg.upsample_rates.size() == 6);
  REQUIRE(cfg.upsample_rates[0] == 4);
  REQUIRE(cfg.upsample_rates[1] == 4);
  REQUIRE(cfg.downsampled_outputs == 4);
  REQUIRE_NOTHROW(cfg.validate());

  SECTION("rate product must equal the mel hop") {
    cfg.upsample_rates = {4, 4, 2, 2, 2, 4};
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
  }
  SECTION("hierarchical layout is pinned") {
    cfg.upsample_rates = {8, 8, 2, 2};
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    cfg.hierarchical = false;
    REQUIRE_NOTHROW(cfg.validate());  // baseline layout is fine without side outputs
  }
  SECTION("channel plan halves with a floor") {
    GeneratorConfig toy = GeneratorConfig::vocgan_toy();
    REQUIRE(toy.channel_plan() ==
            std::vector<std::int64_t>{64, 32, 32, 32, 32, 32, 32});
    GeneratorConfig full;
    REQUIRE(full.channel_plan() ==
            std::vector<std::int64_t>{256, 128, 64, 32, 32, 32, 32});
  }
  SECTION("json round trip preserves every field") {
    auto j = cfg.to_json();
    auto back = GeneratorConfig::from_json(j);
    REQUIRE(back.to_json() == j);
    REQUIRE(back.config_hash() == cfg.config_hash());
  }
}

TEST_CASE("generator determinism and parameter naming") {
  Generator<float> a(mini_gen_config(), 42);
  Generator<float> b(mini_gen_config(), 42);
  auto ta = a.trainables();
  auto tb = b.trainables();
  REQUIRE(ta.size() == tb.size());
  for (size_t i = 0; i < ta.size(); ++i) {
    REQUIRE(ta[i].name == tb[i].name);
    REQUIRE(ta[i].tensor->vec() == tb[i].tensor->vec());
    REQUIRE(ta[i].name.rfind("gen.", 0) == 0);
  }
  Generator<float> c(mini_gen_config(), 43);
  bool any_diff = false;
  auto tc = c.trainables();
  for (size_t i = 0; i < ta.size() && !any_diff; ++i)
    any_diff = ta[i].tensor->vec() != tc[i].tensor->vec();
  REQUIRE(any_diff);
}

TEST_CASE("generator shape ladder across frame counts") {
  Generator<float> gen(mini_gen_config(), 1);
  Rng rng(5);
  for (std::int64_t frames : {1, 10, 86, 200}) {
    auto mel = random_mel<float>(frames, rng);
    auto outs = gen.generate(mel);
    REQUIRE(outs.size() == 5);
    for (std::int64_t k = 0; k <= 4; ++k) {
      REQUIRE(outs[static_cast<size_t>(k)].shape() ==
              Shape{1, 1, 256 * frames >> k});
      // resolution ladder closes exactly
      REQUIRE(outs[static_cast<size_t>(k)].dim(2) << k == outs[0].dim(2));
    }
  }
}

TEST_CASE("generator outputs stay strictly inside (-1, 1), even for zero mel") {
  Generator<float> gen(mini_gen_config(), 7);
  auto mel = Tensor<float>::zeros({1, kNumMels, 12});
  auto outs = gen.generate(mel);
  for (const auto& o : outs)
    for (std::int64_t i = 0; i < o.numel(); ++i) {
      REQUIRE(std::isfinite(o.data()[i]));
      REQUIRE(std::abs(o.data()[i]) < 1.0f);
    }
}

TEST_CASE("generate_full equals the first generate output bitwise") {
  Generator<float> gen(mini_gen_config(), 11);
  Rng rng(3);
  auto mel = random_mel<float>(87, rng);
  NoGradGuard ng;
  auto full = gen.generate_full(mel);
  auto all = gen.generate(mel);
  REQUIRE(full.vec() == all[0].vec());
  REQUIRE(full.dim(2) == 22272);  // 87 frames * 256
}

TEST_CASE("doubling the mel frames doubles every output length") {
  Generator<float> gen(mini_gen_config(), 13);
  Rng rng(9);
  NoGradGuard ng;
  auto o1 = gen.generate(random_mel<float>(17, rng));
  auto o2 = gen.generate(random_mel<float>(34, rng));
  for (size_t k = 0; k < o1.size(); ++k) REQUIRE(o2[k].dim(2) == 2 * o1[k].dim(2));
}

TEST_CASE("generator rejects mel channel mismatch") {
  Generator<float> gen(mini_gen_config(), 1);
  auto mel = Tensor<float>::zeros({1, 40, 10});
  REQUIRE_THROWS_AS(gen.generate(mel), ShapeError);
}

TEST_CASE("gradients reach every ancestor parameter from each scale output") {
  Generator<double> gen(mini_gen_config(), 23);
  Rng rng(31);
  auto mel = random_mel<double>(6, rng);

  std::vector<std::string> all_names;
  for (const auto& nt : gen.trainables()) all_names.push_back(nt.name);

  // ancestors of scale k's output: the input conv, every block up to the one
  // carrying the head (its own trunk included), and that head itself
  auto expect_grad = [](const std::string& name, std::int64_t k) {
    const std::int64_t last_block = 5 - k;
    if (name.rfind("gen.input_conv", 0) == 0) return true;
    if (name.rfind("gen.head", 0) == 0) return k == 0;
    REQUIRE(name.rfind("gen.block", 0) == 0);
    const std::int64_t idx = name[9] - '0';
    if (name.find(".head") != std::string::npos) return k >= 1 && idx == last_block;
    return idx <= last_block;
  };

  std::set<std::string> union_reached;
  for (std::int64_t k = 0; k <= 4; ++k) {
    zero_grads(gen.trainables());
    auto outs = gen.generate(mel);
    backward(mean(square(outs[static_cast<size_t>(k)])));
    for (const auto& nt : gen.trainables()) {
      INFO("scale " << k << ", parameter " << nt.name);
      if (expect_grad(nt.name, k)) {
        REQUIRE(nt.tensor->has_grad());
        bool nonzero = false;
        for (double g : nt.tensor->grad()) nonzero = nonzero || g != 0.0;
        REQUIRE(nonzero);
        union_reached.insert(nt.name);
      } else {
        REQUIRE_FALSE(nt.tensor->has_grad());
      }
    }
  }
  // every generator parameter is trained through some scale's loss
  for (const auto& name : all_names) {
    INFO(name);
    REQUIRE(union_reached.count(name) == 1);
  }
}

TEST_CASE("changing one mel frame only moves samples inside the analytic window") {
  Generator<float> gen(mini_gen_config(), 77);
  Rng rng(123);
  const std::int64_t frames = 40;
  auto mel_a = random_mel<float>(frames, rng);
  auto mel_b = Tensor<float>::from_vector(mel_a.shape(), mel_a.vec());
  const std::int64_t probe = 20;
  for (std::int64_t m = 0; m < kNumMels; ++m)
    mel_b.data()[m * frames + probe] += 0.75f;

  NoGradGuard ng;
  auto full_a = gen.generate_full(mel_a);
  auto full_b = gen.generate_full(mel_b);
  auto [lo, hi] = gen.mel_influence_window(probe, probe, frames);

  std::int64_t first_diff = -1, last_diff = -1;
  for (std::int64_t i = 0; i < full_a.numel(); ++i) {
    if (full_a.data()[i] != full_b.data()[i]) {
      if (first_diff < 0) first_diff = i;
      last_diff = i;
    }
  }
  REQUIRE(first_diff >= 0);  // the probe does something
  REQUIRE(first_diff >= lo);
  REQUIRE(last_diff <= hi);
  // and the window is local: much narrower than the clip
  REQUIRE(hi - lo < full_a.numel() / 2);
}

TEST_CASE("baseline generator preset: melgan layout, single output") {
  auto cfg = GeneratorConfig::melgan_baseline(16);
  REQUIRE(cfg.upsample_rates == std::vector<std::int64_t>{8, 8, 2, 2});
  REQUIRE(cfg.total_rate() == 256);
  Generator<float> gen(cfg, 3);
  Rng rng(4);
  NoGradGuard ng;
  auto outs = gen.generate(random_mel<float>(10, rng));
  REQUIRE(outs.size() == 1);
  REQUIRE(outs[0].shape() == Shape{1, 1, 2560});
  for (const auto& nt : gen.trainables()) {
    REQUIRE(nt.name.find(".skip") == std::string::npos);
    REQUIRE(nt.name.find("block0.head") == std::string::npos);
  }
}

TEST_CASE("discriminator bank structure") {
  DiscriminatorBank<float> bank(mini_disc_config(), 9);

  SECTION("five resolution-specific discriminators, D0 with three sub-scales") {
    REQUIRE(bank.instances() == 7);  // 3 D0 subs + D1..D4
    REQUIRE(bank.instance_scales() ==
            std::vector<std::int64_t>{0, 0, 0, 1, 2, 3, 4});
  }

  SECTION("same seed gives identical parameters, names are namespaced") {
    DiscriminatorBank<float> other(mini_disc_config(), 9);
    auto ta = bank.trainables();
    auto tb = other.trainables();
    REQUIRE(ta.size() == tb.size());
    for (size_t i = 0; i < ta.size(); ++i) {
      REQUIRE(ta[i].name == tb[i].name);
      REQUIRE(ta[i].tensor->vec() == tb[i].tensor->vec());
      REQUIRE(ta[i].name.rfind("disc.", 0) == 0);
    }
  }

  SECTION("trunk downsampling totals a stride of 64") {
    auto& d = bank.d0_sub(0);
    REQUIRE(d.score_length(22016) == 22016 / 64);
    REQUIRE(d.score_length(1376) == 1376 / 64 + (1376 % 64 ? 1 : 0));
  }
}

TEST_CASE("discriminate: score maps, conditioning and features") {
  DiscriminatorBank<float> bank(mini_disc_config(), 21);
  Rng rng(17);
  const std::int64_t frames = 8;
  auto mel = random_mel<float>(frames, rng);
  auto x = Tensor<float>::zeros({1, 1, 256 * frames});
  for (auto& v : x.vec()) v = static_cast<float>(rng.uniform(-0.9, 0.9));

  NoGradGuard ng;
  auto& d = bank.d0_sub(0);
  auto out = d.discriminate(x, mel);

  SECTION("score length matches the trunk arithmetic") {
    REQUIRE(out.uncond_scores.dim(2) == d.score_length(x.dim(2)));
    REQUIRE(out.cond_scores.dim(2) == out.uncond_scores.dim(2));
  }

  SECTION("feature maps: one per trunk layer") { REQUIRE(out.features.size() == 4); }

  SECTION("unconditional scores ignore the mel; conditional scores use it") {
    auto mel2 = Tensor<float>::from_vector(mel.shape(), mel.vec());
    for (auto& v : mel2.vec()) v += 0.5f;
    auto out2 = d.discriminate(x, mel2);
    REQUIRE(out2.uncond_scores.vec() == out.uncond_scores.vec());
    REQUIRE(out2.cond_scores.vec() != out.cond_scores.vec());
  }

  SECTION("both heads share the trunk: a trunk weight moves both scores") {
    auto params = d.parameters();
    Parameter<float>* entry_weight = nullptr;
    for (auto* p : params)
      if (p->name.find(".entry.weight") != std::string::npos) entry_weight = p;
    REQUIRE(entry_weight != nullptr);
    entry_weight->direction.data()[0] += 0.5f;
    auto out2 = d.discriminate(x, mel);
    REQUIRE(out2.uncond_scores.vec() != out.uncond_scores.vec());
    REQUIRE(out2.cond_scores.vec() != out.cond_scores.vec());
    entry_weight->direction.data()[0] -= 0.5f;
  }

  SECTION("window-based contract: distant samples leave a window's score unchanged") {
    const std::int64_t window = out.uncond_scores.dim(2) / 2;
    auto [lo, hi] = d.window_receptive_field(window);
    REQUIRE(lo > 0);
    REQUIRE(hi < x.dim(2) - 1);
    auto x2 = Tensor<float>::from_vector(x.shape(), x.vec());
    for (std::int64_t i = 0; i < x.dim(2); ++i)
      if (i < lo || i > hi) x2.data()[i] = static_cast<float>(rng.uniform(-0.9, 0.9));
    auto out2 = d.discriminate(x2, mel);
    REQUIRE(out2.uncond_scores.data()[window] == out.uncond_scores.data()[window]);
    REQUIRE(out2.uncond_scores.vec() != out.uncond_scores.vec());
  }
}

TEST_CASE("discriminator bank consumes the generator ladder at all five scales") {
  Generator<float> gen(mini_gen_config(), 2);
  DiscriminatorBank<float> bank(mini_disc_config(), 3);
  Rng rng(8);
  const std::int64_t frames = 8;
  auto mel = random_mel<float>(frames, rng);
  NoGradGuard ng;
  auto fakes = gen.generate(mel);
  auto outs = bank.discriminate_all(fakes, mel);
  REQUIRE(static_cast<std::int64_t>(outs.size()) == bank.instances());

  // ground-truth shaped ladder is accepted identically
  std::vector<Tensor<float>> reals;
  for (std::int64_t k = 0; k <= 4; ++k) {
    auto t = Tensor<float>::zeros({1, 1, (256 * frames) >> k});
    for (auto& v : t.vec()) v = static_cast<float>(rng.uniform(-0.9, 0.9));
    reals.push_back(t);
  }
  auto outs_real = bank.discriminate_all(reals, mel);
  for (size_t i = 0; i < outs.size(); ++i)
    REQUIRE(outs_real[i].uncond_scores.shape() == outs[i].uncond_scores.shape());

  SECTION("length/scale mismatch is a shape error") {
    reals[2] = Tensor<float>::zeros({1, 1, 100});
    REQUIRE_THROWS_AS(bank.discriminate_all(reals, mel), ShapeError);
  }
}

TEST_CASE("D0 sub-scale pooling reuses the dsp halving operator") {
  Rng rng(12);
  std::vector<float> sig(1000);
  for (auto& v : sig) v = static_cast<float>(rng.uniform(-1.0, 1.0));

  auto x = Tensor<float>::from_vector({1, 1, 1000}, std::vector<float>(sig));
  NoGradGuard ng;
  auto pooled = avg_pool1d(x, 4, 2, 1);
  auto halved = halve_waveform(sig);
  REQUIRE(static_cast<size_t>(pooled.numel()) == halved.size());
  for (size_t i = 0; i < halved.size(); ++i) REQUIRE(pooled.data()[i] == halved[i]);
}

TEST_CASE("non-hierarchical bank builds only the multi-scale D0") {
  auto cfg = mini_disc_config();
  cfg.hierarchical = false;
  cfg.jcu = false;
  DiscriminatorBank<float> bank(cfg, 5);
  REQUIRE(bank.instances() == 3);
  for (const auto& nt : bank.trainables()) {
    REQUIRE(nt.name.find("mel_proj") == std::string::npos);
    REQUIRE(nt.name.find(".cond_head") == std::string::npos);
  }
}
