#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "test_support.hpp"
#include "vocgan/adam.hpp"
#include "vocgan/checkpoint.hpp"
#include "vocgan/ops.hpp"
#include "vocgan/params.hpp"

using namespace vocgan;
using vocgan::testing::check_gradients;
using vocgan::testing::random_tensor;

namespace {

// Independent scalar-loop convolution used as the oracle for the fast path.
std::vector<double> conv1d_reference(const std::vector<double>& in, const std::vector<double>& w,
                                     const std::vector<double>& bias, std::int64_t B,
                                     std::int64_t Cin, std::int64_t L, std::int64_t Cout,
                                     std::int64_t K, std::int64_t stride, std::int64_t pad,
                                     std::int64_t dil, std::int64_t groups) {
  const std::int64_t Lout = (L + 2 * pad - dil * (K - 1) - 1) / stride + 1;
  const std::int64_t cpg_in = Cin / groups, cpg_out = Cout / groups;
  std::vector<double> out(static_cast<size_t>(B * Cout * Lout), 0.0);
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t co = 0; co < Cout; ++co)
      for (std::int64_t l = 0; l < Lout; ++l) {
        double acc = bias.empty() ? 0.0 : bias[static_cast<size_t>(co)];
        const std::int64_t g = co / cpg_out;
        for (std::int64_t ci = 0; ci < cpg_in; ++ci)
          for (std::int64_t k = 0; k < K; ++k) {
            const std::int64_t i = l * stride + k * dil - pad;
            if (i >= 0 && i < L)
              acc += w[static_cast<size_t>((co * cpg_in + ci) * K + k)] *
                     in[static_cast<size_t>((b * Cin + g * cpg_in + ci) * L + i)];
          }
        out[static_cast<size_t>((b * Cout + co) * Lout + l)] = acc;
      }
  return out;
}

double dot_all(const Tensor<double>& a, const Tensor<double>& b) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) acc += a.data()[i] * b.data()[i];
  return acc;
}

}  // namespace

TEST_CASE("conv1d identity kernel reproduces the input") {
  auto x = Tensor<double>::from_vector({1, 1, 5}, {1, 2, 3, 4, 5});
  auto w = Tensor<double>::from_vector({1, 1, 1}, {1});
  auto y = conv1d(x, w, Tensor<double>());
  REQUIRE(y.shape() == Shape{1, 1, 5});
  for (int i = 0; i < 5; ++i) REQUIRE(y.data()[i] == Catch::Approx(x.data()[i]));
}

TEST_CASE("conv1d strided sum kernel") {
  auto x = Tensor<double>::from_vector({1, 1, 4}, {1, 1, 1, 1});
  auto w = Tensor<double>::from_vector({1, 1, 2}, {1, 1});
  auto y = conv1d(x, w, Tensor<double>(), 2, 0, 1, 1);
  REQUIRE(y.shape() == Shape{1, 1, 2});
  REQUIRE(y.data()[0] == Catch::Approx(2.0));
  REQUIRE(y.data()[1] == Catch::Approx(2.0));
}

TEST_CASE("conv1d matches the scalar-loop oracle on random configs") {
  Rng rng(1234);
  for (int trial = 0; trial < 40; ++trial) {
    const std::int64_t groups = 1 + rng.uniform_int(2);
    const std::int64_t cpg_in = 1 + rng.uniform_int(3);
    const std::int64_t cpg_out = 1 + rng.uniform_int(3);
    const std::int64_t Cin = groups * cpg_in, Cout = groups * cpg_out;
    const std::int64_t B = 1 + rng.uniform_int(2);
    const std::int64_t K = 1 + rng.uniform_int(4);
    const std::int64_t dil = 1 + rng.uniform_int(2);
    const std::int64_t stride = 1 + rng.uniform_int(3);
    const std::int64_t pad = rng.uniform_int(3);
    std::int64_t L = dil * (K - 1) + 1 + rng.uniform_int(12);
    if (L + 2 * pad < dil * (K - 1) + 1) L = dil * (K - 1) + 1;

    auto x = random_tensor({B, Cin, L}, rng);
    auto w = random_tensor({Cout, cpg_in, K}, rng);
    auto b = random_tensor({Cout}, rng);
    auto y = conv1d(x, w, b, stride, pad, dil, groups);
    auto ref = conv1d_reference(x.vec(), w.vec(), b.vec(), B, Cin, L, Cout, K, stride, pad, dil,
                                groups);
    REQUIRE(static_cast<size_t>(y.numel()) == ref.size());
    for (size_t i = 0; i < ref.size(); ++i)
      REQUIRE(y.data()[i] == Catch::Approx(ref[i]).margin(1e-9));
  }
}

TEST_CASE("conv1d output length formula over a parameter grid") {
  Rng rng(7);
  for (std::int64_t K : {1, 2, 3, 5}) {
    for (std::int64_t stride : {1, 2, 3}) {
      for (std::int64_t pad : {0, 1, 2}) {
        for (std::int64_t dil : {1, 2}) {
          for (std::int64_t L : {7, 12, 31}) {
            if (L + 2 * pad < dil * (K - 1) + 1) continue;
            auto x = random_tensor({1, 1, L}, rng);
            auto w = random_tensor({1, 1, K}, rng);
            auto y = conv1d(x, w, Tensor<double>(), stride, pad, dil, 1);
            const std::int64_t expect = (L + 2 * pad - dil * (K - 1) - 1) / stride + 1;
            REQUIRE(y.dim(2) == expect);
          }
        }
      }
    }
  }
}

TEST_CASE("conv1d rejects mismatched shapes with the offending axis named") {
  Rng rng(3);
  auto x = random_tensor({1, 4, 8}, rng);
  auto w = random_tensor({2, 3, 3}, rng);  // wants Cin 3, got 4
  REQUIRE_THROWS_MATCHES(conv1d(x, w, Tensor<double>()), ShapeError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("axis 1")));
  auto too_short = random_tensor({1, 1, 2}, rng);
  auto wide = random_tensor({1, 1, 5}, rng);
  REQUIRE_THROWS_AS(conv1d(too_short, wide, Tensor<double>()), ShapeError);
}

TEST_CASE("conv_transpose1d length formula and zero-input bias broadcast") {
  Rng rng(11);
  auto x = Tensor<double>::zeros({1, 2, 10});
  auto w = random_tensor({2, 3, 8}, rng);
  auto b = random_tensor({3}, rng);
  auto y = conv_transpose1d(x, w, b, 4, 2);
  REQUIRE(y.shape() == Shape{1, 3, 40});  // (10-1)*4 - 4 + 8
  for (std::int64_t c = 0; c < 3; ++c)
    for (std::int64_t l = 0; l < 40; ++l)
      REQUIRE(y.data()[c * 40 + l] == Catch::Approx(b.data()[c]));
}

TEST_CASE("conv_transpose1d rejects kernel smaller than stride") {
  Rng rng(5);
  auto x = random_tensor({1, 1, 4}, rng);
  auto w = random_tensor({1, 1, 2}, rng);
  REQUIRE_THROWS_AS(conv_transpose1d(x, w, Tensor<double>(), 4, 0), ConfigError);
}

TEST_CASE("conv_transpose1d is the adjoint of conv1d") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::int64_t Cin = 1 + rng.uniform_int(3), Cout = 1 + rng.uniform_int(3);
    const std::int64_t stride = 1 + rng.uniform_int(3);
    const std::int64_t K = stride + rng.uniform_int(4);
    const std::int64_t pad = rng.uniform_int(K / 2 + 1);
    // pick L so the conv length map inverts exactly
    const std::int64_t Lout = 3 + rng.uniform_int(6);
    const std::int64_t L = (Lout - 1) * stride + K - 2 * pad;
    if (L < K) continue;

    auto a = random_tensor({1, Cin, L}, rng);
    auto b = random_tensor({1, Cout, Lout}, rng);
    auto w = random_tensor({Cout, Cin, K}, rng);  // also valid as [Cin_t=Cout][Cout_t=Cin][K]
    auto conv_a = conv1d(a, w, Tensor<double>(), stride, pad, 1, 1);
    REQUIRE(conv_a.dim(2) == Lout);
    auto convt_b = conv_transpose1d(b, w, Tensor<double>(), stride, pad);
    REQUIRE(convt_b.dim(2) == L);
    REQUIRE(dot_all(conv_a, b) == Catch::Approx(dot_all(a, convt_b)).epsilon(1e-10).margin(1e-10));
  }
}

TEST_CASE("elementwise op values") {
  auto x = Tensor<double>::from_vector({3}, {-1, 0, 2});
  auto y = leaky_relu(x, 0.2);
  REQUIRE(y.data()[0] == Catch::Approx(-0.2));
  REQUIRE(y.data()[1] == 0.0);
  REQUIRE(y.data()[2] == Catch::Approx(2.0));

  auto id = leaky_relu(x, 1.0);
  for (int i = 0; i < 3; ++i) REQUIRE(id.data()[i] == Catch::Approx(x.data()[i]));

  REQUIRE(tanh_act(Tensor<double>::scalar(0.0)).item() == 0.0);

  auto p = avg_pool1d(Tensor<double>::from_vector({1, 1, 4}, {1, 3, 5, 7}), 2, 2, 0);
  REQUIRE(p.shape() == Shape{1, 1, 2});
  REQUIRE(p.data()[0] == Catch::Approx(2.0));
  REQUIRE(p.data()[1] == Catch::Approx(6.0));

  REQUIRE_THROWS_AS(log_val(Tensor<double>::from_vector({2}, {1.0, -3.0})), DomainError);
  REQUIRE_THROWS_AS(sqrt_val(Tensor<double>::scalar(-1.0)), DomainError);
}

TEST_CASE("pad_reflect mirrors without repeating the edge") {
  auto x = Tensor<double>::from_vector({1, 1, 4}, {1, 2, 3, 4});
  auto y = pad_reflect(x, 2);
  std::vector<double> expect = {3, 2, 1, 2, 3, 4, 3, 2};
  REQUIRE(y.numel() == 8);
  for (size_t i = 0; i < expect.size(); ++i) REQUIRE(y.data()[i] == expect[i]);

  // pads beyond the input length keep bouncing
  auto wide = pad_reflect(x, 4);
  std::vector<double> expect_wide = {3, 4, 3, 2, 1, 2, 3, 4, 3, 2, 1, 2};
  for (size_t i = 0; i < expect_wide.size(); ++i) REQUIRE(wide.data()[i] == expect_wide[i]);

  auto single = pad_reflect(Tensor<double>::from_vector({1, 1, 1}, {5.0}), 3);
  for (int i = 0; i < 7; ++i) REQUIRE(single.data()[i] == 5.0);
}

TEST_CASE("backward: linear loss, accumulation and scalar contract") {
  auto w = Tensor<double>::from_vector({3}, {0.5, -1.0, 2.0});
  w.set_requires_grad(true);
  auto x = Tensor<double>::from_vector({3}, {3.0, 5.0, 7.0});

  auto loss = sum(mul(w, x));
  backward(loss);
  for (int i = 0; i < 3; ++i) REQUIRE(w.grad()[static_cast<size_t>(i)] == x.data()[i]);

  // second backward without zero_grad doubles the leaf grads
  backward(loss);
  for (int i = 0; i < 3; ++i) REQUIRE(w.grad()[static_cast<size_t>(i)] == 2.0 * x.data()[i]);

  auto vec_loss = mul(w, x);
  REQUIRE_THROWS_AS(backward(vec_loss), ContractError);
}

TEST_CASE("no-grad mode produces leaf results") {
  auto w = Tensor<double>::from_vector({2}, {1.0, 2.0});
  w.set_requires_grad(true);
  NoGradGuard ng;
  auto y = mul_scalar(w, 3.0);
  REQUIRE(y.raw()->is_leaf());
}

TEST_CASE("gradient checks: every differentiable op, 20+ seeds") {
  struct OpCase {
    const char* name;
    std::function<Tensor<double>(const Tensor<double>&)> apply;
  };
  const std::vector<OpCase> unary_cases = {
      {"leaky_relu", [](const Tensor<double>& x) { return leaky_relu(x, 0.2); }},
      {"tanh", [](const Tensor<double>& x) { return tanh_act(x); }},
      {"abs", [](const Tensor<double>& x) { return abs_val(x); }},
      {"square", [](const Tensor<double>& x) { return square(x); }},
      {"add_scalar", [](const Tensor<double>& x) { return add_scalar(x, 0.7); }},
      {"mul_scalar", [](const Tensor<double>& x) { return mul_scalar(x, -1.3); }},
      {"clamp_min", [](const Tensor<double>& x) { return clamp_min(x, 0.1); }},
      {"pad_reflect", [](const Tensor<double>& x) { return pad_reflect(x, 2); }},
      {"avg_pool", [](const Tensor<double>& x) { return avg_pool1d(x, 4, 2, 1); }},
      {"narrow", [](const Tensor<double>& x) { return narrow_time(x, 1, 4); }},
      {"nearest_resize", [](const Tensor<double>& x) { return nearest_resize(x, 13); }},
      {"mean_chain", [](const Tensor<double>& x) { return mul_scalar(mean(x), 3.0); }},
  };

  for (const auto& c : unary_cases) {
    INFO(c.name);
    double worst = 0.0;
    for (int seed = 0; seed < 22; ++seed) {
      Rng rng(900 + static_cast<std::uint64_t>(seed));
      auto x = random_tensor({1, 2, 7}, rng);
      // keep clear of kinks for the piecewise ops
      for (auto& v : x.vec())
        if (std::abs(v) < 0.05 || std::abs(v - 0.1) < 0.05) v += 0.2;
      x.set_requires_grad(true);
      auto res = check_gradients({&x}, [&] { return mean(square(c.apply(x))); });
      worst = std::max(worst, res.max_error);
    }
    REQUIRE(worst < 1e-4);
  }

  SECTION("log and sqrt on positive inputs") {
    double worst = 0.0;
    for (int seed = 0; seed < 22; ++seed) {
      Rng rng(500 + static_cast<std::uint64_t>(seed));
      auto x = Tensor<double>::zeros({1, 2, 6});
      for (auto& v : x.vec()) v = rng.uniform(0.4, 3.0);
      x.set_requires_grad(true);
      auto r1 = check_gradients({&x}, [&] { return mean(log_val(x)); });
      auto r2 = check_gradients({&x}, [&] { return mean(sqrt_val(x)); });
      worst = std::max({worst, r1.max_error, r2.max_error});
    }
    REQUIRE(worst < 1e-4);
  }

  SECTION("binary ops") {
    double worst = 0.0;
    for (int seed = 0; seed < 22; ++seed) {
      Rng rng(700 + static_cast<std::uint64_t>(seed));
      auto a = random_tensor({2, 3, 5}, rng);
      auto b = random_tensor({2, 3, 5}, rng);
      a.set_requires_grad(true);
      b.set_requires_grad(true);
      for (auto loss : {+[](Tensor<double>& x, Tensor<double>& y) { return mean(square(add(x, y))); },
                        +[](Tensor<double>& x, Tensor<double>& y) { return mean(square(sub(x, y))); },
                        +[](Tensor<double>& x, Tensor<double>& y) { return mean(square(mul(x, y))); },
                        +[](Tensor<double>& x, Tensor<double>& y) {
                          return mean(abs_val(concat_channels(x, y)));
                        }}) {
        auto res = check_gradients({&a, &b}, [&] { return loss(a, b); });
        worst = std::max(worst, res.max_error);
      }
    }
    REQUIRE(worst < 1e-4);
  }

  SECTION("conv1d and conv_transpose1d") {
    double worst = 0.0;
    for (int seed = 0; seed < 22; ++seed) {
      Rng rng(800 + static_cast<std::uint64_t>(seed));
      const std::int64_t stride = 1 + rng.uniform_int(3);
      const std::int64_t K = 2 + rng.uniform_int(3);
      auto x = random_tensor({1, 2, 9}, rng);
      auto w = random_tensor({2, 2, K}, rng);
      auto b = random_tensor({2}, rng);
      x.set_requires_grad(true);
      w.set_requires_grad(true);
      b.set_requires_grad(true);
      auto res = check_gradients(
          {&x, &w, &b}, [&] { return mean(square(conv1d(x, w, b, stride, 1, 1, 1))); });
      worst = std::max(worst, res.max_error);

      const std::int64_t tk = stride + rng.uniform_int(3);
      auto wt = random_tensor({2, 2, tk}, rng);
      wt.set_requires_grad(true);
      auto rest = check_gradients({&x, &wt, &b}, [&] {
        return mean(square(conv_transpose1d(x, wt, b, stride, tk >= 2 ? 1 : 0)));
      });
      worst = std::max(worst, rest.max_error);

      // grouped + dilated conv path
      auto xg = random_tensor({1, 4, 11}, rng);
      auto wg = random_tensor({4, 2, 2}, rng);
      xg.set_requires_grad(true);
      wg.set_requires_grad(true);
      auto resg = check_gradients(
          {&xg, &wg}, [&] { return mean(square(conv1d(xg, wg, Tensor<double>(), 1, 2, 2, 2))); });
      worst = std::max(worst, resg.max_error);
    }
    REQUIRE(worst < 1e-4);
  }
}

TEST_CASE("weight normalization") {
  Rng rng(42);

  SECTION("effective weight equals original right after reparameterization") {
    auto w = random_tensor({4, 3, 5}, rng);
    auto orig = w.vec();
    auto p = Parameter<double>::plain("conv.weight", w);
    weight_norm_reparam(p, 0);
    auto eff = p.effective_values();
    for (size_t i = 0; i < orig.size(); ++i)
      REQUIRE(eff[i] == Catch::Approx(orig[i]).margin(1e-6));
  }

  SECTION("scaling the direction leaves the effective weight unchanged") {
    auto w = random_tensor({3, 2, 4}, rng);
    auto p = Parameter<double>::plain("w", w);
    weight_norm_reparam(p, 0);
    auto before = p.effective_values();
    for (auto& v : p.direction.vec()) v *= 2.0;
    auto after = p.effective_values();
    for (size_t i = 0; i < before.size(); ++i)
      REQUIRE(after[i] == Catch::Approx(before[i]).margin(1e-12));
  }

  SECTION("gradients flow to both direction and magnitude") {
    double worst = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
      Rng r2(300 + static_cast<std::uint64_t>(seed));
      const std::int64_t axis = seed % 2;  // conv layout and transposed layout
      auto v = random_tensor({3, 2, 4}, r2);
      auto g = random_tensor({axis == 0 ? 3 : 2}, r2);
      for (auto& x : g.vec()) x += 2.5;  // keep magnitudes away from zero
      v.set_requires_grad(true);
      g.set_requires_grad(true);
      auto res = check_gradients(
          {&v, &g}, [&] { return mean(square(weight_norm_apply(v, g, axis))); });
      worst = std::max(worst, res.max_error);
      REQUIRE(v.has_grad());
      REQUIRE(g.has_grad());
    }
    REQUIRE(worst < 1e-4);
  }
}

TEST_CASE("adam") {
  SECTION("first step moves a scalar parameter by -lr within 1e-9") {
    auto p = Parameter<double>::plain("w", Tensor<double>::scalar(0.0));
    auto trainables = collect_trainables<double>({&p});
    p.value.raw()->ensure_grad();
    p.value.raw()->grad[0] = 1.0;
    AdamState<double> state;
    adam_step(trainables, state);
    REQUIRE(std::abs(p.value.item() - (-state.lr)) < 1e-9);
    REQUIRE(state.step == 1);
  }

  SECTION("zero grad leaves the parameter unchanged") {
    auto p = Parameter<double>::plain("w", Tensor<double>::scalar(1.25));
    auto trainables = collect_trainables<double>({&p});
    p.value.raw()->ensure_grad();
    AdamState<double> state;
    adam_step(trainables, state);
    REQUIRE(p.value.item() == 1.25);
  }

  SECTION("hyperparameters stored verbatim") {
    AdamState<double> state;
    REQUIRE(state.lr == 1e-4);
    REQUIRE(state.beta1 == 0.5);
    REQUIRE(state.beta2 == 0.9);
    REQUIRE(state.epsilon == 1e-8);
  }

  SECTION("missing grad raises a contract error naming the parameter") {
    auto p = Parameter<double>::plain("gen.block0.bias", Tensor<double>::scalar(0.0));
    auto trainables = collect_trainables<double>({&p});
    AdamState<double> state;
    REQUIRE_THROWS_MATCHES(adam_step(trainables, state), ContractError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("gen.block0.bias")));
  }
}

TEST_CASE("checkpoint round-trip is lossless for f32 payloads") {
  Rng rng(77);
  auto a = Tensor<float>::zeros({3, 2});
  auto b = Tensor<float>::zeros({5});
  for (auto& v : a.vec()) v = static_cast<float>(rng.normal());
  for (auto& v : b.vec()) v = static_cast<float>(rng.normal());
  std::vector<NamedTensor<float>> named = {{"gen.conv.v", &a}, {"gen.conv.bias", &b}};

  const auto path = std::filesystem::temp_directory_path() / "vocgan_ckpt_test.vocg";
  save_checkpoint(path.string(), named);

  auto a2 = Tensor<float>::zeros({3, 2});
  auto b2 = Tensor<float>::zeros({5});
  std::vector<NamedTensor<float>> named2 = {{"gen.conv.v", &a2}, {"gen.conv.bias", &b2}};
  load_checkpoint(path.string(), named2);
  REQUIRE(a2.vec() == a.vec());
  REQUIRE(b2.vec() == b.vec());

  SECTION("missing and unknown parameters are rejected") {
    std::vector<NamedTensor<float>> wrong = {{"gen.conv.v", &a2}};
    REQUIRE_THROWS_AS(load_checkpoint(path.string(), wrong), DataError);
    auto c = Tensor<float>::zeros({1});
    std::vector<NamedTensor<float>> extra = {{"gen.conv.v", &a2}, {"gen.conv.bias", &b2},
                                             {"other", &c}};
    REQUIRE_THROWS_AS(load_checkpoint(path.string(), extra), DataError);
  }

  SECTION("version mismatch reports both versions") {
    auto bad = std::filesystem::temp_directory_path() / "vocgan_ckpt_bad.vocg";
    std::ofstream os(bad, std::ios::binary);
    os.write("VOCG", 4);
    const unsigned char ver[4] = {9, 0, 0, 0};
    const unsigned char cnt[4] = {0, 0, 0, 0};
    os.write(reinterpret_cast<const char*>(ver), 4);
    os.write(reinterpret_cast<const char*>(cnt), 4);
    os.close();
    REQUIRE_THROWS_MATCHES(read_checkpoint_entries(bad.string()), DataError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("9") &&
                               Catch::Matchers::ContainsSubstring("1")));
    std::filesystem::remove(bad);
  }

  std::filesystem::remove(path);
}

TEST_CASE("kernels are bitwise independent of the thread count") {
  Rng rng(99);
  auto x = random_tensor({2, 8, 200}, rng);
  auto w = random_tensor({8, 2, 41}, rng);
  auto b = random_tensor({8}, rng);

  set_threads(1);
  auto y1 = conv1d(x, w, b, 4, 20, 1, 4);
  set_threads(4);
  auto y2 = conv1d(x, w, b, 4, 20, 1, 4);
  set_threads(1);
  REQUIRE(y1.vec() == y2.vec());
}
