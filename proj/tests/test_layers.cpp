#include "catch_amalgamated.hpp"

#include "dmf/nn/layers.hpp"
#include "dmf/nn/multiframe.hpp"
#include "support/gradcheck.hpp"

using namespace dmf;
using namespace dmf::nn;
using dmf::testing::check_module;
using dmf::testing::random_tensor;
using dmf::testing::TensorD;

namespace {
constexpr double kBlockTol = 1e-4;

template <class M>
auto plain_forward(M& m) {
  return [&m](const TensorD& x) { return m.forward(x); };
}

template <class M>
auto plain_analytic(M& m) {
  return [&m](const TensorD& x, const TensorD& w) {
    typename M::Ctx ctx;
    m.forward(x, &ctx);
    return m.backward(ctx, w);
  };
}

template <class M>
void expect_gradients(M& m, TensorD x, std::mt19937_64& rng) {
  const auto r = check_module(m, std::move(x), plain_forward(m), plain_analytic(m), rng);
  INFO("worst at " << r.where);
  CHECK(r.worst <= kBlockTol);
}
}  // namespace

TEST_CASE("strided conv follows the frequency arithmetic table", "[layers]") {
  Rng rng(1);
  Conv2dDown<double> c5(1, 4, 5, rng), c3(4, 4, 3, rng);
  const std::vector<std::size_t> expected{161, 79, 39, 19, 9, 4};
  TensorD x({1, 3, 161});
  auto h = c5.forward(x);
  CHECK(h.dim(2) == expected[1]);
  for (std::size_t b = 2; b < expected.size(); ++b) {
    h = c3.forward(h);
    CHECK(h.dim(2) == expected[b]);
    CHECK(h.dim(1) == 3);
  }
  ConvTranspose2dUp<double> up3(4, 4, 3, rng), up5(4, 1, 5, rng);
  auto g = up3.forward(TensorD({4, 3, 4}));
  CHECK(g.dim(2) == 9);
  g = up3.forward(TensorD({4, 3, 79}));
  CHECK(g.dim(2) == 159);
  CHECK(up5.forward(TensorD({4, 3, 79})).dim(2) == 161);
}

TEST_CASE("strided conv matches a direct loop", "[layers]") {
  Rng rng(2);
  Conv2dDown<double> conv(2, 3, 3, rng);
  std::mt19937_64 g(3);
  const auto x = random_tensor({2, 4, 9}, g);
  const auto y = conv.forward(x);
  std::vector<Param<double>*> ps;
  conv.visit([&](Param<double>& p) { ps.push_back(&p); });
  const auto& w = ps[0]->value;  // [O][I*2*kf], column (i*2+dt)*kf+k, dt=0 reads frame t-1
  const auto& b = ps[1]->value;
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t f = 0; f < 4; ++f) {
        double s = b[o];
        for (std::size_t i = 0; i < 2; ++i)
          for (std::size_t dt = 0; dt < 2; ++dt) {
            if (t + dt < 1) continue;
            const std::size_t src = t + dt - 1;
            for (std::size_t k = 0; k < 3; ++k) s += w.at(o, (i * 2 + dt) * 3 + k) * x.at(i, src, 2 * f + k);
          }
        CHECK(y.at(o, t, f) == Catch::Approx(s).epsilon(1e-12));
      }
}

TEST_CASE("layers are causal in time", "[layers]") {
  Rng rng(4);
  std::mt19937_64 g(5);
  Conv2dDown<double> down(2, 3, 3, rng);
  ConvTranspose2dUp<double> up(2, 3, 3, rng);
  DilatedCausalConv1d<double> dil(3, 3, 5, 2, rng);
  FreqNorm<double> fn(2);
  ChannelNorm<double> cn(3);
  auto x = random_tensor({2, 8, 9}, g);
  auto x2 = x;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t f = 0; f < 9; ++f) x2.at(c, 6, f) += 1.0;
  auto before = [](const TensorD& a, const TensorD& b, std::size_t frames) {
    double m = 0.0;
    for (std::size_t c = 0; c < a.dim(0); ++c)
      for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t f = 0; f < a.dim(2); ++f) m = std::max(m, std::abs(a.at(c, t, f) - b.at(c, t, f)));
    return m;
  };
  CHECK(before(down.forward(x), down.forward(x2), 6) == 0.0);
  CHECK(before(up.forward(x), up.forward(x2), 6) == 0.0);
  CHECK(before(fn.forward(x), fn.forward(x2), 6) == 0.0);
  auto s = random_tensor({3, 40}, g), s2 = s;
  for (std::size_t c = 0; c < 3; ++c) s2.at(c, 30) += 1.0;
  const auto a = dil.forward(s), b = dil.forward(s2);
  const auto na = cn.forward(s), nb = cn.forward(s2);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t t = 0; t < 30; ++t) {
      CHECK(a.at(c, t) == b.at(c, t));
      CHECK(na.at(c, t) == nb.at(c, t));
    }
}

TEST_CASE("layer gradients match central differences", "[layers][grad]") {
  Rng rng(7);
  std::mt19937_64 g(8);
  SECTION("Conv2dDown") {
    Conv2dDown<double> m(4, 4, 3, rng);
    expect_gradients(m, random_tensor({4, 6, 9}, g), g);
  }
  SECTION("Conv2dDown kernel 5") {
    Conv2dDown<double> m(2, 3, 5, rng);
    expect_gradients(m, random_tensor({2, 6, 11}, g), g);
  }
  SECTION("ConvTranspose2dUp") {
    ConvTranspose2dUp<double> m(4, 4, 3, rng);
    expect_gradients(m, random_tensor({4, 6, 4}, g), g);
  }
  SECTION("Conv1x1") {
    Conv1x1<double> m(4, 3, rng);
    expect_gradients(m, random_tensor({4, 6, 9}, g), g);
  }
  SECTION("DilatedCausalConv1d") {
    DilatedCausalConv1d<double> m(4, 4, 5, 2, rng);
    expect_gradients(m, random_tensor({4, 12}, g), g);
  }
  SECTION("FreqNorm") {
    FreqNorm<double> m(4);
    Param<double>* gain = nullptr;
    m.visit([&](Param<double>& p) { if (!gain) gain = &p; });
    for (auto& v : gain->value.vec()) v = 0.5 + std::uniform_real_distribution<double>(0, 1)(g);
    expect_gradients(m, random_tensor({4, 6, 9}, g), g);
  }
  SECTION("ChannelNorm") {
    ChannelNorm<double> m(4);
    expect_gradients(m, random_tensor({4, 6}, g), g);
  }
  SECTION("PReLU") {
    PReLU<double> m(4);
    expect_gradients(m, random_tensor({4, 6, 9}, g), g);
  }
}

TEST_CASE("sigmoid stays strictly inside the unit interval", "[layers]") {
  Tensor<float> z({4}, 0.0f);
  z[0] = -200.0f;
  z[1] = 200.0f;
  z[2] = 0.0f;
  z[3] = 30.0f;
  const auto s = sigmoid(z);
  for (auto v : s.vec()) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
  CHECK(s[2] == 0.5f);
}

namespace {
TensorD brute_force_filter(const TensorD& mask, const TensorD& mag, TapOffsets rule) {
  TensorD out({mag.dim(0), mag.dim(1)});
  for (std::size_t l = 0; l < mag.dim(0); ++l)
    for (std::size_t f = 0; f < mag.dim(1); ++f) {
      double s = 0.0;
      for (std::size_t tau = 0; tau < mask.dim(0); ++tau) {
        const long src = static_cast<long>(l) - static_cast<long>(tap_offset(rule, tau));
        if (src >= 0) s += mask.at(tau, l, f) * mag.at(static_cast<std::size_t>(src), f);
      }
      out.at(l, f) = s;
    }
  return out;
}
}  // namespace

TEST_CASE("multi-frame filter agrees with a brute-force loop", "[multiframe]") {
  std::mt19937_64 g(11);
  for (auto rule : {TapOffsets::current_and_past, TapOffsets::past_only})
    for (std::size_t k : {1, 3, 5}) {
      const auto mask = random_tensor({k, 17, 13}, g);
      const auto mag = random_tensor({17, 13}, g, 0.0, 2.0);
      const auto got = apply_multiframe_filter(mask, mag, rule);
      const auto want = brute_force_filter(mask, mag, rule);
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-12);
    }
}

TEST_CASE("single-tap unit mask is the identity", "[multiframe]") {
  std::mt19937_64 g(12);
  const auto mag = random_tensor({9, 7}, g, 0.0, 3.0);
  const TensorD ones({1, 9, 7}, 1.0);
  const auto out = apply_multiframe_filter(ones, mag);
  CHECK(out.vec() == mag.vec());
}

TEST_CASE("multi-frame filter rejects mismatched shapes", "[multiframe]") {
  CHECK_THROWS_AS(apply_multiframe_filter(TensorD({3, 5, 4}), TensorD({5, 5})), ShapeError);
  CHECK_THROWS_AS(apply_multiframe_filter(TensorD({0, 5, 4}), TensorD({5, 4})), ShapeError);
}

TEST_CASE("multi-frame filter gradient", "[multiframe][grad]") {
  std::mt19937_64 g(13);
  auto mask = random_tensor({3, 6, 5}, g);
  auto mag = random_tensor({6, 5}, g, 0.0, 2.0);
  const auto w = random_tensor({6, 5}, g);
  auto f = [&] {
    const auto y = apply_multiframe_filter(mask, mag);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
    return s;
  };
  const auto grad = multiframe_filter_backward(mask, mag, w);
  CHECK(dmf::testing::relative_error(grad.d_mask.vec(), dmf::testing::numeric_gradient(f, mask.vec())) <= 1e-8);
  CHECK(dmf::testing::relative_error(grad.d_mag.vec(), dmf::testing::numeric_gradient(f, mag.vec())) <= 1e-8);
}
