#include "catch_amalgamated.hpp"

#include "dmf/objectives/losses.hpp"
#include "support/gradcheck.hpp"

using namespace dmf;
using namespace dmf::objectives;
using dmf::testing::numeric_gradient;
using dmf::testing::random_tensor;
using dmf::testing::relative_error;
using dmf::testing::TensorD;

namespace {
constexpr double kLossTol = 1e-6;

double loop_mse(const TensorD& a, const TensorD& b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.dim(0); ++t)
    for (std::size_t f = 0; f < a.dim(1); ++f) s += (a.at(t, f) - b.at(t, f)) * (a.at(t, f) - b.at(t, f));
  return s / static_cast<double>(a.size());
}

TensorD plus(const TensorD& a, double c) {
  TensorD r = a;
  for (auto& v : r.vec()) v += c;
  return r;
}

/// target + k * (est - target)
TensorD scaled_error(const TensorD& est, const TensorD& tgt, double k) {
  TensorD r = tgt;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += k * (est[i] - tgt[i]);
  return r;
}
}  // namespace

TEST_CASE("magnitude losses", "[objectives]") {
  std::mt19937_64 g(1);
  const auto tgt = random_tensor({2, 3}, g, 0.0, 1.0);
  const auto est = random_tensor({2, 3}, g, 0.0, 1.0);
  CHECK(loss_dn(tgt, tgt).value == 0.0);
  CHECK(loss_dr(tgt, tgt).value == 0.0);
  CHECK(loss_dn(plus(tgt, 1.0), tgt).value == Catch::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(loss_dn(est, tgt).value - loop_mse(est, tgt)) <= 1e-9);
  CHECK(std::abs(loss_dr(est, tgt).value - loop_mse(est, tgt)) <= 1e-9);
  CHECK(loss_dn(est, tgt).value >= 0.0);
  CHECK_THROWS_AS(loss_dn(TensorD({2, 3}), TensorD({3, 2})), ShapeError);
  CHECK_THROWS_AS(loss_dr(TensorD({2, 3}), TensorD({2, 4})), ShapeError);
}

TEST_CASE("refinement loss", "[objectives]") {
  std::mt19937_64 g(2);
  const auto tr = random_tensor({3, 4}, g), ti = random_tensor({3, 4}, g);
  CHECK(loss_sr(tr, ti, tr, ti, 0.5).value == 0.0);

  SECTION("conjugate of a purely imaginary target") {
    const TensorD zero({3, 4}, 0.0);
    TensorD neg = ti;
    for (auto& v : neg.vec()) v = -v;
    double mean_sq = 0.0;
    for (auto v : ti.vec()) mean_sq += v * v;
    mean_sq /= static_cast<double>(ti.size());
    const double ri = 4.0 * mean_sq * 0.5;
    for (double mu : {0.5, 0.2, 1.0}) {
      const auto r = loss_sr(zero, neg, zero, ti, mu);
      CHECK(r.value == Catch::Approx(mu * ri).epsilon(1e-12));
    }
  }

  SECTION("matches a scalar oracle") {
    const auto er = random_tensor({3, 4}, g), ei = random_tensor({3, 4}, g);
    double ri = 0.0, mag = 0.0;
    for (std::size_t i = 0; i < er.size(); ++i) {
      ri += (er[i] - tr[i]) * (er[i] - tr[i]) + (ei[i] - ti[i]) * (ei[i] - ti[i]);
      const double dm = std::hypot(er[i], ei[i]) - std::hypot(tr[i], ti[i]);
      mag += dm * dm;
    }
    const double n = static_cast<double>(er.size());
    const double want = 0.5 * ri / (2.0 * n) + 0.5 * mag / n;
    CHECK(std::abs(loss_sr(er, ei, tr, ti, 0.5).value - want) <= 1e-12);
  }

  SECTION("complex spectrogram overload agrees") {
    const auto er = random_tensor({3, 4}, g), ei = random_tensor({3, 4}, g);
    const auto est = frontend::ComplexSpectrogram::from_ri(er, ei);
    const auto tgt = frontend::ComplexSpectrogram::from_ri(tr, ti);
    CHECK(loss_sr(est, tgt, 0.5) == loss_sr(er, ei, tr, ti, 0.5).value);
  }

  CHECK_THROWS_AS(loss_sr(tr, ti, tr, ti, 1.5), DomainError);
  CHECK_THROWS_AS(loss_sr(tr, ti, TensorD({4, 3}), TensorD({4, 3}), 0.5), ShapeError);
}

TEST_CASE("joint mid/high loss", "[objectives]") {
  std::mt19937_64 g(3);
  const auto tm = random_tensor({3, 4}, g), th = random_tensor({3, 5}, g);
  const auto em = random_tensor({3, 4}, g), eh = random_tensor({3, 5}, g);
  CHECK(loss_full(tm, tm, th, th, 0.5).value == 0.0);
  CHECK(loss_full(em, tm, eh, th, 1.0).value == mse(em, tm));
  CHECK(loss_full(em, tm, eh, th, 0.0).value == mse(eh, th));
  const auto r = loss_full(em, tm, eh, th, 0.5);
  CHECK(r.value == Catch::Approx(0.5 * mse(em, tm) + 0.5 * mse(eh, th)).epsilon(1e-15));
  CHECK(r.mid == mse(em, tm));
  CHECK(r.high == mse(eh, th));
  CHECK_THROWS_AS(loss_full(em, tm, eh, th, -0.1), DomainError);
}

TEST_CASE("quadratic losses quadruple when the error doubles", "[objectives]") {
  std::mt19937_64 g(4);
  const auto t = random_tensor({3, 4}, g), t2 = random_tensor({3, 4}, g);
  const auto e = random_tensor({3, 4}, g), e2 = random_tensor({3, 4}, g);
  auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
  CHECK(rel(loss_dn(scaled_error(e, t, 2.0), t).value, 4.0 * loss_dn(e, t).value) <= 1e-9);
  CHECK(rel(loss_dr(scaled_error(e, t, 2.0), t).value, 4.0 * loss_dr(e, t).value) <= 1e-9);
  CHECK(rel(loss_full(scaled_error(e, t, 2.0), t, scaled_error(e2, t2, 2.0), t2, 0.5).value,
            4.0 * loss_full(e, t, e2, t2, 0.5).value) <= 1e-9);
  // the RI term is quadratic; the magnitude term is not
  CHECK(rel(loss_sr(scaled_error(e, t, 2.0), scaled_error(e2, t2, 2.0), t, t2, 1.0).value,
            4.0 * loss_sr(e, e2, t, t2, 1.0).value) <= 1e-9);
}

TEST_CASE("loss gradients match central differences", "[objectives][grad]") {
  std::mt19937_64 g(5);
  auto tgt = random_tensor({3, 4}, g), est = random_tensor({3, 4}, g);

  SECTION("dn / dr") {
    const auto r = loss_dn(est, tgt);
    const auto num = numeric_gradient([&] { return loss_dn(est, tgt).value; }, est.vec());
    CHECK(relative_error(r.d_est.vec(), num) <= kLossTol);
    const auto r2 = loss_dr(est, tgt);
    const auto num2 = numeric_gradient([&] { return loss_dr(est, tgt).value; }, est.vec());
    CHECK(relative_error(r2.d_est.vec(), num2) <= kLossTol);
  }

  SECTION("sr") {
    auto ei = random_tensor({3, 4}, g);
    const auto ti = random_tensor({3, 4}, g);
    for (double mu : {0.0, 0.5, 1.0}) {
      const auto r = loss_sr(est, ei, tgt, ti, mu);
      auto f = [&] { return loss_sr(est, ei, tgt, ti, mu).value; };
      CHECK(relative_error(r.d_re.vec(), numeric_gradient(f, est.vec())) <= kLossTol);
      CHECK(relative_error(r.d_im.vec(), numeric_gradient(f, ei.vec())) <= kLossTol);
    }
  }

  SECTION("full") {
    auto eh = random_tensor({3, 5}, g);
    const auto th = random_tensor({3, 5}, g);
    for (double alpha : {0.25, 0.5}) {
      const auto r = loss_full(est, tgt, eh, th, alpha);
      auto f = [&] { return loss_full(est, tgt, eh, th, alpha).value; };
      CHECK(relative_error(r.d_mid.vec(), numeric_gradient(f, est.vec())) <= kLossTol);
      CHECK(relative_error(r.d_high.vec(), numeric_gradient(f, eh.vec())) <= kLossTol);
    }
  }
}

TEST_CASE("refinement loss gradient is zero-safe at the origin", "[objectives]") {
  const TensorD zero({2, 2}, 0.0);
  TensorD tr({2, 2}, 0.5), ti({2, 2}, -0.25);
  const auto r = loss_sr(zero, zero, tr, ti, 0.5);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::isfinite(r.d_re[i]));
    CHECK(r.d_re[i] == Catch::Approx(0.5 * (0.0 - 0.5) / 4.0));
    CHECK(r.d_im[i] == Catch::Approx(0.5 * (0.0 + 0.25) / 4.0));
  }
}
