// tests/test_tensor.cpp

// Copyright 2026  corrkd authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>

#include <doctest.h>

#include "corrkd/tensor.hpp"
#include "oracles.hpp"

using namespace corrkd;

namespace {

Tensor randn(Shape shape, std::mt19937_64& rng, bool rg = false) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), rg);
}

}  // namespace

TEST_CASE("elementwise add") {
  Tensor a = Tensor::from({2}, {1.0, 2.0});
  Tensor b = Tensor::from({2}, {3.0, 4.0});
  Tensor c = add(a, b);
  CHECK(c.data()[0] == 4.0);
  CHECK(c.data()[1] == 6.0);
}

TEST_CASE("sigmoid at zero") {
  Tensor x = Tensor::scalar(0.0);
  CHECK(sigmoid(x).value() == 0.5);
}

TEST_CASE("sigmoid gradient matches central finite difference at 0") {
  const double h = 1e-6;
  Tensor x = Tensor::from({}, {0.0}, /*requires_grad=*/true);
  Tape tape;
  Tensor xt = tape.watch(x);
  GradientMap g = tape.backward(sigmoid(xt));
  const double analytic = g.at(xt).value();
  auto f = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double numeric = (f(h) - f(-h)) / (2.0 * h);
  CHECK(analytic == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::fabs(analytic - numeric) < 1e-8);
}

TEST_CASE("shape mismatch names both shapes") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({4});
  CHECK_THROWS_WITH_AS(add(a, b),
                       doctest::Contains("(2,3)"), std::invalid_argument);
}

TEST_CASE("broadcast trailing alignment") {
  Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from({2}, {10, 20});
  Tensor c = add(a, b);
  CHECK(c.data()[0] == 11);
  CHECK(c.data()[1] == 22);
  CHECK(c.data()[2] == 13);
  CHECK(c.data()[3] == 24);

  // gradient reduces over the broadcast axis
  Tensor bb = Tensor::from({2}, {10, 20}, true);
  Tape tape;
  Tensor bt = tape.watch(bb);
  GradientMap g = tape.backward(sum_all(add(a, bt)));
  CHECK(g.at(bt).data()[0] == 2.0);
  CHECK(g.at(bt).data()[1] == 2.0);
}

TEST_CASE("backward of sum of squares") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tape tape;
  Tensor xt = tape.watch(x);
  GradientMap g = tape.backward(sum_all(square(xt)));
  CHECK(g.at(xt).data()[0] == 2.0);
  CHECK(g.at(xt).data()[1] == 4.0);
}

TEST_CASE("disconnected leaf gets a zero gradient") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor y = Tensor::from({3}, {1.0, 1.0, 1.0}, true);
  Tape tape;
  Tensor xt = tape.watch(x);
  Tensor yt = tape.watch(y);
  GradientMap g = tape.backward(sum_all(xt));
  CHECK(g.contains(yt));
  for (double v : g.at(yt).data()) CHECK(v == 0.0);
}

TEST_CASE("backward rejects a non-scalar loss") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tape tape;
  Tensor xt = tape.watch(x);
  CHECK_THROWS_AS((void)tape.backward(square(xt)), std::invalid_argument);
}

TEST_CASE("requires_grad=false leaves receive no gradient entry") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, false);
  Tape tape;
  Tensor xt = tape.watch(x);
  GradientMap g = tape.backward(sum_all(square(xt)));
  CHECK_FALSE(g.contains(xt));
  CHECK(g.size() == 0);
}

TEST_CASE("batch_standardize basics") {
  SUBCASE("constant slice maps to zeros") {
    Tensor x = Tensor::from({2, 1, 1, 1}, {5.0, 5.0});
    Tensor s = batch_standardize(x);
    CHECK(s.data()[0] == 0.0);
    CHECK(s.data()[1] == 0.0);
  }
  SUBCASE("two-point slice standardizes to -1, 1") {
    Tensor x = Tensor::from({2, 1, 1, 1}, {1.0, 3.0});
    Tensor s = batch_standardize(x);
    CHECK(s.data()[0] == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(s.data()[1] == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("batch of one is rejected") {
    Tensor x = Tensor::zeros({1, 2, 2, 2});
    CHECK_THROWS_AS(batch_standardize(x), std::invalid_argument);
  }
}

TEST_CASE("batch_standardize: recomputed statistics on a random batch") {
  std::mt19937_64 rng(42);
  const oracles::Dims d{8, 2, 3, 4};
  Tensor x = randn({d.B, d.P, d.T, d.D}, rng);
  Tensor s = batch_standardize(x);
  for (std::size_t p = 0; p < d.P; ++p) {
    for (std::size_t t = 0; t < d.T; ++t) {
      for (std::size_t i = 0; i < d.D; ++i) {
        double m = 0.0, v = 0.0;
        for (std::size_t b = 0; b < d.B; ++b)
          m += s.data()[oracles::at(d, b, p, t, i)];
        m /= static_cast<double>(d.B);
        for (std::size_t b = 0; b < d.B; ++b) {
          const double c = s.data()[oracles::at(d, b, p, t, i)] - m;
          v += c * c;
        }
        v /= static_cast<double>(d.B);
        CHECK(std::fabs(m) < 1e-12);
        CHECK(std::fabs(std::sqrt(v) - 1.0) < 1e-6);
      }
    }
  }
}

TEST_CASE("batched_outer matches the triple-loop oracle") {
  SUBCASE("standardized self-outer has unit diagonal") {
    std::mt19937_64 rng(7);
    Tensor x = batch_standardize(randn({6, 1, 2, 3}, rng));
    Tensor c = batched_outer(x, x);
    // diag entries: (1/B) sum_b s^2 = var = 1 (up to the epsilon guard)
    for (std::size_t pt = 0; pt < 2; ++pt)
      for (std::size_t i = 0; i < 3; ++i)
        CHECK(c.data()[(pt * 3 + i) * 3 + i] == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("hand case B=2 D=2") {
    // a = [[1,-1],[-1,1]], b = [[1,1],[-1,-1]] per (p=1,t=1)
    Tensor a = Tensor::from({2, 1, 1, 2}, {1, -1, -1, 1});
    Tensor b = Tensor::from({2, 1, 1, 2}, {1, 1, -1, -1});
    Tensor c = batched_outer(a, b);
    const oracles::Dims d{2, 1, 1, 2};
    const auto want = oracles::batched_outer(
        {1, -1, -1, 1}, {1, 1, -1, -1}, d);
    REQUIRE(c.numel() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i)
      CHECK(c.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));
    // out[0,0,i,j] = (a0_i b0_j + a1_i b1_j)/2: [[1,1],[-1,-1]]
    CHECK(c.data()[0] == 1.0);
    CHECK(c.data()[1] == 1.0);
    CHECK(c.data()[2] == -1.0);
    CHECK(c.data()[3] == -1.0);
  }
  SUBCASE("shape contract and random equivalence") {
    std::mt19937_64 rng(3);
    const oracles::Dims d{2, 3, 4, 5};
    Tensor a = randn({d.B, d.P, d.T, d.D}, rng);
    Tensor b = randn({d.B, d.P, d.T, d.D}, rng);
    Tensor c = batched_outer(a, b);
    CHECK(c.shape() == Shape{3, 4, 5, 5});
    const auto want = oracles::batched_outer(
        {a.data().begin(), a.data().end()}, {b.data().begin(), b.data().end()},
        d);
    for (std::size_t i = 0; i < want.size(); ++i)
      CHECK(std::fabs(c.data()[i] - want[i]) < 1e-12);
  }
}

TEST_CASE("matmul and transpose backward against finite differences") {
  std::mt19937_64 rng(11);
  Tensor a = randn({3, 4}, rng, true);
  Tensor b = randn({4, 2}, rng, true);

  Tape tape;
  Tensor at = tape.watch(a);
  Tensor bt = tape.watch(b);
  Tensor y = sum_all(square(matmul(at, transpose(transpose(bt)))));
  GradientMap g = tape.backward(y);

  const double h = 1e-6;
  auto f = [&]() { return sum_all(square(matmul(a, b))).value(); };
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double saved = a.mutable_data()[i];
    a.mutable_data()[i] = saved + h;
    const double fp = f();
    a.mutable_data()[i] = saved - h;
    const double fm = f();
    a.mutable_data()[i] = saved;
    CHECK(g.at(at).data()[i] ==
          doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-5));
  }
  for (std::size_t i = 0; i < b.numel(); ++i) {
    const double saved = b.mutable_data()[i];
    b.mutable_data()[i] = saved + h;
    const double fp = f();
    b.mutable_data()[i] = saved - h;
    const double fm = f();
    b.mutable_data()[i] = saved;
    CHECK(g.at(bt).data()[i] ==
          doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("softmax_last rows sum to one and matches exp-normalization") {
  std::mt19937_64 rng(5);
  Tensor x = randn({4, 6}, rng);
  Tensor s = softmax_last(x);
  for (std::size_t r = 0; r < 4; ++r) {
    double total = 0.0;
    for (std::size_t j = 0; j < 6; ++j) total += s.data()[r * 6 + j];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("structure ops: slice, concat, stack round trips") {
  std::mt19937_64 rng(9);
  Tensor x = randn({3, 8}, rng, true);
  Tape tape;
  Tensor xt = tape.watch(x);
  std::vector<Tensor> parts{slice_last(xt, 0, 3), slice_last(xt, 3, 5)};
  Tensor back = concat_last(parts);
  REQUIRE(back.shape() == x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i)
    CHECK(back.data()[i] == x.data()[i]);
  GradientMap g = tape.backward(sum_all(back));
  for (double v : g.at(xt).data()) CHECK(v == 1.0);
}

TEST_CASE("stack_first rejects mismatched shapes") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 4});
  std::vector<Tensor> parts{a, b};
  CHECK_THROWS_AS(stack_first(parts), std::invalid_argument);
}

TEST_CASE("forward and gradients are bit-identical across repeat runs") {
  std::mt19937_64 rng(123);
  Tensor x = randn({4, 5}, rng, true);
  auto run = [&]() {
    Tape tape;
    Tensor xt = tape.watch(x);
    Tensor y = sum_all(mul(sigmoid(xt), log(add_scalar(square(xt), 1.0))));
    GradientMap g = tape.backward(y);
    std::vector<double> out{y.value()};
    auto gd = g.at(xt).data();
    out.insert(out.end(), gd.begin(), gd.end());
    return out;
  };
  const auto r1 = run();
  const auto r2 = run();
  REQUIRE(r1.size() == r2.size());
  for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i] == r2[i]);
}
