#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ehsim/errors.hpp"
#include "ehsim/model.hpp"

using namespace ehsim;
using model::ArrivalModel;
using model::Battery;
using model::RngStream;
using model::Stream;

TEST_CASE("arrival model validation") {
  CHECK_THROWS_AS((void)ArrivalModel::bernoulli(-0.1, 1.0), ConfigError);
  CHECK_THROWS_AS((void)ArrivalModel::bernoulli(1.1, 1.0), ConfigError);
  CHECK_THROWS_AS((void)ArrivalModel::bernoulli(0.5, 0.0), ConfigError);
  CHECK_THROWS_AS((void)ArrivalModel::uniform(5.0, 5.0), ConfigError);
  CHECK_THROWS_AS((void)ArrivalModel::uniform(-1.0, 5.0), ConfigError);
  CHECK_THROWS_AS((void)ArrivalModel::discrete({1.0}, {0.5}), ConfigError);
  CHECK_THROWS_AS((void)ArrivalModel::discrete({1.0, 2.0}, {0.5}), ConfigError);
  CHECK_THROWS_AS((void)ArrivalModel::discrete({}, {}), ConfigError);
  CHECK_NOTHROW((void)ArrivalModel::discrete({3.0, 1.0}, {0.25, 0.75}));
}

TEST_CASE("second moments match closed forms") {
  CHECK(ArrivalModel::bernoulli(0.5, 10.0).second_moment() == doctest::Approx(50.0));
  CHECK(ArrivalModel::uniform(0.0, 10.0).second_moment() ==
        doctest::Approx(100.0 / 3.0).epsilon(1e-14));
  CHECK(ArrivalModel::uniform(2.0, 4.0).second_moment() ==
        doctest::Approx((4.0 + 8.0 + 16.0) / 3.0).epsilon(1e-14));
  CHECK(ArrivalModel::discrete({2.0}, {1.0}).second_moment() == doctest::Approx(4.0));
  CHECK(ArrivalModel::bernoulli(0.0, 5.0).second_moment() == 0.0);
}

TEST_CASE("upper median convention") {
  // A fair split stores exactly the quantum half the time.
  CHECK(ArrivalModel::bernoulli(0.5, 10.0).median() == 10.0);
  CHECK(ArrivalModel::bernoulli(0.7, 3.0).median() == 3.0);
  CHECK(ArrivalModel::bernoulli(0.3, 3.0).median() == 0.0);
  CHECK(ArrivalModel::uniform(0.0, 10.0).median() == 5.0);
  CHECK(ArrivalModel::discrete({1.0, 2.0, 3.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3})
            .median() == 2.0);
  CHECK(ArrivalModel::discrete({5.0}, {1.0}).median() == 5.0);
  CHECK(ArrivalModel::discrete({0.0, 4.0}, {0.5, 0.5}).median() == 4.0);
}

TEST_CASE("quantized-arrival tie rule keeps storage probability >= 1/2") {
  // Continuous law: strict comparison, P(X > median) = 1/2 already.
  const auto u = ArrivalModel::uniform(0.0, 10.0);
  CHECK_FALSE(u.quantize_inclusive(u.median()));
  // Atom at the median: strict would give 0 < 1/2, so inclusive kicks in.
  const auto b = ArrivalModel::bernoulli(0.5, 10.0);
  CHECK(b.quantize_inclusive(b.median()));
  const auto c = ArrivalModel::discrete({3.0}, {1.0});
  CHECK(c.quantize_inclusive(c.median()));
}

TEST_CASE("rng streams are deterministic and decorrelated") {
  RngStream a1(42, Stream::channel, 0);
  RngStream a2(42, Stream::channel, 0);
  RngStream b(42, Stream::tx_arrivals, 0);
  RngStream c(42, Stream::channel, 1);
  bool same_ab = true, same_ac = true;
  for (int i = 0; i < 1000; ++i) {
    const double x = a1.uniform();
    CHECK(x == a2.uniform());
    same_ab = same_ab && (x == b.uniform());
    same_ac = same_ac && (x == c.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK_FALSE(same_ab);
  CHECK_FALSE(same_ac);
}

TEST_CASE("sampling matches the law: bernoulli") {
  RngStream rng(7, Stream::tx_arrivals, 0);
  const auto sure = ArrivalModel::bernoulli(1.0, 5.0);
  for (int i = 0; i < 1000; ++i) CHECK(sure.sample(rng) == 5.0);
  const auto never = ArrivalModel::bernoulli(0.0, 5.0);
  for (int i = 0; i < 1000; ++i) CHECK(never.sample(rng) == 0.0);

  const auto fair = ArrivalModel::bernoulli(0.5, 10.0);
  const int n = 1000000;
  std::int64_t hits = 0;
  for (int i = 0; i < n; ++i) hits += fair.sample(rng) > 0.0 ? 1 : 0;
  const double sigma = std::sqrt(0.25 / n);
  CHECK(std::fabs(static_cast<double>(hits) / n - 0.5) < 4.0 * sigma);
}

TEST_CASE("sampling matches the law: uniform (KS test, alpha = 0.001)") {
  RngStream rng(11, Stream::tx_arrivals, 0);
  const auto u = ArrivalModel::uniform(0.0, 10.0);
  const int n = 100000;
  std::vector<double> xs(n);
  double s2 = 0.0;
  for (auto& x : xs) {
    x = u.sample(rng);
    CHECK(x >= 0.0);
    CHECK(x < 10.0);
    s2 += x * x;
  }
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = xs[i] / 10.0;
    d = std::max(d, std::fabs((i + 1.0) / n - f));
    d = std::max(d, std::fabs(static_cast<double>(i) / n - f));
  }
  CHECK(d < 1.94947 / std::sqrt(static_cast<double>(n)));
  // Second moment B^2/3 within 4 sigma (Var(X^2) = B^4/5 - B^4/9).
  const double sig = std::sqrt((2000.0 - 10000.0 / 9.0) / n);
  CHECK(std::fabs(s2 / n - 100.0 / 3.0) < 4.0 * sig);
}

TEST_CASE("sampling matches the law: discrete atom frequencies") {
  RngStream rng(13, Stream::tx_arrivals, 0);
  const auto d = ArrivalModel::discrete({1.0, 2.0, 3.0}, {0.25, 0.25, 0.5});
  const int n = 200000;
  int c1 = 0, c2 = 0, c3 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = d.sample(rng);
    if (x == 1.0) ++c1;
    else if (x == 2.0) ++c2;
    else if (x == 3.0) ++c3;
    else FAIL("sample outside the support");
  }
  const auto within = [n](int count, double p) {
    const double sigma = std::sqrt(p * (1.0 - p) / n);
    return std::fabs(static_cast<double>(count) / n - p) < 4.0 * sigma;
  };
  CHECK(within(c1, 0.25));
  CHECK(within(c2, 0.25));
  CHECK(within(c3, 0.5));
}

TEST_CASE("channel gain is unit-mean exponential") {
  RngStream rng(17, Stream::channel, 0);
  model::ChannelModel ch;
  const int n = 1000000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double h = ch.sample(rng);
    CHECK(h >= 0.0);
    s += h;
    s2 += h * h;
  }
  CHECK(std::fabs(s / n - 1.0) < 4.0 / std::sqrt(static_cast<double>(n)));
  // E[h^2] = 2, Var(h^2) = 24 - 4 = 20.
  CHECK(std::fabs(s2 / n - 2.0) <
        4.0 * std::sqrt(20.0 / static_cast<double>(n)));
}

TEST_CASE("battery spend-then-harvest-then-clamp") {
  Battery b(1.0, 1.0);
  b.step(1.0, 1.0);
  CHECK(b.level() == 1.0);

  Battery c(10.0, 10.0);
  c.step(2.5, 0.0);
  CHECK(c.level() == 7.5);
  c.step(0.0, 9.0);  // 7.5 + 9 clamps at capacity
  CHECK(c.level() == 10.0);

  CHECK_THROWS_AS(c.step(10.5, 0.0), NeutralityViolation);
  CHECK_THROWS_AS(c.step(-1.0, 0.0), NeutralityViolation);
  CHECK_THROWS_AS(c.step(0.0, -1.0), NeutralityViolation);
  CHECK_THROWS_AS(Battery(-1.0, 5.0), ConfigError);
  CHECK_THROWS_AS(Battery(6.0, 5.0), ConfigError);
  CHECK_THROWS_AS(Battery(0.0, 0.0), ConfigError);
}

TEST_CASE("battery level stays within [0, capacity] under random traffic") {
  RngStream rng(23, Stream::policy_coin, 0);
  Battery b(0.0, 3.7);
  for (int i = 0; i < 100000; ++i) {
    const double spend = rng.uniform() * b.level();
    const double harvest = rng.uniform() * 2.0;
    b.step(spend, harvest);
    CHECK(b.level() >= 0.0);
    CHECK(b.level() <= 3.7);
  }
}

TEST_CASE("arrival spec strings round-trip") {
  CHECK(ArrivalModel::bernoulli(0.5, 10.0).describe() == "bernoulli:p=0.5,e=10");
  CHECK(ArrivalModel::uniform(0.0, 10.0).describe() == "uniform:0,10");
  CHECK(ArrivalModel::discrete({1.0, 2.0}, {0.5, 0.5}).describe() ==
        "discrete:values=1|2,probs=0.5|0.5");
}
