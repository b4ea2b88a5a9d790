#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "xenoflow/rational.hpp"
#include "xenoflow/stats.hpp"
#include "xenoflow/worker_pool.hpp"

using namespace xenoflow;

TEST(Summary, Basics) {
  auto s = summarize(std::vector<double>{1, 2, 3});
  EXPECT_EQ(s.median, 2);
  EXPECT_EQ(s.min, 1);
  EXPECT_EQ(s.max, 3);
  auto flat = summarize(std::vector<double>{5, 5, 5});
  EXPECT_EQ(flat.stddev, 0);
  EXPECT_EQ(flat.variation_coefficient, 0);
  EXPECT_EQ(summarize(std::vector<double>{4, 1, 3, 2}).median, 2);  // lower median
  EXPECT_EQ(summarize(std::vector<double>{}).count, 0u);
}

TEST(Summary, MatchesTwoPassOracle) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> dist(107.2, 3.0);
  std::vector<double> xs(2700);
  for (auto& x : xs) x = dist(rng);
  auto s = summarize(xs);
  auto o = oracle::two_pass(xs);
  EXPECT_NEAR(s.mean, o.mean, 1e-9 * std::fabs(o.mean));
  EXPECT_NEAR(s.stddev, o.stddev, 1e-9 * o.stddev);
  EXPECT_NEAR(s.variation_coefficient, o.cv, 1e-9 * o.cv);
  EXPECT_GE(s.median, s.min);
  EXPECT_LE(s.median, s.max);
  auto sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(s.median, sorted[1349]);
}

TEST(RationalArith, ExactOps) {
  Rational a(1, 3);
  Rational b(1, 6);
  EXPECT_EQ(a + b, Rational(1, 2));
  EXPECT_EQ(a - b, Rational(1, 6));
  EXPECT_EQ(a * b, Rational(1, 18));
  EXPECT_EQ(a / b, Rational(2));
  EXPECT_EQ(Rational(7, 2).floor(), 3);
  EXPECT_EQ(Rational(7, 2).ceil(), 4);
  EXPECT_EQ(Rational(-7, 2).floor(), -4);
  EXPECT_EQ(Rational(6, 2).ceil(), 3);
  EXPECT_LT(Rational(1, 3), Rational(1, 2));
  EXPECT_EQ(Rational::from_double(96.7e6), Rational(96'700'000));
  EXPECT_EQ(Rational::from_double(0.125), Rational(1, 8));
}

TEST(RationalArith, ServiceIntervalsDoNotDrift) {
  auto interval = Rational::from_double(96.7e6).reciprocal() * Rational(1'000'000'000);
  Rational t;
  for (int i = 0; i < 96'700; ++i) t = t + interval;
  EXPECT_EQ(t, Rational(1'000'000));  // 96 700 intervals = 1 ms exactly
}

TEST(WorkerPool, RunsAllAndPropagatesErrors) {
  std::vector<int> out(1000, 0);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i) * 2; });
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i) * 2);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("x");
               }),
               std::runtime_error);
  int count = 0;
  parallel_for(0, 4, [&](std::size_t) { ++count; });
  EXPECT_EQ(count, 0);
}
