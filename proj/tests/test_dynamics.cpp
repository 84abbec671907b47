#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "tobs/dynamics.hpp"
#include "tobs/rng.hpp"

using namespace tobs;

namespace {

SystemModel scalar_map(double a) {
  return make_linear_system(Matrix::Constant(1, 1, a), Matrix::Identity(1, 1));
}

}  // namespace

TEST(Propagate, IdentityKeepsState) {
  const auto model = make_linear_system(Matrix::Identity(3, 3), Matrix::Identity(3, 3));
  const Vector v = Vector::LinSpaced(3, -1.0, 2.0);
  const auto t = propagate(model, v, 3);
  ASSERT_EQ(t.states.size(), 4u);
  for (const auto& s : t.states) EXPECT_EQ(s, v);
}

TEST(Propagate, Doubling) {
  const auto t = propagate(scalar_map(2.0), Vector::Ones(1), 3);
  ASSERT_EQ(t.horizon(), 3);
  EXPECT_EQ(t[0][0], 1.0);
  EXPECT_EQ(t[1][0], 2.0);
  EXPECT_EQ(t[2][0], 4.0);
  EXPECT_EQ(t[3][0], 8.0);
}

TEST(Propagate, RejectsBadInput) {
  const auto model = scalar_map(2.0);
  EXPECT_THROW(propagate(model, Vector::Ones(2), 3), InvalidInput);
  EXPECT_THROW(propagate(model, Vector::Ones(1), 0), InvalidInput);
}

TEST(Propagate, ReportsBlowUpStep) {
  SystemModel model{1, 1, [](const Vector& x) { return Vector(x.array() * 1e200); },
                    [](const Vector& x) { return x; }};
  try {
    propagate(model, Vector::Ones(1), 5);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.step(), 2);  // 1e200 is still finite, 1e400 is not
  }
}

TEST(Propagate, RecurrenceHoldsExactly) {
  Rng rng(11);
  Matrix A(4, 4);
  for (int i = 0; i < 16; ++i) A.data()[i] = rng.normal() * 0.5;
  const auto model = make_linear_system(A, Matrix::Identity(2, 4));
  Vector x0(4);
  for (int i = 0; i < 4; ++i) x0[i] = rng.normal();
  const auto t = propagate(model, x0, 20);
  EXPECT_EQ(t[0], x0);
  EXPECT_TRUE(satisfies_recurrence(model, t));
  auto broken = t;
  broken.states[7][1] += 1e-12;
  EXPECT_FALSE(satisfies_recurrence(model, broken));
}

TEST(Observe, NoiseFreeIsExact) {
  Matrix H(2, 3);
  H << 1, 2, 3, -1, 0, 4;
  const auto model = make_linear_system(Matrix::Identity(3, 3) * 0.9, H);
  const auto t = propagate(model, Vector::Ones(3), 4);
  const auto ys = observe_trajectory(model, t, 0.0, 1);
  ASSERT_EQ(ys.outputs.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(ys[k], H * t[k]);
}

TEST(Observe, SameSeedSameNoise) {
  const auto model = make_linear_system(Matrix::Identity(4, 4), Matrix::Identity(4, 4));
  const auto t = propagate(model, Vector::Zero(4), 9);
  const auto a = observe_trajectory(model, t, 0.028, 77);
  const auto b = observe_trajectory(model, t, 0.028, 77);
  const auto c = observe_trajectory(model, t, 0.028, 78);
  for (std::size_t k = 0; k < a.outputs.size(); ++k) EXPECT_EQ(a[k], b[k]);
  EXPECT_NE(a[0], c[0]);
  ASSERT_TRUE(a.noise.has_value());
  EXPECT_EQ(a.noise->seed, 77u);
  EXPECT_EQ(a.noise->sd, 0.028);
}

TEST(Observe, RejectsNegativeNoise) {
  const auto model = scalar_map(1.0);
  const auto t = propagate(model, Vector::Ones(1), 2);
  EXPECT_THROW(observe_trajectory(model, t, -0.1, 1), InvalidInput);
}

TEST(Observe, NoiseNormConcentrates) {
  // m(K+1) = 40 and 80 draws at sd 0.028, averaged over 1000 seeds.
  for (const auto& [K, lo, hi] : {std::tuple{9, 0.17, 0.185}, std::tuple{19, 0.245, 0.256}}) {
    const auto model = make_linear_system(Matrix::Identity(4, 4), Matrix::Identity(4, 4));
    const auto t = propagate(model, Vector::Zero(4), K);
    double sum = 0.0;
    for (std::uint64_t s = 0; s < 1000; ++s) {
      const auto ys = observe_trajectory(model, t, 0.028, s);
      double sq = 0.0;
      for (const auto& y : ys.outputs) sq += y.squaredNorm();
      sum += std::sqrt(sq);
    }
    const double mean = sum / 1000.0;
    EXPECT_GE(mean, lo) << "K=" << K;
    EXPECT_LE(mean, hi) << "K=" << K;
  }
}

TEST(Csv, TrajectoryRoundTrip) {
  Rng rng(3);
  Trajectory t;
  for (int k = 0; k < 4; ++k) {
    Vector v(3);
    for (int i = 0; i < 3; ++i) v[i] = rng.normal() * 1e-3;
    t.states.push_back(v);
  }
  std::stringstream ss;
  write_csv(ss, t);
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "k,x_1,x_2,x_3");
  const auto back = read_trajectory_csv(ss);
  ASSERT_EQ(back.states.size(), t.states.size());
  for (std::size_t k = 0; k < t.states.size(); ++k) EXPECT_EQ(back[k], t[k]);
}

TEST(Csv, OutputsHeader) {
  OutputSequence s;
  s.outputs = {Vector::Ones(2), Vector::Zero(2)};
  std::stringstream ss;
  write_csv(ss, s);
  EXPECT_EQ(ss.str().substr(0, 8), "k,y_1,y_");
  const auto back = read_outputs_csv(ss);
  EXPECT_EQ(back.dim(), 2);
  EXPECT_EQ(back[0], Vector::Ones(2));
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a(5, 1), b(5, 1), c(5, 2);
  const auto x = a.next_u64();
  EXPECT_EQ(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
  Rng r(9);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < 200000; ++i) {
    const double v = r.normal();
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / 200000, 0.0, 0.01);
  EXPECT_NEAR(s2 / 200000, 1.0, 0.01);
  for (int i = 0; i < 1000; ++i) {
    const long v = r.uniform_int(1, 91);
    ASSERT_GE(v, 1);
    ASSERT_LE(v, 91);
  }
}
