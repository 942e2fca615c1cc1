#include <gtest/gtest.h>

#include "dadpfl/cost.hpp"
#include "dadpfl/errors.hpp"

using namespace dadpfl;

TEST(Flops, DenseLayer) {
  const std::vector<LayerShape> s{{10, 5}};
  const std::vector<double> dense{1.0};
  EXPECT_DOUBLE_EQ(forward_flops(s, dense), 100.0);
  EXPECT_DOUBLE_EQ(training_flops(s, dense, 1.0), 300.0);
  EXPECT_DOUBLE_EQ(training_flops(s, std::vector<double>{0.0}, 50.0), 0.0);
}

TEST(Flops, LinearInDensityAndSamples) {
  const std::vector<LayerShape> s{{784, 100}, {100, 10}};
  const std::vector<double> full{1.0, 1.0}, half{0.5, 0.5};
  EXPECT_DOUBLE_EQ(forward_flops(s, half), 0.5 * forward_flops(s, full));
  EXPECT_DOUBLE_EQ(training_flops(s, full, 10.0), 10.0 * training_flops(s, full, 1.0));
  EXPECT_THROW(forward_flops(s, std::vector<double>{1.0}), InvalidParameter);
  EXPECT_THROW(forward_flops(s, std::vector<double>{1.5, 1.0}), InvalidParameter);
}

TEST(Bytes, BitmapAndBiases) {
  const std::vector<LayerShape> s{{10, 10}};
  MaskSet m(s);
  EXPECT_EQ(comm_bytes(m, 4, false), 413u);
  EXPECT_EQ(comm_bytes(m), 413u + 40u);
  for (std::size_t i = 0; i < 100; ++i) m.set(0, i, false);
  EXPECT_EQ(comm_bytes(m), 13u + 40u);
}

TEST(EnergyTime, ReferenceHardware) {
  const CostConstants k;
  const auto e = energy_time(80e12, 1.25e8, k);
  EXPECT_DOUBLE_EQ(e.t_comp, 5.0);
  EXPECT_DOUBLE_EQ(e.c_comp, 2250.0);
  EXPECT_DOUBLE_EQ(e.t_comm, 1.0);
  EXPECT_DOUBLE_EQ(e.c_comm, 1.0);
}

TEST(TotalCost, AffineInTheta) {
  EXPECT_DOUBLE_EQ(total_cost(10.0, 100.0, 0.0), 10.0);
  EXPECT_DOUBLE_EQ(total_cost(10.0, 100.0, 1.0), 100.0);
  EXPECT_DOUBLE_EQ(total_cost(10.0, 100.0, 0.5), 55.0);
  EXPECT_DOUBLE_EQ(total_cost(10.0, 100.0, 0.5, 2.0, 0.5), 35.0);
  const std::vector<double> th{0.0, 0.25, 0.5, 0.75, 1.0};
  const auto c = total_cost_curve(3.0, 11.0, th);
  for (std::size_t i = 1; i + 1 < c.size(); ++i) EXPECT_NEAR(c[i + 1] - c[i], c[i] - c[i - 1], 1e-12);
  EXPECT_THROW(total_cost(1.0, 1.0, 1.5), InvalidParameter);
}

TEST(Ledger, AccumulatesMonotonically) {
  CostLedger led(2);
  const CostConstants k;
  double prev_e = 0.0, prev_t = 0.0;
  for (int r = 0; r < 5; ++r) {
    const std::vector<double> f{1e9 * (r + 1), 2e9}, b{1e6, 3e6 / (r + 1)};
    led.add_round(f, b, 0.5, k);
    EXPECT_GT(led.c_energy, prev_e);
    EXPECT_GT(led.c_time, prev_t);
    prev_e = led.c_energy;
    prev_t = led.c_time;
  }
  EXPECT_EQ(led.busiest_bytes_per_round.size(), 5u);
  EXPECT_DOUBLE_EQ(led.busiest_bytes_per_round[0], 3e6);
  EXPECT_DOUBLE_EQ(led.busiest_bytes_per_round[4], 1e6);
  EXPECT_DOUBLE_EQ(led.client_flops[0], 15e9);
  // One round: makespan + slowest upload.
  CostLedger one(1);
  one.add_round(std::vector<double>{0.0}, std::vector<double>{1.25e8}, 2.0, k);
  EXPECT_DOUBLE_EQ(one.c_time, 3.0);
  EXPECT_DOUBLE_EQ(one.c_energy, 1.0);
}
