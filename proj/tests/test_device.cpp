#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "iogears/device.hpp"

using namespace iogears;

TEST(StorageUtil, ZeroCounters) {
  EXPECT_EQ(storage_util({}, DeviceProfile{}), 0.0);
}

TEST(StorageUtil, IopsTerm) {
  const DeviceProfile p{10000, 5000, 1e9, 1e9};
  EXPECT_DOUBLE_EQ(storage_util({500, 1000, 0, 0}, p), 0.25);
}

TEST(StorageUtil, BandwidthTermWins) {
  const DeviceProfile p{1000, 1000, 1000, 1000};
  // iops: 100/1000 + 200/1000 = 0.3; bw: 250/1000 + 350/1000 = 0.6
  EXPECT_DOUBLE_EQ(storage_util({100, 200, 250, 350}, p), 0.6);
}

TEST(StorageUtil, NotClamped) {
  const DeviceProfile p{100, 100, 1e9, 1e9};
  EXPECT_DOUBLE_EQ(storage_util({100, 50, 0, 0}, p), 1.5);
}

TEST(StorageUtil, MonotoneInEachCounter) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1000);
  const DeviceProfile p{800, 400, 2000, 900};
  for (int i = 0; i < 200; ++i) {
    DeviceCounters c{u(rng), u(rng), u(rng), u(rng)};
    const double base = storage_util(c, p);
    for (double DeviceCounters::*f : {&DeviceCounters::riops, &DeviceCounters::wiops,
                                      &DeviceCounters::rbw, &DeviceCounters::wbw}) {
      DeviceCounters d = c;
      d.*f += u(rng);
      EXPECT_GE(storage_util(d, p), base);
    }
  }
}

TEST(DeviceProfile, ValidateRejectsNonPositive) {
  EXPECT_NO_THROW(DeviceProfile{}.validate());
  EXPECT_THROW((DeviceProfile{0, 1, 1, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((DeviceProfile{1, 1, 1, -1}.validate()), std::invalid_argument);
}

TEST(EffectiveCapacity, HarmonicBlend) {
  const DeviceProfile p{10000, 5000, 1e12, 1e12};
  EXPECT_DOUBLE_EQ(effective_iops_capacity(p, 100, 0), 10000);
  EXPECT_DOUBLE_EQ(effective_iops_capacity(p, 0, 100), 5000);
  // half/half: 1 / (0.5/10000 + 0.5/5000)
  EXPECT_NEAR(effective_iops_capacity(p, 50, 50), 1.0 / (0.5 / 10000 + 0.5 / 5000), 1e-9);
  EXPECT_DOUBLE_EQ(effective_iops_capacity(p, 0, 0), 10000);
}

TEST(EffectiveCapacity, SaturatesAtUnitUtil) {
  const DeviceProfile p{7000, 3000, 1e12, 1e12};
  const double cap = effective_iops_capacity(p, 0.3, 0.7);
  EXPECT_NEAR(storage_util({0.3 * cap, 0.7 * cap, 0, 0}, p), 1.0, 1e-12);
}

TEST(DeviceAllocate, NoContention) {
  const std::vector<double> d{500, 500}, c{600, 600};
  EXPECT_EQ(device_allocate(d, c, 10000), (std::vector<double>{500, 500}));
}

TEST(DeviceAllocate, ProportionalScaling) {
  const std::vector<double> d{6000, 6000}, c{6000, 6000};
  EXPECT_EQ(device_allocate(d, c, 6000), (std::vector<double>{3000, 3000}));
}

TEST(DeviceAllocate, ZeroDemand) {
  const std::vector<double> d{0, 900}, c{600, 600};
  const auto g = device_allocate(d, c, 100);
  EXPECT_EQ(g[0], 0);
  EXPECT_DOUBLE_EQ(g[1], 100);
}

TEST(DeviceAllocate, SizeMismatchThrows) {
  const std::vector<double> d{1, 2}, c{1};
  EXPECT_THROW(device_allocate(d, c, 10), std::invalid_argument);
}

TEST(DeviceAllocate, Properties) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0, 5000);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    std::vector<double> d(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = rng() % 5 == 0 ? 0 : u(rng);
      c[i] = u(rng);
    }
    const double capacity = u(rng) * 3;
    const auto g = device_allocate(d, c, capacity);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_LE(g[i], d[i] * (1 + 1e-12));
      EXPECT_LE(g[i], c[i] * (1 + 1e-12));
      EXPECT_GE(g[i], 0);
      sum += g[i];
    }
    EXPECT_LE(sum, capacity * (1 + 1e-9));

    std::vector<double> d2(d), c2(c);
    for (auto& x : d2) x *= 2;
    for (auto& x : c2) x *= 2;
    const auto g2 = device_allocate(d2, c2, 2 * capacity);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(g2[i], 2 * g[i], 1e-9 * (1 + g[i]));
  }
}
