#pragma once

#include <span>
#include <vector>

namespace iogears {

/// Offline-calibrated maxima of the shared physical volume.
struct DeviceProfile {
  double max_read_iops = 1e12;
  double max_write_iops = 1e12;
  double max_read_bw = 1e18;   // bytes/s
  double max_write_bw = 1e18;  // bytes/s

  /// Throws std::invalid_argument unless every maximum is positive.
  void validate() const;
  bool operator==(const DeviceProfile&) const = default;
};

/// Consumption measured over the last tick.
struct DeviceCounters {
  double riops = 0.0;
  double wiops = 0.0;
  double rbw = 0.0;
  double wbw = 0.0;

  bool operator==(const DeviceCounters&) const = default;
};

/// max(riops/MaxRIOPS + wiops/MaxWIOPS, rbw/MaxRBW + wbw/MaxWBW).
/// Not clamped: read and write running hot together can exceed 1.
double storage_util(const DeviceCounters& counters, const DeviceProfile& profile);

/// IOPS the device sustains for a read/write mix: the harmonic blend
/// 1 / (fr/MaxRIOPS + fw/MaxWIOPS), which saturates exactly when the additive
/// IOPS utilization reaches 1. An idle mix reports the read maximum.
double effective_iops_capacity(const DeviceProfile& profile, double read_demand,
                               double write_demand);

/// Fluid proportional sharing. Each volume is granted min(demand, cap); when
/// those sum past `capacity` every grant is scaled by the same factor so the
/// total equals capacity.
std::vector<double> device_allocate(std::span<const double> demands,
                                    std::span<const double> caps, double capacity);

}  // namespace iogears
