#include "iogears/device.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iogears {

void DeviceProfile::validate() const {
  if (!(max_read_iops > 0 && max_write_iops > 0 && max_read_bw > 0 && max_write_bw > 0)) {
    throw std::invalid_argument("device maxima must all be positive");
  }
}

double storage_util(const DeviceCounters& c, const DeviceProfile& p) {
  const double iops_util = c.riops / p.max_read_iops + c.wiops / p.max_write_iops;
  const double bw_util = c.rbw / p.max_read_bw + c.wbw / p.max_write_bw;
  return std::max(iops_util, bw_util);
}

double effective_iops_capacity(const DeviceProfile& p, double read_demand, double write_demand) {
  const double total = read_demand + write_demand;
  if (!(total > 0)) return p.max_read_iops;
  const double fr = read_demand / total;
  const double fw = write_demand / total;
  return 1.0 / (fr / p.max_read_iops + fw / p.max_write_iops);
}

std::vector<double> device_allocate(std::span<const double> demands, std::span<const double> caps,
                                    double capacity) {
  if (demands.size() != caps.size()) {
    throw std::invalid_argument("demands and caps must cover the same volumes");
  }
  std::vector<double> grants(demands.size());
  double wanted = 0.0;
  for (std::size_t i = 0; i < demands.size(); ++i) {
    grants[i] = std::max(0.0, std::min(demands[i], caps[i]));
    wanted += grants[i];
  }
  if (wanted > capacity && wanted > 0) {
    const double scale = std::max(0.0, capacity) / wanted;
    for (auto& g : grants) g *= scale;
  }
  return grants;
}

}  // namespace iogears
