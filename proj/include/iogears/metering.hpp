#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "iogears/policy.hpp"

namespace iogears {

struct PriceBook {
  double per_gb_rate = 0.125;    // currency per GB-month
  double per_iops_rate = 0.065;  // currency per provisioned-IOPS-month
  double seconds_per_month = 2'592'000.0;  // 30-day month

  void validate() const;
  bool operator==(const PriceBook&) const = default;
};

/// Active seconds spent at each gear level.
struct MeterLedger {
  std::map<int, double> seconds_at_level;

  void add(int level, double seconds) { seconds_at_level[level] += seconds; }
  double total_seconds() const;
  bool operator==(const MeterLedger&) const = default;
};

double capacity_bill(double vol_size_gb, const PriceBook& book, double period_seconds);

/// Sum over gears of per_iops_rate * cap(i) * duration_i / seconds_per_month:
/// a gear is billed linearly in the IOPS it reserves, pro rata by time.
double qos_bill(const MeterLedger& ledger, const GearTable& gears, const PriceBook& book);

double total_bill(double capacity, double qos);

/// Splits a per-tick level trace into one ledger per hour (last may be partial).
std::vector<MeterLedger> hourly_ledgers(std::span<const int> level_per_tick);

std::vector<double> hourly_bills(std::span<const int> level_per_tick, const GearTable& gears,
                                 const PriceBook& book);

/// Rounds to whole cents; only for presentation.
std::int64_t to_cents(double amount);

}  // namespace iogears
