#include "iogears/metering.hpp"

#include <cmath>
#include <stdexcept>

namespace iogears {

namespace {
constexpr std::size_t kSecondsPerHour = 3600;
}

void PriceBook::validate() const {
  if (per_gb_rate < 0 || per_iops_rate < 0) throw std::invalid_argument("rates must be >= 0");
  if (!(seconds_per_month > 0)) throw std::invalid_argument("seconds_per_month must be > 0");
}

double MeterLedger::total_seconds() const {
  double s = 0.0;
  for (const auto& [level, secs] : seconds_at_level) s += secs;
  return s;
}

double capacity_bill(double vol_size_gb, const PriceBook& book, double period_seconds) {
  return book.per_gb_rate * vol_size_gb * (period_seconds / book.seconds_per_month);
}

double qos_bill(const MeterLedger& ledger, const GearTable& gears, const PriceBook& book) {
  double bill = 0.0;
  for (const auto& [level, secs] : ledger.seconds_at_level) {
    bill += book.per_iops_rate * gears.cap(level) * (secs / book.seconds_per_month);
  }
  return bill;
}

double total_bill(double capacity, double qos) { return capacity + qos; }

std::vector<MeterLedger> hourly_ledgers(std::span<const int> level_per_tick) {
  std::vector<MeterLedger> hours((level_per_tick.size() + kSecondsPerHour - 1) / kSecondsPerHour);
  for (std::size_t t = 0; t < level_per_tick.size(); ++t) {
    if (level_per_tick[t] >= 0) hours[t / kSecondsPerHour].add(level_per_tick[t], 1.0);
  }
  return hours;
}

std::vector<double> hourly_bills(std::span<const int> level_per_tick, const GearTable& gears,
                                 const PriceBook& book) {
  std::vector<double> bills;
  for (const auto& ledger : hourly_ledgers(level_per_tick)) {
    bills.push_back(qos_bill(ledger, gears, book));
  }
  return bills;
}

std::int64_t to_cents(double amount) { return std::llround(amount * 100.0); }

}  // namespace iogears
