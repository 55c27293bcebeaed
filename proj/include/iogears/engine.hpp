#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "iogears/device.hpp"
#include "iogears/metering.hpp"
#include "iogears/policy.hpp"
#include "iogears/trace_io.hpp"

namespace iogears {

struct AbandonmentSettings {
  bool enabled = false;
  double threshold_s = 1.0;
  bool operator==(const AbandonmentSettings&) const = default;
};

struct VolumeSpec {
  std::string id;
  double size_gb = 100.0;
  PolicyConfig policy = UnlimitedPolicy{};
  bool operator==(const VolumeSpec&) const = default;
};

struct EngineConfig {
  DeviceProfile device;
  std::vector<VolumeSpec> volumes;
  AbandonmentSettings abandonment;
  /// Shared reservation backing every gstates volume with pool_mode set.
  /// Defaults to the sum of those volumes' G0 caps.
  std::optional<double> pool_total_iops;
  ContentionStrategy contention = ContentionStrategy::efficiency;

  /// Throws std::invalid_argument on duplicate ids or invalid parameters.
  void validate() const;
  bool operator==(const EngineConfig&) const = default;
};

/// One volume's arrivals during one tick.
struct TickArrivals {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  double read_bytes = 0.0;
  double write_bytes = 0.0;

  std::uint64_t total() const { return reads + writes; }
};

TickArrivals arrivals_at(const ArrivalSeries& series, std::size_t tick);

struct VolumeTick {
  double arrivals = 0.0;
  double granted = 0.0;
  double queue_after = 0.0;
  double abandoned = 0.0;
  double cap = 0.0;           // in force during the tick; +inf when unlimited
  double billed_iops = 0.0;   // reserved capability metered for the tick
  double served_reads = 0.0;
  double served_writes = 0.0;
  double served_read_bytes = 0.0;
  double served_write_bytes = 0.0;
  int level = -1;             // gear in force (gstates only)
  int next_level = -1;        // gear after this tick's decision
  double credit_balance = 0.0;  // after the tick (leaky bucket only)
  TuneDecision decision = TuneDecision::none;  // executed decision
  bool promotion_denied = false;  // judged promote, refused by the pool
};

struct TickLog {
  std::int64_t tick = 0;
  std::vector<VolumeTick> volumes;
  DeviceCounters counters;
  double utilization = 0.0;
};

struct VolumeResult {
  std::string id;
  PolicyKind kind = PolicyKind::unlimited;
  /// Schedule latency (seconds) of every request that completed, in
  /// completion order. Abandoned and still-queued requests are absent.
  std::vector<float> latencies;
  MeterLedger ledger;
  std::optional<GearTable> billing_gears;  // absent when nothing is reserved
  double size_gb = 0.0;
  double total_arrivals = 0.0;
  double total_granted = 0.0;
  double total_abandoned = 0.0;
  double final_queue = 0.0;
};

struct SimulationResult {
  std::size_t horizon = 0;
  std::vector<TickLog> ticks;
  std::vector<VolumeResult> volumes;
};

/// Deterministic one-second-tick replay loop over a set of volumes sharing
/// one device. Single owner; advances strictly sequentially.
///
/// Each tick: queue arrivals, cap demand by policy, share the device (and the
/// shared reservation pool) fluidly, drain queues FIFO while assigning
/// per-request latencies, abandon overdue requests if enabled, measure device
/// utilization, then judge and execute gear changes that take effect next tick.
class Engine {
 public:
  explicit Engine(EngineConfig config);

  const TickLog& step(std::span<const TickArrivals> arrivals);

  std::int64_t now() const { return tick_; }
  const EngineConfig& config() const { return config_; }
  double pool_total_iops() const { return pool_total_; }

  /// Current cap of volume `v` (the one the next tick will use).
  double current_cap(std::size_t v) const;
  int current_level(std::size_t v) const;
  double queued(std::size_t v) const;

  SimulationResult finish() &&;

 private:
  struct Segment {
    std::int64_t tick;
    double count;  // requests that arrived in `tick`
    double lo;     // fluid served from the head
    double hi;     // fluid remaining before tail abandonment
    double read_fraction;
    double read_size;
    double write_size;
  };

  struct Runtime {
    std::variant<StaticPolicy, CreditState, GStateState, UnlimitedPolicy> state;
    std::optional<GearTable> gears;
    bool pool_member = false;
    IoType io_type = IoType::total;
    std::deque<Segment> queue;
    VolumeResult result;
  };

  double policy_cap(const Runtime& rt) const;
  void drain(Runtime& rt, double backlog, double arrivals, double granted, double rate,
             VolumeTick& out);
  double abandon_tail(Runtime& rt, double amount);

  EngineConfig config_;
  double pool_total_ = 0.0;
  std::vector<Runtime> volumes_;
  std::vector<TickLog> logs_;
  std::int64_t tick_ = 0;
};

/// Runs every tick of `arrivals` (one series per configured volume, same order).
SimulationResult run(const EngineConfig& config, std::span<const ArrivalSeries> arrivals);

/// Wait of a request with `position` requests ahead of it at a constant rate.
/// Throws std::invalid_argument unless rate > 0.
double fluid_latency(double position, double service_rate);

/// Same, with the rate changing each tick: rates[i] is the service rate of the
/// i-th tick starting now. A zero rate costs a full tick. Returns +inf if the
/// request is not served within the given ticks.
double fluid_latency(double position, std::span<const double> rates_per_tick);

/// Queued fluid whose projected wait exceeds `threshold`: everything beyond
/// `rate * threshold` requests of service. A zero rate abandons the whole queue.
double abandon_overdue(double queue, double service_rate, double threshold);

}  // namespace iogears
