#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iogears/engine.hpp"
#include "iogears/scenario.hpp"

namespace iogears {

inline constexpr std::array<double, 8> kIopsPercentiles = {50, 80, 85, 90, 95, 99, 99.9, 100};
inline constexpr std::array<double, 4> kLatencyPercentiles = {50, 90, 99, 99.9};

/// Headline numbers of one volume in one run.
struct VolumeMetrics {
  std::string volume_id;
  PolicyKind kind = PolicyKind::unlimited;
  std::vector<double> arrival_percentiles;  // over kIopsPercentiles
  std::vector<double> granted_percentiles;  // over kIopsPercentiles
  std::vector<double> latency_percentiles;  // seconds, over kLatencyPercentiles; NaN if none
  double mean_latency = 0.0;
  double served_ratio = 1.0;  // granted / arrivals
  double satisfied_fraction = 1.0;  // seconds whose arrivals were all granted that second
  double average_billed_iops = 0.0;
  double capacity_bill = 0.0;
  double qos_bill = 0.0;
  double total_bill = 0.0;
  std::vector<double> hourly_capacity_bills;
  std::vector<double> hourly_qos_bills;
  std::vector<MeterLedger> hourly_gears;  // empty ledgers when nothing is billed
  std::optional<GearTable> billing_gears;
};

struct PolicyRun {
  std::string name;
  SimulationResult result;
  std::vector<VolumeMetrics> volumes;
  double mean_utilization = 0.0;
  double served_ratio = 1.0;  // over all volumes
  double total_bill = 0.0;
};

struct ReportBundle {
  Scenario scenario;
  std::string scenario_hash;
  std::size_t horizon = 0;
  std::vector<std::string> volume_ids;
  std::vector<ArrivalSeries> arrivals;
  std::vector<PolicyRun> runs;
  std::optional<MultiplexReport> multiplex;
};

/// Nearest-rank percentiles of one sample, sorted once.
std::vector<double> percentiles_of(std::vector<double> sample, std::span<const double> ps);

VolumeMetrics volume_metrics(const SimulationResult& result, std::size_t volume,
                             const PriceBook& book);
PolicyRun summarize_run(std::string name, SimulationResult result, const PriceBook& book);

/// One run with every volume's configured policy.
ReportBundle replay(const Scenario& scenario);

/// One run per named variant over the same arrivals. "unlimited" is always
/// available; other names must be declared as variants. An empty list runs
/// every declared variant. Runs execute concurrently.
ReportBundle compare_policies(const Scenario& scenario, std::span<const std::string> policies);

/// Trace statistics and the multiplex table; no simulation.
ReportBundle analyze(const Scenario& scenario);

/// Writes the selected CSV reports and summary.json into `dir` (created if
/// needed). Output is a pure function of the bundle.
void emit_reports(const ReportBundle& bundle, const std::filesystem::path& dir);

/// Shortest round-trip decimal; integers print without a fraction, NaN as "".
std::string format_number(double value);

}  // namespace iogears
