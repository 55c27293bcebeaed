#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "iogears/engine.hpp"
#include "iogears/metering.hpp"
#include "iogears/policy.hpp"
#include "iogears/trace_io.hpp"

namespace iogears {

/// Validation failure with the JSON path of the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field_path, const std::string& message)
      : std::runtime_error(field_path.empty() ? message : field_path + ": " + message),
        field_path_(field_path) {}
  const std::string& field_path() const { return field_path_; }

 private:
  std::string field_path_;
};

struct TraceSource {
  std::string path;  // absolute after loading
  std::optional<std::string> source_volume;  // filter on the file's volume_id column
  bool operator==(const TraceSource&) const = default;
};

struct SyntheticSource {
  std::vector<SyntheticPhaseSpec> phases;
  std::optional<std::uint64_t> seed;
  bool operator==(const SyntheticSource&) const = default;
};

using WorkloadSource = std::variant<TraceSource, SyntheticSource>;

struct ScenarioVolume {
  std::string id;
  double size_gb = 100.0;
  PolicyConfig policy = UnlimitedPolicy{};
  /// Named policy variants for `compare`, fully resolved.
  std::map<std::string, PolicyConfig> variants;
  WorkloadSource source;
  bool operator==(const ScenarioVolume&) const = default;
};

inline const std::vector<std::string> kDefaultReports = {
    "iops_distribution", "latency_percentiles", "gear_durations", "bills", "utilization"};
inline const std::vector<std::string> kKnownReports = {
    "iops_distribution", "latency_percentiles", "gear_durations",
    "bills",             "utilization",         "multiplex"};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  std::optional<std::size_t> horizon;
  DeviceProfile device;
  AbandonmentSettings abandonment;
  PriceBook pricing;
  std::optional<double> pool_total_iops;
  ContentionStrategy contention = ContentionStrategy::efficiency;
  std::vector<std::string> reports = kDefaultReports;
  std::vector<ScenarioVolume> volumes;

  bool operator==(const Scenario&) const = default;
};

/// Reads, validates and resolves a scenario file. Trace paths are resolved
/// against the file's directory; percentile-relative policy parameters and
/// defaults are resolved into concrete values.
Scenario load_scenario(const std::filesystem::path& path);

/// Same from an in-memory document; relative trace paths resolve against `base_dir`.
Scenario scenario_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".");

/// Normalized, fully explicit form. scenario_from_json(to_json(s)) == s.
nlohmann::json to_json(const Scenario& scenario);
nlohmann::json policy_to_json(const PolicyConfig& policy);

/// Parses one policy object. Percentile-relative fields resolve against
/// `series` and are rejected without it.
PolicyConfig policy_from_json(const nlohmann::json& doc, double size_gb = 100.0,
                              const IopsSeries* series = nullptr);

/// Stable 64-bit FNV-1a of the normalized document, as 16 hex digits.
std::string scenario_hash(const Scenario& scenario);

/// Per-volume input records and arrival series over the effective horizon.
struct Workload {
  std::size_t horizon = 0;
  std::vector<std::vector<TraceRecord>> records;
  std::vector<ArrivalSeries> arrivals;
};

Workload materialize(const Scenario& scenario);

/// Engine configuration using each volume's `policy`, or the named variant.
EngineConfig engine_config(const Scenario& scenario,
                           const std::optional<std::string>& variant = std::nullopt);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace iogears
