#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iogears {

enum class Op : std::uint8_t { read, write };

std::string_view to_string(Op op);

struct TraceRecord {
  std::int64_t timestamp_us = 0;
  std::string volume_id;
  Op op = Op::read;
  std::uint64_t offset = 0;
  std::uint64_t size = 0;

  bool operator==(const TraceRecord&) const = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Parses `timestamp_usec,volume_id,op,offset_bytes,size_bytes` lines.
///
/// Lines starting with '#' and blank lines are skipped. Records come back
/// stably sorted by timestamp and shifted so that the trace epoch (the first
/// record's timestamp, truncated to a whole second) is zero.
std::vector<TraceRecord> parse_trace(std::istream& in);
std::vector<TraceRecord> parse_trace_file(const std::string& path);

void write_trace(std::ostream& out, std::span<const TraceRecord> records);

/// Per-second request counts. total[i] == read[i] + write[i].
struct IopsSeries {
  std::vector<std::uint64_t> read;
  std::vector<std::uint64_t> write;
  std::vector<std::uint64_t> total;

  std::size_t size() const { return total.size(); }
  bool empty() const { return total.empty(); }
  bool operator==(const IopsSeries&) const = default;
};

/// Per-second arrivals with byte volume, the engine's input.
struct ArrivalSeries {
  IopsSeries iops;
  std::vector<double> read_bytes;
  std::vector<double> write_bytes;

  std::size_t size() const { return iops.size(); }
  bool operator==(const ArrivalSeries&) const = default;
};

constexpr std::int64_t kUsecPerSecond = 1'000'000;

/// Number of one-second bins needed to hold every record.
std::size_t trace_horizon(std::span<const TraceRecord> records);

/// Throws std::out_of_range if a record falls at or past `horizon` seconds.
IopsSeries bin_iops(std::span<const TraceRecord> records, std::size_t horizon);
ArrivalSeries bin_arrivals(std::span<const TraceRecord> records,
                           std::size_t horizon);

/// Nearest-rank percentile: the element at index ceil(p/100 * N) - 1 of the
/// ascending-sorted sample. p must lie in (0, 100].
double nearest_rank(std::vector<double> values, double p);

double percentile_iops(const IopsSeries& series, double p);
double average_iops(const IopsSeries& series);

/// Share of all requests that arrive in the busiest `top_fraction` of seconds.
double burst_share(const IopsSeries& series, double top_fraction);

struct SyntheticPhaseSpec {
  std::uint64_t duration = 0;     // seconds
  std::uint64_t target_iops = 0;  // requests per second
  double read_fraction = 1.0;
  std::uint64_t request_size = 4096;

  bool operator==(const SyntheticPhaseSpec&) const = default;
};

/// Fixed-rate phased workload. Each whole second of a phase carries exactly
/// `target_iops` requests at seeded uniform offsets. Deterministic in `seed`.
std::vector<TraceRecord> generate_synthetic(
    std::span<const SyntheticPhaseSpec> phases, std::uint64_t seed,
    const std::string& volume_id = "synthetic");

struct MultiplexReport {
  std::vector<double> percentiles;
  std::vector<std::string> volumes;
  std::vector<double> average;                  // per volume
  std::vector<std::vector<double>> per_volume;  // [volume][percentile]
  std::vector<double> sum;                      // column sums
  std::vector<double> multiplex;                // percentiles of aggregate
  double sum_average = 0.0;
  double multiplex_average = 0.0;
};

/// Multiplexing statistics: per-volume percentiles, their column sums, and
/// percentiles of the bin-wise aggregate series. All series must share the
/// same horizon.
MultiplexReport multiplex_stats(const std::map<std::string, IopsSeries>& series_set,
                                std::span<const double> percentiles);

}  // namespace iogears
