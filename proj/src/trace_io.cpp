#include "iogears/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace iogears {

std::string_view to_string(Op op) { return op == Op::read ? "read" : "write"; }

namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

[[noreturn]] void fail(const std::string& msg, std::size_t line) {
  throw ParseError(msg + " at line " + std::to_string(line), line);
}

}  // namespace

std::vector<TraceRecord> parse_trace(std::istream& in) {
  std::vector<TraceRecord> records;
  std::string raw;
  std::size_t line_no = 0;
  std::vector<std::string_view> fields;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    fields.clear();
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      fields.push_back(trim(line.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 5) {
      fail("expected 5 fields, got " + std::to_string(fields.size()), line_no);
    }

    TraceRecord rec;
    if (!parse_number(fields[0], rec.timestamp_us) || rec.timestamp_us < 0) {
      fail("invalid timestamp '" + std::string(fields[0]) + "'", line_no);
    }
    if (fields[1].empty()) fail("empty volume id", line_no);
    rec.volume_id = std::string(fields[1]);
    if (fields[2] == "read") {
      rec.op = Op::read;
    } else if (fields[2] == "write") {
      rec.op = Op::write;
    } else {
      fail("unknown op '" + std::string(fields[2]) + "'", line_no);
    }
    if (!parse_number(fields[3], rec.offset)) {
      fail("invalid offset '" + std::string(fields[3]) + "'", line_no);
    }
    if (!parse_number(fields[4], rec.size) || rec.size == 0) {
      fail("invalid size '" + std::string(fields[4]) + "'", line_no);
    }
    records.push_back(std::move(rec));
  }

  std::stable_sort(records.begin(), records.end(),
                   [](const TraceRecord& a, const TraceRecord& b) {
                     return a.timestamp_us < b.timestamp_us;
                   });
  if (!records.empty()) {
    const std::int64_t epoch =
        records.front().timestamp_us / kUsecPerSecond * kUsecPerSecond;
    for (auto& r : records) r.timestamp_us -= epoch;
  }
  return records;
}

std::vector<TraceRecord> parse_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file '" + path + "'");
  try {
    return parse_trace(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line());
  }
}

void write_trace(std::ostream& out, std::span<const TraceRecord> records) {
  out << "# timestamp_usec,volume_id,op,offset_bytes,size_bytes\n";
  for (const auto& r : records) {
    out << r.timestamp_us << ',' << r.volume_id << ',' << to_string(r.op) << ','
        << r.offset << ',' << r.size << '\n';
  }
}

std::size_t trace_horizon(std::span<const TraceRecord> records) {
  std::int64_t last = -1;
  for (const auto& r : records) last = std::max(last, r.timestamp_us);
  return last < 0 ? 0 : static_cast<std::size_t>(last / kUsecPerSecond) + 1;
}

namespace {

std::size_t bin_of(const TraceRecord& r, std::size_t horizon) {
  if (r.timestamp_us < 0) throw std::out_of_range("negative timestamp");
  const auto bin = static_cast<std::size_t>(r.timestamp_us / kUsecPerSecond);
  if (bin >= horizon) {
    throw std::out_of_range("record at " + std::to_string(r.timestamp_us) +
                            "us lies beyond horizon of " + std::to_string(horizon) + "s");
  }
  return bin;
}

}  // namespace

IopsSeries bin_iops(std::span<const TraceRecord> records, std::size_t horizon) {
  IopsSeries s;
  s.read.assign(horizon, 0);
  s.write.assign(horizon, 0);
  s.total.assign(horizon, 0);
  for (const auto& r : records) {
    const auto bin = bin_of(r, horizon);
    (r.op == Op::read ? s.read : s.write)[bin] += 1;
    s.total[bin] += 1;
  }
  return s;
}

ArrivalSeries bin_arrivals(std::span<const TraceRecord> records, std::size_t horizon) {
  ArrivalSeries a;
  a.iops = bin_iops(records, horizon);
  a.read_bytes.assign(horizon, 0.0);
  a.write_bytes.assign(horizon, 0.0);
  for (const auto& r : records) {
    const auto bin = static_cast<std::size_t>(r.timestamp_us / kUsecPerSecond);
    (r.op == Op::read ? a.read_bytes : a.write_bytes)[bin] += static_cast<double>(r.size);
  }
  return a;
}

double nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(p > 0.0 && p <= 100.0)) {
    throw std::invalid_argument("percentile must lie in (0, 100]");
  }
  const double n = static_cast<double>(values.size());
  // p*n/100 rather than p/100*n keeps integral ranks exact (95 of 100 -> 95).
  const double rank = std::ceil(p * n / 100.0 - 1e-9);
  const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, n)) - 1;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx),
                   values.end());
  return values[idx];
}

double percentile_iops(const IopsSeries& series, double p) {
  if (series.empty()) throw std::invalid_argument("percentile of an empty series");
  return nearest_rank(std::vector<double>(series.total.begin(), series.total.end()), p);
}

double average_iops(const IopsSeries& series) {
  if (series.empty()) return 0.0;
  const auto sum = std::accumulate(series.total.begin(), series.total.end(), std::uint64_t{0});
  return static_cast<double>(sum) / static_cast<double>(series.size());
}

double burst_share(const IopsSeries& series, double top_fraction) {
  if (series.empty()) return 0.0;
  std::vector<std::uint64_t> sorted = series.total;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto take = static_cast<std::size_t>(
      std::ceil(std::clamp(top_fraction, 0.0, 1.0) * static_cast<double>(sorted.size()) - 1e-9));
  const auto all = std::accumulate(sorted.begin(), sorted.end(), std::uint64_t{0});
  if (all == 0) return 0.0;
  const auto top = std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(take),
                                   std::uint64_t{0});
  return static_cast<double>(top) / static_cast<double>(all);
}

std::vector<TraceRecord> generate_synthetic(std::span<const SyntheticPhaseSpec> phases,
                                            std::uint64_t seed, const std::string& volume_id) {
  if (phases.empty()) throw std::invalid_argument("synthetic workload needs at least one phase");
  std::mt19937_64 rng(seed);
  // 53-bit mantissa draw; mt19937_64 output is fully specified, so this is
  // reproducible across standard libraries (unlike the <random> distributions).
  const auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  std::vector<TraceRecord> out;
  std::vector<std::int64_t> offsets;
  std::int64_t second = 0;
  std::uint64_t lba = 0;
  for (const auto& phase : phases) {
    if (phase.read_fraction < 0.0 || phase.read_fraction > 1.0) {
      throw std::invalid_argument("read_fraction must lie in [0, 1]");
    }
    if (phase.request_size == 0) throw std::invalid_argument("request_size must be positive");
    for (std::uint64_t s = 0; s < phase.duration; ++s, ++second) {
      offsets.resize(phase.target_iops);
      for (auto& o : offsets) o = static_cast<std::int64_t>(rng() % kUsecPerSecond);
      std::sort(offsets.begin(), offsets.end());
      for (const auto o : offsets) {
        TraceRecord r;
        r.timestamp_us = second * kUsecPerSecond + o;
        r.volume_id = volume_id;
        r.op = unit() < phase.read_fraction ? Op::read : Op::write;
        r.offset = lba;
        r.size = phase.request_size;
        lba += phase.request_size;
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

MultiplexReport multiplex_stats(const std::map<std::string, IopsSeries>& series_set,
                                std::span<const double> percentiles) {
  if (series_set.empty()) throw std::invalid_argument("multiplex_stats needs at least one series");
  const std::size_t horizon = series_set.begin()->second.size();
  if (horizon == 0) throw std::invalid_argument("multiplex_stats needs non-empty series");

  MultiplexReport rep;
  rep.percentiles.assign(percentiles.begin(), percentiles.end());
  rep.sum.assign(percentiles.size(), 0.0);
  std::vector<double> aggregate(horizon, 0.0);
  for (const auto& [id, series] : series_set) {
    if (series.size() != horizon) {
      throw std::invalid_argument("series '" + id + "' has horizon " +
                                  std::to_string(series.size()) + ", expected " +
                                  std::to_string(horizon));
    }
    rep.volumes.push_back(id);
    rep.average.push_back(average_iops(series));
    rep.sum_average += rep.average.back();
    auto& row = rep.per_volume.emplace_back();
    for (std::size_t k = 0; k < percentiles.size(); ++k) {
      row.push_back(percentile_iops(series, percentiles[k]));
      rep.sum[k] += row.back();
    }
    for (std::size_t i = 0; i < horizon; ++i) aggregate[i] += static_cast<double>(series.total[i]);
  }
  for (const double p : percentiles) rep.multiplex.push_back(nearest_rank(aggregate, p));
  rep.multiplex_average =
      std::accumulate(aggregate.begin(), aggregate.end(), 0.0) / static_cast<double>(horizon);
  return rep;
}

}  // namespace iogears
