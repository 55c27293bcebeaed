#include "iogears/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

namespace iogears {

using nlohmann::json;

namespace {

constexpr std::size_t kSecondsPerHour = 3600;
constexpr std::array<double, 4> kMultiplexPercentiles = {90, 95, 99, 99.9};
constexpr double kEps = 1e-9;

bool selected(const Scenario& s, std::string_view report) {
  return std::find(s.reports.begin(), s.reports.end(), report) != s.reports.end();
}

class Csv {
 public:
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ += ',';
      out_ += cells[i];
    }
    out_ += '\n';
  }
  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string column(const PolicyRun& run, const std::string& volume) {
  return run.name + ":" + volume;
}

// Shortest decimal of the float, read back as a double, so CSVs do not show
// float widening noise.
double widen(float x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  double out = 0.0;
  std::from_chars(buf, res.ptr, out);
  return out;
}

std::vector<double> to_doubles(const std::vector<std::uint64_t>& v) {
  return {v.begin(), v.end()};
}

std::map<std::string, IopsSeries> series_by_volume(const ReportBundle& b) {
  std::map<std::string, IopsSeries> out;
  for (std::size_t i = 0; i < b.volume_ids.size(); ++i) out[b.volume_ids[i]] = b.arrivals[i].iops;
  return out;
}

// Every run must have seen the very same arrivals.
void check_identical_arrivals(const std::vector<PolicyRun>& runs) {
  for (std::size_t r = 1; r < runs.size(); ++r) {
    const auto& a = runs[0].result.ticks;
    const auto& b = runs[r].result.ticks;
    if (a.size() != b.size()) throw std::logic_error("compared runs differ in horizon");
    for (std::size_t t = 0; t < a.size(); ++t) {
      for (std::size_t v = 0; v < a[t].volumes.size(); ++v) {
        if (a[t].volumes[v].arrivals != b[t].volumes[v].arrivals) {
          throw std::logic_error("compared runs saw different arrivals at tick " +
                                 std::to_string(t));
        }
      }
    }
  }
}

ReportBundle base_bundle(const Scenario& scenario, Workload workload) {
  ReportBundle b;
  b.scenario = scenario;
  b.scenario_hash = scenario_hash(scenario);
  b.horizon = workload.horizon;
  for (const auto& v : scenario.volumes) b.volume_ids.push_back(v.id);
  b.arrivals = std::move(workload.arrivals);
  if (selected(scenario, "multiplex")) {
    b.multiplex = multiplex_stats(series_by_volume(b), kMultiplexPercentiles);
  }
  return b;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::vector<double> percentiles_of(std::vector<double> sample, std::span<const double> ps) {
  std::vector<double> out;
  if (sample.empty()) {
    out.assign(ps.size(), std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  for (const double p : ps) {
    if (!(p > 0.0 && p <= 100.0)) throw std::invalid_argument("percentile must lie in (0, 100]");
    const double rank = std::clamp(std::ceil(p * n / 100.0 - 1e-9), 1.0, n);
    out.push_back(sample[static_cast<std::size_t>(rank) - 1]);
  }
  return out;
}

VolumeMetrics volume_metrics(const SimulationResult& result, std::size_t v, const PriceBook& book) {
  const VolumeResult& vr = result.volumes.at(v);
  VolumeMetrics m;
  m.volume_id = vr.id;
  m.kind = vr.kind;
  m.billing_gears = vr.billing_gears;

  std::vector<double> arrivals;
  std::vector<double> granted;
  std::vector<int> levels;
  std::size_t satisfied = 0;
  double billed = 0.0;
  for (const auto& tick : result.ticks) {
    const VolumeTick& vt = tick.volumes[v];
    arrivals.push_back(vt.arrivals);
    granted.push_back(vt.granted);
    levels.push_back(vr.billing_gears ? std::max(vt.level, 0) : -1);
    if (vt.queue_after + vt.abandoned <= kEps) ++satisfied;
    billed += vt.billed_iops;
  }
  const std::size_t ticks = result.ticks.size();
  m.arrival_percentiles = percentiles_of(arrivals, kIopsPercentiles);
  m.granted_percentiles = percentiles_of(granted, kIopsPercentiles);

  std::vector<double> lat;
  lat.reserve(vr.latencies.size());
  for (const float x : vr.latencies) lat.push_back(x);
  m.mean_latency = lat.empty() ? std::numeric_limits<double>::quiet_NaN()
                               : std::accumulate(lat.begin(), lat.end(), 0.0) /
                                     static_cast<double>(lat.size());
  m.latency_percentiles = percentiles_of(std::move(lat), kLatencyPercentiles);
  for (double& x : m.latency_percentiles) {
    if (std::isfinite(x)) x = widen(static_cast<float>(x));
  }

  m.served_ratio = vr.total_arrivals > 0 ? vr.total_granted / vr.total_arrivals : 1.0;
  m.satisfied_fraction = ticks ? static_cast<double>(satisfied) / static_cast<double>(ticks) : 1.0;
  m.average_billed_iops = ticks ? billed / static_cast<double>(ticks) : 0.0;

  m.capacity_bill = capacity_bill(vr.size_gb, book, static_cast<double>(ticks));
  m.qos_bill = vr.billing_gears ? qos_bill(vr.ledger, *vr.billing_gears, book) : 0.0;
  m.total_bill = total_bill(m.capacity_bill, m.qos_bill);

  m.hourly_gears = hourly_ledgers(levels);
  for (std::size_t h = 0; h < m.hourly_gears.size(); ++h) {
    const std::size_t secs = std::min(kSecondsPerHour, ticks - h * kSecondsPerHour);
    m.hourly_capacity_bills.push_back(capacity_bill(vr.size_gb, book, static_cast<double>(secs)));
    m.hourly_qos_bills.push_back(
        vr.billing_gears ? qos_bill(m.hourly_gears[h], *vr.billing_gears, book) : 0.0);
  }
  return m;
}

PolicyRun summarize_run(std::string name, SimulationResult result, const PriceBook& book) {
  PolicyRun run;
  run.name = std::move(name);
  double arrivals = 0.0;
  double granted = 0.0;
  for (std::size_t v = 0; v < result.volumes.size(); ++v) {
    run.volumes.push_back(volume_metrics(result, v, book));
    run.total_bill += run.volumes.back().total_bill;
    arrivals += result.volumes[v].total_arrivals;
    granted += result.volumes[v].total_granted;
  }
  double util = 0.0;
  for (const auto& t : result.ticks) util += t.utilization;
  run.mean_utilization = result.ticks.empty() ? 0.0 : util / static_cast<double>(result.ticks.size());
  run.served_ratio = arrivals > 0 ? granted / arrivals : 1.0;
  run.result = std::move(result);
  return run;
}

ReportBundle replay(const Scenario& scenario) {
  ReportBundle b = base_bundle(scenario, materialize(scenario));
  b.runs.push_back(summarize_run("configured", run(engine_config(scenario), b.arrivals),
                                 scenario.pricing));
  return b;
}

ReportBundle compare_policies(const Scenario& scenario, std::span<const std::string> policies) {
  std::vector<std::string> names(policies.begin(), policies.end());
  if (names.empty()) {
    std::set<std::string> declared;
    for (const auto& v : scenario.volumes) {
      for (const auto& [name, p] : v.variants) declared.insert(name);
    }
    names.assign(declared.begin(), declared.end());
  }
  if (names.empty()) throw ConfigError("variants", "no policy variants to compare");

  std::vector<EngineConfig> configs;
  std::set<std::string> seen;
  for (const auto& name : names) {
    if (!seen.insert(name).second) throw ConfigError("policy", "duplicate policy '" + name + "'");
    const bool declared = std::all_of(scenario.volumes.begin(), scenario.volumes.end(),
                                      [&](const auto& v) { return v.variants.contains(name); });
    if (!declared && name == "unlimited") {
      EngineConfig cfg = engine_config(scenario);
      for (auto& v : cfg.volumes) v.policy = UnlimitedPolicy{};
      configs.push_back(std::move(cfg));
    } else {
      configs.push_back(engine_config(scenario, name));
    }
  }

  ReportBundle b = base_bundle(scenario, materialize(scenario));
  std::vector<std::future<SimulationResult>> pending;
  for (const auto& cfg : configs) {
    pending.push_back(std::async(std::launch::async, [&cfg, &b] { return run(cfg, b.arrivals); }));
  }
  for (std::size_t i = 0; i < pending.size(); ++i) {
    b.runs.push_back(summarize_run(names[i], pending[i].get(), scenario.pricing));
  }
  check_identical_arrivals(b.runs);
  return b;
}

ReportBundle analyze(const Scenario& scenario) {
  ReportBundle b = base_bundle(scenario, materialize(scenario));
  if (!b.multiplex) b.multiplex = multiplex_stats(series_by_volume(b), kMultiplexPercentiles);
  return b;
}

void emit_reports(const ReportBundle& b, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  const Scenario& s = b.scenario;
  const bool have_runs = !b.runs.empty();

  if (selected(s, "iops_distribution")) {
    std::vector<std::vector<double>> arrival_pcts;
    for (const auto& a : b.arrivals) {
      arrival_pcts.push_back(percentiles_of(to_doubles(a.iops.total), kIopsPercentiles));
    }
    Csv csv;
    std::vector<std::string> header{"percentile"};
    for (const auto& id : b.volume_ids) header.push_back("arrivals:" + id);
    for (const auto& r : b.runs) {
      for (const auto& m : r.volumes) header.push_back(column(r, m.volume_id));
    }
    csv.row(header);
    for (std::size_t i = 0; i < kIopsPercentiles.size(); ++i) {
      std::vector<std::string> row{format_number(kIopsPercentiles[i])};
      for (const auto& pv : arrival_pcts) row.push_back(format_number(pv[i]));
      for (const auto& r : b.runs) {
        for (const auto& m : r.volumes) row.push_back(format_number(m.granted_percentiles[i]));
      }
      csv.row(row);
    }
    write_file(dir / "iops_distribution.csv", csv.str());
  }

  if (have_runs && selected(s, "latency_percentiles")) {
    Csv csv;
    std::vector<std::string> header{"percentile"};
    for (const auto& r : b.runs) {
      for (const auto& m : r.volumes) header.push_back(column(r, m.volume_id));
    }
    csv.row(header);
    for (std::size_t i = 0; i < kLatencyPercentiles.size(); ++i) {
      std::vector<std::string> row{format_number(kLatencyPercentiles[i])};
      for (const auto& r : b.runs) {
        for (const auto& m : r.volumes) row.push_back(format_number(m.latency_percentiles[i]));
      }
      csv.row(row);
    }
    write_file(dir / "latency_percentiles.csv", csv.str());
  }

  const std::size_t hours = (b.horizon + kSecondsPerHour - 1) / kSecondsPerHour;

  if (have_runs && selected(s, "gear_durations")) {
    Csv csv;
    std::vector<std::string> header{"hour"};
    for (const auto& r : b.runs) {
      for (const auto& m : r.volumes) {
        if (!m.billing_gears) continue;
        for (int l = 0; l < m.billing_gears->num_levels(); ++l) {
          header.push_back(column(r, m.volume_id) + ":G" + std::to_string(l));
        }
      }
    }
    csv.row(header);
    for (std::size_t h = 0; h < hours; ++h) {
      std::vector<std::string> row{std::to_string(h)};
      for (const auto& r : b.runs) {
        for (const auto& m : r.volumes) {
          if (!m.billing_gears) continue;
          for (int l = 0; l < m.billing_gears->num_levels(); ++l) {
            const auto& secs = m.hourly_gears[h].seconds_at_level;
            const auto it = secs.find(l);
            row.push_back(format_number(it == secs.end() ? 0.0 : it->second));
          }
        }
      }
      csv.row(row);
    }
    write_file(dir / "gear_durations.csv", csv.str());
  }

  if (have_runs && selected(s, "bills")) {
    Csv csv;
    std::vector<std::string> header{"hour"};
    for (const auto& r : b.runs) {
      for (const auto& m : r.volumes) {
        const auto c = column(r, m.volume_id);
        header.insert(header.end(), {c + ":capacity", c + ":qos", c + ":total"});
      }
    }
    csv.row(header);
    for (std::size_t h = 0; h < hours; ++h) {
      std::vector<std::string> row{std::to_string(h)};
      for (const auto& r : b.runs) {
        for (const auto& m : r.volumes) {
          row.push_back(format_number(m.hourly_capacity_bills[h]));
          row.push_back(format_number(m.hourly_qos_bills[h]));
          row.push_back(format_number(m.hourly_capacity_bills[h] + m.hourly_qos_bills[h]));
        }
      }
      csv.row(row);
    }
    std::vector<std::string> total{"total"};
    for (const auto& r : b.runs) {
      for (const auto& m : r.volumes) {
        total.push_back(format_number(m.capacity_bill));
        total.push_back(format_number(m.qos_bill));
        total.push_back(format_number(m.total_bill));
      }
    }
    csv.row(total);
    write_file(dir / "bills.csv", csv.str());
  }

  if (have_runs && selected(s, "utilization")) {
    Csv csv;
    std::vector<std::string> header{"tick"};
    for (const auto& r : b.runs) header.push_back(r.name);
    csv.row(header);
    for (std::size_t t = 0; t < b.horizon; ++t) {
      std::vector<std::string> row{std::to_string(t)};
      for (const auto& r : b.runs) row.push_back(format_number(r.result.ticks[t].utilization));
      csv.row(row);
    }
    write_file(dir / "utilization.csv", csv.str());
  }

  if (b.multiplex && selected(s, "multiplex")) {
    const MultiplexReport& mx = *b.multiplex;
    Csv csv;
    std::vector<std::string> header{"percentile"};
    header.insert(header.end(), mx.volumes.begin(), mx.volumes.end());
    header.insert(header.end(), {"sum", "multiplex"});
    csv.row(header);
    for (std::size_t i = 0; i < mx.percentiles.size(); ++i) {
      std::vector<std::string> row{format_number(mx.percentiles[i])};
      for (const auto& pv : mx.per_volume) row.push_back(format_number(pv[i]));
      row.push_back(format_number(mx.sum[i]));
      row.push_back(format_number(mx.multiplex[i]));
      csv.row(row);
    }
    std::vector<std::string> avg{"average"};
    for (const double a : mx.average) avg.push_back(format_number(a));
    avg.push_back(format_number(mx.sum_average));
    avg.push_back(format_number(mx.multiplex_average));
    csv.row(avg);
    write_file(dir / "multiplex.csv", csv.str());
  }

  json summary;
  summary["scenario_hash"] = b.scenario_hash;
  summary["seed"] = s.seed;
  summary["horizon"] = b.horizon;
  summary["scenario"] = to_json(s);
  const auto num = [](double x) -> json { return std::isfinite(x) ? json(x) : json(nullptr); };
  json runs = json::array();
  for (const auto& r : b.runs) {
    json jr;
    jr["name"] = r.name;
    jr["mean_utilization"] = num(r.mean_utilization);
    jr["served_ratio"] = num(r.served_ratio);
    jr["total_bill"] = num(r.total_bill);
    jr["volumes"] = json::array();
    for (const auto& m : r.volumes) {
      json jv;
      jv["id"] = m.volume_id;
      jv["policy"] = std::string(to_string(m.kind));
      jv["served_ratio"] = num(m.served_ratio);
      jv["satisfied_fraction"] = num(m.satisfied_fraction);
      jv["latency_mean_s"] = num(m.mean_latency);
      for (std::size_t i = 0; i < kLatencyPercentiles.size(); ++i) {
        jv["latency_p" + format_number(kLatencyPercentiles[i]) + "_s"] = num(m.latency_percentiles[i]);
      }
      jv["granted_p99"] = num(m.granted_percentiles[5]);
      jv["average_billed_iops"] = num(m.average_billed_iops);
      jv["capacity_bill"] = num(m.capacity_bill);
      jv["qos_bill"] = num(m.qos_bill);
      jv["total_bill"] = num(m.total_bill);
      jv["total_bill_cents"] = to_cents(m.total_bill);
      jr["volumes"].push_back(std::move(jv));
    }
    runs.push_back(std::move(jr));
  }
  summary["runs"] = std::move(runs);
  json traces = json::array();
  for (std::size_t i = 0; i < b.volume_ids.size(); ++i) {
    const IopsSeries& series = b.arrivals[i].iops;
    json jt;
    jt["id"] = b.volume_ids[i];
    jt["average_iops"] = average_iops(series);
    jt["requests"] = std::accumulate(series.total.begin(), series.total.end(), std::uint64_t{0});
    jt["burst_share_top1pct"] = burst_share(series, 0.01);
    jt["percentiles"] = json::object();
    const auto pv = percentiles_of(to_doubles(series.total), kIopsPercentiles);
    for (std::size_t k = 0; k < pv.size(); ++k) {
      jt["percentiles"][format_number(kIopsPercentiles[k])] = num(pv[k]);
    }
    traces.push_back(std::move(jt));
  }
  summary["traces"] = std::move(traces);
  if (b.multiplex) {
    summary["multiplex"] = {{"percentiles", b.multiplex->percentiles},
                            {"sum", b.multiplex->sum},
                            {"multiplex", b.multiplex->multiplex}};
  }
  write_file(dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace iogears
