#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "iogears/device.hpp"
#include "iogears/engine.hpp"
#include "iogears/metering.hpp"
#include "iogears/policy.hpp"
#include "iogears/report.hpp"
#include "iogears/scenario.hpp"
#include "iogears/trace_io.hpp"

namespace py = pybind11;
using namespace iogears;
using nlohmann::json;

namespace {

// Python dicts cross the boundary as JSON text.
json from_py(const py::object& obj) {
  const auto dumps = py::module_::import("json").attr("dumps");
  return json::parse(dumps(obj).cast<std::string>());
}

py::object to_py(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::tuple record_tuple(const TraceRecord& r) {
  return py::make_tuple(r.timestamp_us, r.volume_id, std::string(to_string(r.op)), r.offset, r.size);
}

std::vector<TraceRecord> records_from(const std::vector<py::tuple>& rows) {
  std::vector<TraceRecord> out;
  for (const auto& row : rows) {
    TraceRecord r;
    r.timestamp_us = row[0].cast<std::int64_t>();
    r.volume_id = row[1].cast<std::string>();
    const auto op = row[2].cast<std::string>();
    if (op == "read") r.op = Op::read;
    else if (op == "write") r.op = Op::write;
    else throw std::invalid_argument("unknown op '" + op + "'");
    r.offset = row[3].cast<std::uint64_t>();
    r.size = row[4].cast<std::uint64_t>();
    out.push_back(std::move(r));
  }
  return out;
}

py::dict series_dict(const IopsSeries& s) {
  py::dict d;
  d["read"] = s.read;
  d["write"] = s.write;
  d["total"] = s.total;
  return d;
}

ArrivalSeries reads_only(const std::vector<std::uint64_t>& iops, double request_size) {
  ArrivalSeries a;
  a.iops.total = iops;
  a.iops.read = iops;
  a.iops.write.assign(iops.size(), 0);
  for (const auto n : iops) {
    a.read_bytes.push_back(static_cast<double>(n) * request_size);
    a.write_bytes.push_back(0.0);
  }
  return a;
}

py::dict bundle_dict(const ReportBundle& b) {
  py::dict out;
  out["scenario_hash"] = b.scenario_hash;
  out["horizon"] = b.horizon;
  py::dict runs;
  for (const auto& r : b.runs) {
    py::dict jr;
    jr["mean_utilization"] = r.mean_utilization;
    jr["served_ratio"] = r.served_ratio;
    jr["total_bill"] = r.total_bill;
    py::dict vols;
    for (const auto& m : r.volumes) {
      py::dict jv;
      jv["policy"] = std::string(to_string(m.kind));
      jv["granted_percentiles"] = m.granted_percentiles;
      jv["latency_percentiles"] = m.latency_percentiles;
      jv["served_ratio"] = m.served_ratio;
      jv["satisfied_fraction"] = m.satisfied_fraction;
      jv["capacity_bill"] = m.capacity_bill;
      jv["qos_bill"] = m.qos_bill;
      jv["total_bill"] = m.total_bill;
      vols[py::str(m.volume_id)] = jv;
    }
    jr["volumes"] = vols;
    runs[py::str(r.name)] = jr;
  }
  out["runs"] = runs;
  return out;
}

}  // namespace

PYBIND11_MODULE(_iogears, m) {
  m.doc() = "Trace-replay simulator for block-storage IOPS provisioning policies";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_RuntimeError);

  // trace_io
  m.def("parse_trace", [](const std::string& text) {
    std::istringstream in(text);
    std::vector<py::tuple> out;
    for (const auto& r : parse_trace(in)) out.push_back(record_tuple(r));
    return out;
  }, py::arg("text"));
  m.def("format_trace", [](const std::vector<py::tuple>& rows) {
    std::ostringstream out;
    write_trace(out, records_from(rows));
    return out.str();
  }, py::arg("records"));
  m.def("generate_synthetic", [](const std::vector<std::tuple<std::uint64_t, std::uint64_t, double>>& phases,
                                 std::uint64_t seed, const std::string& volume_id) {
    std::vector<SyntheticPhaseSpec> specs;
    for (const auto& [duration, iops, read_fraction] : phases) {
      specs.push_back({duration, iops, read_fraction, 4096});
    }
    std::vector<py::tuple> out;
    for (const auto& r : generate_synthetic(specs, seed, volume_id)) out.push_back(record_tuple(r));
    return out;
  }, py::arg("phases"), py::arg("seed") = 1, py::arg("volume_id") = "synthetic");
  m.def("bin_iops", [](const std::vector<py::tuple>& rows, std::optional<std::size_t> horizon) {
    const auto records = records_from(rows);
    return series_dict(bin_iops(records, horizon.value_or(trace_horizon(records))));
  }, py::arg("records"), py::arg("horizon") = py::none());
  m.def("percentile", [](std::vector<double> values, double p) { return nearest_rank(std::move(values), p); },
        py::arg("values"), py::arg("p"));
  m.def("multiplex_stats", [](const std::map<std::string, std::vector<std::uint64_t>>& totals,
                              const std::vector<double>& percentiles) {
    std::map<std::string, IopsSeries> set;
    for (const auto& [id, t] : totals) {
      IopsSeries s;
      s.total = t;
      s.read = t;
      s.write.assign(t.size(), 0);
      set.emplace(id, std::move(s));
    }
    const auto r = multiplex_stats(set, percentiles);
    py::dict d;
    d["percentiles"] = r.percentiles;
    d["volumes"] = r.volumes;
    d["per_volume"] = r.per_volume;
    d["sum"] = r.sum;
    d["multiplex"] = r.multiplex;
    d["average"] = r.average;
    d["sum_average"] = r.sum_average;
    d["multiplex_average"] = r.multiplex_average;
    return d;
  }, py::arg("series"), py::arg("percentiles") = std::vector<double>{90, 95, 99, 99.9});

  // device
  m.def("storage_util", [](double riops, double wiops, double rbw, double wbw, double max_riops,
                           double max_wiops, double max_rbw, double max_wbw) {
    return storage_util({riops, wiops, rbw, wbw}, {max_riops, max_wiops, max_rbw, max_wbw});
  }, py::arg("riops"), py::arg("wiops"), py::arg("rbw"), py::arg("wbw"), py::arg("max_riops"),
     py::arg("max_wiops"), py::arg("max_rbw"), py::arg("max_wbw"));
  m.def("device_allocate", [](const std::vector<double>& demands, const std::vector<double>& caps,
                              double capacity) { return device_allocate(demands, caps, capacity); },
        py::arg("demands"), py::arg("caps"), py::arg("capacity"));

  // policy
  py::class_<GearTable>(m, "GearTable")
      .def(py::init<double, int>(), py::arg("baseline_iops"), py::arg("num_levels") = 4)
      .def("cap", &GearTable::cap)
      .def("caps", &GearTable::caps)
      .def_property_readonly("top_level", &GearTable::top_level)
      .def_property_readonly("baseline", &GearTable::baseline)
      .def("__repr__", [](const GearTable& g) {
        return "GearTable(" + std::to_string(g.baseline()) + ", " + std::to_string(g.num_levels()) + ")";
      });
  m.def("tune_judge", [](int level, const GearTable& gears, double observed, double util,
                         double factor, double util_threshold) {
    return std::string(to_string(tune_judge({level, factor, util_threshold}, gears, observed, util)));
  }, py::arg("level"), py::arg("gears"), py::arg("observed_iops"), py::arg("device_util"),
     py::arg("promote_factor") = 0.95, py::arg("util_threshold") = 0.9);
  m.def("credit_step", [](double balance, double demand, double baseline, double burst, double max_balance) {
    const auto step = credit_step({balance, max_balance, baseline, burst}, demand);
    return py::make_tuple(step.allowed, step.state.balance);
  }, py::arg("balance"), py::arg("demand"), py::arg("baseline_iops"), py::arg("burst_iops") = 3000.0,
     py::arg("max_balance") = 5.4e6);
  m.def("pool_admit", &pool_admit, py::arg("pool_unused_iops"), py::arg("promotion_delta"));

  // metering
  m.def("capacity_bill", [](double size_gb, double seconds, double per_gb_rate) {
    PriceBook book;
    book.per_gb_rate = per_gb_rate;
    return capacity_bill(size_gb, book, seconds);
  }, py::arg("size_gb"), py::arg("seconds"), py::arg("per_gb_rate") = 0.125);
  m.def("qos_bill", [](const std::map<int, double>& seconds_at_level, const GearTable& gears,
                       double per_iops_rate) {
    PriceBook book;
    book.per_iops_rate = per_iops_rate;
    return qos_bill(MeterLedger{seconds_at_level}, gears, book);
  }, py::arg("seconds_at_level"), py::arg("gears"), py::arg("per_iops_rate") = 0.065);
  m.def("to_cents", &to_cents, py::arg("amount"));

  // engine
  m.def("simulate", [](const std::vector<std::uint64_t>& iops, const py::object& policy,
                       double size_gb) {
    EngineConfig cfg;
    cfg.volumes.push_back({"v", size_gb, policy_from_json(from_py(policy), size_gb)});
    const std::vector<ArrivalSeries> arrivals{reads_only(iops, 4096.0)};
    const auto result = run(cfg, arrivals);
    py::dict d;
    std::vector<double> granted, queue, cap;
    std::vector<int> level;
    for (const auto& t : result.ticks) {
      granted.push_back(t.volumes[0].granted);
      queue.push_back(t.volumes[0].queue_after);
      cap.push_back(t.volumes[0].cap);
      level.push_back(t.volumes[0].level);
    }
    d["granted"] = granted;
    d["queue"] = queue;
    d["cap"] = cap;
    d["level"] = level;
    d["latencies"] = std::vector<double>(result.volumes[0].latencies.begin(),
                                         result.volumes[0].latencies.end());
    return d;
  }, py::arg("iops"), py::arg("policy"), py::arg("size_gb") = 100.0);

  // scenarios and reports
  m.def("load_scenario", [](const std::string& path) { return to_py(to_json(load_scenario(path))); },
        py::arg("path"));
  m.def("replay", [](const py::object& scenario, const std::string& base_dir,
                     std::optional<std::string> out_dir) {
    const auto bundle = replay(scenario_from_json(from_py(scenario), base_dir));
    if (out_dir) emit_reports(bundle, *out_dir);
    return bundle_dict(bundle);
  }, py::arg("scenario"), py::arg("base_dir") = ".", py::arg("out_dir") = py::none());
  m.def("compare", [](const py::object& scenario, const std::vector<std::string>& policies,
                      const std::string& base_dir, std::optional<std::string> out_dir) {
    const auto bundle = compare_policies(scenario_from_json(from_py(scenario), base_dir), policies);
    if (out_dir) emit_reports(bundle, *out_dir);
    return bundle_dict(bundle);
  }, py::arg("scenario"), py::arg("policies") = std::vector<std::string>{},
     py::arg("base_dir") = ".", py::arg("out_dir") = py::none());
}
