#include "iogears/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace iogears {

using nlohmann::json;

namespace {

// Typed, path-aware view over one JSON object. Every key must be consumed or
// declared, so typos surface as "unknown field" errors.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  bool has(const std::string& key) const {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& raw(const std::string& key) const {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(at(key), "missing required field");
    return j_.at(key);
  }
  Node child(const std::string& key) const { return Node(raw(key), at(key)); }

  double number(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(at(key), "expected a finite number");
    return d;
  }
  double number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }
  std::uint64_t integer(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(at(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  std::string string(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }
  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected a boolean");
    return v.get<bool>();
  }

  void reject_unknown() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError(at(key), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

double positive(const Node& n, const std::string& key, double value) {
  if (!(value > 0)) throw ConfigError(n.at(key), "must be > 0");
  return value;
}

double non_negative(const Node& n, const std::string& key, double value) {
  if (value < 0) throw ConfigError(n.at(key), "must be >= 0");
  return value;
}

// Resolves "<name>" or "<name>_percentile" against the volume's arrivals.
double absolute_or_percentile(const Node& n, const std::string& key, const IopsSeries* series,
                              std::optional<double> fallback = std::nullopt) {
  const std::string pkey = key + "_percentile";
  const bool direct = n.has(key);
  const bool relative = n.has(pkey);
  if (direct && relative) throw ConfigError(n.at(pkey), "conflicts with '" + key + "'");
  if (direct) return n.number(key);
  if (relative) {
    const double p = n.number(pkey);
    if (!(p > 0 && p <= 100)) throw ConfigError(n.at(pkey), "must lie in (0, 100]");
    if (series == nullptr || series->empty()) {
      throw ConfigError(n.at(pkey), "needs the volume's workload to resolve");
    }
    return percentile_iops(*series, p);
  }
  if (fallback) return *fallback;
  throw ConfigError(n.at(key), "missing required field");
}

PolicyConfig parse_policy(const Node& n, double size_gb, const IopsSeries* series) {
  const std::string kind = n.string("kind");
  PolicyConfig out;
  if (kind == "static") {
    StaticPolicy p;
    p.cap = absolute_or_percentile(n, "cap", series);
    if (!(p.cap >= 1)) throw ConfigError(n.at("cap"), "must be >= 1");
    out = p;
  } else if (kind == "leaky_bucket") {
    LeakyBucketPolicy p;
    p.baseline_iops = absolute_or_percentile(n, "baseline_iops", series, 3.0 * size_gb);
    non_negative(n, "baseline_iops", p.baseline_iops);
    p.burst_iops = n.number("burst_iops", std::max(3000.0, p.baseline_iops));
    if (p.burst_iops < p.baseline_iops) throw ConfigError(n.at("burst_iops"), "must be >= baseline_iops");
    p.max_balance = non_negative(n, "max_balance", n.number("max_balance", 5.4e6));
    p.initial_balance = non_negative(n, "initial_balance", n.number("initial_balance", 0.0));
    if (p.initial_balance > p.max_balance) {
      throw ConfigError(n.at("initial_balance"), "must be <= max_balance");
    }
    out = p;
  } else if (kind == "gstates") {
    GStatesPolicy p;
    p.baseline_iops = absolute_or_percentile(n, "baseline_iops", series);
    if (!(p.baseline_iops >= 1)) throw ConfigError(n.at("baseline_iops"), "must be >= 1");
    if (n.has("num_levels")) {
      const auto levels = n.integer("num_levels");
      if (levels < 1 || levels > 52) throw ConfigError(n.at("num_levels"), "must lie in [1, 52]");
      p.num_levels = static_cast<int>(levels);
    }
    p.promote_threshold_factor = n.number("promote_factor", 0.95);
    if (!(p.promote_threshold_factor > 0 && p.promote_threshold_factor <= 1)) {
      throw ConfigError(n.at("promote_factor"), "must lie in (0, 1]");
    }
    p.util_threshold = positive(n, "util_threshold", n.number("util_threshold", 0.9));
    if (n.has("io_type")) {
      const auto t = n.string("io_type");
      if (t == "total") p.io_type = IoType::total;
      else if (t == "read") p.io_type = IoType::read;
      else if (t == "write") p.io_type = IoType::write;
      else throw ConfigError(n.at("io_type"), "expected one of total, read, write");
    }
    p.pool_mode = n.boolean("pool", false);
    out = p;
  } else if (kind == "unlimited") {
    out = UnlimitedPolicy{};
  } else {
    throw ConfigError(n.at("kind"), "unknown policy kind '" + kind + "'");
  }
  n.reject_unknown();
  return out;
}

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = base / path;
  return std::filesystem::absolute(path).lexically_normal();
}

std::uint64_t volume_seed(std::uint64_t scenario_seed, const ScenarioVolume& v) {
  const auto& syn = std::get<SyntheticSource>(v.source);
  return syn.seed.value_or(scenario_seed ^ fnv1a64(v.id));
}

std::vector<TraceRecord> load_records(const ScenarioVolume& v, std::uint64_t scenario_seed,
                                      std::map<std::string, std::vector<TraceRecord>>& cache) {
  if (const auto* trace = std::get_if<TraceSource>(&v.source)) {
    auto it = cache.find(trace->path);
    if (it == cache.end()) it = cache.emplace(trace->path, parse_trace_file(trace->path)).first;
    if (!trace->source_volume) return it->second;
    std::vector<TraceRecord> out;
    for (const auto& r : it->second) {
      if (r.volume_id == *trace->source_volume) out.push_back(r);
    }
    return out;
  }
  const auto& syn = std::get<SyntheticSource>(v.source);
  return generate_synthetic(syn.phases, volume_seed(scenario_seed, v), v.id);
}

std::size_t source_horizon(const ScenarioVolume& v, const std::vector<TraceRecord>& records) {
  if (const auto* syn = std::get_if<SyntheticSource>(&v.source)) {
    std::size_t total = 0;
    for (const auto& p : syn->phases) total += p.duration;
    return total;
  }
  return trace_horizon(records);
}

}  // namespace

PolicyConfig policy_from_json(const json& doc, double size_gb, const IopsSeries* series) {
  return parse_policy(Node(doc, "policy"), size_gb, series);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Scenario scenario_from_json(const json& doc, const std::filesystem::path& base_dir) {
  const Node root(doc, "");
  Scenario s;
  if (root.has("name")) s.name = root.string("name");
  if (root.has("seed")) s.seed = root.integer("seed");
  if (root.has("horizon")) s.horizon = root.integer("horizon");

  if (root.has("device")) {
    const Node d = root.child("device");
    s.device.max_read_iops = positive(d, "max_read_iops", d.number("max_read_iops"));
    s.device.max_write_iops = positive(d, "max_write_iops", d.number("max_write_iops"));
    s.device.max_read_bw = positive(d, "max_read_bw", d.number("max_read_bw"));
    s.device.max_write_bw = positive(d, "max_write_bw", d.number("max_write_bw"));
    d.reject_unknown();
  }
  if (root.has("abandonment")) {
    const Node a = root.child("abandonment");
    s.abandonment.enabled = a.boolean("enabled", false);
    s.abandonment.threshold_s = positive(a, "threshold_s", a.number("threshold_s", 1.0));
    a.reject_unknown();
  }
  if (root.has("pricing")) {
    const Node p = root.child("pricing");
    s.pricing.per_gb_rate = non_negative(p, "per_gb_month", p.number("per_gb_month", 0.125));
    s.pricing.per_iops_rate = non_negative(p, "per_iops_month", p.number("per_iops_month", 0.065));
    s.pricing.seconds_per_month =
        positive(p, "seconds_per_month", p.number("seconds_per_month", 2'592'000.0));
    p.reject_unknown();
  }
  if (root.has("pool")) {
    const Node p = root.child("pool");
    if (p.has("total_iops")) s.pool_total_iops = non_negative(p, "total_iops", p.number("total_iops"));
    p.reject_unknown();
  }
  if (root.has("contention")) {
    const auto c = root.string("contention");
    if (c == "efficiency") s.contention = ContentionStrategy::efficiency;
    else if (c == "fairness") s.contention = ContentionStrategy::fairness;
    else throw ConfigError("contention", "expected efficiency or fairness");
  }
  if (root.has("reports")) {
    const json& r = root.raw("reports");
    if (!r.is_array()) throw ConfigError("reports", "expected an array");
    s.reports.clear();
    for (std::size_t i = 0; i < r.size(); ++i) {
      const std::string where = "reports[" + std::to_string(i) + "]";
      if (!r[i].is_string()) throw ConfigError(where, "expected a string");
      const auto name = r[i].get<std::string>();
      if (std::find(kKnownReports.begin(), kKnownReports.end(), name) == kKnownReports.end()) {
        throw ConfigError(where, "unknown report '" + name + "'");
      }
      s.reports.push_back(name);
    }
  }

  const json* templates = nullptr;
  if (root.has("variants")) {
    templates = &root.raw("variants");
    if (!templates->is_object()) throw ConfigError("variants", "expected an object");
  }

  const json& vols = root.raw("volumes");
  if (!vols.is_array() || vols.empty()) throw ConfigError("volumes", "expected a non-empty array");
  std::set<std::string> ids;
  std::map<std::string, std::vector<TraceRecord>> cache;
  for (std::size_t i = 0; i < vols.size(); ++i) {
    const Node vn(vols[i], "volumes[" + std::to_string(i) + "]");
    ScenarioVolume v;
    v.id = vn.string("id");
    if (v.id.empty()) throw ConfigError(vn.at("id"), "must not be empty");
    if (!ids.insert(v.id).second) throw ConfigError(vn.at("id"), "duplicate volume id '" + v.id + "'");
    v.size_gb = non_negative(vn, "size_gb", vn.number("size_gb", 100.0));

    const bool has_trace = vn.has("trace");
    const bool has_synth = vn.has("synthetic");
    if (has_trace == has_synth) {
      throw ConfigError(vn.at("trace"), "exactly one of 'trace' or 'synthetic' is required");
    }
    if (has_trace) {
      const Node t = vn.child("trace");
      TraceSource src;
      src.path = resolve_path(base_dir, t.string("path")).string();
      if (!std::filesystem::is_regular_file(src.path)) {
        throw ConfigError(t.at("path"), "trace file not found: " + src.path);
      }
      if (t.has("volume")) src.source_volume = t.string("volume");
      t.reject_unknown();
      v.source = src;
    } else {
      const Node sn = vn.child("synthetic");
      SyntheticSource src;
      if (sn.has("seed")) src.seed = sn.integer("seed");
      const json& phases = sn.raw("phases");
      if (!phases.is_array() || phases.empty()) {
        throw ConfigError(sn.at("phases"), "expected a non-empty array");
      }
      for (std::size_t k = 0; k < phases.size(); ++k) {
        const Node pn(phases[k], sn.at("phases") + "[" + std::to_string(k) + "]");
        SyntheticPhaseSpec ph;
        ph.duration = pn.integer("duration");
        ph.target_iops = pn.integer("target_iops");
        ph.read_fraction = pn.number("read_fraction", 1.0);
        if (ph.read_fraction < 0 || ph.read_fraction > 1) {
          throw ConfigError(pn.at("read_fraction"), "must lie in [0, 1]");
        }
        if (pn.has("request_size")) {
          ph.request_size = pn.integer("request_size");
          if (ph.request_size == 0) throw ConfigError(pn.at("request_size"), "must be > 0");
        }
        pn.reject_unknown();
        src.phases.push_back(ph);
      }
      sn.reject_unknown();
      v.source = src;
    }

    // Percentile-relative parameters need this volume's arrivals.
    IopsSeries series;
    bool series_ready = false;
    const auto volume_series = [&]() -> const IopsSeries* {
      if (!series_ready) {
        try {
          const auto records = load_records(v, s.seed, cache);
          const std::size_t h = s.horizon.value_or(source_horizon(v, records));
          series = bin_iops(records, h);
        } catch (const std::exception& e) {
          throw ConfigError(vn.path(), e.what());
        }
        series_ready = true;
      }
      return &series;
    };
    const auto needs_series = [](const json& p) {
      return p.is_object() && (p.contains("cap_percentile") || p.contains("baseline_iops_percentile"));
    };

    if (vn.has("policy")) {
      const json& p = vn.raw("policy");
      v.policy = parse_policy(Node(p, vn.at("policy")), v.size_gb,
                              needs_series(p) ? volume_series() : nullptr);
    }
    std::map<std::string, const json*> variant_docs;
    std::map<std::string, std::string> variant_paths;
    if (templates) {
      for (const auto& [name, p] : templates->items()) {
        variant_docs[name] = &p;
        variant_paths[name] = "variants." + name;
      }
    }
    if (vn.has("variants")) {
      const json& own = vn.raw("variants");
      if (!own.is_object()) throw ConfigError(vn.at("variants"), "expected an object");
      for (const auto& [name, p] : own.items()) {
        variant_docs[name] = &p;
        variant_paths[name] = vn.at("variants") + "." + name;
      }
    }
    for (const auto& [name, p] : variant_docs) {
      v.variants[name] = parse_policy(Node(*p, variant_paths[name]), v.size_gb,
                                      needs_series(*p) ? volume_series() : nullptr);
    }
    vn.reject_unknown();
    s.volumes.push_back(std::move(v));
  }
  root.reject_unknown();

  try {
    engine_config(s).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("volumes", e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
  return scenario_from_json(doc, std::filesystem::absolute(path).parent_path());
}

json policy_to_json(const PolicyConfig& policy) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, StaticPolicy>) {
          return {{"kind", "static"}, {"cap", p.cap}};
        } else if constexpr (std::is_same_v<P, LeakyBucketPolicy>) {
          return {{"kind", "leaky_bucket"},
                  {"baseline_iops", p.baseline_iops},
                  {"burst_iops", p.burst_iops},
                  {"max_balance", p.max_balance},
                  {"initial_balance", p.initial_balance}};
        } else if constexpr (std::is_same_v<P, GStatesPolicy>) {
          return {{"kind", "gstates"},
                  {"baseline_iops", p.baseline_iops},
                  {"num_levels", p.num_levels},
                  {"promote_factor", p.promote_threshold_factor},
                  {"util_threshold", p.util_threshold},
                  {"io_type", std::string(to_string(p.io_type))},
                  {"pool", p.pool_mode}};
        } else {
          return {{"kind", "unlimited"}};
        }
      },
      policy);
}

json to_json(const Scenario& s) {
  json doc;
  doc["name"] = s.name;
  doc["seed"] = s.seed;
  if (s.horizon) doc["horizon"] = *s.horizon;
  doc["device"] = {{"max_read_iops", s.device.max_read_iops},
                   {"max_write_iops", s.device.max_write_iops},
                   {"max_read_bw", s.device.max_read_bw},
                   {"max_write_bw", s.device.max_write_bw}};
  doc["abandonment"] = {{"enabled", s.abandonment.enabled},
                        {"threshold_s", s.abandonment.threshold_s}};
  doc["pricing"] = {{"per_gb_month", s.pricing.per_gb_rate},
                    {"per_iops_month", s.pricing.per_iops_rate},
                    {"seconds_per_month", s.pricing.seconds_per_month}};
  doc["pool"] = json::object();
  if (s.pool_total_iops) doc["pool"]["total_iops"] = *s.pool_total_iops;
  doc["contention"] = std::string(to_string(s.contention));
  doc["reports"] = s.reports;
  doc["volumes"] = json::array();
  for (const auto& v : s.volumes) {
    json jv;
    jv["id"] = v.id;
    jv["size_gb"] = v.size_gb;
    jv["policy"] = policy_to_json(v.policy);
    if (!v.variants.empty()) {
      jv["variants"] = json::object();
      for (const auto& [name, p] : v.variants) jv["variants"][name] = policy_to_json(p);
    }
    if (const auto* t = std::get_if<TraceSource>(&v.source)) {
      jv["trace"] = {{"path", t->path}};
      if (t->source_volume) jv["trace"]["volume"] = *t->source_volume;
    } else {
      const auto& syn = std::get<SyntheticSource>(v.source);
      jv["synthetic"]["phases"] = json::array();
      for (const auto& ph : syn.phases) {
        jv["synthetic"]["phases"].push_back({{"duration", ph.duration},
                                             {"target_iops", ph.target_iops},
                                             {"read_fraction", ph.read_fraction},
                                             {"request_size", ph.request_size}});
      }
      if (syn.seed) jv["synthetic"]["seed"] = *syn.seed;
    }
    doc["volumes"].push_back(std::move(jv));
  }
  return doc;
}

std::string scenario_hash(const Scenario& scenario) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(scenario).dump())));
  return buf;
}

Workload materialize(const Scenario& scenario) {
  Workload w;
  std::map<std::string, std::vector<TraceRecord>> cache;
  std::size_t longest = 0;
  for (const auto& v : scenario.volumes) {
    w.records.push_back(load_records(v, scenario.seed, cache));
    longest = std::max(longest, source_horizon(v, w.records.back()));
  }
  w.horizon = scenario.horizon.value_or(longest);
  for (std::size_t i = 0; i < scenario.volumes.size(); ++i) {
    try {
      w.arrivals.push_back(bin_arrivals(w.records[i], w.horizon));
    } catch (const std::out_of_range& e) {
      throw ConfigError("volumes[" + std::to_string(i) + "]", e.what());
    }
  }
  return w;
}

EngineConfig engine_config(const Scenario& s, const std::optional<std::string>& variant) {
  EngineConfig cfg;
  cfg.device = s.device;
  cfg.abandonment = s.abandonment;
  cfg.pool_total_iops = s.pool_total_iops;
  cfg.contention = s.contention;
  for (std::size_t i = 0; i < s.volumes.size(); ++i) {
    const auto& v = s.volumes[i];
    VolumeSpec spec{v.id, v.size_gb, v.policy};
    if (variant) {
      const auto it = v.variants.find(*variant);
      if (it == v.variants.end()) {
        throw ConfigError("volumes[" + std::to_string(i) + "].variants",
                          "no policy variant named '" + *variant + "'");
      }
      spec.policy = it->second;
    }
    cfg.volumes.push_back(std::move(spec));
  }
  return cfg;
}

}  // namespace iogears
