#include "iogears/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace iogears {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = 1e-9;

// Index of the first whole particle at or after fluid position x, snapping
// values within rounding noise of an integer.
double first_particle(double x) { return std::ceil(x - 1e-6); }

}  // namespace

void EngineConfig::validate() const {
  device.validate();
  std::set<std::string> ids;
  for (const auto& v : volumes) {
    if (v.id.empty()) throw std::invalid_argument("volume id must not be empty");
    if (!ids.insert(v.id).second) throw std::invalid_argument("duplicate volume id '" + v.id + "'");
    if (v.size_gb < 0) throw std::invalid_argument("volume '" + v.id + "': size_gb must be >= 0");
    try {
      validate_policy(v.policy);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("volume '" + v.id + "': " + e.what());
    }
  }
  if (abandonment.enabled && !(abandonment.threshold_s > 0)) {
    throw std::invalid_argument("abandonment threshold must be > 0");
  }
  if (pool_total_iops && *pool_total_iops < 0) {
    throw std::invalid_argument("pool total_iops must be >= 0");
  }
}

TickArrivals arrivals_at(const ArrivalSeries& series, std::size_t tick) {
  if (tick >= series.size()) return {};
  return {series.iops.read[tick], series.iops.write[tick], series.read_bytes[tick],
          series.write_bytes[tick]};
}

Engine::Engine(EngineConfig config) : config_(std::move(config)) {
  config_.validate();
  double pool_baselines = 0.0;
  for (const auto& spec : config_.volumes) {
    Runtime rt;
    rt.result.id = spec.id;
    rt.result.kind = kind_of(spec.policy);
    rt.result.size_gb = spec.size_gb;
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, StaticPolicy>) {
            rt.state = p;
            rt.gears = GearTable(p.cap, 1);
          } else if constexpr (std::is_same_v<P, LeakyBucketPolicy>) {
            rt.state = CreditState{p.initial_balance, p.max_balance, p.baseline_iops, p.burst_iops};
            if (p.baseline_iops >= 1.0) rt.gears = GearTable(p.baseline_iops, 1);
          } else if constexpr (std::is_same_v<P, GStatesPolicy>) {
            rt.state = GStateState{0, p.promote_threshold_factor, p.util_threshold};
            rt.gears = GearTable(p.baseline_iops, p.num_levels);
            rt.io_type = p.io_type;
            rt.pool_member = p.pool_mode;
            if (p.pool_mode) pool_baselines += p.baseline_iops;
          } else {
            rt.state = p;
          }
        },
        spec.policy);
    rt.result.billing_gears = rt.gears;
    volumes_.push_back(std::move(rt));
  }
  pool_total_ = config_.pool_total_iops.value_or(pool_baselines);
}

double Engine::policy_cap(const Runtime& rt) const {
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, StaticPolicy>) {
          return s.cap;
        } else if constexpr (std::is_same_v<S, CreditState>) {
          return credit_allowance(s);
        } else if constexpr (std::is_same_v<S, GStateState>) {
          return rt.gears->cap(s.level);
        } else {
          return kInf;
        }
      },
      rt.state);
}

double Engine::current_cap(std::size_t v) const { return policy_cap(volumes_.at(v)); }

int Engine::current_level(std::size_t v) const {
  const auto* g = std::get_if<GStateState>(&volumes_.at(v).state);
  return g ? g->level : -1;
}

double Engine::queued(std::size_t v) const {
  double q = 0.0;
  for (const auto& seg : volumes_.at(v).queue) q += seg.hi - seg.lo;
  return q;
}

void Engine::drain(Runtime& rt, double backlog, double arrivals, double granted, double rate,
                   VolumeTick& out) {
  const double now = static_cast<double>(tick_);
  // Fluid served while the queue is non-empty; past that point the volume
  // keeps pace with arrivals and requests leave the moment they arrive.
  double backlog_phase;
  if (std::isinf(rate)) {
    backlog_phase = backlog;
  } else if (backlog <= kEps) {
    backlog_phase = rate >= arrivals ? 0.0 : rate;
  } else if (rate > arrivals) {
    backlog_phase = rate * std::min(1.0, backlog / (rate - arrivals));
  } else {
    backlog_phase = rate;
  }

  double remaining = granted;
  double ahead = 0.0;
  while (remaining > kEps && !rt.queue.empty()) {
    Segment& seg = rt.queue.front();
    const double take = std::min(seg.hi - seg.lo, remaining);
    const double j_end = std::min(first_particle(seg.lo + take), first_particle(seg.hi));
    for (double j = first_particle(seg.lo); j < j_end; j += 1.0) {
      const double arrival = static_cast<double>(seg.tick) + j / seg.count;
      const double k = ahead + (j - seg.lo);
      double done = arrival;
      if (k < backlog_phase) done = std::isinf(rate) ? now : now + k / rate;
      rt.result.latencies.push_back(static_cast<float>(std::max(0.0, done - arrival)));
    }
    out.served_reads += take * seg.read_fraction;
    out.served_writes += take * (1.0 - seg.read_fraction);
    out.served_read_bytes += take * seg.read_fraction * seg.read_size;
    out.served_write_bytes += take * (1.0 - seg.read_fraction) * seg.write_size;
    seg.lo += take;
    ahead += take;
    remaining -= take;
    if (seg.hi - seg.lo <= kEps) rt.queue.pop_front();
  }
}

double Engine::abandon_tail(Runtime& rt, double amount) {
  double left = amount;
  while (left > kEps && !rt.queue.empty()) {
    Segment& seg = rt.queue.back();
    const double take = std::min(seg.hi - seg.lo, left);
    seg.hi -= take;
    left -= take;
    if (seg.hi - seg.lo <= kEps) rt.queue.pop_back();
  }
  return amount - std::max(0.0, left);
}

const TickLog& Engine::step(std::span<const TickArrivals> arrivals) {
  if (arrivals.size() != volumes_.size()) {
    throw std::invalid_argument("step needs one arrival entry per volume");
  }
  const std::size_t n = volumes_.size();
  TickLog log;
  log.tick = tick_;
  log.volumes.resize(n);

  // (1)-(2): enqueue arrivals, cap demand by policy.
  std::vector<double> backlog(n), demand(n), caps(n), read_share(n);
  for (std::size_t v = 0; v < n; ++v) {
    Runtime& rt = volumes_[v];
    const TickArrivals& a = arrivals[v];
    backlog[v] = queued(v);
    const double count = static_cast<double>(a.total());
    if (a.total() > 0) {
      rt.queue.push_back(Segment{
          tick_, count, 0.0, count, static_cast<double>(a.reads) / count,
          a.reads > 0 ? a.read_bytes / static_cast<double>(a.reads) : 0.0,
          a.writes > 0 ? a.write_bytes / static_cast<double>(a.writes) : 0.0});
    }
    demand[v] = backlog[v] + count;
    double reads = 0.0;
    for (const auto& seg : rt.queue) reads += (seg.hi - seg.lo) * seg.read_fraction;
    read_share[v] = demand[v] > 0 ? reads / demand[v] : 0.0;
    caps[v] = policy_cap(rt);

    VolumeTick& vt = log.volumes[v];
    vt.arrivals = count;
    vt.cap = caps[v];
    if (const auto* g = std::get_if<GStateState>(&rt.state)) vt.level = g->level;
  }

  // (3): shared reservation pool first, then the device.
  std::vector<double> limits = caps;
  if (std::any_of(volumes_.begin(), volumes_.end(),
                  [](const Runtime& r) { return r.pool_member; })) {
    std::vector<std::size_t> members;
    std::vector<double> member_demand, member_caps;
    for (std::size_t v = 0; v < n; ++v) {
      if (!volumes_[v].pool_member) continue;
      members.push_back(v);
      member_demand.push_back(demand[v]);
      member_caps.push_back(caps[v]);
    }
    const auto pooled = device_allocate(member_demand, member_caps, pool_total_);
    for (std::size_t i = 0; i < members.size(); ++i) limits[members[i]] = pooled[i];
  }
  double read_demand = 0.0, write_demand = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const double capped = std::min(demand[v], limits[v]);
    read_demand += capped * read_share[v];
    write_demand += capped * (1.0 - read_share[v]);
  }
  const double capacity = effective_iops_capacity(config_.device, read_demand, write_demand);
  const auto grants = device_allocate(demand, limits, capacity);

  // (4)-(5): drain FIFO, then abandon overdue tail.
  std::vector<double> rates(n);
  for (std::size_t v = 0; v < n; ++v) {
    Runtime& rt = volumes_[v];
    VolumeTick& vt = log.volumes[v];
    const double g = grants[v];
    const bool throttled = g < demand[v] - kEps * std::max(1.0, demand[v]);
    rates[v] = throttled ? g : (std::isinf(caps[v]) ? kInf : std::max(caps[v], g));
    vt.granted = g;
    drain(rt, backlog[v], vt.arrivals, g, rates[v], vt);

    if (config_.abandonment.enabled) {
      const double left = queued(v);
      vt.abandoned = abandon_tail(rt, abandon_overdue(left, rates[v], config_.abandonment.threshold_s));
    }
    vt.queue_after = std::max(0.0, backlog[v] + vt.arrivals - g - vt.abandoned);

    rt.result.total_arrivals += vt.arrivals;
    rt.result.total_granted += g;
    rt.result.total_abandoned += vt.abandoned;
  }

  // (6): device counters over the just-completed tick.
  for (std::size_t v = 0; v < n; ++v) {
    const VolumeTick& vt = log.volumes[v];
    log.counters.riops += vt.served_reads;
    log.counters.wiops += vt.served_writes;
    log.counters.rbw += vt.served_read_bytes;
    log.counters.wbw += vt.served_write_bytes;
  }
  log.utilization = storage_util(log.counters, config_.device);

  // (7): gear decisions, effective next tick.
  std::vector<PromotionCandidate> candidates;
  std::vector<std::size_t> candidate_index;
  double pool_used = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    Runtime& rt = volumes_[v];
    VolumeTick& vt = log.volumes[v];
    if (rt.pool_member) pool_used += vt.granted;
    if (auto* credit = std::get_if<CreditState>(&rt.state)) {
      *credit = credit_step(*credit, vt.granted).state;
      vt.credit_balance = credit->balance;
      continue;
    }
    auto* gs = std::get_if<GStateState>(&rt.state);
    if (!gs) continue;
    const double observed = rt.io_type == IoType::total  ? vt.granted
                            : rt.io_type == IoType::read ? vt.served_reads
                                                         : vt.served_writes;
    const TuneDecision d = tune_judge(*gs, *rt.gears, observed, log.utilization);
    if (d == TuneDecision::promote && rt.pool_member) {
      candidates.push_back({rt.result.id, rt.gears->cap(gs->level + 1) - rt.gears->cap(gs->level),
                            std::max(0.0, demand[v] - vt.granted), gs->level});
      candidate_index.push_back(v);
      continue;
    }
    *gs = tune_execute(*gs, d, *rt.gears).first;
    vt.decision = d;
  }
  if (!candidates.empty()) {
    const auto chosen =
        resolve_contention(candidates, pool_total_ - pool_used, config_.contention);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      Runtime& rt = volumes_[candidate_index[i]];
      VolumeTick& vt = log.volumes[candidate_index[i]];
      auto& gs = std::get<GStateState>(rt.state);
      if (chosen.contains(candidates[i].volume_id)) {
        gs = tune_execute(gs, TuneDecision::promote, *rt.gears).first;
        vt.decision = TuneDecision::promote;
      } else {
        vt.promotion_denied = true;
      }
    }
  }

  // (8): meter what was reserved during this tick.
  for (std::size_t v = 0; v < n; ++v) {
    Runtime& rt = volumes_[v];
    VolumeTick& vt = log.volumes[v];
    if (const auto* gs = std::get_if<GStateState>(&rt.state)) vt.next_level = gs->level;
    if (!rt.gears) continue;
    const int metered = vt.level >= 0 ? vt.level : 0;
    rt.result.ledger.add(metered, 1.0);
    vt.billed_iops = rt.gears->cap(metered);
  }

  ++tick_;
  logs_.push_back(std::move(log));
  return logs_.back();
}

SimulationResult Engine::finish() && {
  SimulationResult out;
  out.horizon = static_cast<std::size_t>(tick_);
  out.ticks = std::move(logs_);
  for (std::size_t v = 0; v < volumes_.size(); ++v) {
    volumes_[v].result.final_queue = queued(v);
    out.volumes.push_back(std::move(volumes_[v].result));
  }
  return out;
}

SimulationResult run(const EngineConfig& config, std::span<const ArrivalSeries> arrivals) {
  if (arrivals.size() != config.volumes.size()) {
    throw std::invalid_argument("run needs one arrival series per volume");
  }
  std::size_t horizon = 0;
  for (const auto& a : arrivals) horizon = std::max(horizon, a.size());
  Engine engine(config);
  std::vector<TickArrivals> tick(arrivals.size());
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t v = 0; v < arrivals.size(); ++v) tick[v] = arrivals_at(arrivals[v], t);
    engine.step(tick);
  }
  return std::move(engine).finish();
}

double fluid_latency(double position, double service_rate) {
  if (!(service_rate > 0)) throw std::invalid_argument("service_rate must be > 0");
  return std::max(0.0, position) / service_rate;
}

double fluid_latency(double position, std::span<const double> rates_per_tick) {
  double ahead = std::max(0.0, position);
  double elapsed = 0.0;
  for (const double rate : rates_per_tick) {
    if (rate > 0 && ahead < rate) return elapsed + ahead / rate;
    ahead -= std::max(0.0, rate);
    elapsed += 1.0;
  }
  return kInf;
}

double abandon_overdue(double queue, double service_rate, double threshold) {
  if (queue <= 0) return 0.0;
  if (std::isinf(service_rate)) return 0.0;
  return std::max(0.0, queue - std::max(0.0, service_rate) * threshold);
}

}  // namespace iogears
