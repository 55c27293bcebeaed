#include "iogears/policy.hpp"

#include <algorithm>
#include <cmath>

namespace iogears {

GearTable::GearTable(double baseline_iops, int num_levels)
    : baseline_(baseline_iops), num_levels_(num_levels) {
  if (!(baseline_iops >= 1.0)) throw std::invalid_argument("baseline_iops must be >= 1");
  if (num_levels < 1) throw std::invalid_argument("num_levels must be >= 1");
  if (num_levels > 52) throw std::invalid_argument("num_levels must be <= 52");
}

double GearTable::cap(int level) const {
  if (level < 0 || level >= num_levels_) {
    throw std::out_of_range("gear level " + std::to_string(level) + " outside [0, " +
                            std::to_string(num_levels_ - 1) + "]");
  }
  return std::ldexp(baseline_, level);
}

std::vector<double> GearTable::caps() const {
  std::vector<double> out;
  for (int i = 0; i < num_levels_; ++i) out.push_back(cap(i));
  return out;
}

GearTable build_gears(double baseline_iops, int num_levels) {
  return GearTable(baseline_iops, num_levels);
}

std::string_view to_string(TuneDecision d) {
  switch (d) {
    case TuneDecision::promote: return "promote";
    case TuneDecision::demote: return "demote";
    case TuneDecision::none: break;
  }
  return "none";
}

std::string_view to_string(IoType t) {
  switch (t) {
    case IoType::read: return "read";
    case IoType::write: return "write";
    case IoType::total: break;
  }
  return "total";
}

TuneDecision tune_judge(const GStateState& state, const GearTable& gears, double observed_iops,
                        double device_util) {
  const int level = state.level;
  if (observed_iops > gears.cap(level) * state.promote_threshold_factor &&
      level < gears.top_level() && device_util < state.util_threshold) {
    return TuneDecision::promote;
  }
  if (level > 0 && observed_iops < gears.cap(level - 1)) return TuneDecision::demote;
  return TuneDecision::none;
}

std::pair<GStateState, double> tune_execute(const GStateState& state, TuneDecision decision,
                                            const GearTable& gears) {
  GStateState next = state;
  switch (decision) {
    case TuneDecision::promote:
      if (state.level >= gears.top_level()) {
        throw ContractError("promote requested at top gear " + std::to_string(state.level));
      }
      ++next.level;
      break;
    case TuneDecision::demote:
      if (state.level <= 0) throw ContractError("demote requested at G0");
      --next.level;
      break;
    case TuneDecision::none:
      break;
  }
  return {next, gears.cap(next.level)};
}

void CreditState::validate() const {
  if (baseline_iops < 0) throw std::invalid_argument("baseline_iops must be >= 0");
  if (burst_iops < baseline_iops) throw std::invalid_argument("burst_iops must be >= baseline_iops");
  if (max_balance < 0) throw std::invalid_argument("max_balance must be >= 0");
  if (balance < 0 || balance > max_balance) {
    throw std::invalid_argument("credit balance must lie in [0, max_balance]");
  }
}

double credit_allowance(const CreditState& s) {
  return s.baseline_iops + std::min(s.balance, s.burst_iops - s.baseline_iops);
}

CreditStep credit_step(const CreditState& state, double demand) {
  CreditStep out{std::min(std::max(demand, 0.0), credit_allowance(state)), state};
  auto& next = out.state;
  if (out.allowed < state.baseline_iops) {
    next.balance = std::min(state.max_balance, state.balance + (state.baseline_iops - out.allowed));
  } else {
    next.balance = std::max(0.0, state.balance - (out.allowed - state.baseline_iops));
  }
  return out;
}

bool pool_admit(double pool_unused_iops, double promotion_delta) {
  return pool_unused_iops >= promotion_delta;
}

std::string_view to_string(ContentionStrategy s) {
  return s == ContentionStrategy::fairness ? "fairness" : "efficiency";
}

std::set<std::string> resolve_contention(std::span<const PromotionCandidate> candidates,
                                         double headroom_iops, ContentionStrategy strategy) {
  std::vector<const PromotionCandidate*> order;
  for (const auto& c : candidates) order.push_back(&c);
  const auto gain = [](const PromotionCandidate* c) {
    return std::min(c->unmet_demand, c->promotion_delta);
  };
  std::sort(order.begin(), order.end(), [&](const PromotionCandidate* a, const PromotionCandidate* b) {
    if (strategy == ContentionStrategy::efficiency) {
      if (gain(a) != gain(b)) return gain(a) > gain(b);
    } else if (a->level != b->level) {
      return a->level < b->level;
    }
    return a->volume_id < b->volume_id;
  });

  std::set<std::string> chosen;
  double remaining = headroom_iops;
  for (const auto* c : order) {
    if (pool_admit(remaining, c->promotion_delta)) {
      chosen.insert(c->volume_id);
      remaining -= c->promotion_delta;
    }
  }
  return chosen;
}

PolicyKind kind_of(const PolicyConfig& config) {
  return static_cast<PolicyKind>(config.index());
}

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::static_cap: return "static";
    case PolicyKind::leaky_bucket: return "leaky_bucket";
    case PolicyKind::gstates: return "gstates";
    case PolicyKind::unlimited: break;
  }
  return "unlimited";
}

PolicyKind policy_kind_from_string(std::string_view name) {
  if (name == "static") return PolicyKind::static_cap;
  if (name == "leaky_bucket") return PolicyKind::leaky_bucket;
  if (name == "gstates") return PolicyKind::gstates;
  if (name == "unlimited") return PolicyKind::unlimited;
  throw std::invalid_argument("unknown policy kind '" + std::string(name) + "'");
}

void validate_policy(const PolicyConfig& config) {
  struct Visitor {
    void operator()(const StaticPolicy& p) const {
      if (!(p.cap >= 1.0)) throw std::invalid_argument("cap must be >= 1");
    }
    void operator()(const LeakyBucketPolicy& p) const {
      CreditState{p.initial_balance, p.max_balance, p.baseline_iops, p.burst_iops}.validate();
    }
    void operator()(const GStatesPolicy& p) const {
      GearTable(p.baseline_iops, p.num_levels);
      if (!(p.promote_threshold_factor > 0.0 && p.promote_threshold_factor <= 1.0)) {
        throw std::invalid_argument("promote_threshold_factor must lie in (0, 1]");
      }
      if (!(p.util_threshold > 0.0)) throw std::invalid_argument("util_threshold must be > 0");
    }
    void operator()(const UnlimitedPolicy&) const {}
  };
  std::visit(Visitor{}, config);
}

}  // namespace iogears
