#pragma once

#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace iogears {

/// Raised when a caller breaks an operation's precondition contract, e.g.
/// executing a promotion the judge could never have issued.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Ordered IOPS caps G0..G(n-1) with cap(i) = G0 * 2^i.
class GearTable {
 public:
  GearTable(double baseline_iops, int num_levels);

  double baseline() const { return baseline_; }
  int num_levels() const { return num_levels_; }
  int top_level() const { return num_levels_ - 1; }
  double cap(int level) const;
  std::vector<double> caps() const;

  bool operator==(const GearTable&) const = default;

 private:
  double baseline_;
  int num_levels_;
};

GearTable build_gears(double baseline_iops, int num_levels);

enum class TuneDecision { none, promote, demote };
std::string_view to_string(TuneDecision d);

/// Which monitored counter drives the gear ladder. The cap itself always
/// throttles total IOPS.
enum class IoType { total, read, write };
std::string_view to_string(IoType t);

struct GStateState {
  int level = 0;
  double promote_threshold_factor = 0.95;
  double util_threshold = 0.9;

  bool operator==(const GStateState&) const = default;
};

/// Gear judgment. Promote when the observed rate is above
/// factor * cap(level), a higher gear exists and the device is below its
/// utilization threshold; demote when the rate has fallen under the next
/// lower gear's cap.
TuneDecision tune_judge(const GStateState& state, const GearTable& gears, double observed_iops,
                        double device_util);

/// Applies a decision: promote doubles the cap, demote halves it.
/// Throws ContractError on promote at the top gear or demote at G0.
std::pair<GStateState, double> tune_execute(const GStateState& state, TuneDecision decision,
                                            const GearTable& gears);

/// Leaky-bucket I/O credits. One credit is one request.
struct CreditState {
  double balance = 0.0;
  double max_balance = 5.4e6;
  double baseline_iops = 0.0;
  double burst_iops = 3000.0;

  void validate() const;
  bool operator==(const CreditState&) const = default;
};

/// Most a credit volume may serve this second: baseline plus spendable credits,
/// never above burst.
double credit_allowance(const CreditState& state);

struct CreditStep {
  double allowed = 0.0;
  CreditState state;
};

/// Unused baseline accrues as credits (up to max_balance); service above
/// baseline spends them.
CreditStep credit_step(const CreditState& state, double demand);

/// Shared-reservation admission: the idle part of the pool must cover the
/// promotion. Equality admits.
bool pool_admit(double pool_unused_iops, double promotion_delta);

struct PromotionCandidate {
  std::string volume_id;
  double promotion_delta = 0.0;
  double unmet_demand = 0.0;
  int level = 0;
};

enum class ContentionStrategy { efficiency, fairness };
std::string_view to_string(ContentionStrategy s);

/// Greedy selection of promotions that fit in `headroom_iops`.
///
/// efficiency: descending expected utilization gain min(unmet, delta).
/// fairness:   ascending current level.
/// Ties go to the smaller volume id; candidates whose delta exceeds the
/// remaining headroom are skipped, not terminal.
std::set<std::string> resolve_contention(std::span<const PromotionCandidate> candidates,
                                         double headroom_iops,
                                         ContentionStrategy strategy = ContentionStrategy::efficiency);

struct StaticPolicy {
  double cap = 0.0;
  bool operator==(const StaticPolicy&) const = default;
};

struct LeakyBucketPolicy {
  double baseline_iops = 0.0;
  double burst_iops = 3000.0;
  double max_balance = 5.4e6;
  double initial_balance = 0.0;
  bool operator==(const LeakyBucketPolicy&) const = default;
};

struct GStatesPolicy {
  double baseline_iops = 0.0;
  int num_levels = 4;
  double promote_threshold_factor = 0.95;
  double util_threshold = 0.9;
  IoType io_type = IoType::total;
  bool pool_mode = false;
  bool operator==(const GStatesPolicy&) const = default;
};

struct UnlimitedPolicy {
  bool operator==(const UnlimitedPolicy&) const = default;
};

using PolicyConfig = std::variant<StaticPolicy, LeakyBucketPolicy, GStatesPolicy, UnlimitedPolicy>;

enum class PolicyKind { static_cap, leaky_bucket, gstates, unlimited };
PolicyKind kind_of(const PolicyConfig& config);
std::string_view to_string(PolicyKind k);
PolicyKind policy_kind_from_string(std::string_view name);

/// Throws std::invalid_argument naming the offending parameter.
void validate_policy(const PolicyConfig& config);

}  // namespace iogears
