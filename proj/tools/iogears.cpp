// iogears command-line front end: replay, compare, analyze, synth.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iogears/report.hpp"
#include "iogears/scenario.hpp"
#include "iogears/trace_io.hpp"

namespace {

using namespace iogears;

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Scenario scenario_with_seed(const std::string& path, const std::optional<std::uint64_t>& seed) {
  Scenario s = load_scenario(path);
  if (seed) s.seed = *seed;
  return s;
}

// "20x500,20x1000:0.7" -> phases of duration x iops[:read_fraction].
std::vector<SyntheticPhaseSpec> parse_phases(const std::string& text) {
  std::vector<SyntheticPhaseSpec> phases;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, end - start);
    SyntheticPhaseSpec ph;
    try {
      const auto x = item.find('x');
      if (x == std::string::npos) throw std::invalid_argument(item);
      std::size_t used = 0;
      ph.duration = std::stoull(item.substr(0, x), &used);
      if (used != x) throw std::invalid_argument(item);
      std::string rest = item.substr(x + 1);
      const auto colon = rest.find(':');
      if (colon != std::string::npos) {
        ph.read_fraction = std::stod(rest.substr(colon + 1));
        rest.resize(colon);
      }
      ph.target_iops = std::stoull(rest, &used);
      if (used != rest.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("bad phase '" + item + "', expected DURATIONxIOPS[:READ_FRACTION]");
    }
    if (ph.read_fraction < 0 || ph.read_fraction > 1) {
      throw ValidationError("read fraction out of [0, 1] in '" + item + "'");
    }
    phases.push_back(ph);
    start = end + 1;
  }
  return phases;
}

Scenario trace_scenario(const std::string& path) {
  const auto records = parse_trace_file(path);
  if (records.empty()) throw ValidationError(path + ": trace has no records");
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.volume_id);
  Scenario s;
  s.name = std::filesystem::path(path).stem().string();
  s.reports = {"iops_distribution", "multiplex"};
  for (const auto& id : ids) {
    ScenarioVolume v;
    v.id = id;
    v.source = TraceSource{std::filesystem::absolute(path).lexically_normal().string(), id};
    s.volumes.push_back(std::move(v));
  }
  return s;
}

void write_records(const std::string& out, const std::vector<TraceRecord>& records) {
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + out);
  write_trace(f, records);
  if (!f) throw std::runtime_error("failed writing " + out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-replay simulator for block-storage IOPS provisioning policies"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::string trace;
  std::string phases;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> policies;

  auto* replay_cmd = app.add_subcommand("replay", "Run one scenario with its configured policies");
  replay_cmd->add_option("--config", config, "Scenario file")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--out", out, "Report directory")->required();
  replay_cmd->add_option("--seed", seed, "Override the scenario seed");

  auto* compare_cmd = app.add_subcommand("compare", "Run policy variants over identical arrivals");
  compare_cmd->add_option("--config", config, "Scenario file")->required()->check(CLI::ExistingFile);
  compare_cmd->add_option("--out", out, "Report directory")->required();
  compare_cmd->add_option("--seed", seed, "Override the scenario seed");
  compare_cmd->add_option("--policy", policies, "Variant name (repeatable); default all");

  auto* analyze_cmd = app.add_subcommand("analyze", "Trace statistics and multiplex table");
  auto* analyze_config =
      analyze_cmd->add_option("--config", config, "Scenario file")->check(CLI::ExistingFile);
  auto* analyze_trace =
      analyze_cmd->add_option("--trace", trace, "CSV trace file")->check(CLI::ExistingFile);
  analyze_config->excludes(analyze_trace);
  analyze_cmd->add_option("--out", out, "Report directory")->required();
  analyze_cmd->add_option("--seed", seed, "Override the scenario seed");

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic trace file");
  auto* synth_config =
      synth_cmd->add_option("--config", config, "Scenario file")->check(CLI::ExistingFile);
  auto* synth_phases =
      synth_cmd->add_option("--phases", phases, "DURATIONxIOPS[:READ_FRACTION],...");
  synth_config->excludes(synth_phases);
  synth_cmd->add_option("--out", out, "Trace file to write")->required();
  synth_cmd->add_option("--seed", seed, "Seed (default 1, or the scenario seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*replay_cmd) {
      const auto bundle = replay(scenario_with_seed(config, seed));
      emit_reports(bundle, out);
      std::cout << "wrote reports to " << out << " (scenario " << bundle.scenario_hash << ")\n";
    } else if (*compare_cmd) {
      const auto bundle = compare_policies(scenario_with_seed(config, seed), policies);
      emit_reports(bundle, out);
      std::cout << "compared " << bundle.runs.size() << " policies, reports in " << out << "\n";
    } else if (*analyze_cmd) {
      if (config.empty() && trace.empty()) throw ValidationError("analyze needs --config or --trace");
      Scenario s = config.empty() ? trace_scenario(trace) : scenario_with_seed(config, seed);
      if (std::find(s.reports.begin(), s.reports.end(), "multiplex") == s.reports.end()) {
        s.reports.push_back("multiplex");
      }
      emit_reports(analyze(s), out);
      std::cout << "wrote trace statistics to " << out << "\n";
    } else if (*synth_cmd) {
      std::vector<TraceRecord> records;
      if (!phases.empty()) {
        records = generate_synthetic(parse_phases(phases), seed.value_or(1));
      } else if (!config.empty()) {
        Scenario s = scenario_with_seed(config, seed);
        for (const auto& v : s.volumes) {
          if (!std::holds_alternative<SyntheticSource>(v.source)) {
            throw ValidationError("volume '" + v.id + "' is not synthetic");
          }
        }
        for (auto& vr : materialize(s).records) records.insert(records.end(), vr.begin(), vr.end());
        std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
          return a.timestamp_us < b.timestamp_us;
        });
      } else {
        throw ValidationError("synth needs --config or --phases");
      }
      write_records(out, records);
      std::cout << "wrote " << records.size() << " records to " << out << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kValidation;
  } catch (const ParseError& e) {
    std::cerr << "trace error: " << e.what() << "\n";
    return kValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
