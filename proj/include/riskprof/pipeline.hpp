#pragma once

#include <array>
#include <chrono>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include "riskprof/config.hpp"

namespace riskprof {

/// Raised when a stage's upstream artifact is missing (exit code 2).
class StageDependencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Stage { Simulate, Ingest, Smooth, Assoc, ProfileEval, Fit, Compare, Report };

inline constexpr std::array<Stage, 8> kAllStages{Stage::Simulate, Stage::Ingest,
                                                 Stage::Smooth,   Stage::Assoc,
                                                 Stage::ProfileEval, Stage::Fit,
                                                 Stage::Compare,  Stage::Report};

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view text);

struct StageRecord {
  Stage stage = Stage::Simulate;
  std::string seed;  // empty for deterministic stages
  std::string config_digest;
  std::string inputs_digest;
  std::string outputs_digest;
  std::chrono::duration<double> duration{};
  bool skipped = false;
};

/// Runs stages against one output directory. Each stage reads only its
/// upstream artifacts, writes its own directory, and records a line in
/// manifest.tsv (stage, seed, config digest, inputs digest, outputs digest).
/// Wall-clock durations are reported on the log stream, not the manifest, so
/// reruns stay byte-identical.
class Pipeline {
 public:
  Pipeline(RunConfig config, std::ostream& log);

  StageRecord run(Stage stage);
  /// All stages in order; simulate is skipped when the config names an input.
  std::vector<StageRecord> run_all();

  const RunConfig& config() const { return config_; }

 private:
  StageRecord simulate();
  StageRecord ingest();
  StageRecord smooth();
  StageRecord assoc();
  StageRecord profile_eval();
  StageRecord fit();
  StageRecord compare();
  StageRecord report();

  void record(const StageRecord& r);

  RunConfig config_;
  std::ostream& log_;
};

/// CLI entry: runs `subcommand` (a stage name or "all") and maps errors to
/// exit codes 0 success, 1 validation, 2 stage dependency, 3 numerical.
int run_subcommand(std::string_view subcommand, const RunConfig& config, std::ostream& log);

}  // namespace riskprof
