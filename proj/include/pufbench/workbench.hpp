#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pufbench/config_file.hpp"
#include "pufbench/dataset.hpp"
#include "pufbench/error.hpp"
#include "pufbench/learn/learner_config.hpp"
#include "pufbench/puf.hpp"

namespace pufbench {

enum class ReportFormat { Csv, Json };
ReportFormat parse_report_format(std::string_view name);

/// One experiment. Everything below the output directory is a function of these fields.
///
/// Keys: seed, scale, puf.*, dataset.count, dataset.seed, split.seed, learners (comma list),
/// learner.<family>.<field> overrides, quality.devices, quality.challenges, quality.repeats,
/// quality.flip_rate, out. Seeds that are not given explicitly derive from `seed`.
struct ExperimentManifest {
  std::uint64_t seed = 0;
  learn::Scale scale = learn::Scale::Desk;
  PufConfig puf;
  std::size_t dataset_count = 20000;
  std::uint64_t dataset_seed = 0;
  std::uint64_t split_seed = 0;
  std::vector<learn::LearnerConfig> learners;
  std::size_t quality_devices = 16;
  std::size_t quality_challenges = 1000;
  std::size_t quality_repeats = 5;
  double quality_flip_rate = 0.05;
  std::filesystem::path output_dir = "run";

  void validate() const;
  static ExperimentManifest from_config(const ConfigFile& cfg);
  static ExperimentManifest load(const std::filesystem::path& path);
  /// Fully resolved keys, without the output directory.
  ConfigFile to_config() const;
  /// Digest of the canonical text; identifies a run independent of where it is written.
  std::uint64_t id() const;
};

/// The five attacks of the study, in report order.
std::vector<learn::LearnerFamily> paper_learners();

struct GenerateResult {
  std::size_t records = 0;
  std::uint64_t fingerprint = 0;
};

struct AttackResult {
  std::vector<std::string> completed;
  std::vector<std::string> failed;
};

/// Writes manifest.txt, dataset.crp and split.csv under the output directory.
GenerateResult cmd_generate(const ExperimentManifest& manifest, std::ostream& log);
/// Trains every listed learner; writes models/<name>.pbm, traces/<name>.csv, eval/<name>.json.
/// A failing learner is written to failures/<name>.txt and the rest continue.
AttackResult cmd_attack(const ExperimentManifest& manifest, std::ostream& log);
/// Writes quality/quality.{csv,json} for a device population drawn from the manifest's PUF config.
void cmd_quality(const ExperimentManifest& manifest, ReportFormat format, std::ostream& log);
/// Assembles report/ from the persisted artifacts in `run_dir`.
void cmd_report(const std::filesystem::path& run_dir, ReportFormat format, std::ostream& log);

/// Process exit code for an error kind: 2 invalid manifest, 3 I/O.
int exit_code_for(ErrorKind kind);

}  // namespace pufbench
