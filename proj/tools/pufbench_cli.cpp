// pufbench: generate -> attack -> report pipeline over simulated PUFs.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "pufbench/error.hpp"
#include "pufbench/workbench.hpp"

using namespace pufbench;

namespace {

struct Options {
  std::string manifest;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string scale;
  std::string learners;
  std::string format = "csv";
};

// Without --manifest, attack and quality pick up the manifest stored in the run directory.
ExperimentManifest resolve(const Options& o, bool reuse_run) {
  ConfigFile cfg;
  const auto stored = std::filesystem::path(o.out.empty() ? "run" : o.out) / "manifest.txt";
  if (!o.manifest.empty()) {
    cfg = ConfigFile::load(o.manifest);
  } else if (reuse_run && std::filesystem::exists(stored)) {
    cfg = ConfigFile::load(stored);
    if (!o.learners.empty()) {
      // keep only the stored settings of learners still listed
      const std::string listed = "," + o.learners + ",";
      ConfigFile kept;
      for (const auto& [key, value] : cfg.entries()) {
        if (key.starts_with("learner.")) {
          const auto family = key.substr(8, key.find('.', 8) - 8);
          if (listed.find("," + family + ",") == std::string::npos) continue;
        }
        kept.set(key, value);
      }
      cfg = kept;
    }
  }
  if (o.seed_set) cfg.set("seed", std::to_string(o.seed));
  if (!o.scale.empty()) cfg.set("scale", o.scale);
  if (!o.learners.empty()) cfg.set("learners", o.learners);
  if (!o.out.empty()) cfg.set("out", o.out);
  return ExperimentManifest::from_config(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PUF modeling-attack workbench"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool report_only) {
    if (!report_only) {
      sub->add_option("--manifest", o.manifest, "Experiment manifest (key = value)")->check(CLI::ExistingFile);
      sub->add_option_function<std::uint64_t>(
          "--seed", [&](std::uint64_t s) { o.seed = s, o.seed_set = true; }, "Master seed");
      sub->add_option("--scale", o.scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
      sub->add_option("--learners", o.learners, "Comma list: tree,forest,boosted-trees,mlp,gbnn,linear");
    }
    sub->add_option("--out", o.out, report_only ? "Run directory" : "Output directory");
    sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  };
  auto* gen = app.add_subcommand("generate", "Write the dataset and split index");
  auto* attack = app.add_subcommand("attack", "Train every listed learner on a generated dataset");
  auto* report = app.add_subcommand("report", "Assemble the report bundle of a run directory");
  auto* quality = app.add_subcommand("quality", "PUF quality measures of a device population");
  auto* all = app.add_subcommand("all", "generate, attack, quality and report in one go");
  for (auto* s : {gen, attack, quality, all}) add_common(s, false);
  add_common(report, true);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto format = parse_report_format(o.format);
    if (report->parsed()) {
      cmd_report(o.out.empty() ? std::filesystem::path("run") : std::filesystem::path(o.out), format, std::cout);
      return 0;
    }
    const auto manifest = resolve(o, attack->parsed() || quality->parsed());
    std::cout << "run " << std::hex << manifest.id() << std::dec << " -> " << manifest.output_dir.string() << "\n";
    if (gen->parsed()) {
      cmd_generate(manifest, std::cout);
      return 0;
    }
    if (quality->parsed()) {
      cmd_quality(manifest, format, std::cout);
      return 0;
    }
    if (attack->parsed()) return cmd_attack(manifest, std::cout).failed.empty() ? 0 : 4;
    cmd_generate(manifest, std::cout);
    const auto result = cmd_attack(manifest, std::cout);
    cmd_quality(manifest, format, std::cout);
    cmd_report(manifest.output_dir, format, std::cout);
    return result.failed.empty() ? 0 : 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
