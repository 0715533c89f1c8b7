#include "pufbench/workbench.hpp"

#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "pufbench/curve.hpp"
#include "pufbench/error.hpp"
#include "pufbench/learn/model_set.hpp"
#include "pufbench/metrics.hpp"
#include "pufbench/rng.hpp"

namespace pufbench {

namespace fs = std::filesystem;
using learn::LearnerConfig;
using learn::LearnerFamily;
using nlohmann::json;

namespace {

// seed streams derived from the manifest seed
enum : std::uint64_t { kPufStream = 1, kDatasetStream, kSplitStream, kQualityStream, kNoiseStream, kLearnerStream = 100 };

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw Error(ErrorKind::InvalidConfig, "empty entry in list '" + std::string(text) + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, std::string_view text) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open '" + tmp.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorKind::Io, "write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string trace_to_csv(const learn::TrainingTrace& t) {
  std::string out = "axis,step,train_accuracy,validation_accuracy\n";
  for (const auto& p : t.points) {
    out += t.axis + "," + std::to_string(p.step) + "," + format_double(p.train_accuracy) + "," +
           format_double(p.validation_accuracy) + "\n";
  }
  return out;
}

learn::TrainingTrace trace_from_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  if (line != "axis,step,train_accuracy,validation_accuracy") {
    throw Error(ErrorKind::IncompleteRun, "'" + path.string() + "' is not a trace file");
  }
  learn::TrainingTrace t;
  while (std::getline(in, line)) {
    const auto f = split_list(line);
    if (f.size() != 4) throw Error(ErrorKind::IncompleteRun, "malformed trace row in '" + path.string() + "'");
    t.axis = f[0];
    t.points.push_back({parse_u64("step", f[1]), parse_double("train_accuracy", f[2]),
                        parse_double("validation_accuracy", f[3])});
  }
  t.validate();
  return t;
}

json eval_to_json(const EvalReport& r) { return to_json(r); }

Fraction fraction_from(const json& j, const char* count) {
  const auto& c = j.at("counts");
  const std::uint64_t n = j.at("n_samples").get<std::uint64_t>();
  const std::uint64_t bits = j.at("n_bits").get<std::uint64_t>();
  if (std::string_view(count) == "exact_rows") return {c.at(count).get<std::uint64_t>(), n};
  return {c.at(count).get<std::uint64_t>(), n * bits};
}

std::string split_to_csv(const SplitDataset& s) {
  std::string out = "split_seed," + std::to_string(s.split_seed) + "\npartition,index\n";
  for (auto i : s.train_indices) out += "train," + std::to_string(i) + "\n";
  for (auto i : s.validation_indices) out += "validation," + std::to_string(i) + "\n";
  for (auto i : s.test_indices) out += "test," + std::to_string(i) + "\n";
  return out;
}

SplitDataset split_from_csv(const CrpDataset& ds, const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  SplitDataset s;
  std::getline(in, line);
  const auto head = split_list(line);
  if (head.size() != 2 || head[0] != "split_seed") throw Error(ErrorKind::Io, "malformed split file");
  s.split_seed = parse_u64("split_seed", head[1]);
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto f = split_list(line);
    if (f.size() != 2) throw Error(ErrorKind::Io, "malformed split row");
    const auto idx = parse_u64("index", f[1]);
    if (idx >= ds.size()) throw Error(ErrorKind::CountMismatch, "split index beyond the dataset");
    if (f[0] == "train") s.train_indices.push_back(idx);
    else if (f[0] == "validation") s.validation_indices.push_back(idx);
    else if (f[0] == "test") s.test_indices.push_back(idx);
    else throw Error(ErrorKind::Io, "unknown partition '" + f[0] + "'");
  }
  s.train = ds.subset(s.train_indices);
  s.validation = ds.subset(s.validation_indices);
  s.test = ds.subset(s.test_indices);
  return s;
}

struct RunData {
  CrpDataset dataset;
  SplitDataset split;
};

RunData load_run(const fs::path& dir) {
  if (!fs::exists(dir / "dataset.crp") || !fs::exists(dir / "split.csv")) {
    throw Error(ErrorKind::IncompleteRun, "no dataset in '" + dir.string() + "'; run generate first");
  }
  RunData r{read_dataset(dir / "dataset.crp", DatasetFormat::Binary), {}};
  r.split = split_from_csv(r.dataset, dir / "split.csv");
  return r;
}

PufQualityReport quality_for(const ExperimentManifest& m) {
  PufConfig base = m.puf;
  const auto devices = device_population(base, m.quality_devices);
  Rng rng = make_rng(child_seed(m.seed, kQualityStream));
  std::vector<Challenge> challenges;
  for (std::size_t i = 0; i < m.quality_challenges; ++i) {
    Challenge c(base.challenge_bits);
    for (std::size_t j = 0; j < c.size(); ++j) c.set(j, rng() >> 63);
    challenges.push_back(std::move(c));
  }
  return puf_quality(devices, challenges, m.quality_repeats, m.quality_flip_rate, child_seed(m.seed, kNoiseStream));
}

std::string quality_text(const PufQualityReport& q, ReportFormat format) {
  if (format == ReportFormat::Json) return dump(to_json(q));
  std::string out = "measure,percent\n";
  out += "uniqueness," + percent(q.uniqueness) + "\n";
  out += "reliability," + percent(q.reliability) + "\n";
  out += "uniformity," + percent(q.uniformity) + "\n";
  out += "bit_aliasing_max_deviation," + percent(q.bit_aliasing_max_deviation) + "\n";
  out += "randomness_score," + percent(q.randomness_score) + "\n";
  for (std::size_t j = 0; j < q.bit_aliasing.size(); ++j) {
    out += "bit_aliasing_" + std::to_string(j) + "," + percent(q.bit_aliasing[j]) + "\n";
  }
  return out;
}

std::string stats_row(const std::string& label, const BitStats& s) {
  return label + "," + format_double(s.overall_mean) + "," + format_double(s.overall_variance) + "," +
         format_double(s.average_entropy) + "," + format_double(s.min_entropy) + "," + format_double(s.max_entropy) +
         "\n";
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  throw Error(ErrorKind::InvalidArgument, "unknown format '" + std::string(name) + "' (csv or json)");
}

std::vector<LearnerFamily> paper_learners() {
  return {LearnerFamily::Mlp, LearnerFamily::Gbnn, LearnerFamily::BoostedTrees, LearnerFamily::Tree,
          LearnerFamily::Forest};
}

void ExperimentManifest::validate() const {
  puf.validate();
  if (dataset_count == 0) throw Error(ErrorKind::InvalidConfig, "dataset.count must be positive");
  if (dataset_count < 10) throw Error(ErrorKind::InvalidConfig, "dataset.count must be at least 10 to split");
  if (learners.empty()) throw Error(ErrorKind::InvalidConfig, "no learners listed");
  for (std::size_t i = 0; i < learners.size(); ++i) {
    learners[i].validate();
    for (std::size_t k = 0; k < i; ++k) {
      if (learners[k].family == learners[i].family) {
        throw Error(ErrorKind::InvalidConfig, "learner '" + learn::to_string(learners[i].family) + "' listed twice");
      }
    }
    if (learners[i].family == LearnerFamily::Linear && !is_arbiter_family(puf.variant)) {
      throw Error(ErrorKind::InvalidConfig, "the linear learner needs an arbiter-family PUF");
    }
  }
  if (quality_devices < 2) throw Error(ErrorKind::InvalidConfig, "quality.devices must be at least 2");
  if (quality_challenges < 1) throw Error(ErrorKind::InvalidConfig, "quality.challenges must be at least 1");
  if (quality_repeats < 2) throw Error(ErrorKind::InvalidConfig, "quality.repeats must be at least 2");
  if (!(quality_flip_rate >= 0 && quality_flip_rate <= 1)) {
    throw Error(ErrorKind::InvalidConfig, "quality.flip_rate must lie in [0, 1]");
  }
}

ExperimentManifest ExperimentManifest::from_config(const ConfigFile& cfg) {
  ExperimentManifest m;
  for (const auto& [key, value] : cfg.entries()) {
    const bool known = key.starts_with("puf.") || key.starts_with("learner.") ||
                       std::set<std::string>{"seed", "scale", "dataset.count", "dataset.seed", "split.seed",
                                             "learners", "quality.devices", "quality.challenges", "quality.repeats",
                                             "quality.flip_rate", "out"}
                           .contains(key);
    if (!known) throw Error(ErrorKind::InvalidConfig, "unknown manifest key '" + key + "'");
  }
  m.seed = cfg.get_u64("seed", 0);
  m.scale = learn::parse_scale(cfg.get_string("scale", "desk"));
  ConfigFile puf_cfg = cfg.scoped("puf.");
  if (!puf_cfg.contains("seed")) puf_cfg.set("seed", std::to_string(child_seed(m.seed, kPufStream)));
  m.puf = PufConfig::from_config(puf_cfg);
  m.dataset_count = cfg.get_u64("dataset.count", m.scale == learn::Scale::Paper ? 80000 : 20000);
  m.dataset_seed = cfg.get_u64("dataset.seed", child_seed(m.seed, kDatasetStream));
  m.split_seed = cfg.get_u64("split.seed", child_seed(m.seed, kSplitStream));

  std::vector<LearnerFamily> families;
  if (auto list = cfg.get("learners")) {
    for (const auto& name : split_list(*list)) families.push_back(learn::parse_learner_family(name));
  } else {
    families = paper_learners();
  }
  const ConfigFile overrides = cfg.scoped("learner.");
  for (const auto& [key, value] : overrides.entries()) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) throw Error(ErrorKind::InvalidConfig, "learner override '" + key + "' needs a family");
    const auto family = learn::parse_learner_family(key.substr(0, dot));
    if (std::ranges::find(families, family) == families.end()) {
      throw Error(ErrorKind::InvalidConfig, "override for unlisted learner '" + key.substr(0, dot) + "'");
    }
  }
  for (auto family : families) {
    LearnerConfig base = LearnerConfig::preset(family, m.scale);
    base.seed = child_seed(m.seed, kLearnerStream + static_cast<std::uint64_t>(family));
    ConfigFile own = overrides.scoped(learn::to_string(family) + ".");
    if (own.contains("family")) throw Error(ErrorKind::InvalidConfig, "learner family cannot be overridden");
    m.learners.push_back(LearnerConfig::from_config(own, base));
  }
  m.quality_devices = cfg.get_u64("quality.devices", m.quality_devices);
  m.quality_challenges = cfg.get_u64("quality.challenges", m.quality_challenges);
  m.quality_repeats = cfg.get_u64("quality.repeats", m.quality_repeats);
  m.quality_flip_rate = cfg.get_double("quality.flip_rate", m.quality_flip_rate);
  m.output_dir = cfg.get_string("out", m.output_dir.string());
  m.validate();
  return m;
}

ExperimentManifest ExperimentManifest::load(const fs::path& path) { return from_config(ConfigFile::load(path)); }

ConfigFile ExperimentManifest::to_config() const {
  ConfigFile c;
  c.set("seed", std::to_string(seed));
  c.set("scale", learn::to_string(scale));
  const ConfigFile puf_cfg = puf.to_config();
  for (const auto& [k, v] : puf_cfg.entries()) c.set("puf." + k, v);
  c.set("dataset.count", std::to_string(dataset_count));
  c.set("dataset.seed", std::to_string(dataset_seed));
  c.set("split.seed", std::to_string(split_seed));
  std::string names;
  for (const auto& l : learners) {
    const auto name = learn::to_string(l.family);
    names += (names.empty() ? "" : ",") + name;
    const ConfigFile own = l.to_config();
    for (const auto& [k, v] : own.entries()) {
      if (k != "family") c.set("learner." + name + "." + k, v);
    }
  }
  c.set("learners", names);
  c.set("quality.devices", std::to_string(quality_devices));
  c.set("quality.challenges", std::to_string(quality_challenges));
  c.set("quality.repeats", std::to_string(quality_repeats));
  c.set("quality.flip_rate", format_double(quality_flip_rate));
  return c;
}

std::uint64_t ExperimentManifest::id() const { return text_digest(to_config().to_string()); }

GenerateResult cmd_generate(const ExperimentManifest& m, std::ostream& log) {
  m.validate();
  const fs::path dir = m.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create '" + dir.string() + "': " + ec.message());
  write_text(dir / "manifest.txt", m.to_config().to_string());

  const auto instance = create_instance(m.puf);
  const auto dataset = generate(instance, m.dataset_count, m.dataset_seed);
  const auto bytes = encode_binary(dataset);
  write_text(dir / "dataset.crp", std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  write_text(dir / "split.csv", split_to_csv(split(dataset, m.split_seed)));

  GenerateResult r{dataset.size(),
                   text_digest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()))};
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(r.fingerprint));
  log << "generated " << r.records << " CRPs from " << to_string(m.puf.variant) << ", dataset fingerprint " << hex
      << "\n";
  return r;
}

AttackResult cmd_attack(const ExperimentManifest& m, std::ostream& log) {
  m.validate();
  const fs::path dir = m.output_dir;
  const auto run = load_run(dir);
  if (fs::exists(dir / "manifest.txt")) {
    const auto stored = ConfigFile::load(dir / "manifest.txt");
    const auto ours = m.to_config();
    for (const auto& [key, value] : stored.entries()) {
      const bool data_key = key == "seed" || key.starts_with("puf.") || key.starts_with("dataset.") ||
                            key.starts_with("split.");
      if (data_key && ours.get(key) != value) {
        throw Error(ErrorKind::InvalidConfig,
                    "'" + key + "' differs from the manifest that generated '" + dir.string() + "'");
      }
    }
  }
  AttackResult result;
  for (const auto& config : m.learners) {
    const auto name = learn::to_string(config.family);
    const fs::path failure = dir / "failures" / (name + ".txt");
    fs::remove(failure);
    try {
      log << "training " << learn::display_name(config.family) << " ..." << std::flush;
      auto fit = learn::fit_learner(run.split, config);
      json eval;
      eval["model"] = learn::display_name(config.family);
      eval["train"] = eval_to_json(evaluate(fit.models.predict(run.split.train.challenges()),
                                            run.split.train.responses()));
      eval["validation"] = eval_to_json(evaluate(fit.models.predict(run.split.validation.challenges()),
                                                 run.split.validation.responses()));
      eval["test"] = eval_to_json(evaluate(fit.models.predict(run.split.test.challenges()),
                                           run.split.test.responses()));
      const auto model_bytes = fit.models.serialize();
      write_text(dir / "models" / (name + ".pbm"),
                 std::string_view(reinterpret_cast<const char*>(model_bytes.data()), model_bytes.size()));
      write_text(dir / "traces" / (name + ".csv"), trace_to_csv(fit.trace));
      write_text(dir / "eval" / (name + ".json"), dump(eval));
      log << " train " << percent(eval["train"]["bitwise_accuracy"].get<double>()) << "%, validation "
          << percent(eval["validation"]["bitwise_accuracy"].get<double>()) << "%\n";
      result.completed.push_back(name);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Io) throw;
      log << " failed: " << e.what() << "\n";
      write_text(failure, std::string(e.what()) + "\n");
      for (const char* sub : {"models", "traces", "eval"}) {
        for (const char* ext : {".pbm", ".csv", ".json"}) fs::remove(dir / sub / (name + ext));
      }
      result.failed.push_back(name);
    }
  }
  return result;
}

void cmd_quality(const ExperimentManifest& m, ReportFormat format, std::ostream& log) {
  m.validate();
  const auto q = quality_for(m);
  const auto ext = format == ReportFormat::Json ? ".json" : ".csv";
  write_text(m.output_dir / "quality" / (std::string("quality") + ext), quality_text(q, format));
  log << "uniqueness " << percent(q.uniqueness) << "%, reliability " << percent(q.reliability) << "%, uniformity "
      << percent(q.uniformity) << "%, randomness " << percent(q.randomness_score) << "%\n";
}

void cmd_report(const fs::path& dir, ReportFormat format, std::ostream& log) {
  if (!fs::exists(dir / "manifest.txt")) {
    throw Error(ErrorKind::IncompleteRun, "'" + dir.string() + "' holds no manifest.txt");
  }
  auto m = ExperimentManifest::from_config(ConfigFile::load(dir / "manifest.txt"));
  m.output_dir = dir;
  const auto run = load_run(dir);

  struct Row {
    LearnerFamily family;
    json eval;
    learn::TrainingTrace trace;
    BitStats predicted;
  };
  std::vector<Row> rows;
  std::vector<std::string> failed;
  for (const auto& config : m.learners) {
    const auto name = learn::to_string(config.family);
    if (fs::exists(dir / "failures" / (name + ".txt"))) {
      failed.push_back(name);
      continue;
    }
    for (const auto& p : {dir / "eval" / (name + ".json"), dir / "traces" / (name + ".csv"),
                          dir / "models" / (name + ".pbm")}) {
      if (!fs::exists(p)) throw Error(ErrorKind::IncompleteRun, "missing '" + p.string() + "'; run attack first");
    }
    Row row{config.family, json::parse(read_text(dir / "eval" / (name + ".json"))),
            trace_from_csv(dir / "traces" / (name + ".csv")), {}};
    const auto model = learn::PerBitModelSet::load(dir / "models" / (name + ".pbm"));
    row.predicted = bit_stats(model.predict(run.split.test.challenges()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::IncompleteRun, "no learner in '" + dir.string() + "' completed");

  const fs::path out = dir / "report";
  const auto target = bit_stats(run.split.test.responses());
  if (format == ReportFormat::Csv) {
    std::string summary = "model,train,validation,test,exact_match\n";
    std::string stats = "label,mean,variance,average_entropy,min_entropy,max_entropy\n";
    stats += stats_row("Target Y", target);
    for (const auto& r : rows) {
      summary += learn::display_name(r.family) + "," +
                 percent(fraction_from(r.eval["train"], "correct_bits").value()) + "," +
                 percent(fraction_from(r.eval["validation"], "correct_bits").value()) + "," +
                 percent(fraction_from(r.eval["test"], "correct_bits").value()) + "," +
                 percent(fraction_from(r.eval["test"], "exact_rows").value()) + "\n";
      stats += stats_row(learn::display_name(r.family), r.predicted);
    }
    write_text(out / "summary.csv", summary);
    write_text(out / "bit_stats.csv", stats);
  } else {
    json summary = json::array();
    json stats = json::object();
    stats["Target Y"] = to_json(target);
    for (const auto& r : rows) {
      json s;
      s["model"] = learn::display_name(r.family);
      for (const char* part : {"train", "validation", "test"}) s[part] = r.eval[part];
      summary.push_back(s);
      stats[learn::display_name(r.family)] = to_json(r.predicted);
    }
    write_text(out / "summary.json", dump(summary));
    write_text(out / "bit_stats.json", dump(stats));
  }

  std::vector<LabeledTrace> labeled;
  std::string bars = "model,test_accuracy\n";
  for (const auto& r : rows) {
    if (r.trace.points.size() >= 2) labeled.push_back({learn::display_name(r.family), r.trace});
    bars += learn::display_name(r.family) + "," + percent(fraction_from(r.eval["test"], "correct_bits").value()) + "\n";
  }
  write_text(out / "curves.csv", curves_to_csv(build_comparison(labeled)));
  write_text(out / "test_accuracy.csv", bars);
  write_text(out / (format == ReportFormat::Json ? "quality.json" : "quality.csv"), quality_text(quality_for(m), format));

  std::string failures;
  for (const auto& f : failed) failures += f + "\n";
  write_text(out / "failed_learners.txt", failures);

  log << "report for run " << std::hex << m.id() << std::dec << " written to " << out.string() << "\n";
  for (const auto& r : rows) {
    log << "  " << learn::display_name(r.family) << ": train "
        << percent(fraction_from(r.eval["train"], "correct_bits").value()) << "%, validation "
        << percent(fraction_from(r.eval["validation"], "correct_bits").value()) << "%, test "
        << percent(fraction_from(r.eval["test"], "correct_bits").value()) << "%, exact match "
        << percent(fraction_from(r.eval["test"], "exact_rows").value()) << "%\n";
  }
  for (const auto& f : failed) log << "  " << f << ": failed (see failures/" << f << ".txt)\n";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::InvalidArgument:
    case ErrorKind::FamilyMismatch: return 2;
    default: return 3;
  }
}

}  // namespace pufbench
