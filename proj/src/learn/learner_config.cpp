#include "pufbench/learn/learner_config.hpp"

#include <sstream>

#include "pufbench/error.hpp"

namespace pufbench::learn {

namespace {

struct FamilyName {
  LearnerFamily family;
  const char* name;
  const char* display;
};

constexpr FamilyName kFamilies[] = {
    {LearnerFamily::Tree, "tree", "DT"},         {LearnerFamily::Forest, "forest", "RF"},
    {LearnerFamily::BoostedTrees, "boosted-trees", "XGBoost"}, {LearnerFamily::Mlp, "mlp", "ANN"},
    {LearnerFamily::Gbnn, "gbnn", "GBNN"},       {LearnerFamily::Linear, "linear", "LR"},
};

std::string join_sizes(const std::vector<std::size_t>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(sizes[i]);
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto b = item.find_first_not_of(' ');
    auto e = item.find_last_not_of(' ');
    if (b == std::string::npos) throw Error(ErrorKind::InvalidConfig, "'" + key + "' has an empty entry");
    out.push_back(parse_u64(key, item.substr(b, e - b + 1)));
  }
  return out;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::InvalidConfig, message);
}

}  // namespace

std::string to_string(LearnerFamily f) {
  for (const auto& e : kFamilies) {
    if (e.family == f) return e.name;
  }
  return "unknown";
}

LearnerFamily parse_learner_family(std::string_view name) {
  for (const auto& e : kFamilies) {
    if (name == e.name) return e.family;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown learner family '" + std::string(name) + "'");
}

std::string display_name(LearnerFamily f) {
  for (const auto& e : kFamilies) {
    if (e.family == f) return e.display;
  }
  return "unknown";
}

bool is_per_bit_family(LearnerFamily f) {
  return f == LearnerFamily::Tree || f == LearnerFamily::Forest || f == LearnerFamily::BoostedTrees;
}

std::string to_string(Scale s) { return s == Scale::Desk ? "desk" : "paper"; }

Scale parse_scale(std::string_view name) {
  if (name == "desk") return Scale::Desk;
  if (name == "paper") return Scale::Paper;
  throw Error(ErrorKind::InvalidConfig, "scale must be 'desk' or 'paper'");
}

void LearnerConfig::validate() const {
  require(tree_depth >= 1 && tree_depth <= 20, "tree_depth must lie in [1, 20]");
  require(forest_tree_depth >= 1 && forest_tree_depth <= 20, "forest_tree_depth must lie in [1, 20]");
  require(n_trees >= 1 && n_trees <= 35, "n_trees must lie in [1, 35]");
  require(boost_rounds >= 1 && boost_rounds <= 35, "boost_rounds must lie in [1, 35]");
  require(boost_tree_depth >= 1 && boost_tree_depth <= 20, "boost_tree_depth must lie in [1, 20]");
  require(boost_shrinkage > 0 && boost_shrinkage <= 1, "boost_shrinkage must lie in (0, 1]");
  require(boost_lambda >= 0, "boost_lambda must be non-negative");
  require(!mlp_hidden_sizes.empty(), "mlp_hidden_sizes must not be empty");
  for (auto s : mlp_hidden_sizes) require(s >= 1, "hidden layer sizes must be at least 1");
  require(!gbnn_hidden_sizes.empty(), "gbnn_hidden_sizes must not be empty");
  for (auto s : gbnn_hidden_sizes) require(s >= 1, "hidden layer sizes must be at least 1");
  require(dropout_rate >= 0 && dropout_rate < 1, "dropout_rate must lie in [0, 1)");
  require(leaky_slope >= 0 && leaky_slope < 1, "leaky_slope must lie in [0, 1)");
  require(learning_rate > 0 && gbnn_learning_rate > 0 && linear_learning_rate > 0, "learning rates must be positive");
  require(weight_decay >= 0 && gbnn_weight_decay >= 0, "weight decay must be non-negative");
  require(epochs >= 1, "epochs must be at least 1");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(lr_step_epochs >= 1, "lr_step_epochs must be at least 1");
  require(lr_gamma > 0 && lr_gamma <= 1, "lr_gamma must lie in (0, 1]");
  require(gbnn_rho > 0, "gbnn_rho must be positive");
  require(gbnn_epochs_per_stage >= 1, "gbnn_epochs_per_stage must be at least 1");
  require(linear_epochs >= 1, "linear_epochs must be at least 1");
}

LearnerConfig LearnerConfig::preset(LearnerFamily family, Scale scale) {
  LearnerConfig c;
  c.family = family;
  if (scale == Scale::Paper) {
    c.mlp_hidden_sizes = {5000, 2048, 1024, 512, 256, 64};
    c.epochs = 100;
    return c;
  }
  // a single core has to memorize 448k labels within the epoch budget
  c.mlp_hidden_sizes = {2048, 1024, 512};
  c.dropout_rate = 0;
  c.boost_tree_depth = 20;
  return c;
}

LearnerConfig LearnerConfig::from_config(const ConfigFile& cfg) {
  LearnerConfig base;
  if (auto f = cfg.get("family")) base.family = parse_learner_family(*f);
  return from_config(cfg, base);
}

LearnerConfig LearnerConfig::from_config(const ConfigFile& cfg, LearnerConfig c) {
  cfg.reject_unknown({"family", "tree_depth", "n_trees", "forest_tree_depth", "boost_rounds", "boost_tree_depth",
                      "boost_shrinkage", "boost_lambda", "mlp_hidden_sizes", "leaky_slope", "dropout_rate",
                      "norm_layers", "learning_rate", "weight_decay", "epochs", "batch_size", "lr_step_epochs",
                      "lr_gamma", "gbnn_stages", "gbnn_hidden_sizes", "gbnn_norm_layers", "gbnn_learning_rate",
                      "gbnn_weight_decay", "gbnn_rho", "gbnn_epochs_per_stage", "gbnn_stage_fit", "linear_epochs",
                      "linear_learning_rate", "seed"});
  if (auto f = cfg.get("family")) c.family = parse_learner_family(*f);
  c.tree_depth = cfg.get_u64("tree_depth", c.tree_depth);
  c.n_trees = cfg.get_u64("n_trees", c.n_trees);
  c.forest_tree_depth = cfg.get_u64("forest_tree_depth", c.forest_tree_depth);
  c.boost_rounds = cfg.get_u64("boost_rounds", c.boost_rounds);
  c.boost_tree_depth = cfg.get_u64("boost_tree_depth", c.boost_tree_depth);
  c.boost_shrinkage = cfg.get_double("boost_shrinkage", c.boost_shrinkage);
  c.boost_lambda = cfg.get_double("boost_lambda", c.boost_lambda);
  if (auto v = cfg.get("mlp_hidden_sizes")) c.mlp_hidden_sizes = parse_sizes("mlp_hidden_sizes", *v);
  c.leaky_slope = cfg.get_double("leaky_slope", c.leaky_slope);
  c.dropout_rate = cfg.get_double("dropout_rate", c.dropout_rate);
  c.norm_layers = cfg.get_u64("norm_layers", c.norm_layers);
  c.learning_rate = cfg.get_double("learning_rate", c.learning_rate);
  c.weight_decay = cfg.get_double("weight_decay", c.weight_decay);
  c.epochs = cfg.get_u64("epochs", c.epochs);
  c.batch_size = cfg.get_u64("batch_size", c.batch_size);
  c.lr_step_epochs = cfg.get_u64("lr_step_epochs", c.lr_step_epochs);
  c.lr_gamma = cfg.get_double("lr_gamma", c.lr_gamma);
  c.gbnn_stages = cfg.get_u64("gbnn_stages", c.gbnn_stages);
  if (auto v = cfg.get("gbnn_hidden_sizes")) c.gbnn_hidden_sizes = parse_sizes("gbnn_hidden_sizes", *v);
  c.gbnn_norm_layers = cfg.get_u64("gbnn_norm_layers", c.gbnn_norm_layers);
  c.gbnn_learning_rate = cfg.get_double("gbnn_learning_rate", c.gbnn_learning_rate);
  c.gbnn_weight_decay = cfg.get_double("gbnn_weight_decay", c.gbnn_weight_decay);
  c.gbnn_rho = cfg.get_double("gbnn_rho", c.gbnn_rho);
  c.gbnn_epochs_per_stage = cfg.get_u64("gbnn_epochs_per_stage", c.gbnn_epochs_per_stage);
  if (auto v = cfg.get("gbnn_stage_fit")) {
    if (*v == "logistic") c.gbnn_stage_fit = GbnnStageFit::Logistic;
    else if (*v == "residual-squared") c.gbnn_stage_fit = GbnnStageFit::ResidualSquared;
    else throw Error(ErrorKind::InvalidConfig, "gbnn_stage_fit must be 'logistic' or 'residual-squared'");
  }
  c.linear_epochs = cfg.get_u64("linear_epochs", c.linear_epochs);
  c.linear_learning_rate = cfg.get_double("linear_learning_rate", c.linear_learning_rate);
  c.seed = cfg.get_u64("seed", c.seed);
  c.validate();
  return c;
}

ConfigFile LearnerConfig::to_config() const {
  ConfigFile cfg;
  cfg.set("family", to_string(family));
  cfg.set("tree_depth", std::to_string(tree_depth));
  cfg.set("n_trees", std::to_string(n_trees));
  cfg.set("forest_tree_depth", std::to_string(forest_tree_depth));
  cfg.set("boost_rounds", std::to_string(boost_rounds));
  cfg.set("boost_tree_depth", std::to_string(boost_tree_depth));
  cfg.set("boost_shrinkage", format_double(boost_shrinkage));
  cfg.set("boost_lambda", format_double(boost_lambda));
  cfg.set("mlp_hidden_sizes", join_sizes(mlp_hidden_sizes));
  cfg.set("leaky_slope", format_double(leaky_slope));
  cfg.set("dropout_rate", format_double(dropout_rate));
  cfg.set("norm_layers", std::to_string(norm_layers));
  cfg.set("learning_rate", format_double(learning_rate));
  cfg.set("weight_decay", format_double(weight_decay));
  cfg.set("epochs", std::to_string(epochs));
  cfg.set("batch_size", std::to_string(batch_size));
  cfg.set("lr_step_epochs", std::to_string(lr_step_epochs));
  cfg.set("lr_gamma", format_double(lr_gamma));
  cfg.set("gbnn_stages", std::to_string(gbnn_stages));
  cfg.set("gbnn_hidden_sizes", join_sizes(gbnn_hidden_sizes));
  cfg.set("gbnn_norm_layers", std::to_string(gbnn_norm_layers));
  cfg.set("gbnn_learning_rate", format_double(gbnn_learning_rate));
  cfg.set("gbnn_weight_decay", format_double(gbnn_weight_decay));
  cfg.set("gbnn_rho", format_double(gbnn_rho));
  cfg.set("gbnn_epochs_per_stage", std::to_string(gbnn_epochs_per_stage));
  cfg.set("gbnn_stage_fit", gbnn_stage_fit == GbnnStageFit::Logistic ? "logistic" : "residual-squared");
  cfg.set("linear_epochs", std::to_string(linear_epochs));
  cfg.set("linear_learning_rate", format_double(linear_learning_rate));
  cfg.set("seed", std::to_string(seed));
  return cfg;
}

}  // namespace pufbench::learn
