#include "pufbench/learn/model_set.hpp"

#include <atomic>
#include <cstring>
#include <fstream>
#include <thread>

#include "pufbench/error.hpp"

namespace pufbench::learn {

// --- trace --------------------------------------------------------------------------

void TrainingTrace::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (i > 0 && p.step <= points[i - 1].step) {
      throw Error(ErrorKind::InvalidArgument, "trace steps must strictly increase");
    }
    for (double a : {p.train_accuracy, p.validation_accuracy}) {
      if (!(a >= 0.0 && a <= 1.0)) throw Error(ErrorKind::InvalidArgument, "trace accuracy outside [0, 1]");
    }
  }
}

std::vector<double> TrainingTrace::train_accuracies() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.train_accuracy);
  return out;
}

std::vector<double> TrainingTrace::validation_accuracies() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.validation_accuracy);
  return out;
}

// --- helpers -----------------------------------------------------------------------

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1U, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

namespace {

// Values along the root-to-leaf path, indexed by depth.
void path_values(const DecisionTree& tree, std::span<const std::uint8_t> x, std::vector<double>& out) {
  out.clear();
  std::size_t i = 0;
  for (;;) {
    out.push_back(tree.nodes[i].value);
    if (tree.nodes[i].feature < 0) return;
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(tree.nodes[i].feature)] ? tree.nodes[i].right
                                                                                    : tree.nodes[i].left);
  }
}

// correct[step - first] counts for one bit over one partition
using StepCounts = std::vector<std::size_t>;

template <typename StagedPredict>
StepCounts count_staged(const BitMatrix& x, std::span<const std::uint8_t> y, CapacityRange range,
                        StagedPredict&& staged) {
  StepCounts counts(range.last - range.first + 1, 0);
  std::vector<std::uint8_t> preds(counts.size());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    staged(x.row(i), preds);
    for (std::size_t s = 0; s < counts.size(); ++s) counts[s] += preds[s] == y[i];
  }
  return counts;
}

struct BitSweep {
  StepCounts train;
  StepCounts validation;
};

TrainingTrace assemble_trace(std::string axis, CapacityRange range, const std::vector<BitSweep>& per_bit,
                             std::size_t train_rows, std::size_t val_rows) {
  TrainingTrace trace{std::move(axis), {}};
  const std::size_t bits = per_bit.size();
  for (std::size_t s = 0; s <= range.last - range.first; ++s) {
    std::size_t tr = 0;
    std::size_t va = 0;
    for (const auto& b : per_bit) {
      tr += b.train[s];
      va += b.validation[s];
    }
    const double vdenom = static_cast<double>(val_rows * bits);
    trace.points.push_back({range.first + s, static_cast<double>(tr) / static_cast<double>(train_rows * bits),
                            val_rows ? static_cast<double>(va) / vdenom : 0.0});
  }
  return trace;
}

TrainingTrace filter_trace(TrainingTrace trace, CapacityRange range) {
  std::erase_if(trace.points, [&](const TracePoint& p) { return p.step < range.first || p.step > range.last; });
  return trace;
}

}  // namespace

CapacityRange capacity_bounds(LearnerFamily family) {
  switch (family) {
    case LearnerFamily::Tree: return {1, 20};
    case LearnerFamily::Forest:
    case LearnerFamily::BoostedTrees: return {1, 35};
    case LearnerFamily::Gbnn: return {0, 1000};
    case LearnerFamily::Mlp:
    case LearnerFamily::Linear: return {1, 100000};
  }
  return {1, 1};
}

std::size_t configured_capacity(const LearnerConfig& c) {
  switch (c.family) {
    case LearnerFamily::Tree: return c.tree_depth;
    case LearnerFamily::Forest: return c.n_trees;
    case LearnerFamily::BoostedTrees: return c.boost_rounds;
    case LearnerFamily::Mlp: return c.epochs;
    case LearnerFamily::Gbnn: return c.gbnn_stages;
    case LearnerFamily::Linear: return c.linear_epochs;
  }
  return 1;
}

FitResult sweep_fit(LearnerFamily family, const SplitDataset& split, CapacityRange range, const LearnerConfig& base) {
  const auto bounds = capacity_bounds(family);
  if (range.first > range.last || range.first < bounds.first || range.last > bounds.last) {
    throw Error(ErrorKind::InvalidArgument, "capacity range [" + std::to_string(range.first) + ", " +
                                                std::to_string(range.last) + "] is illegal for " + to_string(family));
  }
  LearnerConfig config = base;
  config.family = family;
  const auto& train = split.train;
  const auto& val = split.validation;
  if (train.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty training set");
  const std::size_t nc = train.challenge_bits();
  const std::size_t nr = train.response_bits();
  const BitMatrix& xt = train.challenges();
  const BitMatrix& xv = val.challenges();

  switch (family) {
    case LearnerFamily::Tree: {
      config.tree_depth = range.last;
      config.validate();
      std::vector<DecisionTree> trees(nr);
      std::vector<BitSweep> sweeps(nr);
      parallel_for(nr, [&](std::size_t j) {
        const auto yt = train.responses().column(j);
        const auto yv = val.responses().column(j);
        trees[j] = train_tree(xt, yt, range.last);
        auto staged = [&](std::span<const std::uint8_t> x, std::vector<std::uint8_t>& preds) {
          thread_local std::vector<double> path;
          path_values(trees[j], x, path);
          for (std::size_t s = 0; s < preds.size(); ++s) {
            preds[s] = path[std::min(range.first + s, path.size() - 1)] > 0.5;
          }
        };
        sweeps[j] = {count_staged(xt, yt, range, staged), count_staged(xv, yv, range, staged)};
      });
      return {PerBitModelSet(family, nc, nr, std::move(trees)),
              assemble_trace("depth", range, sweeps, xt.rows(), xv.rows())};
    }
    case LearnerFamily::Forest: {
      config.n_trees = range.last;
      config.validate();
      std::vector<RandomForest> forests(nr);
      std::vector<BitSweep> sweeps(nr);
      parallel_for(nr, [&](std::size_t j) {
        const auto yt = train.responses().column(j);
        const auto yv = val.responses().column(j);
        forests[j] = train_forest(xt, yt, range.last, child_seed(config.seed, j), config.forest_tree_depth);
        auto staged = [&](std::span<const std::uint8_t> x, std::vector<std::uint8_t>& preds) {
          std::size_t ones = 0;
          for (std::size_t k = 1; k <= range.last; ++k) {
            ones += forests[j].trees[k - 1].predict(x);
            if (k >= range.first) preds[k - range.first] = 2 * ones > k;
          }
        };
        sweeps[j] = {count_staged(xt, yt, range, staged), count_staged(xv, yv, range, staged)};
      });
      return {PerBitModelSet(family, nc, nr, std::move(forests)),
              assemble_trace("trees", range, sweeps, xt.rows(), xv.rows())};
    }
    case LearnerFamily::BoostedTrees: {
      config.boost_rounds = range.last;
      config.validate();
      const BoostingOptions options{range.last, config.boost_tree_depth, config.boost_shrinkage, config.boost_lambda};
      std::vector<BoostedTrees> models(nr);
      std::vector<BitSweep> sweeps(nr);
      parallel_for(nr, [&](std::size_t j) {
        const auto yt = train.responses().column(j);
        const auto yv = val.responses().column(j);
        models[j] = train_boosted_trees(xt, yt, options);
        const auto& m = models[j];
        auto staged = [&](std::span<const std::uint8_t> x, std::vector<std::uint8_t>& preds) {
          double s = m.base_score;
          for (std::size_t k = 1; k <= range.last; ++k) {
            if (k <= m.trees.size()) s += m.shrinkage * m.trees[k - 1].predict_value(x);
            if (k >= range.first) preds[k - range.first] = s > 0.0;
          }
        };
        sweeps[j] = {count_staged(xt, yt, range, staged), count_staged(xv, yv, range, staged)};
      });
      return {PerBitModelSet(family, nc, nr, std::move(models)),
              assemble_trace("round", range, sweeps, xt.rows(), xv.rows())};
    }
    case LearnerFamily::Mlp: {
      config.epochs = range.last;
      auto r = train_mlp(train, val, config);
      return {PerBitModelSet(family, nc, nr, std::move(r.model)), filter_trace(std::move(r.trace), range)};
    }
    case LearnerFamily::Gbnn: {
      config.gbnn_stages = range.last;
      auto r = train_gbnn(train, val, config);
      return {PerBitModelSet(family, nc, nr, std::move(r.model)), filter_trace(std::move(r.trace), range)};
    }
    case LearnerFamily::Linear: {
      config.linear_epochs = range.last;
      auto r = train_linear(train, val, config);
      return {PerBitModelSet(family, nc, nr, std::move(r.model)), filter_trace(std::move(r.trace), range)};
    }
  }
  throw Error(ErrorKind::FamilyMismatch, "unknown learner family");
}

TrainingTrace capacity_sweep(LearnerFamily family, const SplitDataset& split, CapacityRange range,
                             const LearnerConfig& config) {
  return sweep_fit(family, split, range, config).trace;
}

FitResult fit_per_bit(LearnerFamily family, const SplitDataset& split, const LearnerConfig& config) {
  if (!is_per_bit_family(family)) {
    throw Error(ErrorKind::FamilyMismatch, to_string(family) + " is not a per-bit family; use its own trainer");
  }
  LearnerConfig c = config;
  c.family = family;
  return sweep_fit(family, split, {1, configured_capacity(c)}, c);
}

FitResult fit_learner(const SplitDataset& split, const LearnerConfig& config) {
  if (is_per_bit_family(config.family)) return fit_per_bit(config.family, split, config);
  const std::size_t first = config.family == LearnerFamily::Gbnn && config.gbnn_stages == 0 ? 0 : 1;
  return sweep_fit(config.family, split, {first, configured_capacity(config)}, config);
}

// --- model set ----------------------------------------------------------------------

PerBitModelSet::PerBitModelSet(LearnerFamily family, std::size_t challenge_bits, std::size_t response_bits,
                               Models models)
    : family_(family), challenge_bits_(challenge_bits), response_bits_(response_bits), models_(std::move(models)) {
  const bool ok = std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, std::vector<DecisionTree>>) return family == LearnerFamily::Tree && m.size() == response_bits;
        else if constexpr (std::is_same_v<M, std::vector<RandomForest>>) return family == LearnerFamily::Forest && m.size() == response_bits;
        else if constexpr (std::is_same_v<M, std::vector<BoostedTrees>>) return family == LearnerFamily::BoostedTrees && m.size() == response_bits;
        else if constexpr (std::is_same_v<M, Mlp>) return family == LearnerFamily::Mlp;
        else if constexpr (std::is_same_v<M, GbnnEnsemble>) return family == LearnerFamily::Gbnn;
        else return family == LearnerFamily::Linear;
      },
      models_);
  if (!ok) throw Error(ErrorKind::FamilyMismatch, "model container does not match family " + to_string(family));
}

BitMatrix PerBitModelSet::predict(const BitMatrix& x) const {
  if (x.cols() != challenge_bits_) {
    throw Error(ErrorKind::WidthMismatch, "challenge width " + std::to_string(x.cols()) + ", model expects " +
                                              std::to_string(challenge_bits_));
  }
  BitMatrix out(x.rows(), response_bits_);
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Mlp> || std::is_same_v<M, GbnnEnsemble>) {
          Eigen::MatrixXf logits;
          if constexpr (std::is_same_v<M, Mlp>) logits = infer_all(m, x);
          else logits = m.logits(x);
          for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < response_bits_; ++j) {
              out(i, j) = logits(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) > 0.0f;
            }
          }
        } else if constexpr (std::is_same_v<M, ParityLogistic>) {
          const Eigen::MatrixXd logits = m.logits(x);
          for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < response_bits_; ++j) {
              out(i, j) = logits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0;
            }
          }
        } else {
          for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < response_bits_; ++j) out(i, j) = m[j].predict(x.row(i));
          }
        }
      },
      models_);
  return out;
}

Response PerBitModelSet::predict_response(const Challenge& challenge) const {
  BitMatrix x(1, challenge.size());
  x.set_row(0, challenge);
  return predict(x).row_vector(0);
}

// --- PBM1 container -------------------------------------------------------------------

namespace {

constexpr char kModelMagic[4] = {'P', 'B', 'M', '1'};
constexpr std::uint16_t kModelVersion = 1;

class Writer {
 public:
  std::vector<std::uint8_t> bytes;

  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    bytes.insert(bytes.end(), raw, raw + sizeof(T));
  }
  void u32(std::size_t v) { put(static_cast<std::uint32_t>(v)); }
  template <typename T>
  void array(const T* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) put(data[i]);
  }

  void tree(const DecisionTree& t) {
    u32(t.nodes.size());
    for (const auto& n : t.nodes) {
      put(n.feature);
      put(n.left);
      put(n.right);
      put(n.depth);
      put(n.value);
    }
  }

  void mlp(const Mlp& net) {
    const auto& s = net.shape();
    u32(s.inputs);
    u32(s.hidden.size());
    for (auto h : s.hidden) u32(h);
    u32(s.outputs);
    u32(s.norm_layers);
    u32(s.dropout_layers);
    put(s.dropout_rate);
    put(s.leaky_slope);
    for (const auto& l : net.layers()) {
      array(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
      array(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
      if (l.batch_norm) {
        array(l.gamma.data(), static_cast<std::size_t>(l.gamma.size()));
        array(l.beta.data(), static_cast<std::size_t>(l.beta.size()));
        array(l.running_mean.data(), static_cast<std::size_t>(l.running_mean.size()));
        array(l.running_var.data(), static_cast<std::size_t>(l.running_var.size()));
      }
    }
  }
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw Error(ErrorKind::TruncatedFile, "model container ends early");
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t u32() { return get<std::uint32_t>(); }
  std::size_t count(std::size_t limit = 1U << 28) {
    const auto n = u32();
    if (n > limit) throw Error(ErrorKind::CountMismatch, "implausible element count in model container");
    return n;
  }
  template <typename T>
  void array(T* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) data[i] = get<T>();
  }
  bool done() const { return pos_ == bytes_.size(); }

  DecisionTree tree() {
    DecisionTree t;
    t.nodes.resize(count());
    for (auto& n : t.nodes) {
      n.feature = get<std::int32_t>();
      n.left = get<std::int32_t>();
      n.right = get<std::int32_t>();
      n.depth = get<std::uint32_t>();
      n.value = get<double>();
    }
    const auto size = static_cast<std::int32_t>(t.nodes.size());
    if (t.nodes.empty()) throw Error(ErrorKind::CountMismatch, "empty tree in model container");
    for (const auto& n : t.nodes) {
      if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size)) {
        throw Error(ErrorKind::CountMismatch, "tree node references a missing child");
      }
    }
    return t;
  }

  Mlp mlp() {
    MlpShape s;
    s.inputs = u32();
    s.hidden.resize(count(1024));
    for (auto& h : s.hidden) h = u32();
    s.outputs = u32();
    s.norm_layers = u32();
    s.dropout_layers = u32();
    s.dropout_rate = get<double>();
    s.leaky_slope = get<double>();
    Mlp net(s, 0);
    for (auto& l : net.layers()) {
      array(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
      array(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
      if (l.batch_norm) {
        array(l.gamma.data(), static_cast<std::size_t>(l.gamma.size()));
        array(l.beta.data(), static_cast<std::size_t>(l.beta.size()));
        array(l.running_mean.data(), static_cast<std::size_t>(l.running_mean.size()));
        array(l.running_var.data(), static_cast<std::size_t>(l.running_var.size()));
      }
    }
    return net;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> PerBitModelSet::serialize() const {
  Writer w;
  for (char c : kModelMagic) w.put(static_cast<std::uint8_t>(c));
  w.put(kModelVersion);
  w.put(static_cast<std::uint8_t>(family_));
  w.u32(challenge_bits_);
  w.u32(response_bits_);
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, std::vector<DecisionTree>>) {
          w.u32(m.size());
          for (const auto& t : m) w.tree(t);
        } else if constexpr (std::is_same_v<M, std::vector<RandomForest>>) {
          w.u32(m.size());
          for (const auto& f : m) {
            w.u32(f.trees.size());
            for (std::size_t k = 0; k < f.trees.size(); ++k) {
              w.put(f.tree_seeds[k]);
              w.tree(f.trees[k]);
            }
          }
        } else if constexpr (std::is_same_v<M, std::vector<BoostedTrees>>) {
          w.u32(m.size());
          for (const auto& b : m) {
            w.put(b.base_score);
            w.put(b.shrinkage);
            w.u32(b.train_loss.size());
            w.array(b.train_loss.data(), b.train_loss.size());
            w.u32(b.trees.size());
            for (const auto& t : b.trees) w.tree(t);
          }
        } else if constexpr (std::is_same_v<M, Mlp>) {
          w.mlp(m);
        } else if constexpr (std::is_same_v<M, GbnnEnsemble>) {
          w.u32(static_cast<std::size_t>(m.base_logits.size()));
          w.array(m.base_logits.data(), static_cast<std::size_t>(m.base_logits.size()));
          w.u32(m.stages.size());
          for (const auto& s : m.stages) {
            w.put(s.rho);
            w.mlp(s.learner);
          }
        } else {
          w.u32(static_cast<std::size_t>(m.weights.rows()));
          w.u32(static_cast<std::size_t>(m.weights.cols()));
          w.array(m.weights.data(), static_cast<std::size_t>(m.weights.size()));
        }
      },
      models_);
  return std::move(w.bytes);
}

PerBitModelSet PerBitModelSet::deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (char c : kModelMagic) {
    if (bytes.size() < 4 || r.get<std::uint8_t>() != static_cast<std::uint8_t>(c)) {
      throw Error(ErrorKind::BadMagic, "not a PBM1 model container");
    }
  }
  const auto version = r.get<std::uint16_t>();
  if (version != kModelVersion) throw Error(ErrorKind::UnsupportedVersion, "PBM1 version " + std::to_string(version));
  const auto family_code = r.get<std::uint8_t>();
  if (family_code > static_cast<std::uint8_t>(LearnerFamily::Linear)) {
    throw Error(ErrorKind::FamilyMismatch, "unknown family code in model container");
  }
  const auto family = static_cast<LearnerFamily>(family_code);
  const std::size_t nc = r.u32();
  const std::size_t nr = r.u32();
  Models models;
  switch (family) {
    case LearnerFamily::Tree: {
      std::vector<DecisionTree> trees(r.count());
      for (auto& t : trees) t = r.tree();
      models = std::move(trees);
      break;
    }
    case LearnerFamily::Forest: {
      std::vector<RandomForest> forests(r.count());
      for (auto& f : forests) {
        const auto n = r.count();
        for (std::size_t k = 0; k < n; ++k) {
          f.tree_seeds.push_back(r.get<std::uint64_t>());
          f.trees.push_back(r.tree());
        }
      }
      models = std::move(forests);
      break;
    }
    case LearnerFamily::BoostedTrees: {
      std::vector<BoostedTrees> boosted(r.count());
      for (auto& b : boosted) {
        b.base_score = r.get<double>();
        b.shrinkage = r.get<double>();
        b.train_loss.resize(r.count());
        r.array(b.train_loss.data(), b.train_loss.size());
        const auto n = r.count();
        for (std::size_t k = 0; k < n; ++k) b.trees.push_back(r.tree());
      }
      models = std::move(boosted);
      break;
    }
    case LearnerFamily::Mlp:
      models = r.mlp();
      break;
    case LearnerFamily::Gbnn: {
      GbnnEnsemble g;
      g.base_logits.resize(static_cast<Eigen::Index>(r.count()));
      r.array(g.base_logits.data(), static_cast<std::size_t>(g.base_logits.size()));
      const auto n = r.count();
      for (std::size_t k = 0; k < n; ++k) {
        const double rho = r.get<double>();
        g.stages.push_back({r.mlp(), rho});
      }
      models = std::move(g);
      break;
    }
    case LearnerFamily::Linear: {
      ParityLogistic p;
      const auto rows = static_cast<Eigen::Index>(r.count());
      const auto cols = static_cast<Eigen::Index>(r.count());
      p.weights.resize(rows, cols);
      r.array(p.weights.data(), static_cast<std::size_t>(p.weights.size()));
      models = std::move(p);
      break;
    }
  }
  if (!r.done()) throw Error(ErrorKind::CountMismatch, "trailing bytes in model container");
  return PerBitModelSet(family, nc, nr, std::move(models));
}

void PerBitModelSet::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write to '" + path.string() + "' failed");
}

PerBitModelSet PerBitModelSet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace pufbench::learn
