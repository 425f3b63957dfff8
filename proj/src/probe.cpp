#include "entsep/probe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "entsep/error.hpp"
#include "entsep/util.hpp"

namespace entsep {
namespace {

Eigen::MatrixXd ToDouble(const EmbeddingMatrix& x) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(x.rows()), static_cast<Eigen::Index>(x.dim()));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto v = x.row(i);
    for (std::size_t d = 0; d < v.size(); ++d)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = v[d];
  }
  return out;
}

Eigen::MatrixXd Rows(const Eigen::MatrixXd& x, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

std::vector<std::uint32_t> Pick(std::span<const std::uint32_t> y,
                                std::span<const std::size_t> idx) {
  std::vector<std::uint32_t> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = y[idx[i]];
  return out;
}

struct Scores {
  double micro = 0.0;
  double macro = 0.0;
};

// Gold labels outside the model's class list are passed as UINT32_MAX.
Scores Evaluate(const ProbeModel& m, const Eigen::MatrixXd& x, std::span<const std::uint32_t> y) {
  if (static_cast<std::size_t>(x.cols()) != static_cast<std::size_t>(m.weights.cols()))
    throw DataError(fmt::format("probe expects dim {}, got {}", m.weights.cols(), x.cols()));
  if (y.empty()) throw DataError("no instances to evaluate");
  const std::size_t k = m.classes.size();
  std::vector<std::size_t> tp(k, 0), fp(k, 0), fn(k, 0);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::uint32_t pred = m.Predict(x.row(i));
    std::uint32_t gold = y[static_cast<std::size_t>(i)];
    if (pred == gold) {
      ++correct;
      ++tp[pred];
    } else {
      ++fp[pred];
      if (gold < k) ++fn[gold];
    }
  }
  Scores s;
  s.micro = static_cast<double>(correct) / static_cast<double>(y.size());
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (tp[c] + fp[c] + fn[c] == 0) continue;
    ++present;
    sum += 2.0 * static_cast<double>(tp[c]) / static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
  }
  s.macro = present ? sum / static_cast<double>(present) : 0.0;
  return s;
}

std::vector<std::uint32_t> Encode(const std::vector<EntityId>& classes,
                                  std::span<const EntityId> labels) {
  std::vector<std::uint32_t> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = std::lower_bound(classes.begin(), classes.end(), labels[i]);
    y[i] = (it != classes.end() && *it == labels[i])
               ? static_cast<std::uint32_t>(it - classes.begin())
               : UINT32_MAX;
  }
  return y;
}

}  // namespace

void ProbeConfig::Validate() const {
  if (!(learning_rate > 0.0) || batch_size == 0 || max_epochs == 0 || !(adam_epsilon > 0.0) ||
      !(min_delta >= 0.0) || folds < 2)
    throw UsageError("probe config values must be positive (folds >= 2)");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw UsageError("probe betas must lie in [0, 1)");
  if (patience == 0 || patience >= max_epochs)
    throw UsageError("probe patience must be in [1, max_epochs)");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw UsageError("probe test_fraction must lie in (0, 1)");
}

ProbeConfig LoadProbeConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(fmt::format("cannot open probe config '{}'", path));
  ProbeConfig cfg;
  try {
    auto j = nlohmann::json::parse(in);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
    cfg.beta1 = j.value("beta1", cfg.beta1);
    cfg.beta2 = j.value("beta2", cfg.beta2);
    cfg.adam_epsilon = j.value("adam_epsilon", cfg.adam_epsilon);
    cfg.patience = j.value("patience", cfg.patience);
    cfg.min_delta = j.value("min_delta", cfg.min_delta);
    cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
    cfg.folds = j.value("folds", cfg.folds);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(fmt::format("bad probe config '{}': {}", path, e.what()));
  }
  cfg.Validate();
  return cfg;
}

std::uint32_t ProbeModel::Predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  Eigen::VectorXd logits = weights * x.transpose() + bias;
  Eigen::Index best = 0;
  logits.maxCoeff(&best);
  return static_cast<std::uint32_t>(best);
}

double CrossEntropy(const ProbeModel& m, const Eigen::MatrixXd& x,
                    std::span<const std::uint32_t> y, Eigen::MatrixXd* grad_w,
                    Eigen::VectorXd* grad_b) {
  const Eigen::Index n = x.rows();
  if (static_cast<std::size_t>(n) != y.size() || n == 0)
    throw DataError("cross-entropy needs one label per row");
  Eigen::MatrixXd logits = x * m.weights.transpose();
  logits.rowwise() += m.bias.transpose();
  Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  logits.colwise() -= row_max;
  Eigen::MatrixXd probs = logits.array().exp().matrix();
  Eigen::VectorXd z = probs.rowwise().sum();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto label = static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)]);
    loss += std::log(z[i]) - logits(i, label);
  }
  loss /= static_cast<double>(n);
  if (grad_w || grad_b) {
    probs.array().colwise() /= z.array();
    for (Eigen::Index i = 0; i < n; ++i) probs(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    probs /= static_cast<double>(n);
    if (grad_w) *grad_w = probs.transpose() * x;
    if (grad_b) *grad_b = probs.colwise().sum().transpose();
  }
  return loss;
}

ProbeModel TrainSoftmax(const Eigen::MatrixXd& x, std::span<const std::uint32_t> y,
                        std::vector<EntityId> classes, const ProbeConfig& cfg,
                        std::uint64_t seed, TrainStats* stats) {
  cfg.Validate();
  const auto k = static_cast<Eigen::Index>(classes.size());
  if (k < 2) throw DataError("probe needs at least 2 classes");
  ProbeModel m;
  m.classes = std::move(classes);
  m.weights = Eigen::MatrixXd::Zero(k, x.cols());
  m.bias = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd mw = m.weights, vw = m.weights;
  Eigen::VectorXd mb = m.bias, vb = m.bias;
  Eigen::MatrixXd gw;
  Eigen::VectorXd gb;

  TrainStats local;
  TrainStats& st = stats ? *stats : local;
  st = TrainStats{};
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.Shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + begin, end - begin);
      Eigen::MatrixXd xb = Rows(x, idx);
      auto yb = Pick(y, idx);
      double loss = CrossEntropy(m, xb, yb, &gw, &gb);
      ++step;
      if (!std::isfinite(loss))
        throw NumericError(fmt::format("probe loss diverged at epoch {}, step {}", epoch, step));
      epoch_loss += loss * static_cast<double>(idx.size());
      mw = cfg.beta1 * mw + (1.0 - cfg.beta1) * gw;
      vw = cfg.beta2 * vw + (1.0 - cfg.beta2) * gw.cwiseAbs2();
      mb = cfg.beta1 * mb + (1.0 - cfg.beta1) * gb;
      vb = cfg.beta2 * vb + (1.0 - cfg.beta2) * gb.cwiseAbs2();
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      m.weights.array() -= cfg.learning_rate * (mw.array() / c1) /
                           ((vw.array() / c2).sqrt() + cfg.adam_epsilon);
      m.bias.array() -= cfg.learning_rate * (mb.array() / c1) /
                        ((vb.array() / c2).sqrt() + cfg.adam_epsilon);
    }
    epoch_loss /= static_cast<double>(order.size());
    st.epoch_loss.push_back(epoch_loss);
    st.epochs_run = epoch + 1;
    if (epoch_loss < best - cfg.min_delta) {
      best = epoch_loss;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      st.early_stopped = true;
      break;
    }
  }
  return m;
}

std::vector<EntityId> Labels(const Corpus& c) {
  std::vector<EntityId> out;
  out.reserve(c.size());
  for (const Instance& inst : c.instances()) out.push_back(inst.entity);
  return out;
}

ProbeResult TrainProbe(const EmbeddingMatrix& x, std::span<const EntityId> labels,
                       const ProbeConfig& cfg, std::uint64_t seed) {
  cfg.Validate();
  if (labels.size() != x.rows())
    throw DataError(fmt::format("{} labels for {} rows", labels.size(), x.rows()));
  std::map<EntityId, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  if (groups.size() < 2) throw DataError("probe needs at least 2 classes");
  for (const auto& [label, rows] : groups)
    if (rows.size() < cfg.folds + 1)
      throw DataError(fmt::format("infeasible stratification: class \"{}\" has {} instances, "
                                  "needs at least {}",
                                  label, rows.size(), cfg.folds + 1));

  std::vector<EntityId> classes;
  for (const auto& [label, _] : groups) classes.push_back(label);
  auto y = Encode(classes, labels);
  Eigen::MatrixXd xd = ToDouble(x);

  // Stratified split and fold assignment, class by class in sorted order.
  Rng split_rng(StageSeed(seed, "probe/split"));
  std::vector<std::size_t> train, test;
  std::vector<std::vector<std::size_t>> folds(cfg.folds);
  for (auto& [label, rows] : groups) {
    std::vector<std::size_t> shuffled = rows;
    split_rng.Shuffle(shuffled);
    auto n_test = static_cast<std::size_t>(
        std::llround(cfg.test_fraction * static_cast<double>(shuffled.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, shuffled.size() - cfg.folds);
    test.insert(test.end(), shuffled.begin(), shuffled.begin() + static_cast<long>(n_test));
    for (std::size_t i = n_test; i < shuffled.size(); ++i) {
      train.push_back(shuffled[i]);
      folds[(i - n_test) % cfg.folds].push_back(shuffled[i]);
    }
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());

  ProbeResult r;
  for (std::size_t f = 0; f < cfg.folds; ++f) {
    std::vector<std::size_t> fit_idx;
    for (std::size_t g = 0; g < cfg.folds; ++g)
      if (g != f) fit_idx.insert(fit_idx.end(), folds[g].begin(), folds[g].end());
    std::sort(fit_idx.begin(), fit_idx.end());
    std::vector<std::size_t> held = folds[f];
    std::sort(held.begin(), held.end());
    ProbeModel fm = TrainSoftmax(Rows(xd, fit_idx), Pick(y, fit_idx), classes, cfg,
                                 StageSeed(seed, fmt::format("probe/fold{}", f)));
    Scores s = Evaluate(fm, Rows(xd, held), Pick(y, held));
    r.fold_f1s.push_back(s.micro);
    r.fold_macro_f1s.push_back(s.macro);
  }

  Eigen::MatrixXd x_train = Rows(xd, train);
  auto y_train = Pick(y, train);
  r.model = TrainSoftmax(x_train, y_train, classes, cfg, StageSeed(seed, "probe/final"), &r.stats);
  Scores held_out = Evaluate(r.model, Rows(xd, test), Pick(y, test));
  r.test_f1 = held_out.micro;
  r.test_macro_f1 = held_out.macro;
  r.train_f1 = Evaluate(r.model, x_train, y_train).micro;
  r.train_size = train.size();
  r.test_size = test.size();
  return r;
}

double EvalProbe(const ProbeModel& m, const EmbeddingMatrix& x, std::span<const EntityId> labels) {
  if (labels.size() != x.rows()) throw DataError("label count does not match rows");
  return Evaluate(m, ToDouble(x), Encode(m.classes, labels)).micro;
}

double EvalProbeMacro(const ProbeModel& m, const EmbeddingMatrix& x,
                      std::span<const EntityId> labels) {
  if (labels.size() != x.rows()) throw DataError("label count does not match rows");
  return Evaluate(m, ToDouble(x), Encode(m.classes, labels)).macro;
}

}  // namespace entsep
