#include "gslda/cascade.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "gslda/error.hpp"
#include "gslda/parallel.hpp"
#include "gslda/random.hpp"

namespace gslda {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct MethodName {
  TrainMethod method;
  std::string_view name;
};

constexpr MethodName kMethodNames[] = {{TrainMethod::AdaBoost, "adaboost"},
                                       {TrainMethod::AsymBoost, "asymboost"},
                                       {TrainMethod::Gslda, "gslda"},
                                       {TrainMethod::Bgslda1, "bgslda1"},
                                       {TrainMethod::Bgslda2, "bgslda2"}};

std::vector<int> row_responses(const ResponseTable& table, Eigen::Index row) {
  std::vector<int> out(static_cast<std::size_t>(table.cols()));
  for (Eigen::Index i = 0; i < table.cols(); ++i) out[static_cast<std::size_t>(i)] = table(row, i);
  return out;
}

Eigen::VectorXd stump_column(const DecisionStump& s, const FeatureMatrix& values) {
  const Eigen::Index n = values.cols();
  Eigen::VectorXd out(n);
  const auto row = static_cast<Eigen::Index>(s.feature_id);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = s.response(values(row, i));
  return out;
}

// Raw node scores (no threshold) for every column of `values`.
Eigen::VectorXd raw_scores(const std::vector<DecisionStump>& stumps,
                           const std::vector<double>& coefs, const FeatureMatrix& values) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(values.cols());
  for (std::size_t t = 0; t < stumps.size(); ++t) out += coefs[t] * stump_column(stumps[t], values);
  return out;
}

double derive_asym_rounds(const NodeGoal& goal, const NodeTrainingConfig& cfg) {
  if (cfg.asym_rounds > 0.0) return std::max(1.0, cfg.asym_rounds);
  if (goal.min_stumps == goal.max_stumps) return static_cast<double>(goal.max_stumps);
  const double rounds = std::ceil(10.0 * std::log(goal.f_max) / std::log(0.5));
  return std::clamp(rounds, 1.0, static_cast<double>(goal.max_stumps));
}

FeatureMatrix select_columns(const FeatureMatrix& values, const std::vector<Eigen::Index>& cols) {
  FeatureMatrix out(values.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k)
    out.col(static_cast<Eigen::Index>(k)) = values.col(cols[k]);
  return out;
}

std::vector<Eigen::Index> all_indices(std::size_t n) {
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  return idx;
}

// LDA coefficients of the given stump response columns, raw class counts.
std::vector<double> lda_coefficients(const Eigen::MatrixXd& responses, const Eigen::VectorXd& labels,
                                     const ScatterConfig& scatter) {
  ResponseMatrix rm(responses, labels);
  ScatterConfig cfg = scatter;
  cfg.max_features = std::max<Index>(1, responses.cols());
  ScatterContext ctx(rm, cfg);
  const ScatterState state = make_state(all_indices(static_cast<std::size_t>(responses.cols())), ctx);
  const Eigen::VectorXd w = lda_weights(state);
  return {w.data(), w.data() + w.size()};
}

bool same_stump(const DecisionStump& a, const DecisionStump& b) { return a == b; }

}  // namespace

std::string_view to_string(TrainMethod method) {
  for (const auto& m : kMethodNames)
    if (m.method == method) return m.name;
  return "unknown";
}

TrainMethod train_method_from_string(std::string_view name) {
  for (const auto& m : kMethodNames)
    if (m.name == name) return m.method;
  throw Error("unknown training method: " + std::string(name));
}

double NodeClassifier::raw_score(std::span<const int> responses) const {
  if (responses.size() != stumps.size() || coefficients.size() != stumps.size())
    throw Error("response count does not match node stumps");
  double s = 0.0;
  for (std::size_t t = 0; t < responses.size(); ++t) s += coefficients[t] * responses[t];
  return s;
}

int node_decide(const NodeClassifier& node, std::span<const int> responses) {
  return node.raw_score(responses) + node.threshold >= 0.0 ? 1 : -1;
}

void NodeGoal::validate() const {
  if (!(f_max > 0.0 && f_max < 1.0)) throw Error("f_max must lie in (0, 1)");
  if (!(d_min > 0.0 && d_min <= 1.0)) throw Error("d_min must lie in (0, 1]");
  if (max_stumps < 1) throw Error("max_stumps must be at least 1");
  if (min_stumps > max_stumps) throw Error("min_stumps exceeds max_stumps");
}

double tune_node_threshold(std::span<const double> positive_scores, double d_min) {
  if (positive_scores.empty()) return kInf;
  std::vector<double> sorted(positive_scores.begin(), positive_scores.end());
  std::sort(sorted.begin(), sorted.end());
  const auto p = static_cast<double>(sorted.size());
  auto need = static_cast<std::size_t>(std::ceil(d_min * p - 1e-9));
  need = std::clamp<std::size_t>(need, 1, sorted.size());
  return -sorted[sorted.size() - need];
}

double tune_node_threshold(const NodeClassifier& node, const FeatureMatrix& validation_positives,
                           double d_min) {
  const Eigen::VectorXd s = raw_scores(node.stumps, node.coefficients, validation_positives);
  return tune_node_threshold(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())),
                             d_min);
}

std::vector<int> node_responses(const NodeClassifier& node, const FeatureMatrix& values,
                                Eigen::Index sample) {
  std::vector<int> out;
  out.reserve(node.stumps.size());
  for (const auto& s : node.stumps)
    out.push_back(s.response(values(static_cast<Eigen::Index>(s.feature_id), sample)));
  return out;
}

NodeResult train_node(const NodeData& data, const NodeGoal& goal, const NodeTrainingConfig& cfg) {
  goal.validate();
  cfg.boosting.validate();
  if (data.train == nullptr) throw Error("missing training features");
  const FeatureMatrix& train = *data.train;
  const auto n = static_cast<std::size_t>(train.cols());
  if (data.labels.size() != n) throw Error("label count does not match training samples");
  if (train.rows() < 1) throw Error("empty feature pool");

  std::vector<Eigen::Index> pos_idx;
  std::vector<Eigen::Index> neg_idx;
  for (std::size_t i = 0; i < n; ++i)
    (data.labels[i] > 0 ? pos_idx : neg_idx).push_back(static_cast<Eigen::Index>(i));
  if (pos_idx.empty() || neg_idx.empty()) throw Error("degenerate class distribution");

  FeatureMatrix own_validation;
  const FeatureMatrix* validation = data.validation_positives;
  if (validation == nullptr || validation->cols() == 0) {
    own_validation = select_columns(train, pos_idx);
    validation = &own_validation;
  }
  if (validation->rows() != train.rows()) throw Error("validation features do not match pool");

  const std::span<const double> labels(data.labels);
  const Eigen::VectorXd label_vec = Eigen::Map<const Eigen::VectorXd>(data.labels.data(),
                                                                      static_cast<Eigen::Index>(n));
  const SortedFeatures sorted(train);

  NodeResult result;
  NodeClassifier& node = result.node;
  node.trained_by = cfg.method;

  // Tunes the threshold for the current stumps and measures (d, f).
  auto measure = [&] {
    const Eigen::VectorXd val = raw_scores(node.stumps, node.coefficients, *validation);
    node.threshold = tune_node_threshold(
        std::span<const double>(val.data(), static_cast<std::size_t>(val.size())), goal.d_min);
    const Eigen::VectorXd tr = raw_scores(node.stumps, node.coefficients, train);
    std::size_t passed = 0;
    for (Eigen::Index i = 0; i < val.size(); ++i) passed += (val(i) + node.threshold >= 0.0);
    std::size_t false_pos = 0;
    for (Eigen::Index i : neg_idx) false_pos += (tr(i) + node.threshold >= 0.0);
    result.detection_rate = static_cast<double>(passed) / static_cast<double>(val.size());
    result.false_positive_rate = static_cast<double>(false_pos) / static_cast<double>(neg_idx.size());
  };
  auto done = [&] {
    const std::size_t t = node.stumps.size();
    if (t >= goal.max_stumps) return true;
    return t >= goal.min_stumps && result.false_positive_rate <= goal.f_max;
  };

  const bool asym = cfg.method == TrainMethod::AsymBoost || cfg.method == TrainMethod::Bgslda2;
  const double asym_rounds = derive_asym_rounds(goal, cfg);

  switch (cfg.method) {
    case TrainMethod::AdaBoost:
    case TrainMethod::AsymBoost: {
      SampleWeights u = init_weights(labels);
      do {
        if (asym) u = apply_asymmetry(u, labels, cfg.boosting.asym_k, asym_rounds);
        const StumpTable table = build_table(train, labels, u, &sorted);
        Eigen::Index best = 0;
        const double e = table.errors.minCoeff(&best);
        const double a = alpha(e, cfg.boosting.error_floor);
        u = reweight_adaboost(u, row_responses(table.responses, best), labels, a);
        node.stumps.push_back(table.stumps[static_cast<std::size_t>(best)]);
        node.coefficients.push_back(a);
        measure();
      } while (!done());
      break;
    }
    case TrainMethod::Gslda: {
      const StumpTable table = build_table(train, labels, init_weights(labels), &sorted);
      ResponseMatrix rm(table.responses.transpose().cast<double>(), label_vec);
      ScatterConfig scfg = cfg.scatter;
      scfg.max_features = rm.features();
      ScatterContext ctx(rm, scfg);
      ForwardSelector selector(ctx);
      do {
        const auto added = selector.step();
        if (!added) break;
        if (selector.state().selected.size() == 1 && !(selector.state().eigenvalue > 0.0))
          throw Error("no separating feature");
        if (scfg.dual_pass && selector.state().selected.size() >= 3) selector.eliminate(*added);
        const Eigen::VectorXd w = lda_weights(selector.state());
        node.stumps.clear();
        for (Index j : selector.state().selected)
          node.stumps.push_back(table.stumps[static_cast<std::size_t>(j)]);
        node.coefficients.assign(w.data(), w.data() + w.size());
        measure();
      } while (!done());
      break;
    }
    case TrainMethod::Bgslda1:
    case TrainMethod::Bgslda2: {
      SampleWeights u = init_weights(labels);
      Eigen::MatrixXd chosen_responses(static_cast<Eigen::Index>(n), 0);
      do {
        if (asym) u = apply_asymmetry(u, labels, cfg.boosting.asym_k, asym_rounds);
        const StumpTable table = build_table(train, labels, u, &sorted);
        auto fresh = [&](std::size_t t) {
          return std::none_of(node.stumps.begin(), node.stumps.end(),
                              [&](const DecisionStump& s) { return same_stump(s, table.stumps[t]); });
        };
        auto survivors = [&](double epsilon) {
          BoostingConfig bc = cfg.boosting;
          bc.prune_epsilon = epsilon;
          std::vector<std::size_t> out;
          for (std::size_t t : prune_stumps(table, u, labels, bc).survivors)
            if (fresh(t)) out.push_back(t);
          return out;
        };
        std::vector<std::size_t> candidates = survivors(cfg.boosting.prune_epsilon);
        if (candidates.empty()) candidates = survivors(2.0 * cfg.boosting.prune_epsilon);

        std::optional<std::size_t> pick;
        if (!candidates.empty()) {
          const Eigen::Index t_sel = chosen_responses.cols();
          const auto k = static_cast<Eigen::Index>(candidates.size());
          Eigen::MatrixXd combined(static_cast<Eigen::Index>(n), t_sel + k);
          combined.leftCols(t_sel) = chosen_responses;
          for (Eigen::Index c = 0; c < k; ++c)
            combined.col(t_sel + c) =
                table.responses.row(static_cast<Eigen::Index>(candidates[static_cast<std::size_t>(c)]))
                    .transpose()
                    .cast<double>();
          ResponseMatrix rm(std::move(combined), label_vec);
          ScatterConfig scfg = cfg.scatter;
          scfg.max_features = rm.features();
          ScatterContext ctx(rm, scfg, &u);
          const ScatterState state = make_state(all_indices(static_cast<std::size_t>(t_sel)), ctx);
          std::vector<Index> cand_cols(static_cast<std::size_t>(k));
          std::iota(cand_cols.begin(), cand_cols.end(), t_sel);
          const auto scores = candidate_eigenvalues(state, cand_cols, ctx);
          double best = -kInf;
          for (std::size_t c = 0; c < scores.size(); ++c) {
            if (scores[c] && *scores[c] > best) {
              best = *scores[c];
              pick = candidates[c];
            }
          }
        }
        if (!pick) {
          double best = kInf;
          for (std::size_t t = 0; t < table.size(); ++t) {
            if (fresh(t) && table.errors(static_cast<Eigen::Index>(t)) < best) {
              best = table.errors(static_cast<Eigen::Index>(t));
              pick = t;
            }
          }
        }
        if (!pick) break;

        const auto row = static_cast<Eigen::Index>(*pick);
        const double a = alpha(table.errors(row), cfg.boosting.error_floor);
        u = reweight_adaboost(u, row_responses(table.responses, row), labels, a);
        node.stumps.push_back(table.stumps[*pick]);
        chosen_responses.conservativeResize(Eigen::NoChange, chosen_responses.cols() + 1);
        chosen_responses.col(chosen_responses.cols() - 1) =
            table.responses.row(row).transpose().cast<double>();
        node.coefficients = lda_coefficients(chosen_responses, label_vec, cfg.scatter);
        measure();
      } while (!done());
      break;
    }
  }
  if (node.stumps.empty()) throw Error("no weak classifier could be added");
  node.goal_met = result.false_positive_rate <= goal.f_max;
  return result;
}

WindowEvaluation evaluate_window(const CascadeModel& model, const IntegralImage& ii,
                                 const WindowGeometry& window, std::optional<std::size_t> depth,
                                 bool early_exit) {
  WindowEvaluation out;
  const std::size_t limit = std::min(model.nodes.size(), depth.value_or(model.nodes.size()));
  bool passing = true;
  for (std::size_t k = 0; k < limit; ++k) {
    const NodeClassifier& node = model.nodes[k];
    double s = node.threshold;
    for (std::size_t t = 0; t < node.stumps.size(); ++t) {
      const DecisionStump& stump = node.stumps[t];
      const double v = eval_haar(model.features.at(stump.feature_id), ii, window.x, window.y,
                                 window.scale);
      s += node.coefficients[t] * stump.response(v);
    }
    out.haar_evaluations += node.stumps.size();
    out.score = s;
    if (s < 0.0) {
      passing = false;
      if (early_exit) break;
    } else if (passing) {
      ++out.stages_passed;
    }
  }
  out.accepted = passing;
  return out;
}

FeatureMatrix compute_features(const std::vector<HaarFeature>& features,
                               const std::vector<WindowSample>& samples) {
  FeatureMatrix out(static_cast<Eigen::Index>(features.size()),
                    static_cast<Eigen::Index>(samples.size()));
  parallel_for(samples.size(), [&](std::size_t s) {
    const WindowSample& w = samples[s];
    if (!w.image) throw Error("sample without image");
    for (std::size_t j = 0; j < features.size(); ++j)
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(s)) =
          eval_haar(features[j], *w.image, w.x, w.y, w.scale);
  });
  return out;
}

BootstrapResult bootstrap_negatives(const CascadeModel& model,
                                    const std::vector<std::shared_ptr<const IntegralImage>>& reservoir,
                                    std::size_t count, const BootstrapConfig& cfg,
                                    std::set<WindowKey>* used) {
  if (reservoir.empty()) throw Error("empty negative reservoir");
  struct Candidate {
    std::size_t image;
    WindowGeometry window;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < reservoir.size(); ++i) {
    for (const auto& w : enumerate_windows(reservoir[i]->width(), reservoir[i]->height(),
                                           model.base_window, cfg.scan))
      candidates.push_back({i, w});
  }
  Rng rng(cfg.seed);
  rng.shuffle(std::span<Candidate>(candidates));

  BootstrapResult out;
  for (const Candidate& c : candidates) {
    if (out.samples.size() >= count) break;
    const WindowKey key{c.image, c.window.x, c.window.y, c.window.side};
    if (used != nullptr && used->contains(key)) continue;
    ++out.windows_examined;
    if (!evaluate_window(model, *reservoir[c.image], c.window).accepted) continue;
    out.samples.push_back({reservoir[c.image], c.window.x, c.window.y, c.window.scale});
    if (used != nullptr) used->insert(key);
  }
  out.exhausted = out.samples.size() < cfg.min_found;
  return out;
}

std::vector<StageRates> accumulate_rates(std::span<const std::pair<double, double>> stage_df) {
  std::vector<StageRates> out;
  double d_cum = 1.0;
  double f_cum = 1.0;
  for (const auto& [d, f] : stage_df) {
    d_cum *= d;
    f_cum *= f;
    out.push_back({d, f, d_cum, f_cum});
  }
  return out;
}

void compact_features(CascadeModel& model) {
  std::map<std::size_t, std::size_t> remap;
  for (const auto& node : model.nodes)
    for (const auto& s : node.stumps) remap.emplace(s.feature_id, 0);
  std::vector<HaarFeature> kept;
  for (auto& [old_id, new_id] : remap) {
    new_id = kept.size();
    kept.push_back(model.features.at(old_id));
  }
  for (auto& node : model.nodes)
    for (auto& s : node.stumps) s.feature_id = remap.at(s.feature_id);
  model.features = std::move(kept);
}

CascadeResult train_cascade(const TrainingPool& pool, const std::vector<HaarFeature>& features,
                            int base_window, const CascadeConfig& cfg,
                            const StageCallback& on_stage) {
  cfg.goal.validate();
  if (pool.positives.empty()) throw Error("empty positive set");
  if (features.empty()) throw Error("empty feature pool");
  if (!(pool.validation_fraction >= 0.0 && pool.validation_fraction < 1.0))
    throw Error("validation fraction must lie in [0, 1)");

  CascadeResult result;
  CascadeModel& model = result.model;
  model.base_window = base_window;
  model.features = features;
  model.f_target = cfg.f_target;
  model.training = {std::string(to_string(cfg.node.method)),
                    cfg.goal.d_min,
                    cfg.goal.f_max,
                    cfg.f_target,
                    cfg.seed,
                    cfg.node.scatter.gamma,
                    cfg.node.boosting.asym_k,
                    cfg.node.boosting.prune_epsilon,
                    cfg.node.scatter.dual_pass,
                    cfg.goal.max_stumps};

  // Fixed validation split of the positives for this seed.
  std::vector<std::size_t> order(pool.positives.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.seed);
  rng.shuffle(std::span<std::size_t>(order));
  auto n_val = static_cast<std::size_t>(std::floor(pool.validation_fraction *
                                                    static_cast<double>(order.size())));
  // Tiny pools tune on the training positives instead.
  if (n_val < 10 || order.size() - n_val < 10) n_val = 0;
  std::vector<WindowSample> train_pos;
  std::vector<WindowSample> val_pos;
  for (std::size_t k = 0; k < order.size(); ++k)
    (k < n_val ? val_pos : train_pos).push_back(pool.positives[order[k]]);
  const FeatureMatrix pos_values = compute_features(features, train_pos);
  const FeatureMatrix val_values = compute_features(features, val_pos);

  std::vector<WindowSample> negatives = pool.negatives;
  std::size_t target = cfg.negatives_per_stage != 0 ? cfg.negatives_per_stage : negatives.size();
  if (target == 0) throw Error("no negative samples and no negatives_per_stage target");
  std::set<WindowKey> used;
  std::uint64_t boot_seed = cfg.bootstrap.seed ^ (cfg.seed * 0x9E3779B97F4A7C15ull);
  const auto min_found = static_cast<std::size_t>(
      std::max(1.0, std::ceil(cfg.min_bootstrap_fraction * static_cast<double>(target))));

  auto refill = [&]() -> bool {
    if (negatives.size() >= target) return true;
    if (pool.negative_reservoir.empty()) return !negatives.empty();
    BootstrapConfig bc = cfg.bootstrap;
    bc.seed = boot_seed++;
    const std::size_t need = target - negatives.size();
    bc.min_found = std::min(need, min_found);
    BootstrapResult boot = bootstrap_negatives(model, pool.negative_reservoir, need, bc, &used);
    negatives.insert(negatives.end(), boot.samples.begin(), boot.samples.end());
    return !boot.exhausted;
  };

  if (negatives.empty() && !refill()) {
    result.bootstrap_exhausted = true;
    compact_features(model);
    return result;
  }

  double d_cum = 1.0;
  double f_cum = 1.0;
  while (f_cum > cfg.f_target && model.nodes.size() < cfg.max_stages && !negatives.empty()) {
    const auto start = std::chrono::steady_clock::now();
    const FeatureMatrix neg_values = compute_features(features, negatives);
    FeatureMatrix train(pos_values.rows(), pos_values.cols() + neg_values.cols());
    train << pos_values, neg_values;
    NodeData data;
    data.train = &train;
    data.labels.assign(static_cast<std::size_t>(pos_values.cols()), 1.0);
    data.labels.resize(static_cast<std::size_t>(train.cols()), -1.0);
    data.validation_positives = val_values.cols() > 0 ? &val_values : nullptr;

    NodeResult nr = train_node(data, cfg.goal, cfg.node);
    d_cum *= nr.detection_rate;
    f_cum *= nr.false_positive_rate;
    model.stage_rates.push_back({nr.detection_rate, nr.false_positive_rate, d_cum, f_cum});

    std::vector<WindowSample> kept;
    for (Eigen::Index i = 0; i < neg_values.cols(); ++i)
      if (node_decide(nr.node, node_responses(nr.node, neg_values, i)) > 0)
        kept.push_back(negatives[static_cast<std::size_t>(i)]);
    const std::size_t stage_negatives = negatives.size();
    negatives = std::move(kept);
    model.nodes.push_back(std::move(nr.node));

    StageRecord rec;
    rec.stage = model.nodes.size();
    rec.stumps = model.nodes.back().stumps.size();
    rec.d = nr.detection_rate;
    rec.f = nr.false_positive_rate;
    rec.D = d_cum;
    rec.F = f_cum;
    rec.goal_met = model.nodes.back().goal_met;
    rec.negatives = stage_negatives;
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(rec);
    if (on_stage) on_stage(rec);

    if (f_cum > cfg.f_target && model.nodes.size() < cfg.max_stages && !refill()) {
      result.bootstrap_exhausted = true;
      break;
    }
  }
  compact_features(model);
  return result;
}

}  // namespace gslda
