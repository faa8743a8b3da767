#include "gslda/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "gslda/error.hpp"
#include "gslda/random.hpp"
#include "gslda/scatter_lda.hpp"

namespace gslda {

namespace {

constexpr std::size_t kMaxThresholdsPerAxis = 256;

struct ToyPool {
  std::vector<ToyStump> stumps;  // polarity +1
  Eigen::MatrixXd responses;     // N x K
};

ToyPool toy_pool(const ToyData& data) {
  ToyPool pool;
  const Eigen::Index n = data.points.rows();
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<double> v(data.points.col(axis).data(), data.points.col(axis).data() + n);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    std::vector<double> mids;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) mids.push_back(0.5 * (v[i] + v[i + 1]));
    if (mids.size() > kMaxThresholdsPerAxis) {
      std::vector<double> picked;
      for (std::size_t k = 0; k < kMaxThresholdsPerAxis; ++k)
        picked.push_back(mids[k * (mids.size() - 1) / (kMaxThresholdsPerAxis - 1)]);
      mids = std::move(picked);
    }
    for (double t : mids) pool.stumps.push_back({axis, t, 1, 0});
  }
  pool.responses.resize(n, static_cast<Eigen::Index>(pool.stumps.size()));
  for (Eigen::Index k = 0; k < pool.responses.cols(); ++k) {
    const auto& s = pool.stumps[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < n; ++i)
      pool.responses(i, k) = data.points(i, s.axis) - s.threshold >= 0.0 ? 1.0 : -1.0;
  }
  return pool;
}

void score_report(ToyMethodReport& rep, const Eigen::VectorXd& scores,
                  const std::vector<double>& labels, double d_min) {
  std::vector<double> pos;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] > 0) pos.push_back(scores(static_cast<Eigen::Index>(i)));
  const double theta = tune_node_threshold(pos, d_min);
  std::size_t tp = 0;
  rep.false_positives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool accept = scores(static_cast<Eigen::Index>(i)) + theta >= 0.0;
    if (labels[i] > 0)
      tp += accept;
    else
      rep.false_positives += accept;
  }
  rep.detection_rate = static_cast<double>(tp) / static_cast<double>(pos.size());
}

}  // namespace

void ToyDatasetSpec::validate() const {
  if (n_pos == 0) throw Error("toy spec needs at least one positive");
  if (n_neg < n_pos) throw Error("toy spec must have n_neg >= n_pos");
  if (!(pos_sd > 0.0) || !(ring_sd >= 0.0) || !(clutter_extent > 0.0))
    throw Error("toy spec spreads must be positive");
  if (!(clutter_fraction >= 0.0 && clutter_fraction <= 1.0))
    throw Error("toy clutter fraction must lie in [0, 1]");
}

ToyData make_toy_data(const ToyDatasetSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  ToyData d;
  d.points.resize(static_cast<Eigen::Index>(spec.n_pos + spec.n_neg), 2);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < spec.n_pos; ++i, ++row) {
    d.points(row, 0) = rng.normal(0.0, spec.pos_sd);
    d.points(row, 1) = rng.normal(0.0, spec.pos_sd);
    d.labels.push_back(1.0);
  }
  for (std::size_t i = 0; i < spec.n_neg; ++i, ++row) {
    if (rng.uniform() < spec.clutter_fraction) {
      d.points(row, 0) = rng.uniform(-spec.clutter_extent, spec.clutter_extent);
      d.points(row, 1) = rng.uniform(-spec.clutter_extent, spec.clutter_extent);
    } else {
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double r = rng.normal(spec.ring_radius, spec.ring_sd);
      d.points(row, 0) = r * std::cos(angle);
      d.points(row, 1) = r * std::sin(angle);
    }
    d.labels.push_back(-1.0);
  }
  return d;
}

ToyTrial run_toy_trial(const ToyDatasetSpec& spec, std::size_t rounds, double d_min) {
  if (rounds == 0) throw Error("toy rounds must be positive");
  const ToyData data = make_toy_data(spec);
  const ToyPool pool = toy_pool(data);
  const auto k = static_cast<std::size_t>(pool.responses.cols());
  if (k < rounds) throw Error("toy pool smaller than the round count");
  const Eigen::Index n = pool.responses.rows();
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(data.labels.data(), n);

  ToyTrial trial;
  trial.seed = spec.seed;

  {  // AdaBoost over both polarities of every pooled stump.
    SampleWeights u = init_weights(data.labels);
    Eigen::VectorXd scores = Eigen::VectorXd::Zero(n);
    for (std::size_t r = 0; r < rounds; ++r) {
      double best = 2.0;
      std::size_t best_k = 0;
      int best_pol = 1;
      for (std::size_t c = 0; c < k; ++c) {
        double err = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
          if (pool.responses(i, static_cast<Eigen::Index>(c)) != y(i)) err += u[static_cast<std::size_t>(i)];
        for (int pol : {1, -1}) {
          const double e = pol > 0 ? err : 1.0 - err;
          if (e < best) {
            best = e;
            best_k = c;
            best_pol = pol;
          }
        }
      }
      const double a = alpha(best, 1e-8);
      std::vector<int> resp(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i)
        resp[static_cast<std::size_t>(i)] =
            best_pol * static_cast<int>(pool.responses(i, static_cast<Eigen::Index>(best_k)));
      u = reweight_adaboost(u, resp, data.labels, a);
      for (Eigen::Index i = 0; i < n; ++i) scores(i) += a * resp[static_cast<std::size_t>(i)];
      ToyStump s = pool.stumps[best_k];
      s.polarity = best_pol;
      s.order = r;
      trial.adaboost.stumps.push_back(s);
      trial.adaboost.coefficients.push_back(a);
    }
    score_report(trial.adaboost, scores, data.labels, d_min);
  }

  {  // GSLDA forward selection on the same pool.
    ResponseMatrix rm(pool.responses, y);
    ScatterConfig cfg;
    cfg.max_features = static_cast<Index>(rounds);
    const ScatterState state = forward_select(rm, cfg);
    const Eigen::VectorXd w = lda_weights(state);
    Eigen::VectorXd scores = Eigen::VectorXd::Zero(n);
    for (std::size_t r = 0; r < state.selected.size(); ++r) {
      const Index col = state.selected[r];
      scores += w(static_cast<Eigen::Index>(r)) * pool.responses.col(col);
      ToyStump s = pool.stumps[static_cast<std::size_t>(col)];
      s.order = r;
      trial.gslda.stumps.push_back(s);
      trial.gslda.coefficients.push_back(w(static_cast<Eigen::Index>(r)));
    }
    score_report(trial.gslda, scores, data.labels, d_min);
  }
  return trial;
}

ToySummary run_toy(const ToyDatasetSpec& spec, std::size_t trials, std::size_t rounds,
                   double d_min) {
  if (trials == 0) throw Error("toy needs at least one trial");
  ToySummary summary;
  std::size_t wins = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    ToyDatasetSpec s = spec;
    s.seed = spec.seed + t;
    summary.trials.push_back(run_toy_trial(s, rounds, d_min));
    const auto& last = summary.trials.back();
    wins += last.gslda.false_positives <= last.adaboost.false_positives;
  }
  summary.gslda_win_fraction = static_cast<double>(wins) / static_cast<double>(trials);
  return summary;
}

FeatureMatrix patch_features(const std::vector<HaarFeature>& features,
                             const std::vector<GrayImage>& patches) {
  std::vector<WindowSample> samples;
  samples.reserve(patches.size());
  for (const auto& p : patches) samples.push_back({std::make_shared<const IntegralImage>(p), 0, 0, 1.0});
  return compute_features(features, samples);
}

std::vector<NodeExperimentRow> run_node_experiment(const SyntheticCorpus& corpus,
                                                   const NodeExperimentConfig& cfg) {
  if (corpus.positives.size() < 5 || corpus.negatives.size() < 5)
    throw Error("node experiment needs at least 5 samples per class");
  HaarEnumeration en;
  en.base_window = corpus.size;
  const auto features = subsample_features(enumerate_haar(en), cfg.max_features, cfg.seed);

  Rng rng(cfg.seed);
  auto split = [&](const std::vector<GrayImage>& all) {
    std::vector<std::size_t> idx(all.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(std::span<std::size_t>(idx));
    const std::size_t n_train = all.size() * 6 / 10;
    const std::size_t n_val = all.size() * 2 / 10;
    std::array<std::vector<GrayImage>, 3> parts;
    for (std::size_t k = 0; k < idx.size(); ++k)
      parts[k < n_train ? 0 : (k < n_train + n_val ? 1 : 2)].push_back(all[idx[k]]);
    return parts;
  };
  const auto pos = split(corpus.positives);
  const auto neg = split(corpus.negatives);

  const FeatureMatrix pos_train = patch_features(features, pos[0]);
  const FeatureMatrix neg_train = patch_features(features, neg[0]);
  const FeatureMatrix pos_val = patch_features(features, pos[1]);
  const FeatureMatrix pos_test = patch_features(features, pos[2]);
  const FeatureMatrix neg_test = patch_features(features, neg[2]);

  FeatureMatrix train(pos_train.rows(), pos_train.cols() + neg_train.cols());
  train << pos_train, neg_train;
  NodeData data;
  data.train = &train;
  data.labels.assign(static_cast<std::size_t>(pos_train.cols()), 1.0);
  data.labels.resize(static_cast<std::size_t>(train.cols()), -1.0);
  data.validation_positives = &pos_val;

  NodeGoal goal;
  goal.d_min = cfg.d_detect;
  goal.f_max = 0.5;
  goal.min_stumps = cfg.stumps;
  goal.max_stumps = cfg.stumps;

  auto pass_rate = [](const NodeClassifier& node, const FeatureMatrix& values) {
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < values.cols(); ++i)
      n += node_decide(node, node_responses(node, values, i)) > 0;
    return static_cast<double>(n) / static_cast<double>(values.cols());
  };

  std::vector<NodeExperimentRow> rows;
  for (TrainMethod method : cfg.methods) {
    NodeTrainingConfig ncfg = cfg.node;
    ncfg.method = method;
    const NodeResult nr = train_node(data, goal, ncfg);
    NodeExperimentRow row;
    row.method = method;
    row.validation_detection = nr.detection_rate;
    row.test_detection = pass_rate(nr.node, pos_test);
    row.test_false_alarm = pass_rate(nr.node, neg_test);
    const double p = static_cast<double>(pos_test.cols());
    const double q = static_cast<double>(neg_test.cols());
    row.test_error = ((1.0 - row.test_detection) * p + row.test_false_alarm * q) / (p + q);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gslda
