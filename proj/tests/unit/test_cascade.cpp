#include <doctest.h>

#include <cmath>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "gslda/boosting.hpp"
#include "gslda/cascade.hpp"
#include "gslda/dataset.hpp"
#include "gslda/error.hpp"
#include "gslda/experiments.hpp"

using namespace gslda;
using fixture::small_features;
using fixture::small_pool;

namespace {

// Two informative feature rows plus noise rows.
struct NodeFixture {
  FeatureMatrix values;
  std::vector<double> labels;
};

NodeFixture noisy_fixture(std::uint64_t seed, Eigen::Index m = 30, Eigen::Index n = 300) {
  Rng rng(seed);
  NodeFixture f;
  f.values.resize(m, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = i < n / 4 ? 1.0 : -1.0;
    f.labels.push_back(y);
    for (Eigen::Index j = 0; j < m; ++j) f.values(j, i) = rng.normal() + (j % 5 == 0 ? 0.8 * y : 0.0);
  }
  return f;
}

}  // namespace

TEST_CASE("node decision") {
  NodeClassifier n;
  n.stumps = {{0, 0.0, 1}, {1, 0.0, 1}};
  n.coefficients = {0.0, 0.0};
  CHECK(node_decide(n, std::vector<int>{1, -1}) == 1);

  NodeClassifier single;
  single.stumps = {{0, 0.0, 1}};
  single.coefficients = {1.0};
  CHECK(node_decide(single, std::vector<int>{1}) == 1);
  CHECK(node_decide(single, std::vector<int>{-1}) == -1);

  n.coefficients = {0.6, 0.8};
  n.threshold = -0.5;
  CHECK(node_decide(n, std::vector<int>{1, -1}) == -1);
  CHECK_THROWS_AS(node_decide(n, std::vector<int>{1}), Error);
}

TEST_CASE("threshold tuning") {
  const std::vector<double> s{0.3, -1.2, 2.0, 0.7};
  CHECK(tune_node_threshold(s, 1.0) == 1.2);

  Rng rng(7);
  std::vector<double> scores(200);
  for (auto& v : scores) v = rng.normal();
  const double theta = tune_node_threshold(scores, 0.995);
  std::size_t pass = 0;
  for (double v : scores) pass += v + theta >= 0.0;
  CHECK(pass >= 199);

  double last = -std::numeric_limits<double>::infinity();
  for (double d : {0.5, 0.8, 0.9, 0.99, 1.0}) {
    const double t = tune_node_threshold(scores, d);
    CHECK(t >= last);
    last = t;
  }
  CHECK(std::isinf(tune_node_threshold(std::vector<double>{}, 0.9)));
}

TEST_CASE("separable pool: every method needs one stump") {
  FeatureMatrix values(3, 40);
  std::vector<double> labels;
  Rng rng(1);
  for (Eigen::Index i = 0; i < 40; ++i) {
    const double y = i < 10 ? 1.0 : -1.0;
    labels.push_back(y);
    values(0, i) = rng.normal();
    values(1, i) = y + 0.1 * rng.uniform();
    values(2, i) = rng.normal();
  }
  NodeData data;
  data.train = &values;
  data.labels = labels;
  for (TrainMethod m : {TrainMethod::AdaBoost, TrainMethod::AsymBoost, TrainMethod::Gslda,
                        TrainMethod::Bgslda1, TrainMethod::Bgslda2}) {
    CAPTURE(to_string(m));
    NodeTrainingConfig cfg;
    cfg.method = m;
    cfg.boosting.asym_k = 2.0;
    const NodeResult r = train_node(data, NodeGoal{}, cfg);
    CHECK(r.node.stumps.size() == 1);
    CHECK(r.node.stumps[0].feature_id == 1);
    CHECK(r.false_positive_rate == 0.0);
    CHECK(r.detection_rate == 1.0);
    CHECK(r.node.goal_met);
    CHECK(r.node.trained_by == m);
  }
}

TEST_CASE("gslda node follows forward selection on its stump table") {
  const auto f = noisy_fixture(3);
  NodeData data;
  data.train = &f.values;
  data.labels = f.labels;
  NodeGoal goal;
  goal.min_stumps = goal.max_stumps = 6;
  NodeTrainingConfig cfg;
  cfg.method = TrainMethod::Gslda;
  const NodeResult r = train_node(data, goal, cfg);
  REQUIRE(r.node.stumps.size() == 6);

  const StumpTable table = build_table(f.values, f.labels, init_weights(f.labels));
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(f.labels.data(), static_cast<Eigen::Index>(f.labels.size()));
  ScatterConfig sc;
  sc.max_features = 6;
  const ScatterState s = forward_select(ResponseMatrix(table.responses.transpose().cast<double>(), y), sc);
  for (std::size_t k = 0; k < 6; ++k) CHECK(r.node.stumps[k].feature_id == static_cast<std::size_t>(s.selected[k]));
  const Eigen::VectorXd w = lda_weights(s);
  for (std::size_t k = 0; k < 6; ++k) CHECK(r.node.coefficients[k] == doctest::Approx(w(static_cast<Eigen::Index>(k))));
}

TEST_CASE("node training reaches the goal or flags it") {
  const auto f = noisy_fixture(4);
  NodeData data;
  data.train = &f.values;
  data.labels = f.labels;
  for (TrainMethod m : {TrainMethod::AdaBoost, TrainMethod::AsymBoost, TrainMethod::Gslda,
                        TrainMethod::Bgslda1, TrainMethod::Bgslda2}) {
    CAPTURE(to_string(m));
    NodeTrainingConfig cfg;
    cfg.method = m;
    cfg.boosting.asym_k = 3.0;
    NodeGoal goal;
    goal.d_min = 0.99;
    goal.f_max = 0.3;
    goal.max_stumps = 25;
    const NodeResult r = train_node(data, goal, cfg);
    CHECK(r.detection_rate >= 0.99);
    CHECK(r.node.goal_met == (r.false_positive_rate <= 0.3));
    CHECK(r.node.stumps.size() == r.node.coefficients.size());
    if (!r.node.goal_met) CHECK(r.node.stumps.size() == 25);
  }
  NodeGoal tight;
  tight.f_max = 1e-6;
  tight.max_stumps = 3;
  NodeTrainingConfig cfg;
  cfg.method = TrainMethod::AdaBoost;
  const NodeResult r = train_node(data, tight, cfg);
  CHECK_FALSE(r.node.goal_met);
  CHECK(r.node.stumps.size() == 3);
}

TEST_CASE("rate bookkeeping") {
  const std::vector<std::pair<double, double>> three{{1.0, 0.5}, {1.0, 0.5}, {1.0, 0.5}};
  CHECK(accumulate_rates(three).back().F == 0.125);
  std::vector<std::pair<double, double>> many(22, {0.995, 0.5});
  const auto r = accumulate_rates(many);
  double d = 1.0;
  for (int i = 0; i < 22; ++i) d *= 0.995;
  CHECK(r.back().D == d);
  CHECK(r.back().D == doctest::Approx(0.896).epsilon(1e-3));
}

TEST_CASE("bootstrapping") {
  const auto pool = small_pool(5);
  CascadeModel empty;
  empty.base_window = 12;
  BootstrapConfig cfg;
  cfg.seed = 9;
  const auto got = bootstrap_negatives(empty, pool.negative_reservoir, 25, cfg);
  CHECK(got.samples.size() == 25);
  CHECK(got.windows_examined == 25);
  CHECK_FALSE(got.exhausted);

  CascadeModel reject = empty;
  reject.features = {HaarFeature{HaarKind::TwoHorizontal, 0, 0, 2, 1, 12}};
  NodeClassifier never;
  never.stumps = {{0, 0.0, 1}};
  never.coefficients = {1.0};
  never.threshold = -5.0;
  reject.nodes.push_back(never);
  CHECK(bootstrap_negatives(reject, pool.negative_reservoir, 10, cfg).exhausted);

  std::set<WindowKey> used;
  const auto a = bootstrap_negatives(empty, pool.negative_reservoir, 10, cfg, &used);
  const auto b = bootstrap_negatives(empty, pool.negative_reservoir, 10, cfg, &used);
  CHECK(used.size() == 20);
  CHECK_THROWS_AS(bootstrap_negatives(empty, {}, 1, cfg), Error);
}

TEST_CASE("cascade training") {
  const auto pool = small_pool(6);
  const auto features = small_features(12);
  CascadeConfig cfg;
  cfg.seed = 2;
  cfg.f_target = 0.01;
  cfg.goal.max_stumps = 30;
  cfg.node.method = TrainMethod::Gslda;
  std::vector<StageRecord> seen;
  const auto res = train_cascade(pool, features, 12, cfg, [&](const StageRecord& r) { seen.push_back(r); });
  const auto& m = res.model;
  REQUIRE(!m.nodes.empty());
  CHECK(seen.size() == m.nodes.size());
  double d = 1.0, f = 1.0;
  for (std::size_t i = 0; i < m.stage_rates.size(); ++i) {
    d *= m.stage_rates[i].d;
    f *= m.stage_rates[i].f;
    CHECK(std::abs(m.stage_rates[i].D - d) <= 1e-12);
    CHECK(std::abs(m.stage_rates[i].F - f) <= 1e-12);
    CHECK(m.stage_rates[i].d >= cfg.goal.d_min);
    if (m.nodes[i].goal_met) CHECK(m.stage_rates[i].f <= cfg.goal.f_max);
  }
  for (const auto& n : m.nodes)
    for (const auto& s : n.stumps) CHECK(s.feature_id < m.features.size());
  CHECK(m.training.method == "gslda");

  SUBCASE("f_target of one trains nothing") {
    CascadeConfig one = cfg;
    one.f_target = 1.0;
    CHECK(train_cascade(pool, features, 12, one).model.nodes.empty());
  }
  SUBCASE("empty positives") {
    TrainingPool none = pool;
    none.positives.clear();
    CHECK_THROWS_WITH_AS(train_cascade(none, features, 12, cfg), "empty positive set", Error);
  }
}

TEST_CASE("negative shrinkage keeps exactly the accepted negatives") {
  const auto pool = small_pool(7);
  const auto features = small_features(12);
  const FeatureMatrix neg = compute_features(features, pool.negatives);
  const FeatureMatrix pos = compute_features(features, pool.positives);
  FeatureMatrix train(pos.rows(), pos.cols() + neg.cols());
  train << pos, neg;
  NodeData data;
  data.train = &train;
  data.labels.assign(static_cast<std::size_t>(pos.cols()), 1.0);
  data.labels.resize(static_cast<std::size_t>(train.cols()), -1.0);
  NodeTrainingConfig cfg;
  const NodeResult r = train_node(data, NodeGoal{}, cfg);
  std::size_t accepted = 0;
  for (Eigen::Index i = 0; i < neg.cols(); ++i) accepted += node_decide(r.node, node_responses(r.node, neg, i)) > 0;
  CHECK(static_cast<double>(accepted) / static_cast<double>(neg.cols()) == doctest::Approx(r.false_positive_rate));
}

TEST_CASE("method names") {
  for (TrainMethod m : {TrainMethod::AdaBoost, TrainMethod::AsymBoost, TrainMethod::Gslda,
                        TrainMethod::Bgslda1, TrainMethod::Bgslda2})
    CHECK(train_method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(train_method_from_string("lpboost"), Error);
}

TEST_CASE("bgslda1 against adaboost on the toy set") {
  std::size_t no_worse = 0, differ = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ToyDatasetSpec spec;
    spec.seed = seed;
    const ToyData d = make_toy_data(spec);
    const FeatureMatrix values = d.points.transpose().cast<FeatureMatrix::Scalar>();
    NodeData data;
    data.train = &values;
    data.labels = d.labels;
    NodeGoal goal;
    goal.d_min = 0.99;
    goal.f_max = 1e-9;
    goal.min_stumps = goal.max_stumps = 4;
    NodeTrainingConfig cfg;
    cfg.method = TrainMethod::AdaBoost;
    const NodeResult a = train_node(data, goal, cfg);
    cfg.method = TrainMethod::Bgslda1;
    const NodeResult b = train_node(data, goal, cfg);
    no_worse += b.false_positive_rate <= a.false_positive_rate;
    for (std::size_t k = 2; k < 4; ++k)
      if (a.node.stumps[k].feature_id != b.node.stumps[k].feature_id ||
          a.node.stumps[k].threshold != b.node.stumps[k].threshold) {
        ++differ;
        break;
      }
  }
  CHECK(no_worse > 10);
  CHECK(differ > 0);
}
