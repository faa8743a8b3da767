#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "gslda/boosting.hpp"
#include "gslda/features.hpp"
#include "gslda/scatter_lda.hpp"
#include "gslda/weak_learners.hpp"
#include "gslda/windows.hpp"

namespace gslda {

enum class TrainMethod { AdaBoost, AsymBoost, Gslda, Bgslda1, Bgslda2 };

std::string_view to_string(TrainMethod method);
TrainMethod train_method_from_string(std::string_view name);

// F(x) = +1 iff sum_t w_t h_t(x) + threshold >= 0.
struct NodeClassifier {
  std::vector<DecisionStump> stumps;
  std::vector<double> coefficients;
  double threshold = 0.0;
  TrainMethod trained_by = TrainMethod::AdaBoost;
  bool goal_met = true;

  // sum_t w_t h_t, without the threshold.
  double raw_score(std::span<const int> responses) const;
};

int node_decide(const NodeClassifier& node, std::span<const int> responses);

struct NodeGoal {
  double d_min = 0.995;
  double f_max = 0.5;
  std::size_t max_stumps = 200;
  // Keep adding stumps until at least this many, even once the goal is met.
  std::size_t min_stumps = 1;

  void validate() const;
};

struct NodeTrainingConfig {
  TrainMethod method = TrainMethod::Gslda;
  ScatterConfig scatter;    // gamma, ridge, dual_pass, elimination_fraction
  BoostingConfig boosting;  // asym_k, prune_epsilon, error_floor
  // Rounds the asymmetric multiplier is spread over. 0 derives it: the stump
  // budget when min_stumps == max_stumps, else 10 rounds per halving of f_max.
  double asym_rounds = 0.0;
};

// Feature responses for one node: rows are candidate features.
struct NodeData {
  const FeatureMatrix* train = nullptr;  // M x N
  std::vector<double> labels;            // N, +1/-1
  // M x V validation positives used for threshold tuning; null means the
  // training positives are used.
  const FeatureMatrix* validation_positives = nullptr;
};

struct NodeResult {
  NodeClassifier node;
  double detection_rate = 0.0;       // on validation positives
  double false_positive_rate = 1.0;  // on training negatives
};

NodeResult train_node(const NodeData& data, const NodeGoal& goal, const NodeTrainingConfig& cfg);

// Most rejecting threshold that still accepts at least ceil(d_min * P) of the
// positive raw scores. +inf when there are no positives.
double tune_node_threshold(std::span<const double> positive_scores, double d_min);
double tune_node_threshold(const NodeClassifier& node, const FeatureMatrix& validation_positives,
                           double d_min);

// Responses of a node's stumps on column `sample` of a feature matrix.
std::vector<int> node_responses(const NodeClassifier& node, const FeatureMatrix& values,
                                Eigen::Index sample);

struct StageRates {
  double d = 1.0;  // measured detection rate
  double f = 1.0;  // measured false-positive rate
  double D = 1.0;  // running product of d
  double F = 1.0;  // running product of f
};

struct TrainingMetadata {
  std::string method;
  double d_min = 0.995;
  double f_max = 0.5;
  double f_target = 1e-3;
  std::uint64_t seed = 0;
  double gamma = 1.0;
  double asym_k = 1.0;
  double prune_epsilon = 0.1;
  bool dual_pass = false;
  std::size_t max_stumps = 0;
};

struct CascadeModel {
  int base_window = 24;
  std::vector<HaarFeature> features;  // stump feature ids index here
  std::vector<NodeClassifier> nodes;
  std::vector<StageRates> stage_rates;
  double f_target = 1e-3;
  TrainingMetadata training;
};

// Result of running one window through (a prefix of) the cascade.
struct WindowEvaluation {
  bool accepted = true;
  std::size_t stages_passed = 0;
  double score = 0.0;  // margin of the last evaluated node
  std::size_t haar_evaluations = 0;
};

// depth limits evaluation to the first `depth` nodes. early_exit = false
// evaluates every node regardless of rejections (reference path).
WindowEvaluation evaluate_window(const CascadeModel& model, const IntegralImage& ii,
                                 const WindowGeometry& window,
                                 std::optional<std::size_t> depth = std::nullopt,
                                 bool early_exit = true);

struct WindowSample {
  std::shared_ptr<const IntegralImage> image;
  int x = 0;
  int y = 0;
  double scale = 1.0;
};

// M x N feature values of every sample on every feature.
FeatureMatrix compute_features(const std::vector<HaarFeature>& features,
                               const std::vector<WindowSample>& samples);

struct TrainingPool {
  std::vector<WindowSample> positives;
  std::vector<WindowSample> negatives;
  std::vector<std::shared_ptr<const IntegralImage>> negative_reservoir;
  double validation_fraction = 0.2;
};

struct BootstrapConfig {
  ScanParams scan{1.2, 2};
  std::size_t min_found = 1;
  std::uint64_t seed = 0;
};

struct BootstrapResult {
  std::vector<WindowSample> samples;
  bool exhausted = false;
  std::size_t windows_examined = 0;
};

using WindowKey = std::tuple<std::size_t, int, int, int>;  // image, x, y, side

// Collects up to `count` reservoir windows accepted by every node, scanning
// windows in a seed-determined order. Windows in `used` are skipped and the
// returned ones are added to it.
BootstrapResult bootstrap_negatives(const CascadeModel& model,
                                    const std::vector<std::shared_ptr<const IntegralImage>>& reservoir,
                                    std::size_t count, const BootstrapConfig& cfg,
                                    std::set<WindowKey>* used = nullptr);

struct CascadeConfig {
  NodeGoal goal;
  double f_target = 1e-3;
  NodeTrainingConfig node;
  std::size_t max_stages = 30;
  std::uint64_t seed = 0;
  // Negative pool size each stage is refilled to; 0 keeps the initial size.
  std::size_t negatives_per_stage = 0;
  // Bootstrap rounds finding fewer than this fraction of the target stop training.
  double min_bootstrap_fraction = 0.1;
  BootstrapConfig bootstrap;
};

struct StageRecord {
  std::size_t stage = 0;
  std::size_t stumps = 0;
  double d = 1.0;
  double f = 1.0;
  double D = 1.0;
  double F = 1.0;
  bool goal_met = true;
  std::size_t negatives = 0;
  double seconds = 0.0;
};

struct CascadeResult {
  CascadeModel model;
  std::vector<StageRecord> log;
  bool bootstrap_exhausted = false;
};

using StageCallback = std::function<void(const StageRecord&)>;

CascadeResult train_cascade(const TrainingPool& pool, const std::vector<HaarFeature>& features,
                            int base_window, const CascadeConfig& cfg,
                            const StageCallback& on_stage = {});

// Running products of stage rates.
std::vector<StageRates> accumulate_rates(std::span<const std::pair<double, double>> stage_df);

// Drops features no stump references and renumbers stump ids.
void compact_features(CascadeModel& model);

}  // namespace gslda
