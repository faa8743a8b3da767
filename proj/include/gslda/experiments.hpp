#pragma once

#include <cstdint>
#include <vector>

#include "gslda/cascade.hpp"
#include "gslda/dataset.hpp"

namespace gslda {

// 2-D skewed toy set: a compact Gaussian positive cluster inside a broad
// ring of negatives, plus uniform clutter.
struct ToyDatasetSpec {
  std::size_t n_pos = 100;
  std::size_t n_neg = 2000;
  std::uint64_t seed = 0;
  double pos_sd = 0.5;
  double ring_radius = 2.5;
  double ring_sd = 0.6;
  double clutter_fraction = 0.2;
  double clutter_extent = 5.0;

  void validate() const;
};

struct ToyData {
  Eigen::MatrixXd points;  // N x 2
  std::vector<double> labels;
};

ToyData make_toy_data(const ToyDatasetSpec& spec);

struct ToyStump {
  int axis = 0;
  double threshold = 0.0;
  int polarity = 1;
  std::size_t order = 0;
};

struct ToyMethodReport {
  std::vector<ToyStump> stumps;
  std::vector<double> coefficients;
  std::size_t false_positives = 0;
  double detection_rate = 0.0;
};

struct ToyTrial {
  std::uint64_t seed = 0;
  ToyMethodReport adaboost;
  ToyMethodReport gslda;
};

// Trains `rounds`-stump AdaBoost and GSLDA nodes over axis-aligned stump
// candidates and counts false positives at >= d_min training detection.
ToyTrial run_toy_trial(const ToyDatasetSpec& spec, std::size_t rounds = 4, double d_min = 0.99);

struct ToySummary {
  std::vector<ToyTrial> trials;
  double gslda_win_fraction = 0.0;  // trials with GSLDA FP <= AdaBoost FP
};

ToySummary run_toy(const ToyDatasetSpec& spec, std::size_t trials, std::size_t rounds = 4,
                   double d_min = 0.99);

// Single-node comparison on synthetic face patches: each class is split
// 60/20/20 into train/validation/test, a node with a fixed stump count is
// trained per method, its threshold set for d_detect validation detection,
// and the false-alarm rate measured on the test negatives.
struct NodeExperimentConfig {
  std::uint64_t seed = 1;
  std::size_t stumps = 100;
  double d_detect = 0.99;
  std::size_t max_features = 2000;
  std::vector<TrainMethod> methods{TrainMethod::AdaBoost, TrainMethod::Bgslda1};
  NodeTrainingConfig node;
};

struct NodeExperimentRow {
  TrainMethod method = TrainMethod::AdaBoost;
  double validation_detection = 0.0;
  double test_detection = 0.0;
  double test_false_alarm = 0.0;
  double test_error = 0.0;  // misclassified test samples at the tuned threshold
};

std::vector<NodeExperimentRow> run_node_experiment(const SyntheticCorpus& corpus,
                                                   const NodeExperimentConfig& cfg);

// M x N feature values of whole patches at scale 1.
FeatureMatrix patch_features(const std::vector<HaarFeature>& features,
                             const std::vector<GrayImage>& patches);

}  // namespace gslda
