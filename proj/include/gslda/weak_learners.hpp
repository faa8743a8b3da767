#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "gslda/sample_weights.hpp"

namespace gslda {

// Single-feature threshold classifier:
//   response(v) = polarity * sign(v - threshold), sign(0) = +1.
// Thresholds of -inf / +inf give the constant classifiers.
struct DecisionStump {
  std::size_t feature_id = 0;
  double threshold = 0.0;
  int polarity = 1;

  int response(double v) const { return (v - threshold >= 0.0) ? polarity : -polarity; }
  friend bool operator==(const DecisionStump&, const DecisionStump&) = default;
};

struct StumpFit {
  DecisionStump stump;
  double error = 0.0;
};

// Feature values, one row per candidate feature (M x N). Row-major so each
// feature's responses over the samples are contiguous.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ResponseTable = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-feature ascending sample order. Built once per sample set and reused
// across boosting rounds so each retraining is a linear sweep.
class SortedFeatures {
 public:
  SortedFeatures() = default;
  explicit SortedFeatures(const FeatureMatrix& values);
  std::span<const std::uint32_t> order(std::size_t feature) const {
    return {order_.data() + feature * samples_, samples_};
  }
  std::size_t features() const { return features_; }
  std::size_t samples() const { return samples_; }

 private:
  std::size_t features_ = 0;
  std::size_t samples_ = 0;
  std::vector<std::uint32_t> order_;
};

// Minimum weighted 0/1 error stump, O(N log N). Ties prefer the smaller
// threshold, then polarity +1.
StumpFit train_stump(std::span<const double> values, std::span<const double> labels,
                     const SampleWeights& weights);
// Same, using a precomputed ascending order of `values`. O(N).
StumpFit train_stump_sorted(std::span<const double> values, std::span<const std::uint32_t> order,
                            std::span<const double> labels, const SampleWeights& weights);

struct StumpTable {
  std::vector<DecisionStump> stumps;  // stumps[j].feature_id == j
  ResponseTable responses;            // M x N, entries +1/-1
  Eigen::VectorXd errors;             // weighted error under the build weights

  std::size_t size() const { return stumps.size(); }
};

StumpTable build_table(const FeatureMatrix& values, std::span<const double> labels,
                       const SampleWeights& weights, const SortedFeatures* sorted = nullptr);

double weighted_error(std::span<const int> responses, std::span<const double> labels,
                      const SampleWeights& weights);

// Responses of one stump on every sample of a feature row.
void stump_responses(const DecisionStump& stump, std::span<const double> values,
                     std::span<std::int8_t> out);

}  // namespace gslda
