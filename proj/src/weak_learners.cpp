#include "gslda/weak_learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gslda/error.hpp"
#include "gslda/parallel.hpp"

namespace gslda {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_inputs(std::size_t n, std::span<const double> labels, const SampleWeights& weights) {
  if (n < 2) throw Error("at least two samples are required");
  if (labels.size() != n || weights.size() != n) throw Error("values, labels and weights differ in length");
}

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return (mid > lo) ? mid : hi;
}

}  // namespace

SortedFeatures::SortedFeatures(const FeatureMatrix& values)
    : features_(static_cast<std::size_t>(values.rows())),
      samples_(static_cast<std::size_t>(values.cols())),
      order_(features_ * samples_) {
  parallel_for(features_, [&](std::size_t j) {
    auto* first = order_.data() + j * samples_;
    std::iota(first, first + samples_, 0u);
    const double* row = values.data() + j * samples_;
    std::stable_sort(first, first + samples_,
                     [row](std::uint32_t a, std::uint32_t b) { return row[a] < row[b]; });
  });
}

StumpFit train_stump_sorted(std::span<const double> values, std::span<const std::uint32_t> order,
                            std::span<const double> labels, const SampleWeights& weights) {
  const std::size_t n = values.size();
  check_inputs(n, labels, weights);
  if (order.size() != n) throw Error("sort order length mismatch");

  double pos_total = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += weights[i];
    if (labels[i] > 0) pos_total += weights[i];
  }
  // Polarity +1 predicts +1 for v >= threshold. At threshold -inf every
  // sample is predicted +1, so the error is the negative mass.
  double err_plus = total - pos_total;
  StumpFit best{{0, -kInf, 1}, err_plus};
  auto consider = [&](double threshold, double e_plus) {
    if (e_plus < best.error) best = {{0, threshold, 1}, e_plus};
    const double e_minus = total - e_plus;
    if (e_minus < best.error) best = {{0, threshold, -1}, e_minus};
  };
  consider(-kInf, err_plus);  // polarity -1 at -inf

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    // Sample i moves to the "below threshold" side (predicted -1).
    err_plus += (labels[i] > 0) ? weights[i] : -weights[i];
    if (k + 1 < n) {
      const double lo = values[i];
      const double hi = values[order[k + 1]];
      if (hi > lo) consider(midpoint(lo, hi), err_plus);
    } else {
      consider(kInf, err_plus);
    }
  }
  best.error = std::max(best.error, 0.0);
  return best;
}

StumpFit train_stump(std::span<const double> values, std::span<const double> labels,
                     const SampleWeights& weights) {
  check_inputs(values.size(), labels, weights);
  std::vector<std::uint32_t> order(values.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });
  return train_stump_sorted(values, order, labels, weights);
}

void stump_responses(const DecisionStump& stump, std::span<const double> values,
                     std::span<std::int8_t> out) {
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = static_cast<std::int8_t>(stump.response(values[i]));
}

StumpTable build_table(const FeatureMatrix& values, std::span<const double> labels,
                       const SampleWeights& weights, const SortedFeatures* sorted) {
  const auto m = static_cast<std::size_t>(values.rows());
  const auto n = static_cast<std::size_t>(values.cols());
  if (sorted != nullptr && (sorted->features() != m || sorted->samples() != n))
    throw Error("sorted order does not match feature matrix");
  StumpTable table;
  table.stumps.resize(m);
  table.responses.resize(values.rows(), values.cols());
  table.errors.resize(values.rows());
  parallel_for(m, [&](std::size_t j) {
    std::span<const double> row(values.data() + j * n, n);
    StumpFit fit = (sorted != nullptr) ? train_stump_sorted(row, sorted->order(j), labels, weights)
                                       : train_stump(row, labels, weights);
    fit.stump.feature_id = j;
    table.stumps[j] = fit.stump;
    table.errors(static_cast<Eigen::Index>(j)) = fit.error;
    stump_responses(fit.stump, row, {table.responses.data() + j * n, n});
  });
  return table;
}

double weighted_error(std::span<const int> responses, std::span<const double> labels,
                      const SampleWeights& weights) {
  if (responses.size() != labels.size() || labels.size() != weights.size())
    throw Error("responses, labels and weights differ in length");
  double e = 0.0;
  for (std::size_t i = 0; i < responses.size(); ++i)
    if (static_cast<double>(responses[i]) != labels[i]) e += weights[i];
  return e;
}

}  // namespace gslda
