#include "gslda/boosting.hpp"

#include <algorithm>
#include <cmath>

#include "gslda/error.hpp"

namespace gslda {

namespace {

// Absorbs summation rounding when comparing errors against e_k + epsilon.
constexpr double kPruneSlack = 1e-12;

void check_lengths(const SampleWeights& w, std::size_t responses, std::size_t labels) {
  if (w.size() != responses || w.size() != labels)
    throw Error("weights, responses and labels differ in length");
}

SampleWeights reweight(const SampleWeights& w, std::span<const int> responses,
                       std::span<const double> labels, double a, double asym_log) {
  check_lengths(w, responses.size(), labels.size());
  Eigen::VectorXd next(static_cast<Eigen::Index>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double y = labels[i];
    const double exponent = 0.5 * (-a * y * responses[i] + y * asym_log);
    next(static_cast<Eigen::Index>(i)) = w[i] * std::exp(exponent);
  }
  if (!(next.sum() > 0.0) || !next.allFinite()) throw Error("reweighting normalizer vanished");
  return SampleWeights(std::move(next));
}

}  // namespace

void BoostingConfig::validate() const {
  if (!(asym_k > 0.0)) throw Error("asym_k must be positive");
  if (!(prune_epsilon >= 0.0)) throw Error("prune_epsilon must be nonnegative");
  if (!(error_floor > 0.0 && error_floor < 0.5)) throw Error("error_floor must lie in (0, 0.5)");
}

SampleWeights init_weights(std::span<const double> labels) {
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  for (double y : labels) (y > 0 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) throw Error("degenerate class distribution");
  Eigen::VectorXd u(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i)
    u(static_cast<Eigen::Index>(i)) =
        labels[i] > 0 ? 0.5 / static_cast<double>(n_pos) : 0.5 / static_cast<double>(n_neg);
  return SampleWeights(std::move(u));
}

SampleWeights init_weights(std::size_t n_pos, std::size_t n_neg) {
  std::vector<double> labels(n_pos, 1.0);
  labels.resize(n_pos + n_neg, -1.0);
  return init_weights(labels);
}

double alpha(double e_t, double error_floor) {
  const double e = std::clamp(e_t, error_floor, 1.0 - error_floor);
  return std::log((1.0 - e) / e);
}

SampleWeights reweight_adaboost(const SampleWeights& w, std::span<const int> responses,
                                std::span<const double> labels, double a) {
  return reweight(w, responses, labels, a, 0.0);
}

SampleWeights reweight_asymboost(const SampleWeights& w, std::span<const int> responses,
                                 std::span<const double> labels, double a, double k,
                                 double rounds) {
  if (!(k > 0.0)) throw Error("asym_k must be positive");
  if (!(rounds >= 1.0)) throw Error("rounds must be at least 1");
  return reweight(w, responses, labels, a, std::log(std::sqrt(k)) / rounds);
}

double asym_multiplier(double label, double k, double rounds) {
  return std::exp(label * std::log(std::sqrt(k)) / rounds);
}

SampleWeights apply_asymmetry(const SampleWeights& w, std::span<const double> labels, double k,
                              double rounds) {
  std::vector<int> neutral(labels.size(), 0);
  return reweight_asymboost(w, neutral, labels, 0.0, k, rounds);
}

PruneResult prune_stumps(const StumpTable& table, const SampleWeights& w,
                         std::span<const double> labels, const BoostingConfig& cfg) {
  cfg.validate();
  if (table.size() == 0) throw Error("empty stump table");
  const std::size_t n = w.size();
  if (labels.size() != n || static_cast<std::size_t>(table.responses.cols()) != n)
    throw Error("stump table does not match weights");

  Eigen::VectorXd signed_w(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) signed_w(static_cast<Eigen::Index>(i)) = w[i] * labels[i];
  const Eigen::VectorXd edges = table.responses.cast<double>() * signed_w;

  PruneResult out;
  Eigen::Index best = 0;
  out.stats.beta_k = edges.maxCoeff(&best);
  out.stats.e_k = (1.0 - out.stats.beta_k) / 2.0;
  const double bound = out.stats.e_k + cfg.prune_epsilon + kPruneSlack;
  for (std::size_t t = 0; t < table.size(); ++t) {
    if (table.errors(static_cast<Eigen::Index>(t)) <= bound || static_cast<Eigen::Index>(t) == best)
      out.survivors.push_back(t);
  }
  return out;
}

}  // namespace gslda
