#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gslda/sample_weights.hpp"
#include "gslda/weak_learners.hpp"

namespace gslda {

enum class BoostScheme { AdaBoost, AsymBoost };

struct BoostingConfig {
  BoostScheme scheme = BoostScheme::AdaBoost;
  double asym_k = 1.0;
  double prune_epsilon = 0.1;
  double error_floor = 1e-8;

  void validate() const;
};

// Best edge over a stump pool and the matching error bound.
struct EdgeStats {
  double beta_k = 0.0;  // max_t sum_i u_i y_i h_t(x_i)
  double e_k = 0.5;     // (1 - beta_k) / 2
};

// 0.5/N_p on each positive, 0.5/N_n on each negative.
SampleWeights init_weights(std::span<const double> labels);
// Positives first, then negatives.
SampleWeights init_weights(std::size_t n_pos, std::size_t n_neg);

// log((1 - e) / e) with e clamped to [floor, 1 - floor].
double alpha(double e_t, double error_floor = 1e-8);

// u_i <- u_i * exp(-(a/2) y_i h_i) / Z. The half exponent makes the update
// equal to the beta = e/(1-e) rule: with a = alpha(e_t) the just-used stump
// sits at weighted error 1/2 afterwards.
SampleWeights reweight_adaboost(const SampleWeights& w, std::span<const int> responses,
                                std::span<const double> labels, double a);

// AdaBoost update combined with the asymmetric multiplier exp(y_i log sqrt k),
// applied at the same half strength. rounds > 1 spreads the multiplier over
// that many rounds (exponent divided by rounds).
SampleWeights reweight_asymboost(const SampleWeights& w, std::span<const int> responses,
                                 std::span<const double> labels, double a, double k,
                                 double rounds = 1.0);

// The raw one-shot asymmetric factor exp(y log sqrt k); the positive/negative
// ratio is k.
double asym_multiplier(double label, double k, double rounds = 1.0);

// Applies only the amortized asymmetric multiplier (no stump term).
SampleWeights apply_asymmetry(const SampleWeights& w, std::span<const double> labels, double k,
                              double rounds);

struct PruneResult {
  std::vector<std::size_t> survivors;  // ascending feature ids
  EdgeStats stats;
};

// Keeps stumps whose weighted error is <= e_k + epsilon. The max-edge stump
// always survives.
PruneResult prune_stumps(const StumpTable& table, const SampleWeights& w,
                         std::span<const double> labels, const BoostingConfig& cfg);

}  // namespace gslda
