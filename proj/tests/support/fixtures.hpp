#pragma once

#include <memory>
#include <vector>

#include "gslda/cascade.hpp"
#include "gslda/dataset.hpp"

namespace fixture {

inline gslda::SyntheticCorpus small_corpus(std::uint64_t seed, std::size_t n_test = 0) {
  gslda::SyntheticSpec spec;
  spec.seed = seed;
  spec.size = 12;
  spec.n_pos = 150;
  spec.n_neg = 150;
  spec.n_reservoir = 6;
  spec.reservoir_side = 40;
  spec.n_test = n_test;
  spec.test_side = 48;
  return gslda::make_synthetic_corpus(spec);
}

inline gslda::TrainingPool pool_from(const gslda::SyntheticCorpus& c) {
  gslda::TrainingPool pool;
  for (const auto& p : c.positives)
    pool.positives.push_back({std::make_shared<const gslda::IntegralImage>(p), 0, 0, 1.0});
  for (const auto& p : c.negatives)
    pool.negatives.push_back({std::make_shared<const gslda::IntegralImage>(p), 0, 0, 1.0});
  for (const auto& p : c.reservoir)
    pool.negative_reservoir.push_back(std::make_shared<const gslda::IntegralImage>(p));
  return pool;
}

inline gslda::TrainingPool small_pool(std::uint64_t seed) { return pool_from(small_corpus(seed)); }

inline std::vector<gslda::HaarFeature> small_features(int base, std::size_t count = 300) {
  gslda::HaarEnumeration en;
  en.base_window = base;
  en.stride = 2;
  return gslda::subsample_features(gslda::enumerate_haar(en), count, 1);
}

// A few-stage cascade on a 12x12 window.
inline gslda::CascadeModel small_model(std::uint64_t seed,
                                       gslda::TrainMethod method = gslda::TrainMethod::AdaBoost) {
  gslda::CascadeConfig cfg;
  cfg.seed = seed;
  cfg.f_target = 0.01;
  cfg.max_stages = 4;
  cfg.goal.max_stumps = 20;
  cfg.node.method = method;
  return gslda::train_cascade(small_pool(seed), small_features(12), 12, cfg).model;
}

}  // namespace fixture
