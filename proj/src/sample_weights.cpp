#include "gslda/sample_weights.hpp"

#include "gslda/error.hpp"

namespace gslda {

SampleWeights::SampleWeights(Eigen::VectorXd raw) : u_(std::move(raw)) {
  if (u_.size() == 0) throw Error("empty weight vector");
  if ((u_.array() < 0.0).any() || !u_.allFinite()) throw Error("weights must be finite and nonnegative");
  const double z = u_.sum();
  if (!(z > 0.0)) throw Error("weights sum to zero");
  u_ /= z;
}

SampleWeights SampleWeights::uniform(std::size_t n) {
  return SampleWeights(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)));
}

}  // namespace gslda
