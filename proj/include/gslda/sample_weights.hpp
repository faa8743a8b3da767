#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>

namespace gslda {

// Nonnegative boosting distribution over training samples. Every operation
// that produces a SampleWeights leaves it normalized to unit sum.
class SampleWeights {
 public:
  SampleWeights() = default;
  // Takes raw nonnegative masses and normalizes them.
  explicit SampleWeights(Eigen::VectorXd raw);
  static SampleWeights uniform(std::size_t n);

  std::size_t size() const { return static_cast<std::size_t>(u_.size()); }
  double operator[](std::size_t i) const { return u_[static_cast<Eigen::Index>(i)]; }
  const Eigen::VectorXd& values() const { return u_; }
  std::span<const double> span() const { return {u_.data(), size()}; }

  double sum() const { return u_.sum(); }

 private:
  Eigen::VectorXd u_;
};

}  // namespace gslda
