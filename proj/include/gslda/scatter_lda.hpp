#pragma once

// Greedy sparse LDA for two classes over binary (+1/-1) weak-classifier
// outputs. The between-class scatter is rank one, S_b = b b^T, so the only
// finite generalized eigenvalue of (S_b, S_w) restricted to a subset l is
// b_l^T (S_w^l)^-1 b_l. Forward selection grows l one index at a time and
// recycles (S_w^l)^-1 through a bordered (rank-one) block update.

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <vector>

#include "gslda/sample_weights.hpp"

namespace gslda {

using Index = Eigen::Index;

// N x M matrix of weak-classifier outputs (sample i, classifier j) plus labels.
class ResponseMatrix {
 public:
  ResponseMatrix(Eigen::MatrixXd responses, Eigen::VectorXd labels);

  const Eigen::MatrixXd& responses() const { return responses_; }
  const Eigen::VectorXd& labels() const { return labels_; }
  Index samples() const { return responses_.rows(); }
  Index features() const { return responses_.cols(); }
  Index positives() const { return n_pos_; }
  Index negatives() const { return n_neg_; }

 private:
  Eigen::MatrixXd responses_;
  Eigen::VectorXd labels_;
  Index n_pos_ = 0;
  Index n_neg_ = 0;
};

struct ScatterConfig {
  double gamma = 1.0;   // weight on the negative-class scatter
  double ridge = 1e-6;  // added to the within-class diagonal
  Index max_features = 10;
  bool dual_pass = false;
  // Backward elimination removes a feature when the eigenvalue drop is below
  // this fraction of the current eigenvalue.
  double elimination_fraction = 0.05;

  void validate() const;
};

struct ScatterState {
  std::vector<Index> selected;
  Eigen::MatrixXd inv_sw;  // (S_w^l)^-1
  Eigen::VectorXd b_restricted;
  double eigenvalue = 0.0;
};

// Class statistics shared by all scatter queries on one (responses, config,
// weights) triple. When weights are given each sample carries mass N * u_i,
// so uniform weights reproduce the unweighted statistics exactly.
class ScatterContext {
 public:
  ScatterContext(const ResponseMatrix& rm, const ScatterConfig& cfg,
                 const SampleWeights* weights = nullptr);

  const ResponseMatrix& matrix() const { return *rm_; }
  const ScatterConfig& config() const { return cfg_; }

  const Eigen::VectorXd& between_class() const { return b_; }
  double within(Index i, Index j) const;
  // S_w(:, j) for every feature, i.e. one full column in O(N M).
  Eigen::VectorXd within_column(Index j) const;
  // S_w restricted to the given index list, computed directly.
  Eigen::MatrixXd within_restricted(const std::vector<Index>& idx) const;
  // S_w(rows, cols) as one matrix product.
  Eigen::MatrixXd within_block(const std::vector<Index>& rows, const std::vector<Index>& cols) const;

 private:
  const ResponseMatrix* rm_;
  ScatterConfig cfg_;
  Eigen::VectorXd mass_;  // per-sample scatter mass, gamma folded in for negatives
  double mass_pos_ = 0.0;
  double mass_neg_ = 0.0;
  Eigen::VectorXd mean_pos_;
  Eigen::VectorXd mean_neg_;
  Eigen::VectorXd b_;
};

Eigen::VectorXd between_class_vector(const ResponseMatrix& rm,
                                     const SampleWeights* w = nullptr);

double within_class_entry(const ResponseMatrix& rm, const ScatterConfig& cfg, Index i,
                          Index j, const SampleWeights* w = nullptr);

ScatterState rank_one_augment(const ScatterState& state, Index i, const ScatterContext& ctx);

// Eigenvalue for selected + {i}; nullopt when the augmentation is singular.
std::optional<double> candidate_eigenvalue(const ScatterState& state, Index i,
                                           const ScatterContext& ctx);

// Batched candidate_eigenvalue over many candidates; same result per entry.
std::vector<std::optional<double>> candidate_eigenvalues(const ScatterState& state,
                                                         const std::vector<Index>& candidates,
                                                         const ScatterContext& ctx);

// State for an explicit subset, inverse computed directly.
ScatterState make_state(const std::vector<Index>& selected, const ScatterContext& ctx);

ScatterState forward_select(const ResponseMatrix& rm, const ScatterConfig& cfg,
                            const SampleWeights* w = nullptr);

ScatterState backward_eliminate(const ScatterState& state, const ScatterContext& ctx);

// Unit-norm LDA direction over the selected features.
Eigen::VectorXd lda_weights(const ScatterState& state);

// Incremental forward selector. Keeps the cross-scatter columns of the
// selected features against every candidate, so a step costs O(N M) for the
// new column plus O(M |l|^2) for scoring.
class ForwardSelector {
 public:
  explicit ForwardSelector(const ScatterContext& ctx);

  const ScatterState& state() const { return state_; }
  // Adds the best admissible candidate; returns its index or nullopt when no
  // candidate is admissible.
  std::optional<Index> step();
  // Runs backward elimination (dual pass), never removing `keep`. Eliminated
  // features are barred from re-selection.
  void eliminate(std::optional<Index> keep);
  // Per-candidate eigenvalue for the next step; nullopt for selected, banned
  // or singular candidates.
  std::vector<std::optional<double>> score_candidates() const;

 private:
  void rebuild_cross();

  const ScatterContext* ctx_;
  ScatterState state_;
  Eigen::MatrixXd cross_;  // M x |l|: S_w(j, l_k)
  Eigen::VectorXd diag_;   // S_w(j, j)
  std::vector<char> excluded_;
};

namespace detail {
// Removes position `pos` from the state using the inverse downdate.
ScatterState remove_position(const ScatterState& state, std::size_t pos);
// Eigenvalue decrease caused by removing each selected position.
Eigen::VectorXd removal_costs(const ScatterState& state);
}  // namespace detail

}  // namespace gslda
