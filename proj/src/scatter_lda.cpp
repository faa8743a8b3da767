#include "gslda/scatter_lda.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "gslda/error.hpp"

namespace gslda {

namespace {

// Schur complements at or below this fraction of S_ii are treated as zero.
constexpr double kSingularRelTol = 1e-10;

bool is_unit_sign(double v) { return v == 1.0 || v == -1.0; }

bool contains(const std::vector<Index>& v, Index i) {
  return std::find(v.begin(), v.end(), i) != v.end();
}

bool singular(double denom, double s_ii) {
  return !(denom > kSingularRelTol * std::abs(s_ii)) || !(denom > 0.0);
}

double quad_form(const Eigen::MatrixXd& inv, const Eigen::VectorXd& b) {
  if (b.size() == 0) return 0.0;
  return b.dot(inv * b);
}

Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& s) {
  if (s.rows() == 0) return s;
  return s.ldlt().solve(Eigen::MatrixXd::Identity(s.rows(), s.cols()));
}

// Bordered inverse update: appends feature i with cross-scatter s_li and
// diagonal s_ii to the state.
ScatterState augment_with(const ScatterState& state, Index i, const Eigen::VectorXd& s_li,
                          double s_ii, double b_i) {
  const Index n = static_cast<Index>(state.selected.size());
  ScatterState next;
  next.selected = state.selected;
  next.selected.push_back(i);
  next.b_restricted.resize(n + 1);
  next.b_restricted.head(n) = state.b_restricted;
  next.b_restricted(n) = b_i;
  next.inv_sw.resize(n + 1, n + 1);
  if (n == 0) {
    if (singular(s_ii, s_ii)) throw SingularAugmentation();
    next.inv_sw(0, 0) = 1.0 / s_ii;
  } else {
    const Eigen::VectorXd u = state.inv_sw * s_li;
    const double denom = s_ii - s_li.dot(u);
    if (singular(denom, s_ii)) throw SingularAugmentation();
    const double a = 1.0 / denom;
    next.inv_sw.topLeftCorner(n, n) = state.inv_sw + a * u * u.transpose();
    next.inv_sw.block(0, n, n, 1) = -a * u;
    next.inv_sw.block(n, 0, 1, n) = -a * u.transpose();
    next.inv_sw(n, n) = a;
  }
  next.eigenvalue = quad_form(next.inv_sw, next.b_restricted);
  return next;
}

}  // namespace

ResponseMatrix::ResponseMatrix(Eigen::MatrixXd responses, Eigen::VectorXd labels)
    : responses_(std::move(responses)), labels_(std::move(labels)) {
  if (labels_.size() != responses_.rows())
    throw Error("label count does not match response rows");
  for (Index i = 0; i < labels_.size(); ++i) {
    if (!is_unit_sign(labels_(i))) throw Error("labels must be -1 or +1");
    (labels_(i) > 0 ? n_pos_ : n_neg_) += 1;
  }
  for (Index j = 0; j < responses_.cols(); ++j)
    for (Index i = 0; i < responses_.rows(); ++i)
      if (!is_unit_sign(responses_(i, j))) throw Error("responses must be -1 or +1");
  if (n_pos_ == 0 || n_neg_ == 0) throw Error("degenerate class distribution");
}

void ScatterConfig::validate() const {
  if (!(gamma > 0.0)) throw Error("gamma must be positive");
  if (!(ridge >= 0.0)) throw Error("ridge must be nonnegative");
  if (max_features < 1) throw Error("max_features must be at least 1");
  if (!(elimination_fraction >= 0.0)) throw Error("elimination_fraction must be nonnegative");
}

ScatterContext::ScatterContext(const ResponseMatrix& rm, const ScatterConfig& cfg,
                               const SampleWeights* weights)
    : rm_(&rm), cfg_(cfg) {
  cfg_.validate();
  const Index n = rm.samples();
  Eigen::VectorXd omega = Eigen::VectorXd::Ones(n);
  if (weights != nullptr) {
    if (static_cast<Index>(weights->size()) != n) throw Error("weight count does not match samples");
    omega = weights->values() * static_cast<double>(n);
  }
  const auto& y = rm.labels();
  Eigen::VectorXd w_pos = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w_neg = Eigen::VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i) (y(i) > 0 ? w_pos : w_neg)(i) = omega(i);
  mass_pos_ = w_pos.sum();
  mass_neg_ = w_neg.sum();
  if (!(mass_pos_ > 0.0) || !(mass_neg_ > 0.0)) throw Error("degenerate class distribution");

  const auto& x = rm.responses();
  mean_pos_ = x.transpose() * w_pos / mass_pos_;
  mean_neg_ = x.transpose() * w_neg / mass_neg_;
  mass_ = w_pos + cfg_.gamma * w_neg;
  const double total = mass_pos_ + mass_neg_;
  b_ = std::sqrt(mass_pos_ * mass_neg_ / total) * (mean_pos_ - mean_neg_);
}

double ScatterContext::within(Index i, Index j) const {
  const auto& x = rm_->responses();
  double s = (x.col(i).cwiseProduct(mass_)).dot(x.col(j));
  s -= mass_pos_ * mean_pos_(i) * mean_pos_(j);
  s -= cfg_.gamma * mass_neg_ * mean_neg_(i) * mean_neg_(j);
  if (i == j) s += cfg_.ridge;
  return s;
}

Eigen::VectorXd ScatterContext::within_column(Index j) const {
  const auto& x = rm_->responses();
  Eigen::VectorXd col = x.transpose() * x.col(j).cwiseProduct(mass_);
  col -= (mass_pos_ * mean_pos_(j)) * mean_pos_;
  col -= (cfg_.gamma * mass_neg_ * mean_neg_(j)) * mean_neg_;
  col(j) += cfg_.ridge;
  return col;
}

Eigen::MatrixXd ScatterContext::within_restricted(const std::vector<Index>& idx) const {
  const Index k = static_cast<Index>(idx.size());
  Eigen::MatrixXd s(k, k);
  for (Index a = 0; a < k; ++a)
    for (Index c = a; c < k; ++c) s(a, c) = s(c, a) = within(idx[a], idx[c]);
  return s;
}

Eigen::MatrixXd ScatterContext::within_block(const std::vector<Index>& rows,
                                             const std::vector<Index>& cols) const {
  const auto& x = rm_->responses();
  const Index n = x.rows();
  Eigen::MatrixXd xr(n, static_cast<Index>(rows.size()));
  Eigen::MatrixXd xc(n, static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < rows.size(); ++k)
    xr.col(static_cast<Index>(k)) = x.col(rows[k]).cwiseProduct(mass_);
  for (std::size_t k = 0; k < cols.size(); ++k) xc.col(static_cast<Index>(k)) = x.col(cols[k]);
  Eigen::MatrixXd s = xr.transpose() * xc;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const Index i = rows[r];
      const Index j = cols[c];
      double& v = s(static_cast<Index>(r), static_cast<Index>(c));
      v -= mass_pos_ * mean_pos_(i) * mean_pos_(j);
      v -= cfg_.gamma * mass_neg_ * mean_neg_(i) * mean_neg_(j);
      if (i == j) v += cfg_.ridge;
    }
  }
  return s;
}

Eigen::VectorXd between_class_vector(const ResponseMatrix& rm, const SampleWeights* w) {
  return ScatterContext(rm, ScatterConfig{}, w).between_class();
}

double within_class_entry(const ResponseMatrix& rm, const ScatterConfig& cfg, Index i, Index j,
                          const SampleWeights* w) {
  if (i < 0 || j < 0 || i >= rm.features() || j >= rm.features())
    throw Error("feature index out of range");
  return ScatterContext(rm, cfg, w).within(i, j);
}

ScatterState rank_one_augment(const ScatterState& state, Index i, const ScatterContext& ctx) {
  if (i < 0 || i >= ctx.matrix().features()) throw Error("feature index out of range");
  if (contains(state.selected, i)) throw Error("feature already selected");
  const Index n = static_cast<Index>(state.selected.size());
  Eigen::VectorXd s_li(n);
  for (Index k = 0; k < n; ++k) s_li(k) = ctx.within(state.selected[k], i);
  return augment_with(state, i, s_li, ctx.within(i, i), ctx.between_class()(i));
}

std::optional<double> candidate_eigenvalue(const ScatterState& state, Index i,
                                           const ScatterContext& ctx) {
  if (contains(state.selected, i)) throw Error("feature already selected");
  const Index n = static_cast<Index>(state.selected.size());
  Eigen::VectorXd s_li(n);
  for (Index k = 0; k < n; ++k) s_li(k) = ctx.within(state.selected[k], i);
  const double s_ii = ctx.within(i, i);
  const double b_i = ctx.between_class()(i);
  if (n == 0) {
    if (singular(s_ii, s_ii)) return std::nullopt;
    return b_i * b_i / s_ii;
  }
  const Eigen::VectorXd u = state.inv_sw * s_li;
  const double denom = s_ii - s_li.dot(u);
  if (singular(denom, s_ii)) return std::nullopt;
  const double r = b_i - u.dot(state.b_restricted);
  return state.eigenvalue + r * r / denom;
}

std::vector<std::optional<double>> candidate_eigenvalues(const ScatterState& state,
                                                         const std::vector<Index>& candidates,
                                                         const ScatterContext& ctx) {
  std::vector<std::optional<double>> out(candidates.size());
  if (candidates.empty()) return out;
  const Index n = static_cast<Index>(state.selected.size());
  const Eigen::VectorXd& b = ctx.between_class();
  Eigen::MatrixXd cross;
  Eigen::MatrixXd u;
  Eigen::VectorXd w;
  if (n > 0) {
    cross = ctx.within_block(candidates, state.selected);
    u = cross * state.inv_sw;
    w = state.inv_sw * state.b_restricted;
  }
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const Index i = candidates[k];
    if (contains(state.selected, i)) throw Error("feature already selected");
    const double s_ii = ctx.within(i, i);
    double denom = s_ii;
    double r = b(i);
    if (n > 0) {
      const Index row = static_cast<Index>(k);
      denom -= cross.row(row).dot(u.row(row));
      r -= cross.row(row).dot(w);
    }
    if (singular(denom, s_ii)) continue;
    out[k] = state.eigenvalue + r * r / denom;
  }
  return out;
}

ScatterState make_state(const std::vector<Index>& selected, const ScatterContext& ctx) {
  ScatterState state;
  state.selected = selected;
  state.inv_sw = invert_spd(ctx.within_restricted(selected));
  state.b_restricted.resize(static_cast<Index>(selected.size()));
  for (std::size_t k = 0; k < selected.size(); ++k)
    state.b_restricted(static_cast<Index>(k)) = ctx.between_class()(selected[k]);
  state.eigenvalue = quad_form(state.inv_sw, state.b_restricted);
  return state;
}

namespace detail {

Eigen::VectorXd removal_costs(const ScatterState& state) {
  const Eigen::VectorXd w = state.inv_sw * state.b_restricted;
  Eigen::VectorXd cost(w.size());
  for (Index k = 0; k < w.size(); ++k) cost(k) = w(k) * w(k) / state.inv_sw(k, k);
  return cost;
}

ScatterState remove_position(const ScatterState& state, std::size_t pos) {
  const Index n = static_cast<Index>(state.selected.size());
  const Index p = static_cast<Index>(pos);
  std::vector<Index> keep;
  for (Index k = 0; k < n; ++k)
    if (k != p) keep.push_back(k);
  ScatterState next;
  for (Index k : keep) next.selected.push_back(state.selected[k]);
  const Index m = n - 1;
  next.inv_sw.resize(m, m);
  next.b_restricted.resize(m);
  const double pivot = state.inv_sw(p, p);
  for (Index r = 0; r < m; ++r) {
    next.b_restricted(r) = state.b_restricted(keep[r]);
    for (Index c = 0; c < m; ++c)
      next.inv_sw(r, c) = state.inv_sw(keep[r], keep[c]) -
                          state.inv_sw(keep[r], p) * state.inv_sw(p, keep[c]) / pivot;
  }
  next.eigenvalue = quad_form(next.inv_sw, next.b_restricted);
  return next;
}

}  // namespace detail

namespace {

// One elimination sweep; returns the removed feature or nullopt.
std::optional<Index> eliminate_once(ScatterState& state, const ScatterContext& ctx,
                                    std::optional<Index> keep) {
  if (state.selected.size() < 2) return std::nullopt;
  const Eigen::VectorXd cost = detail::removal_costs(state);
  std::optional<Index> best;
  for (Index k = 0; k < cost.size(); ++k) {
    if (keep && state.selected[k] == *keep) continue;
    if (!best || cost(k) < cost(*best)) best = k;
  }
  if (!best) return std::nullopt;
  if (!(cost(*best) < ctx.config().elimination_fraction * state.eigenvalue)) return std::nullopt;
  const Index removed = state.selected[*best];
  ScatterState next = detail::remove_position(state, static_cast<std::size_t>(*best));
  // Re-derive the inverse directly; downdates lose accuracy after
  // near-duplicate features.
  next.inv_sw = invert_spd(ctx.within_restricted(next.selected));
  next.eigenvalue = quad_form(next.inv_sw, next.b_restricted);
  state = std::move(next);
  return removed;
}

}  // namespace

ScatterState backward_eliminate(const ScatterState& state, const ScatterContext& ctx) {
  ScatterState out = state;
  while (eliminate_once(out, ctx, std::nullopt)) {
  }
  return out;
}

Eigen::VectorXd lda_weights(const ScatterState& state) {
  if (state.selected.empty()) throw Error("empty selection");
  if (state.b_restricted.norm() == 0.0) throw Error("zero between-class direction");
  Eigen::VectorXd w = state.inv_sw * state.b_restricted;
  const double norm = w.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw Error("zero between-class direction");
  return w / norm;
}

ForwardSelector::ForwardSelector(const ScatterContext& ctx)
    : ctx_(&ctx), excluded_(static_cast<std::size_t>(ctx.matrix().features()), 0) {
  const Index m = ctx.matrix().features();
  diag_.resize(m);
  for (Index j = 0; j < m; ++j) diag_(j) = ctx.within(j, j);
  cross_.resize(m, 0);
  state_.inv_sw.resize(0, 0);
  state_.b_restricted.resize(0);
}

std::vector<std::optional<double>> ForwardSelector::score_candidates() const {
  const Index m = ctx_->matrix().features();
  const Index n = static_cast<Index>(state_.selected.size());
  const Eigen::VectorXd& b = ctx_->between_class();
  std::vector<std::optional<double>> scores(static_cast<std::size_t>(m));
  Eigen::MatrixXd u;
  Eigen::VectorXd w;
  if (n > 0) {
    u = cross_ * state_.inv_sw;  // row j: (inv * S_lj)^T
    w = state_.inv_sw * state_.b_restricted;
  }
  for (Index j = 0; j < m; ++j) {
    if (excluded_[static_cast<std::size_t>(j)]) continue;
    double denom = diag_(j);
    double r = b(j);
    if (n > 0) {
      denom -= cross_.row(j).dot(u.row(j));
      r -= cross_.row(j).dot(w);
    }
    if (singular(denom, diag_(j))) continue;
    scores[static_cast<std::size_t>(j)] = state_.eigenvalue + r * r / denom;
  }
  return scores;
}

std::optional<Index> ForwardSelector::step() {
  const auto scores = score_candidates();
  std::optional<Index> best;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] && *scores[j] > best_value) {
      best_value = *scores[j];
      best = static_cast<Index>(j);
    }
  }
  if (!best) return std::nullopt;
  const Index i = *best;
  const Eigen::VectorXd s_li = cross_.row(i).transpose();
  state_ = augment_with(state_, i, s_li, diag_(i), ctx_->between_class()(i));
  const Eigen::VectorXd col = ctx_->within_column(i);
  cross_.conservativeResize(Eigen::NoChange, cross_.cols() + 1);
  cross_.col(cross_.cols() - 1) = col;
  excluded_[static_cast<std::size_t>(i)] = 1;
  return i;
}

void ForwardSelector::eliminate(std::optional<Index> keep) {
  bool changed = false;
  while (eliminate_once(state_, *ctx_, keep)) changed = true;
  if (changed) rebuild_cross();
}

void ForwardSelector::rebuild_cross() {
  const Index m = ctx_->matrix().features();
  cross_.resize(m, static_cast<Index>(state_.selected.size()));
  for (std::size_t k = 0; k < state_.selected.size(); ++k)
    cross_.col(static_cast<Index>(k)) = ctx_->within_column(state_.selected[k]);
}

ScatterState forward_select(const ResponseMatrix& rm, const ScatterConfig& cfg,
                            const SampleWeights* w) {
  cfg.validate();
  if (cfg.max_features > rm.features()) throw Error("max_features exceeds feature count");
  ScatterContext ctx(rm, cfg, w);
  ForwardSelector selector(ctx);
  while (static_cast<Index>(selector.state().selected.size()) < cfg.max_features) {
    const auto added = selector.step();
    if (!added) break;
    if (selector.state().selected.size() == 1 && !(selector.state().eigenvalue > 0.0))
      throw Error("no separating feature");
    if (cfg.dual_pass && selector.state().selected.size() >= 3) selector.eliminate(*added);
  }
  if (selector.state().selected.empty()) throw Error("no separating feature");
  return selector.state();
}

}  // namespace gslda
